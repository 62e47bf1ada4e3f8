//! Relational valuation algebra: join as combination, projection as
//! marginalization, and fusion-based variable elimination.

mod fusion;
mod order;
mod relation;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use fusion::{fuse_all, fuse_all_tracked, fuse_step, join_then_project, FusionStats};
pub use order::{elimination_order, Heuristic};
pub use relation::{combine_all, Keys, Relation, RelationBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}
