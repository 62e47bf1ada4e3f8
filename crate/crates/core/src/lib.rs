//! Epistemic model checking under synchronous perfect recall, with
//! conditional-independence reductions of the unfolded system.

pub mod checker;
pub mod error;
pub mod families;
pub mod frontend;
pub mod graph;
pub mod limits;
pub mod model;
pub mod relevance;
pub mod semantics;
pub mod valuation;

pub use error::{Error, Result};
