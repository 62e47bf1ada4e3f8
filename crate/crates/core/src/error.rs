use thiserror::Error;

use crate::frontend::ParseError;
use crate::valuation::VarId;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("frame mismatch for {var}: {left} vs {right} values")]
    FrameMismatch { var: VarId, left: u32, right: u32 },
    #[error("variable {0} listed twice")]
    DuplicateVar(VarId),
    #[error("value {value} outside the frame of {var}")]
    OutOfFrame { var: VarId, value: u32 },
    #[error("frame of {0} is empty or too large")]
    BadFrame(VarId),
    #[error("elimination order is not a permutation of the variables to eliminate")]
    NotPermutation,
    #[error("variable sets are not pairwise disjoint")]
    NotDisjoint,
    #[error("{0} is not in the domain")]
    NotInDomain(VarId),
    #[error("initial condition is unsatisfiable")]
    UnsatisfiableInit,
    #[error("state space exceeds the cap of {cap} worlds")]
    Overflow { cap: u64 },
    #[error("time limit exceeded")]
    Timeout,
    #[error("atom `{0}` is not a variable of the structure")]
    UnknownAtom(String),
    #[error("world relation is empty")]
    EmptyWorlds,
    #[error("world {0} is not in the structure")]
    NoSuchWorld(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
