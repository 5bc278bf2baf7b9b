use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("zero rate, delay undefined (user {user}, sbs {sbs})")]
    ZeroRate { user: usize, sbs: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no feasible association exists")]
    NoFeasibleAssociation,

    #[error("no power-feasible association found within {iterations} iterations")]
    NoIncumbent { iterations: usize },

    #[error("user {user} cannot reach any SBS at full power")]
    Unreachable { user: usize },

    #[error(
        "{count} candidate associations exceed the enumeration cap {cap}; use a smaller instance"
    )]
    EnumerationCap { count: f64, cap: u64 },

    #[error("knapsack grid needs {cells} cells (limit {limit}); use a coarser quantization")]
    KnapsackGrid { cells: u128, limit: u128 },

    #[error("solver: {0}")]
    Lp(#[from] LpError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
