use crate::fractal::Word;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("level mismatch: expected level {expected}, found level {found}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("atom at level {atom_level} cannot be resolved at level {level}; raise the level to at least {atom_level}")]
    Resolution { atom_level: usize, level: usize },

    #[error("level {requested} exceeds the maximum level {max} built for this model")]
    LevelOutOfRange { requested: usize, max: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("fixed-point map is not contractive: kappa = {kappa:.6} >= 1{}", certified_hint(*.certified_depth))]
    NotContractive {
        kappa: f64,
        certified_depth: Option<usize>,
    },

    #[error("local solvability certification failed up to depth {depth}: cell {cell} has kappa = {kappa:.6}")]
    CertificationFailed { depth: usize, cell: Word, kappa: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn certified_hint(depth: Option<usize>) -> String {
    match depth {
        Some(m) => format!("; cell-local solvability certified at depth {m}"),
        None => "; see certify_local_solvability for cell-local solvability".to_string(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
