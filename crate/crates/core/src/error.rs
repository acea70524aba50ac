//! Error taxonomy shared by every module.
//!
//! The split matters for the CLI exit codes: domain/parameter/format
//! problems exit 1, resource exhaustion exits 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (t <= 0, n even, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid parameters (empty grid, k <= alpha/d_w, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A memory or compute guard tripped; retry with a smaller level / budget.
    #[error("resource error: {0}")]
    Resource(String),

    /// A graph or operator could not be constructed from the given pieces.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("unknown catalog name {name:?}; known names: {known}")]
    Catalog { name: String, known: String },

    /// Diagnostics could not be run at the requested scales.
    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    /// Local-solution horizon exceeded: the remainder field left the
    /// configured sup-norm ceiling.
    #[error("solver blow-up at t = {t}: |v|_inf = {sup_norm:.3e} exceeded ceiling {ceiling:.3e}")]
    BlowUp { t: f64, sup_norm: f64, ceiling: f64 },

    /// Snapshot header did not match the FPHI format.
    #[error("format error: {0}")]
    Format(String),

    /// Snapshot payload shorter than the header promised.
    #[error("corruption error: {0}")]
    Corruption(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) => 2,
            _ => 1,
        }
    }
}
