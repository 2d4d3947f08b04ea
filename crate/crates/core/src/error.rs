use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix entries length {len} does not match {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Kraus set violates completeness: residual {residual:e} > {tol:e}")]
    Incomplete { residual: f64, tol: f64 },

    #[error("empty Kraus set")]
    EmptyKrausSet,

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("trace has non-negligible imaginary part {0:e}")]
    ComplexTrace(f64),

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("parameter {name} = {value} outside [0, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("game input ({row}, {col}) outside 1..=3")]
    InvalidInput { row: u8, col: u8 },

    #[error("{0} is not a Pauli channel")]
    NotPauli(&'static str),

    #[error("{0} is not a damping channel")]
    NotDamping(&'static str),

    #[error("outcome distribution sums to {0}, expected 1")]
    BadDistribution(f64),

    #[error("invalid fingerprint: {0}")]
    InvalidFingerprint(String),

    #[error("{count} wins reported for {n} plays")]
    CountExceedsPlays { count: u64, n: u64 },

    #[error("number of plays must be at least 1")]
    NoPlays,
}

pub type Result<T> = std::result::Result<T, Error>;
