use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("invalid matrix: {0}")]
    Matrix(String),

    #[error("edge ({check}, {var}) is not a 1-entry of the parity-check matrix")]
    NotAnEdge { check: usize, var: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("weights file line {line}: {msg}")]
    WeightsFile { line: usize, msg: String },

    #[error("matrix digest mismatch: file has {found}, matrix is {expected}")]
    DigestMismatch { expected: String, found: String },

    #[error("length mismatch: expected {expected}, got {found}")]
    Length { expected: usize, found: usize },

    #[error("not a codeword: syndrome is nonzero")]
    NotACodeword,

    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
