//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the nowcasting toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error at line {line}: {msg}")]
    CsvFormat { line: u64, msg: String },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("day {day_id}: {msg}")]
    InvalidDay { day_id: String, msg: String },

    #[error("{0}")]
    InvalidInput(String),

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("constant series: correlation denominator is zero")]
    ConstantSeries,

    #[error("no sunny day in pool")]
    NoSunnyDay,

    #[error("scenario constraints unsatisfiable after {attempts} attempts: {constraint}")]
    Unsatisfiable { attempts: u32, constraint: String },

    #[error("model file schema mismatch: {0}")]
    ModelSchema(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
