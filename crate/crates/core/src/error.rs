//! Error types shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (shapes, ranges, files).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coordinate s = {0} lies outside [0, 1]")]
    Domain(f64),

    /// A diagonal speed vanished where it must be inverted.
    #[error("coefficient error: {0}")]
    Coefficient(String),

    #[error("state matrix is not Hurwitz (max real part of spectrum = {max_real_part:e})")]
    NotHurwitz { max_real_part: f64 },

    /// A matrix required to be invertible failed the rank tolerance.
    #[error("rank condition `{which}` failed: condition number {condition:e}")]
    RankCondition { which: &'static str, condition: f64 },

    #[error("ISS certification failed: no feasible weight in the search family (best boundary margin {best_margin:e}, best interior margin {best_interior:e})")]
    CertificationFailed { best_margin: f64, best_interior: f64 },

    #[error("design error: {0}")]
    Design(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Domain(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 1,
            Error::NotHurwitz { .. }
            | Error::RankCondition { .. }
            | Error::CertificationFailed { .. }
            | Error::Design(_)
            | Error::Coefficient(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}
