//! Error type shared by every module of the simulator.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Quantum numbers, times, or parameters outside their admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operator or state was built for a different Hilbert-space dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A fixed-step integration violated its conservation diagnostic.
    #[error("{solver} integration diverged at t = {t}: {detail}")]
    IntegrationDiverged {
        solver: &'static str,
        t: f64,
        detail: String,
    },

    /// The leading polynomial coefficient vanishes, so the stated degree is wrong.
    #[error("polynomial leading coefficient is numerically zero")]
    DegenerateLeadingCoefficient,

    /// The two-photon state cannot be formed or normalized.
    #[error("pair state undefined: {0}")]
    UndefinedPairState(String),
}
