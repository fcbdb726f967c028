use num_complex::Complex64;
use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its mathematical domain (order out of range,
    /// non-positive kernel order, delay of zero, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Sequence horizons or dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// A request exceeds a configured size limit, or intermediate values
    /// can no longer be represented in f64.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// The symbol hit the spectrum of the operator: the pencil is singular
    /// at the reported circle point.
    #[error("spectral hit: symbol pencil singular at t = {t}")]
    SpectralHit { t: f64 },

    /// Contour quadrature encountered a singular node.
    #[error("quadrature error: integrand singular at z = {z}")]
    QuadratureSingular { z: Complex64 },

    /// A truncated series cannot converge for the requested evaluation
    /// radius (radius at or below the sequence growth rate).
    #[error("convergence error: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
