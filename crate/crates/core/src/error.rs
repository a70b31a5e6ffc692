//! Crate-wide error type.

use thiserror::Error;

pub type SrtResult<T> = Result<T, SrtError>;

#[derive(Debug, Error)]
pub enum SrtError {
    /// An evaluation argument left its mathematical domain (e.g. a Legendre
    /// argument beyond [-1, 1] past the clamping tolerance).
    #[error("domain error in {context}: {value} outside {bounds}")]
    Domain {
        context: &'static str,
        value: f64,
        bounds: &'static str,
    },

    /// Harmonic index out of range (|m| > l).
    #[error("harmonic index out of range: l = {l}, m = {m}")]
    Index { l: u32, m: i32 },

    /// Requested band limit is not resolvable on the angular grid.
    #[error("band limit l_max = {l_max} requires l_max <= N - 1 with N = {n}")]
    Resolution { l_max: u32, n: usize },

    /// Profiles fed to synthesis are not Hermitian-symmetric.
    #[error("profiles violate Hermitian symmetry (residual {residual:.3e} > {tolerance:.1e})")]
    Symmetry { residual: f64, tolerance: f64 },

    /// Invalid geometry, grid, or phantom/geometry combination.
    #[error("geometry violation: {0}")]
    Geometry(String),

    /// Phantom construction error (non-disjoint balls, bad radius, ...).
    #[error("invalid phantom: {0}")]
    Phantom(String),

    /// Volterra matrix assembly produced a non-positive diagonal entry.
    #[error(
        "assembly error at degree {l}: diagonal entry {value:.3e} at row {row} is not positive"
    )]
    Assembly { l: u32, row: usize, value: f64 },

    /// TSVD of a zero (or numerically zero) matrix.
    #[error("degenerate system: largest singular value is zero")]
    Degenerate,

    /// Data file, phantom file, or config file could not be parsed.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// Data header disagrees with the run configuration.
    #[error("mismatch between data and configuration: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
