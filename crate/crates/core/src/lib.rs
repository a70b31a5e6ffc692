//! Reconstruction toolkit for the spherical Radon transform with centers on a
//! sphere and radially incomplete data.
//!
//! The transform integrates an unknown density over spheres whose centers lie
//! on a fixed acquisition sphere. Expanding both data and density in spherical
//! harmonics decouples the problem into one Volterra integral equation of the
//! first kind per harmonic degree; those equations are discretized with a
//! product trapezoidal rule and solved with truncated-SVD regularization.
//! Three support configurations are handled: density inside the acquisition
//! sphere, outside it, or on both sides.
//!
//! Module map:
//! - [`phantom`]: ball phantoms and the exact (cap area) forward model
//! - [`specialfn`]: Legendre/Gegenbauer polynomials and spherical harmonics
//! - [`shtransform`]: harmonic analysis/synthesis on the acquisition grid
//! - [`volterra`]: per-degree kernels, matrix assembly, TSVD solves
//! - [`pipeline`]: end-to-end reconstruction, slices, metrics
//! - [`config`] and [`io`]: run configuration and file formats

pub mod config;
pub mod error;
pub mod io;
pub mod phantom;
pub mod pipeline;
pub mod rng;
pub mod shtransform;
pub mod specialfn;
pub mod support;
pub mod volterra;

pub use error::{SrtError, SrtResult};
pub use phantom::{
    add_noise, cap_area, eval_phantom, forward_transform, AcquisitionGeometry, Ball, BallPhantom,
    RadonData,
};
pub use pipeline::{
    compute_metrics, reconstruct_data, reconstruct_phantom, sample_slice, OutputSpec,
    ReconstructionConfig, ReconstructionMetrics, ReconstructionResult, Slice2D, SlicePlane,
};
pub use shtransform::{analyze, quadrature_weights, synthesize, HarmonicProfiles};
pub use specialfn::{gegenbauer_c, general_kernel, legendre_p, spherical_y, HarmonicIndex};
pub use support::SupportCase;
pub use volterra::{
    assemble, forward_apply, kernel_3d, solve_tsvd, TsvdConfig, TsvdFactor, TsvdSolution,
    VolterraCaseParams, VolterraSystem,
};
