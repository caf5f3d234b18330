//! Numerical toolkit for multi-bubble infinite-time blow-up in the critical
//! semilinear heat equation `u_t = Δu + u^{(n+2)/(n-2)}` on domains of
//! dimension `n ≥ 5`.
//!
//! The crate is organized around the computable ingredients of the
//! construction:
//!
//! * [`bubble`] — dimensional constants, the Talenti bubble `U`, its kernel
//!   functions `Z_1..Z_{n+1}`, and the radial quadratures everything else
//!   consumes;
//! * [`green`] — the Dirichlet Green function of the unit ball by the method
//!   of images, the Robin function, and the `k×k` interaction matrix whose
//!   positive definiteness gates multi-bubble configurations;
//! * [`bsystem`] — the convex variational system fixing relative bubble
//!   heights, with its spectral data;
//! * [`linop`] — radial spectral theory of the linearized operator
//!   `L₀ = Δ + pU^{p-1}`: negative ground state, corrector ODEs by variation
//!   of parameters, supersolutions, coercivity on large balls, and the
//!   spherical-harmonic mode operators;
//! * [`ansatz`] — the corrected multi-bubble ansatz and pointwise residual
//!   size checks;
//! * [`dynamics`] — closed-form and numerically integrated reduced ODEs for
//!   scaling parameters, center drift, and the projection shooting problem;
//! * [`pdesim`] — a radial finite-volume simulator with threshold bisection
//!   for the near-threshold blow-up rate;
//! * [`cli`] — the command-line driver, configuration, and serialization.

pub mod ansatz;
pub mod bsystem;
pub mod bubble;
pub mod cli;
pub mod dd;
pub mod dynamics;
pub mod green;
pub mod grid;
pub mod linalg;
pub mod linop;
pub mod pdesim;
pub mod quad;

/// Errors shared across modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Constructor or configuration rejected (bad dimension, coincident
    /// points, non-increasing grid, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// An iterative numerical procedure failed to converge or produced a
    /// non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
