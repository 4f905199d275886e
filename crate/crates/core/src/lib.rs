//! Solvers for the mixed-order time-fractional diffusion equation
//!
//! `∂ₜu + Σ_j q_j(t) ∂ₜ^{α_j} u = -Au + c u + f`
//!
//! on an interval with Dirichlet conditions, together with the tools needed
//! to check its `t^{-α}` long-time decay: Mittag-Leffler functions, discrete
//! Caputo operators, a Laplace-inversion solver for the scalar relaxation
//! equation and post-processing for decay fits and bound checks.
//!
//! ```
//! use fracmix::fraccalc::{OrderSpec, TimeGrid};
//! use fracmix::fracode::{solve_l1, solve_spectral, FracOdeProblem, SpectralDensity};
//!
//! let spec = OrderSpec::single(0.5, 1.0)?;
//! let problem = FracOdeProblem::new(spec, 1.0, 1.0, 2.0)?;
//! let grid = TimeGrid::uniform(2.0, 2048)?;
//! let stepped = solve_l1(&problem, &grid)?.scalar_values()?;
//!
//! let density = SpectralDensity::new(0.5, 1.0, 1.0)?;
//! let exact = solve_spectral(&density, 1.0, &[2.0])?.scalar_values()?;
//! assert!((stepped[2048] - exact[0]).abs() < 1e-3 * exact[0]);
//! # Ok::<(), fracmix::Error>(())
//! ```

pub mod analysis;
pub mod error;
pub mod fraccalc;
pub mod fracode;
pub mod mlfunc;
pub mod pde1d;
pub mod quadrature;
pub mod special;
pub mod trajectory;
pub mod tridiag;

pub use error::{Error, Regime, Result};
pub use fraccalc::{Coefficient, FracTerm, OrderSpec, TimeGrid};
pub use trajectory::Trajectory;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mittag_leffler.md")]
    mod mittag_leffler {}
    #[doc = include_str!("../../../book/src/caputo.md")]
    mod caputo {}
    #[doc = include_str!("../../../book/src/relaxation.md")]
    mod relaxation {}
    #[doc = include_str!("../../../book/src/diffusion.md")]
    mod diffusion {}
    #[doc = include_str!("../../../book/src/decay.md")]
    mod decay {}
}
