//! Solvers for the one-dimensional Riesz-fractional complex
//! Ginzburg-Landau-Schrodinger equation
//!
//! ```text
//! (eta - i beta) psi_t = d^alpha psi / d|x|^alpha + (V(x) - |psi|^2) psi / eps^2,   1 < alpha <= 2
//! ```
//!
//! Two independent discretizations are provided:
//!
//! * [`ifdm`]: Crank-Nicolson-type implicit finite differences with the
//!   fractional centered difference of [`riesz`], cubic term resolved by
//!   Picard iteration;
//! * [`tsfs`]: Strang splitting of an exact Fourier-space fractional flow and
//!   a pointwise trapezoidal nonlinear flow.
//!
//! [`analysis`] compares them and checks norms, orders and amplification
//! factors.

pub mod analysis;
pub mod error;
pub mod grid;
pub mod ifdm;
pub mod model;
pub mod riesz;
pub mod tsfs;

pub use error::{CglsError, Result};
pub use grid::{GridSpec, TimeGrid};
pub use ifdm::{IfdmOptions, IfdmWorkspace, PicardConfig};
pub use model::{CglsParams, ComplexField, ModelToggles, Quantity, RealField, Trajectory};
pub use riesz::{Boundary, FracCenteredStencil};
pub use tsfs::{TsfsOptions, TsfsStepper};
