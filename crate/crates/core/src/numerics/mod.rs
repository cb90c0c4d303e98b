//! Small numerical building blocks shared across the crate: an adaptive
//! embedded Runge-Kutta integrator, least-squares fitting helpers, trapezoid
//! quadrature, and finite-difference stencils on uniform grids.

mod fd;
mod fit;
mod quad;
mod rk45;

pub use fd::{derivative, second_derivative};
pub use fit::{linear_fit, poly_fit_powers, LineFit};
pub use quad::trapezoid;
pub use rk45::{Rk45, Rk45Options};
