//! Numerical toolkit for Brown measures of `x0 + c_t` (free circular
//! deformation) and `x0 + g_{t,gamma}` (twisted elliptic deformation).
//!
//! The library is organized around the subordination function `w(eps; lambda, t)`:
//! every density, determinant, and pushforward formula is evaluated from trace
//! functionals of shifted resolvents at the solved `w`. Closed-form models
//! (Haar unitary, quasi-nilpotent DT operator, R-diagonal profiles) and a
//! random-matrix lab for Monte Carlo validation sit on top of the same core.

pub mod brown;
pub mod error;
pub mod mat;
pub mod measure;
pub mod operator;
pub mod pushforward;
pub mod quad;
pub mod randmat;
pub mod rng;
pub mod roots;
pub mod selfadjoint;
pub mod special;
pub mod subordination;

pub use brown::{density_circular, density_circular_fd, density_grid, log_fk_det_circular, DensityGrid, GridSpec};
pub use error::Error;
pub use measure::Measure1D;
pub use operator::{cauchy_transform, log_fk_det_shifted, resolvent_functionals, shifted_singular_measure, OperatorModel, ResolventFunctionals};
pub use pushforward::{jacobian_phi, log_fk_det_elliptic, phi, phi_eps, pushforward_density, pushforward_pointcloud, EllipticParams, JacobianPhi, PushforwardField};
pub use subordination::{in_xi_t, lambda1_squared, scalar_omega1, solve_w, solve_w0, symmetrize, SubordinationResult};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Result alias for fallible toolkit operations.
pub type Result<T> = std::result::Result<T, Error>;
