//! Pseudo-spectral solver for `[Laplacian - Bilaplacian] u + eps K * g(u) + f = 0`
//! on a periodic box, with the contraction-mapping construction of the
//! solution and checks of the existence-theory inequalities.

pub mod bounds;
pub mod builders;
pub mod error;
pub mod fixed_point;
pub mod grid;
pub mod io;
pub mod linear;
pub mod nonlinearity;
mod quadrature;
pub mod report;
pub mod scenario;

pub use bounds::BoundsSnapshot;
pub use error::{Error, ErrorClass, Result};
pub use fixed_point::{EpsilonChoice, ProblemSpec, SolveReport, SolverOptions};
pub use grid::{FieldRole, GridSpec, RealField, SpectralField};
pub use linear::{LinearSolveOptions, MeanPolicy};
pub use nonlinearity::Nonlinearity;
