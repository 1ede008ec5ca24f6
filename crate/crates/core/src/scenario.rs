//! The reference configuration used by the acceptance suite, the benches and
//! the CLI defaults: `d = 5`, `n = 8`, `L = 4 pi`, unit Gaussian kernel,
//! mean-free two-Gaussian source, `g(z) = z^2`, `rho = 1`.

use std::f64::consts::PI;

use crate::builders::{gaussian_diff_source, gaussian_kernel, GaussianDiff};
use crate::error::Result;
use crate::fixed_point::{EpsilonChoice, ProblemSpec, SolverOptions};
use crate::grid::{GridSpec, RealField};
use crate::nonlinearity::Nonlinearity;

pub const DIMENSION: usize = 5;
pub const SAMPLES: usize = 8;
pub const HALF_WIDTH: f64 = 4.0 * PI;
pub const KERNEL_SIGMA: f64 = 1.0;
pub const KERNEL_AMPLITUDE: f64 = 1.0;
pub const SOURCE_WIDTH: f64 = 1.5;
pub const SOURCE_AMPLITUDE: f64 = 10.0;
pub const RHO: f64 = 1.0;
pub const SEED: u64 = 42;
pub const CONTRACTION_TRIALS: usize = 50;
pub const SEQUENCE_COUNT: usize = 8;
pub const SEQUENCE_AXIS: usize = 1;

pub fn grid() -> GridSpec {
    GridSpec::new(DIMENSION, SAMPLES, HALF_WIDTH).expect("reference grid is valid")
}

/// Source parameters for a box of half width `l`: centres at `-l/4` and
/// `l/4` along `axis`.
pub fn source_params(l: f64, axis: usize) -> GaussianDiff {
    GaussianDiff {
        centers: [-l / 4.0, l / 4.0],
        widths: [SOURCE_WIDTH, SOURCE_WIDTH],
        amplitude: SOURCE_AMPLITUDE,
        axis,
    }
}

pub fn kernel() -> Result<RealField> {
    gaussian_kernel(grid(), KERNEL_SIGMA, KERNEL_AMPLITUDE)
}

pub fn source() -> Result<RealField> {
    gaussian_diff_source(grid(), &source_params(HALF_WIDTH, 0))
}

/// Mean-free perturbation direction for the sequence experiment, oriented
/// along a different axis from the source.
pub fn perturbation() -> Result<RealField> {
    gaussian_diff_source(grid(), &source_params(HALF_WIDTH, SEQUENCE_AXIS))
}

/// `g(z) = z^2`.
pub fn quadratic() -> Nonlinearity {
    Nonlinearity::polynomial(&[1.0])
}

pub fn problem(g: Nonlinearity, epsilon: EpsilonChoice) -> Result<ProblemSpec> {
    ProblemSpec::new(
        kernel()?,
        source()?,
        g,
        epsilon,
        RHO,
        SolverOptions::default(),
    )
}
