//! Closed-form constants of the existence theory: the unit-sphere measure,
//! an explicit Sobolev embedding constant, the minimiser of
//! `phi(R) = alpha R^(d-4) + R^(-4)`, the admissible range of `epsilon`, the
//! contraction constant `sigma` and the continuity estimate in `g`.
//!
//! All theorem-level formulas need `d >= 5` because they divide by `d - 4`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::quadrature;

pub const DEFAULT_QUAD_POINTS: usize = 16;

const QUAD_REL_TOL: f64 = 1e-13;

/// Surface measure of the unit sphere in `d`-dimensional space,
/// `2 pi^(d/2) / Gamma(d/2)`.
///
/// This is the angular factor of the radial Lebesgue integral in `R^d`;
/// every dependent constant goes through this one function.
pub fn sphere_measure(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

fn theorem_dimension(d: usize) -> Result<()> {
    if d < 5 {
        return Err(Error::BadDimension {
            d,
            allowed: "d >= 5",
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionParams {
    pub d: usize,
    pub sphere_measure: f64,
    pub embedding_constant: f64,
}

impl DimensionParams {
    pub fn new(d: usize) -> Result<Self> {
        Ok(DimensionParams {
            d,
            sphere_measure: sphere_measure(d),
            embedding_constant: embedding_constant(d, DEFAULT_QUAD_POINTS)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiResult {
    pub alpha: f64,
    pub d: usize,
    pub r_star: f64,
    pub phi_min: f64,
}

/// `alpha R^(d-4) + R^(-4)`.
pub fn phi(alpha: f64, d: usize, r: f64) -> f64 {
    alpha * r.powi(d as i32 - 4) + r.powi(-4)
}

pub fn minimize_phi(alpha: f64, d: usize) -> Result<PhiResult> {
    theorem_dimension(d)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::NonPositiveInput("alpha"));
    }
    let df = d as f64;
    let r_star = (4.0 / (alpha * (df - 4.0))).powf(1.0 / df);
    let phi_min = (alpha / 4.0).powf(4.0 / df) * df / (df - 4.0).powf((df - 4.0) / df);
    Ok(PhiResult {
        alpha,
        d,
        r_star,
        phi_min,
    })
}

/// `int_0^inf r^(d-1) (1 + r^4)^(-2) dr`, adaptive quadrature started from
/// `quad_points` panels.
pub fn radial_integral(d: usize, quad_points: usize) -> Result<f64> {
    if !(5..=7).contains(&d) {
        return Err(Error::BadDimension {
            d,
            allowed: "5 <= d <= 7",
        });
    }
    Ok(quadrature::integrate_half_line(
        |r| {
            let q = 1.0 + r.powi(4);
            r.powi(d as i32 - 1) / (q * q)
        },
        quad_points,
        QUAD_REL_TOL,
    ))
}

/// An admissible constant for `||u||_inf <= c_e ||u||_H4`:
/// `sqrt(2) (2 pi)^(-d/2) (|S^d| int_0^inf r^(d-1) (1 + r^4)^(-2) dr)^(1/2)`.
///
/// Follows from Cauchy-Schwarz on `|u(x)| <= (2 pi)^(-d/2) int |u_hat|` and
/// `(1 + |p|^4)^2 <= 2 (1 + |p|^8)`.
pub fn embedding_constant(d: usize, quad_points: usize) -> Result<f64> {
    let radial = radial_integral(d, quad_points)?;
    Ok(2f64.sqrt() * (2.0 * PI).powf(-(d as f64) / 2.0) * (sphere_measure(d) * radial).sqrt())
}

/// The same constant with the radial integral replaced by the lattice sum
/// `sum_k (pi/L)^d (1 + |p_k|^4)^(-2)` over the grid's dual lattice. It
/// bounds `||u||_inf` by `||u||_H4` exactly for every grid field and is
/// defined in any dimension.
pub fn lattice_embedding_constant(spec: &GridSpec) -> f64 {
    let sum: f64 = spec
        .frequency_sq_table()
        .iter()
        .map(|&p_sq| (1.0 + p_sq * p_sq).powi(-2))
        .sum::<f64>()
        * spec.dual_cell_volume();
    2f64.sqrt() * (2.0 * PI).powf(-(spec.dim() as f64) / 2.0) * sum.sqrt()
}

/// Problem data entering the threshold formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub d: usize,
    /// Bound `M` on `||g||_C2(I)`.
    pub big_m: f64,
    /// `||u_0||_H4`.
    pub u0_h4: f64,
    pub k_l1: f64,
    pub k_l2: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        theorem_dimension(self.d)?;
        let positive = |v: f64, name: &'static str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::NonPositiveInput(name))
            }
        };
        positive(self.big_m, "big_m")?;
        positive(self.k_l1, "k_l1")?;
        positive(self.k_l2, "k_l2")?;
        if !(self.u0_h4.is_finite() && self.u0_h4 >= 0.0) {
            return Err(Error::NonPositiveInput("u0_h4"));
        }
        Ok(())
    }

    /// The low-frequency term `||K||_1^2 (a)^(8/d - 2) |S|^(4/d) / (c^(4/d) (2 pi)^4) * d / (d - 4)`
    /// with `a = ||u_0||_H4 + 1`; `c` is 4 in `sigma` and 16 in the
    /// threshold and continuity formulas.
    fn low_term(&self, c: f64) -> f64 {
        let d = self.d as f64;
        let a = self.u0_h4 + 1.0;
        self.k_l1 * self.k_l1 * a.powf(8.0 / d - 2.0) * sphere_measure(self.d).powf(4.0 / d)
            / (c.powf(4.0 / d) * (2.0 * PI).powi(4))
            * d
            / (d - 4.0)
    }

    /// `[ low_term(16) + ||K||_2^2 / 4 ]^(1/2)`, shared by the threshold,
    /// the self-map estimate and the continuity estimate.
    fn self_map_bracket(&self) -> f64 {
        (self.low_term(16.0) + self.k_l2 * self.k_l2 / 4.0).sqrt()
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::RhoOutOfRange(rho));
    }
    Ok(())
}

/// Largest `epsilon` for which the auxiliary map sends the ball of radius
/// `rho` into itself and contracts.
pub fn epsilon_max(rho: f64, inputs: &BoundInputs) -> Result<f64> {
    check_rho(rho)?;
    inputs.validate()?;
    let a = inputs.u0_h4 + 1.0;
    Ok(rho / (2.0 * inputs.big_m * a * a * inputs.self_map_bracket()))
}

/// Lipschitz constant of the auxiliary map divided by `epsilon`.
pub fn sigma(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let a = inputs.u0_h4 + 1.0;
    Ok(inputs.big_m * a * (inputs.low_term(4.0) + inputs.k_l2 * inputs.k_l2).sqrt())
}

/// Upper bound on `||t_g v||_H4` for any `v` in the ball, at this `epsilon`.
pub fn self_map_radius(epsilon: f64, inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let a = inputs.u0_h4 + 1.0;
    Ok(epsilon * a * a * inputs.big_m * inputs.self_map_bracket())
}

/// Every theoretical constant of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsSnapshot {
    pub d: usize,
    pub rho: f64,
    pub big_m: f64,
    pub u0_h4: f64,
    pub k_l1: f64,
    pub k_l2: f64,
    pub sphere_measure: f64,
    pub embedding_constant: f64,
    pub epsilon_max: f64,
    pub sigma: f64,
}

impl BoundsSnapshot {
    pub fn compute(rho: f64, inputs: BoundInputs) -> Result<Self> {
        let snapshot = BoundsSnapshot {
            d: inputs.d,
            rho,
            big_m: inputs.big_m,
            u0_h4: inputs.u0_h4,
            k_l1: inputs.k_l1,
            k_l2: inputs.k_l2,
            sphere_measure: sphere_measure(inputs.d),
            embedding_constant: embedding_constant(inputs.d, DEFAULT_QUAD_POINTS)?,
            epsilon_max: epsilon_max(rho, &inputs)?,
            sigma: sigma(&inputs)?,
        };
        debug_assert!(snapshot.epsilon_max * snapshot.sigma < 1.0);
        Ok(snapshot)
    }

    pub fn inputs(&self) -> BoundInputs {
        BoundInputs {
            d: self.d,
            big_m: self.big_m,
            u0_h4: self.u0_h4,
            k_l1: self.k_l1,
            k_l2: self.k_l2,
        }
    }

    /// Same instance with a different bound `M`.
    pub fn with_big_m(&self, big_m: f64) -> Result<Self> {
        Self::compute(
            self.rho,
            BoundInputs {
                big_m,
                ..self.inputs()
            },
        )
    }

    /// `(name, value)` pairs for reports.
    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("d", self.d as f64),
            ("rho", self.rho),
            ("big_m", self.big_m),
            ("u0_h4", self.u0_h4),
            ("k_l1", self.k_l1),
            ("k_l2", self.k_l2),
            ("sphere_measure", self.sphere_measure),
            ("embedding_constant", self.embedding_constant),
            ("epsilon_max", self.epsilon_max),
            ("sigma", self.sigma),
        ]
    }
}

/// Bound on `||u_1 - u_2||_H4` for the solutions with nonlinearities `g_1`,
/// `g_2` at distance `g_diff_c2` in `C2(I)`.
pub fn continuity_bound(epsilon: f64, snapshot: &BoundsSnapshot, g_diff_c2: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::NonPositiveInput("epsilon"));
    }
    if !(g_diff_c2.is_finite() && g_diff_c2 >= 0.0) {
        return Err(Error::NonPositiveInput("g_diff_c2"));
    }
    let inputs = snapshot.inputs();
    inputs.validate()?;
    let eps_sigma = epsilon * snapshot.sigma;
    if eps_sigma >= 1.0 {
        return Err(Error::ContractionViolated { eps_sigma });
    }
    let a = inputs.u0_h4 + 1.0;
    Ok(epsilon / (1.0 - eps_sigma) * a * a * inputs.self_map_bracket() * g_diff_c2)
}
