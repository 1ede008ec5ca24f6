//! Solver for `[-Laplacian + Bilaplacian] u = f` and the sequence experiment.
//!
//! The symbol `|p|^2 + |p|^4` vanishes only at `p = 0`. On `R^d` with
//! `d >= 5` that point carries no mass, but on the torus it is a whole
//! Fourier mode, so the zero mode of `f` is either required to be negligible
//! (`MeanPolicy::Reject`) or removed and recorded (`MeanPolicy::Project`).
//! Runs with `d < 5` are allowed for testing; the integrability argument
//! behind the sequence majorant needs `d >= 5`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bounds::sphere_measure;
use crate::error::{Error, Result};
use crate::grid::{
    apply_symbol, forward_transform, inverse_transform, norm_h4, norm_l1, norm_l2, FieldRole,
    RealField, SpectralField, Symbol,
};

/// Relative slack between measured differences and the sequence majorant.
pub const SEQUENCE_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanPolicy {
    Reject,
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveOptions {
    /// Largest admissible `|f_hat(0)|`, relative to `||f||_2`.
    pub zero_mode_tol: f64,
    pub mean_policy: MeanPolicy,
}

impl Default for LinearSolveOptions {
    fn default() -> Self {
        LinearSolveOptions {
            zero_mode_tol: 1e-10,
            mean_policy: MeanPolicy::Reject,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub u: RealField,
    /// Grid mean removed from `f` before solving (zero when nothing was
    /// removed).
    pub mean_adjustment: f64,
}

/// Divides by the symbol away from `p = 0` and zeroes the zero mode.
pub fn invert_symbol(f_hat: &SpectralField) -> SpectralField {
    let mut out = f_hat.clone();
    for (c, p_sq) in out
        .coeffs_mut()
        .iter_mut()
        .zip(f_hat.spec().frequency_sq_table())
    {
        *c = if p_sq == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            *c / Symbol::LSymbol.eval(p_sq)
        };
    }
    out
}

/// Grid mean carried by a spectrum's zero mode.
pub fn zero_mode_mean(f_hat: &SpectralField) -> f64 {
    let spec = f_hat.spec();
    f_hat.zero_mode().re * (2.0 * PI).powf(spec.dim() as f64 / 2.0)
        / (2.0 * spec.half_width()).powi(spec.dim() as i32)
}

pub fn solve_linear_detailed(f: &RealField, opts: &LinearSolveOptions) -> Result<LinearSolution> {
    let f_l2 = norm_l2(f);
    if f_l2 == 0.0 {
        return Err(Error::TrivialSource);
    }
    let f_hat = forward_transform(f);
    let zero = f_hat.zero_mode().norm();
    let tol = opts.zero_mode_tol * f_l2;
    let mean_adjustment = match opts.mean_policy {
        MeanPolicy::Reject if zero > tol => {
            return Err(Error::NonDecayingSource {
                zero_mode: zero,
                tol,
            })
        }
        MeanPolicy::Reject => 0.0,
        MeanPolicy::Project => zero_mode_mean(&f_hat),
    };
    let u = inverse_transform(&invert_symbol(&f_hat))?.with_role(FieldRole::Solution);
    Ok(LinearSolution { u, mean_adjustment })
}

pub fn solve_linear(f: &RealField, opts: &LinearSolveOptions) -> Result<RealField> {
    solve_linear_detailed(f, opts).map(|s| s.u)
}

/// `[-Laplacian + Bilaplacian] u`, applied spectrally.
pub fn apply_operator(u: &RealField) -> Result<RealField> {
    inverse_transform(&apply_symbol(&forward_transform(u), Symbol::LSymbol))
}

/// `||u||_H4`, the norm every report uses.
pub fn verify_h4(u: &RealField) -> f64 {
    norm_h4(u)
}

/// `sqrt(a^2 + (a / 2 + (2 pi)^(-d/2) sqrt(|S| / (d - 4)) b)^2)` with
/// `a = ||f_n - f||_2`, `b = ||f_n - f||_1`. The first term bounds the
/// bi-Laplacian part, the second the high- and low-frequency split of the
/// `L2` part.
pub fn sequence_majorant(d: usize, df_l1: f64, df_l2: f64) -> Result<f64> {
    if d < 5 {
        return Err(Error::BadDimension {
            d,
            allowed: "d >= 5",
        });
    }
    let df = d as f64;
    let low = (2.0 * PI).powf(-df / 2.0) * (sphere_measure(d) / (df - 4.0)).sqrt() * df_l1;
    let l2_part = 0.5 * df_l2 + low;
    Ok((df_l2 * df_l2 + l2_part * l2_part).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceRow {
    /// 1-based index of the approximating source.
    pub n: usize,
    pub df_l1: f64,
    pub df_l2: f64,
    pub du_h4: f64,
    pub majorant: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceReport {
    pub rows: Vec<SequenceRow>,
    pub verdict: bool,
}

impl SequenceReport {
    /// Least-squares slope of `ln du_h4` against `ln n` over rows with a
    /// nonzero difference; `None` with fewer than two such rows.
    pub fn log_log_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.du_h4 > 0.0)
            .map(|r| ((r.n as f64).ln(), r.du_h4.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

/// Solves for `f` and every `f_n = f + perturbation_n`, then compares
/// `||u_n - u||_H4` with the majorant.
pub fn sequence_experiment(
    f: &RealField,
    perturbations: &[RealField],
    opts: &LinearSolveOptions,
) -> Result<SequenceReport> {
    let d = f.spec().dim();
    let u = solve_linear(f, opts)?;
    let mut rows = Vec::with_capacity(perturbations.len());
    for (i, h) in perturbations.iter().enumerate() {
        let fn_ = f.add(h)?;
        let un = solve_linear(&fn_, opts)?;
        let df = fn_.sub(f)?;
        let (df_l1, df_l2) = (norm_l1(&df), norm_l2(&df));
        let du_h4 = norm_h4(&un.sub(&u)?);
        let majorant = sequence_majorant(d, df_l1, df_l2)?;
        rows.push(SequenceRow {
            n: i + 1,
            df_l1,
            df_l2,
            du_h4,
            majorant,
            ok: du_h4 <= majorant * (1.0 + SEQUENCE_SLACK),
        });
    }
    let verdict = rows.iter().all(|r| r.ok);
    Ok(SequenceReport { rows, verdict })
}
