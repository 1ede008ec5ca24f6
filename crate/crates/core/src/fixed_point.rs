//! Picard iteration for the perturbative part of the solution.
//!
//! The full equation `[Laplacian - Bilaplacian] u + eps K * g(u) + f = 0` is
//! split as `u = u0 + u_p` with `[-Laplacian + Bilaplacian] u0 = f`. The
//! perturbation is the fixed point of
//!
//! ```text
//! t_g(v) = [-Laplacian + Bilaplacian]^(-1) ( eps K * g(u0 + v) )
//! ```
//!
//! on the `H4` ball of radius `rho`. On the torus the zero mode of the
//! convolution is projected out before the inversion, and the residual is
//! measured with the same projection.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::bounds::{
    continuity_bound, embedding_constant, lattice_embedding_constant, self_map_radius, BoundInputs,
    BoundsSnapshot, DEFAULT_QUAD_POINTS,
};
use crate::error::{Error, Result};
use crate::grid::{
    apply_multiplier, convolve, forward_transform, inverse_transform, norm_h4, norm_l1, norm_l2,
    spectral_energy, FieldRole, GridSpec, RealField, SpectralField, Symbol,
};
use crate::linear::{solve_linear_detailed, LinearSolveOptions, MeanPolicy};
use crate::nonlinearity::{
    build_interval, c2_distance, c2_norm, compose, C2Report, IntervalI, Nonlinearity,
    DEFAULT_SAMPLES,
};

/// Relative slack on every theorem inequality checked on the grid.
pub const DISCRETE_SLACK: f64 = 0.05;
pub const DEFAULT_TOL_FP: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Consecutive growing steps that count as divergence.
pub const DIVERGENCE_RUN: usize = 5;
/// Pairs closer than this in `H4` are redrawn.
pub const DEGENERATE_PAIR_TOL: f64 = 1e-14;
const MAX_REDRAWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonChoice {
    /// The certified threshold `epsilon_max`.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol_fp: f64,
    pub max_iter: usize,
    pub slack: f64,
    /// Options for the `u0` solve.
    pub linear: LinearSolveOptions,
    /// Replaces the measured `||g||_C2(I)` when larger.
    pub big_m: Option<f64>,
    pub c2_samples: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_fp: DEFAULT_TOL_FP,
            max_iter: DEFAULT_MAX_ITER,
            slack: DISCRETE_SLACK,
            linear: LinearSolveOptions::default(),
            big_m: None,
            c2_samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guarantee {
    Certified,
    Uncertified,
}

impl std::fmt::Display for Guarantee {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Guarantee::Certified => "certified",
            Guarantee::Uncertified => "uncertified",
        })
    }
}

/// A fully resolved problem instance: data, `u0`, the interval `I`, the
/// bound `M` and (for `d >= 5`) the threshold snapshot.
#[derive(Clone)]
pub struct ProblemSpec {
    kernel: RealField,
    source: RealField,
    g: Nonlinearity,
    epsilon: f64,
    rho: f64,
    u0: RealField,
    source_mean_adjustment: f64,
    interval: IntervalI,
    c2: C2Report,
    big_m: f64,
    k_l1: f64,
    k_l2: f64,
    bounds: Option<BoundsSnapshot>,
    options: SolverOptions,
}

impl ProblemSpec {
    pub fn new(
        kernel: RealField,
        source: RealField,
        g: Nonlinearity,
        epsilon: EpsilonChoice,
        rho: f64,
        options: SolverOptions,
    ) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::RhoOutOfRange(rho));
        }
        if kernel.spec() != source.spec() {
            return Err(Error::GridMismatch);
        }
        if kernel.is_zero() {
            return Err(Error::TrivialField);
        }
        if !(options.tol_fp > 0.0 && options.tol_fp.is_finite()) {
            return Err(Error::NonPositiveInput("tol_fp"));
        }
        if options.max_iter == 0 {
            return Err(Error::NonPositiveInput("max_iter"));
        }
        if !(options.slack >= 0.0 && options.slack.is_finite()) {
            return Err(Error::NonPositiveInput("slack"));
        }
        g.check_conforming()?;
        let spec = *source.spec();
        let d = spec.dim();
        let lin = solve_linear_detailed(&source, &options.linear)?;
        let u0 = lin.u;
        let u0_h4 = norm_h4(&u0);
        let c_e = if d >= 5 {
            embedding_constant(d, DEFAULT_QUAD_POINTS)?
        } else {
            lattice_embedding_constant(&spec)
        };
        let interval = build_interval(u0_h4, c_e)?;
        let c2 = c2_norm(&g, &interval, options.c2_samples)?;
        if c2.c2_norm == 0.0 {
            return Err(Error::TrivialNonlinearity);
        }
        let big_m = match options.big_m {
            Some(m) if !(m.is_finite() && m > 0.0) => return Err(Error::NonPositiveInput("big_m")),
            Some(m) => m.max(c2.big_m),
            None => c2.big_m,
        };
        let k_l1 = norm_l1(&kernel);
        let k_l2 = norm_l2(&kernel);
        let bounds = if d >= 5 {
            Some(BoundsSnapshot::compute(
                rho,
                BoundInputs {
                    d,
                    big_m,
                    u0_h4,
                    k_l1,
                    k_l2,
                },
            )?)
        } else {
            None
        };
        let mut ps = ProblemSpec {
            kernel: kernel.with_role(FieldRole::Kernel),
            source: source.with_role(FieldRole::Source),
            g,
            epsilon: 0.0,
            rho,
            u0,
            source_mean_adjustment: lin.mean_adjustment,
            interval,
            c2,
            big_m,
            k_l1,
            k_l2,
            bounds,
            options,
        };
        ps.epsilon = ps.resolve_epsilon(epsilon)?;
        Ok(ps)
    }

    /// The same instance at another `epsilon`.
    pub fn with_epsilon(&self, epsilon: EpsilonChoice) -> Result<Self> {
        let mut ps = self.clone();
        ps.epsilon = ps.resolve_epsilon(epsilon)?;
        Ok(ps)
    }

    /// The same data and `epsilon` with another nonlinearity.
    pub fn with_nonlinearity(&self, g: Nonlinearity) -> Result<Self> {
        ProblemSpec::new(
            self.kernel.clone(),
            self.source.clone(),
            g,
            EpsilonChoice::Value(self.epsilon),
            self.rho,
            self.options,
        )
    }

    fn resolve_epsilon(&self, choice: EpsilonChoice) -> Result<f64> {
        match choice {
            EpsilonChoice::Auto => match &self.bounds {
                Some(b) => Ok(b.epsilon_max),
                None => Err(Error::BadDimension {
                    d: self.spec().dim(),
                    allowed: "d >= 5 for epsilon = auto",
                }),
            },
            EpsilonChoice::Value(e) if e.is_finite() && e >= 0.0 => Ok(e),
            EpsilonChoice::Value(_) => Err(Error::NonPositiveInput("epsilon")),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        self.source.spec()
    }

    pub fn kernel(&self) -> &RealField {
        &self.kernel
    }

    pub fn source(&self) -> &RealField {
        &self.source
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.g
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn u0(&self) -> &RealField {
        &self.u0
    }

    /// Mean removed from `f` when `u0` was solved under `MeanPolicy::Project`.
    pub fn source_mean_adjustment(&self) -> f64 {
        self.source_mean_adjustment
    }

    pub fn interval(&self) -> &IntervalI {
        &self.interval
    }

    pub fn c2_report(&self) -> &C2Report {
        &self.c2
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn kernel_norms(&self) -> (f64, f64) {
        (self.k_l1, self.k_l2)
    }

    pub fn bounds(&self) -> Option<&BoundsSnapshot> {
        self.bounds.as_ref()
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    /// `epsilon * sigma`, when the threshold theory applies.
    pub fn eps_sigma(&self) -> Option<f64> {
        self.bounds.as_ref().map(|b| self.epsilon * b.sigma)
    }

    pub fn guarantee(&self) -> Guarantee {
        match &self.bounds {
            Some(b) if self.epsilon <= b.epsilon_max => Guarantee::Certified,
            _ => Guarantee::Uncertified,
        }
    }

    pub fn certified(&self) -> bool {
        self.guarantee() == Guarantee::Certified
    }
}

#[derive(Debug, Clone)]
pub struct TgOutput {
    pub v: RealField,
    /// Grid mean removed from `eps K * g(u0 + v)` before inversion.
    pub mean_adjustment: f64,
}

fn check_ball(ps: &ProblemSpec, v: &RealField) -> Result<()> {
    if v.spec() != ps.spec() {
        return Err(Error::GridMismatch);
    }
    let norm = norm_h4(v);
    if norm > ps.rho * (1.0 + ps.options.slack) {
        return Err(Error::OutsideBall { norm, rho: ps.rho });
    }
    Ok(())
}

pub fn apply_tg_detailed(ps: &ProblemSpec, v: &RealField) -> Result<TgOutput> {
    check_ball(ps, v)?;
    if ps.epsilon == 0.0 {
        return Ok(TgOutput {
            v: RealField::zeros(*ps.spec()).with_role(FieldRole::Iterate),
            mean_adjustment: 0.0,
        });
    }
    let composed = compose(&ps.g, &ps.u0, v, &ps.interval)?;
    let rhs = convolve(&ps.kernel, &composed)?.scaled(ps.epsilon);
    if rhs.is_zero() {
        return Ok(TgOutput {
            v: RealField::zeros(*ps.spec()).with_role(FieldRole::Iterate),
            mean_adjustment: 0.0,
        });
    }
    let opts = LinearSolveOptions {
        mean_policy: MeanPolicy::Project,
        ..ps.options.linear
    };
    let sol = solve_linear_detailed(&rhs, &opts)?;
    Ok(TgOutput {
        v: sol.u.with_role(FieldRole::Iterate),
        mean_adjustment: sol.mean_adjustment,
    })
}

/// `t_g(v)`; `v` must lie in the ball of radius `rho` (up to the slack).
pub fn apply_tg(ps: &ProblemSpec, v: &RealField) -> Result<RealField> {
    apply_tg_detailed(ps, v).map(|o| o.v)
}

/// `L2` norm (Parseval) of a spectrum after dropping its zero mode.
fn projected_l2(mut hat: SpectralField) -> Result<f64> {
    hat.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    Ok(spectral_energy(&hat, |_| 1.0).sqrt())
}

/// `||[Laplacian - Bilaplacian] u + eps K * g(u) + f||_2` with the zero mode
/// of the whole expression projected out. No interval check on `u`.
pub fn residual(ps: &ProblemSpec, u: &RealField) -> Result<f64> {
    if u.spec() != ps.spec() {
        return Err(Error::GridMismatch);
    }
    let gu = u.map(|z| ps.g.value(z));
    let conv = convolve(&ps.kernel, &gu)?;
    let mut hat = apply_multiplier(&forward_transform(u), |p| -Symbol::LSymbol.eval(p));
    let conv_hat = forward_transform(&conv);
    let f_hat = forward_transform(&ps.source);
    for ((r, c), f) in hat
        .coeffs_mut()
        .iter_mut()
        .zip(conv_hat.coeffs())
        .zip(f_hat.coeffs())
    {
        *r += c * ps.epsilon + f;
    }
    projected_l2(hat)
}

/// `||[-Laplacian + Bilaplacian] u_p - eps K * g(u0 + u_p)||_2`, projected
/// like `residual`.
pub fn perturbative_residual(ps: &ProblemSpec, u_p: &RealField) -> Result<f64> {
    let u = ps.u0.add(u_p)?;
    let gu = u.map(|z| ps.g.value(z));
    let conv_hat = forward_transform(&convolve(&ps.kernel, &gu)?);
    let mut hat = apply_multiplier(&forward_transform(u_p), |p| Symbol::LSymbol.eval(p));
    for (r, c) in hat.coeffs_mut().iter_mut().zip(conv_hat.coeffs()) {
        *r -= c * ps.epsilon;
    }
    projected_l2(hat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// 1-based iteration count.
    pub iter: usize,
    /// `H4` norm of the new perturbative iterate.
    pub u_h4: f64,
    pub step_h4: f64,
    /// `step_k / step_(k-1)`; absent on the first iteration.
    pub ratio: Option<f64>,
    /// Full-equation residual of `u0 + iterate`.
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
}

impl IterationTrace {
    pub fn max_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u0: RealField,
    pub u_p: RealField,
    pub u: RealField,
    pub trace: IterationTrace,
    pub bounds: Option<BoundsSnapshot>,
    pub epsilon: f64,
    pub converged: bool,
    pub guarantee: Guarantee,
    pub residual: f64,
    /// Mean projected out of the last convolution term.
    pub tg_mean_adjustment: f64,
    pub source_mean_adjustment: f64,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Iterates from `v^0 = 0`.
pub fn solve_fixed_point(ps: &ProblemSpec) -> Result<SolveReport> {
    solve_fixed_point_from(ps, &RealField::zeros(*ps.spec()))
}

/// Iterates `v^(k+1) = t_g(v^k)` until the `H4` step falls below
/// `tol_fp * max(1, ||v^(k+1)||_H4)`.
pub fn solve_fixed_point_from(ps: &ProblemSpec, start: &RealField) -> Result<SolveReport> {
    let mut v = start.clone().with_role(FieldRole::Iterate);
    let mut trace = IterationTrace::default();
    let mut prev_step: Option<f64> = None;
    let mut growing = 0;
    let mut last_step = f64::INFINITY;
    for iter in 1..=ps.options.max_iter {
        let out = apply_tg_detailed(ps, &v)?;
        let step = norm_h4(&out.v.sub(&v)?);
        let u_h4 = norm_h4(&out.v);
        let u = ps.u0.add(&out.v)?;
        let res = residual(ps, &u)?;
        trace.rows.push(TraceRow {
            iter,
            u_h4,
            step_h4: step,
            ratio: prev_step.map(|p| step / p),
            residual: res,
        });
        log::debug!("iteration {iter}: step {step:e}, residual {res:e}");
        v = out.v;
        last_step = step / u_h4.max(1.0);
        if step <= ps.options.tol_fp * u_h4.max(1.0) {
            return Ok(SolveReport {
                u0: ps.u0.clone(),
                u: u.with_role(FieldRole::Solution),
                u_p: v,
                trace,
                bounds: ps.bounds,
                epsilon: ps.epsilon,
                converged: true,
                guarantee: ps.guarantee(),
                residual: res,
                tg_mean_adjustment: out.mean_adjustment,
                source_mean_adjustment: ps.source_mean_adjustment,
            });
        }
        growing = match prev_step {
            Some(p) if step > p => growing + 1,
            _ => 0,
        };
        if growing >= DIVERGENCE_RUN {
            return Err(Error::Diverged { iteration: iter });
        }
        prev_step = Some(step);
    }
    Err(Error::NotConverged {
        iterations: ps.options.max_iter,
        last_step,
    })
}

/// Deterministic generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Random element of the `H4` ball: white noise smoothed by
/// `(1 + |p|^4)^(-1)`, rescaled to a norm uniform in `(0, rho]`.
pub fn sample_ball(spec: &GridSpec, rho: f64, rng: &mut ChaCha8Rng) -> Result<RealField> {
    let noise: Vec<f64> = (0..spec.len())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let noise = RealField::new(*spec, noise, FieldRole::Iterate)?;
    let smooth = apply_multiplier(&forward_transform(&noise), |p| 1.0 / (1.0 + p * p));
    let v = inverse_transform(&smooth)?.with_role(FieldRole::Iterate);
    let target = rho * (1.0 - Uniform::new(0.0, 1.0).unwrap().sample(rng));
    Ok(v.scaled(target / norm_h4(&v)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionSample {
    pub trial: usize,
    pub dv_h4: f64,
    pub dtv_h4: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub samples: Vec<ContractionSample>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub eps_sigma: Option<f64>,
    pub guarantee: Guarantee,
    pub slack: f64,
}

impl ContractionReport {
    /// `max ratio <= eps sigma (1 + slack)`; `None` without a threshold.
    pub fn verdict(&self) -> Option<bool> {
        self.eps_sigma
            .map(|es| self.max_ratio <= es * (1.0 + self.slack))
    }
}

/// `||t_g v1 - t_g v2||_H4 / ||v1 - v2||_H4`.
pub fn pair_ratio(ps: &ProblemSpec, v1: &RealField, v2: &RealField) -> Result<(f64, f64)> {
    let dv = norm_h4(&v1.sub(v2)?);
    if dv < DEGENERATE_PAIR_TOL {
        return Err(Error::DegeneratePair(1));
    }
    let dtv = norm_h4(&apply_tg(ps, v1)?.sub(&apply_tg(ps, v2)?)?);
    Ok((dv, dtv))
}

fn contraction_trial(ps: &ProblemSpec, seed: u64, trial: usize) -> Result<ContractionSample> {
    let mut rng = trial_rng(seed, trial as u64);
    let v1 = sample_ball(ps.spec(), ps.rho, &mut rng)?;
    for _ in 0..MAX_REDRAWS {
        let v2 = sample_ball(ps.spec(), ps.rho, &mut rng)?;
        match pair_ratio(ps, &v1, &v2) {
            Ok((dv, dtv)) => {
                return Ok(ContractionSample {
                    trial,
                    dv_h4: dv,
                    dtv_h4: dtv,
                    ratio: dtv / dv,
                })
            }
            Err(Error::DegeneratePair(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegeneratePair(MAX_REDRAWS))
}

/// Empirical Lipschitz ratios of `t_g` over `trials` random pairs in the
/// ball. Trials run in parallel; trial `t` draws from stream `t` of `seed`,
/// so the report does not depend on scheduling.
pub fn measure_contraction(
    ps: &ProblemSpec,
    trials: usize,
    seed: u64,
) -> Result<ContractionReport> {
    if trials == 0 {
        return Err(Error::NonPositiveInput("trials"));
    }
    let samples = (0..trials)
        .into_par_iter()
        .map(|t| contraction_trial(ps, seed, t))
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let mean_ratio = samples.iter().map(|s| s.ratio).sum::<f64>() / trials as f64;
    Ok(ContractionReport {
        samples,
        max_ratio,
        mean_ratio,
        eps_sigma: ps.eps_sigma(),
        guarantee: ps.guarantee(),
        slack: ps.options.slack,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfMapReport {
    pub norms: Vec<f64>,
    pub max_norm: f64,
    /// Theoretical bound on `||t_g v||_H4` at this `epsilon`.
    pub radius: Option<f64>,
    pub rho: f64,
    pub slack: f64,
}

impl SelfMapReport {
    pub fn verdict(&self) -> bool {
        self.max_norm <= self.rho * (1.0 + self.slack)
    }
}

/// `||t_g v||_H4` for `samples` random `v` in the ball. Uses streams
/// disjoint from `measure_contraction` with the same seed.
pub fn measure_self_map(ps: &ProblemSpec, samples: usize, seed: u64) -> Result<SelfMapReport> {
    let norms = (0..samples)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, (1u64 << 63) | t as u64);
            let v = sample_ball(ps.spec(), ps.rho, &mut rng)?;
            Ok(norm_h4(&apply_tg(ps, &v)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let radius = match &ps.bounds {
        Some(b) => Some(self_map_radius(ps.epsilon, &b.inputs())?),
        None => None,
    };
    Ok(SelfMapReport {
        max_norm: norms.iter().copied().fold(0.0, f64::max),
        norms,
        radius,
        rho: ps.rho,
        slack: ps.options.slack,
    })
}

#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub epsilon: f64,
    pub measured: f64,
    pub bound: f64,
    pub g_diff_c2: f64,
    /// Thresholds with `M = max(M_1, M_2)`.
    pub snapshot: BoundsSnapshot,
    pub slack: f64,
    pub u1_h4: f64,
    pub u2_h4: f64,
    pub iterations: (usize, usize),
}

impl ContinuityReport {
    pub fn verdict(&self) -> bool {
        self.measured <= self.bound * (1.0 + self.slack)
    }
}

/// Two instances sharing every datum except `g`. `EpsilonChoice::Auto`
/// resolves to the smaller of the two thresholds.
pub fn continuity_pair(
    kernel: RealField,
    source: RealField,
    g1: Nonlinearity,
    g2: Nonlinearity,
    epsilon: EpsilonChoice,
    rho: f64,
    options: SolverOptions,
) -> Result<(ProblemSpec, ProblemSpec)> {
    let p1 = ProblemSpec::new(kernel, source, g1, EpsilonChoice::Value(0.0), rho, options)?;
    let p2 = p1.with_nonlinearity(g2)?;
    let eps = match epsilon {
        EpsilonChoice::Value(e) => EpsilonChoice::Value(e),
        EpsilonChoice::Auto => {
            let (b1, b2) = match (p1.bounds(), p2.bounds()) {
                (Some(b1), Some(b2)) => (b1, b2),
                _ => {
                    return Err(Error::BadDimension {
                        d: p1.spec().dim(),
                        allowed: "d >= 5 for epsilon = auto",
                    })
                }
            };
            EpsilonChoice::Value(b1.epsilon_max.min(b2.epsilon_max))
        }
    };
    Ok((p1.with_epsilon(eps)?, p2.with_epsilon(eps)?))
}

/// Solves both instances and compares `||u_1 - u_2||_H4` with the
/// continuity estimate in `||g_1 - g_2||_C2(I)`.
pub fn continuity_experiment(ps1: &ProblemSpec, ps2: &ProblemSpec) -> Result<ContinuityReport> {
    if ps1.spec() != ps2.spec() {
        return Err(Error::GridMismatch);
    }
    if ps1.kernel.values() != ps2.kernel.values()
        || ps1.source.values() != ps2.source.values()
        || ps1.rho != ps2.rho
        || ps1.epsilon != ps2.epsilon
    {
        return Err(Error::InvalidField(
            "continuity runs must share kernel, source, rho and epsilon".into(),
        ));
    }
    let (b1, _) = match (ps1.bounds(), ps2.bounds()) {
        (Some(b1), Some(b2)) => (b1, b2),
        _ => {
            return Err(Error::BadDimension {
                d: ps1.spec().dim(),
                allowed: "d >= 5",
            })
        }
    };
    let snapshot = b1.with_big_m(ps1.big_m.max(ps2.big_m))?;
    if ps1.epsilon > snapshot.epsilon_max {
        return Err(Error::Uncertified {
            epsilon: ps1.epsilon,
            epsilon_max: snapshot.epsilon_max,
        });
    }
    let g_diff_c2 = c2_distance(&ps1.g, &ps2.g, &ps1.interval, ps1.options.c2_samples)?;
    let bound = continuity_bound(ps1.epsilon, &snapshot, g_diff_c2)?;
    let r1 = solve_fixed_point(ps1)?;
    let r2 = solve_fixed_point(ps2)?;
    Ok(ContinuityReport {
        epsilon: ps1.epsilon,
        measured: norm_h4(&r1.u.sub(&r2.u)?),
        bound,
        g_diff_c2,
        snapshot,
        slack: ps1.options.slack,
        u1_h4: norm_h4(&r1.u),
        u2_h4: norm_h4(&r2.u),
        iterations: (r1.iterations(), r2.iterations()),
    })
}
