//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nfs_core::bounds::{
    epsilon_max, minimize_phi, phi, radial_integral, sigma, sphere_measure, BoundInputs,
    DEFAULT_QUAD_POINTS,
};
use nfs_core::fixed_point::{
    continuity_experiment, continuity_pair, measure_contraction, measure_self_map, sample_ball,
    solve_fixed_point, solve_fixed_point_from, trial_rng, DISCRETE_SLACK,
};
use nfs_core::grid::{convolve, norm_h4, norm_l2, FieldRole, GridSpec, RealField};
use nfs_core::linear::{sequence_experiment, solve_linear, LinearSolveOptions};
use nfs_core::report::contraction_csv;
use nfs_core::{scenario, EpsilonChoice, Nonlinearity, Result, SolverOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn linear_exactness() -> Result<Outcome> {
    let spec = GridSpec::new(5, 8, PI)?;
    let opts = LinearSolveOptions::default();
    let mut worst: f64 = 0.0;
    for (k, symbol) in [(1.0, 2.0), (2.0, 20.0)] {
        let f = RealField::from_fn(spec, FieldRole::Source, |x| {
            if k == 1.0 {
                x[0].cos()
            } else {
                (2.0 * x[0]).sin()
            }
        })?;
        let u = solve_linear(&f, &opts)?;
        let expected = f.scaled(1.0 / symbol);
        worst = worst.max(norm_l2(&u.sub(&expected)?) / norm_l2(&expected));
    }
    outcome(
        worst < 1e-12,
        format!("max relative L2 error {worst:.3e} (< 1e-12)"),
    )
}

fn convolution_oracle() -> Result<Outcome> {
    let spec = GridSpec::new(2, 8, 1.7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut random = || -> Result<RealField> {
        let v = (0..spec.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        RealField::new(spec, v, FieldRole::Generic)
    };
    let (k, g) = (random()?, random()?);
    let fast = convolve(&k, &g)?;
    let n = spec.n();
    let mut worst: f64 = 0.0;
    for i in 0..spec.len() {
        let ii = spec.unravel(i);
        let mut direct = 0.0;
        for j in 0..spec.len() {
            let jj = spec.unravel(j);
            let idx: Vec<usize> = ii
                .iter()
                .zip(&jj)
                .map(|(&a, &b)| (a + n + n / 2 - b) % n)
                .collect();
            direct += k.values()[spec.ravel(&idx)] * g.values()[j];
        }
        direct *= spec.cell_volume();
        worst = worst.max((fast.values()[i] - direct).abs());
    }
    outcome(
        worst < 1e-12,
        format!("max abs difference {worst:.3e} (< 1e-12)"),
    )
}

/// Log-spaced search over `[1e-4, 1e4]`, then a linear search between the
/// neighbours of the best point; `POINTS` evaluations each.
fn grid_search_phi(alpha: f64, d: usize) -> (f64, f64) {
    const POINTS: usize = 1_000_000;
    let (lo, hi) = (1e-4f64.ln(), 1e4f64.ln());
    let log_r = |i: usize| lo + (hi - lo) * i as f64 / (POINTS - 1) as f64;
    let best = (0..POINTS)
        .min_by(|&a, &b| phi(alpha, d, log_r(a).exp()).total_cmp(&phi(alpha, d, log_r(b).exp())))
        .unwrap();
    let a = log_r(best.saturating_sub(1)).exp();
    let b = log_r((best + 1).min(POINTS - 1)).exp();
    (0..POINTS)
        .map(|i| a + (b - a) * i as f64 / (POINTS - 1) as f64)
        .map(|r| (r, phi(alpha, d, r)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap()
}

fn phi_minimiser() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let alpha = 10f64.powf(rng.random_range(-2.0..2.0));
        let d = rng.random_range(5..=7);
        let closed = minimize_phi(alpha, d)?;
        let (r, v) = grid_search_phi(alpha, d);
        worst = worst
            .max((closed.r_star - r).abs() / closed.r_star)
            .max((closed.phi_min - v).abs() / closed.phi_min);
    }
    let unit = minimize_phi(4.0, 5)?;
    let exact = unit.r_star == 1.0 && unit.phi_min == 5.0;
    outcome(
        worst < 1e-6 && exact,
        format!(
            "max relative gap {worst:.3e} (< 1e-6); alpha=4,d=5 gives R*={}, phi_min={}",
            unit.r_star, unit.phi_min
        ),
    )
}

fn threshold_consistency() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let inputs = BoundInputs {
            d: rng.random_range(5..=7),
            big_m: 10f64.powf(rng.random_range(-3.0..3.0)),
            u0_h4: 10f64.powf(rng.random_range(-3.0..3.0)),
            k_l1: 10f64.powf(rng.random_range(-3.0..3.0)),
            k_l2: 10f64.powf(rng.random_range(-3.0..3.0)),
        };
        let rho = rng.random_range(1e-3..=1.0);
        worst = worst.max(epsilon_max(rho, &inputs)? * sigma(&inputs)?);
    }
    outcome(worst < 1.0, format!("max eps_max*sigma {worst:.6} (< 1)"))
}

fn certified_contraction() -> Result<Outcome> {
    let ps = scenario::problem(scenario::quadratic(), EpsilonChoice::Auto)?;
    let r = measure_contraction(&ps, scenario::CONTRACTION_TRIALS, scenario::SEED)?;
    let limit = ps.eps_sigma().unwrap() * (1.0 + DISCRETE_SLACK);
    outcome(
        ps.certified() && r.max_ratio <= limit,
        format!(
            "max ratio {:.4e} <= eps*sigma*1.05 = {limit:.4e}",
            r.max_ratio
        ),
    )
}

fn self_map() -> Result<Outcome> {
    let ps = scenario::problem(scenario::quadratic(), EpsilonChoice::Auto)?;
    let r = measure_self_map(&ps, 100, scenario::SEED)?;
    let limit = ps.rho() * (1.0 + DISCRETE_SLACK);
    outcome(
        r.max_norm <= limit,
        format!("max ||t_g v||_H4 {:.4e} <= rho*1.05 = {limit}", r.max_norm),
    )
}

fn fixed_point() -> Result<Outcome> {
    let ps = scenario::problem(scenario::quadratic(), EpsilonChoice::Auto)?;
    let limit = ps.eps_sigma().unwrap() * (1.0 + DISCRETE_SLACK);
    let a = solve_fixed_point(&ps)?;
    let max_ratio = a.trace.max_ratio().unwrap_or(0.0);
    let res_limit = 1e-8 * norm_l2(ps.source()).max(1.0);
    let start = sample_ball(ps.spec(), ps.rho(), &mut trial_rng(scenario::SEED, 7))?;
    let b = solve_fixed_point_from(&ps, &start)?;
    let gap = norm_h4(&a.u.sub(&b.u)?);
    outcome(
        a.converged && max_ratio <= limit && a.residual <= res_limit && gap <= 1e-8,
        format!(
            "{} iterations, max step ratio {max_ratio:.4e} <= {limit:.4e}, residual {:.3e} <= {res_limit:.1e}, start gap {gap:.3e} <= 1e-8",
            a.iterations(),
            a.residual
        ),
    )
}

fn continuity() -> Result<Outcome> {
    let (p1, p2) = continuity_pair(
        scenario::kernel()?,
        scenario::source()?,
        Nonlinearity::polynomial(&[1.0]),
        Nonlinearity::polynomial(&[1.0, 0.1]),
        EpsilonChoice::Auto,
        scenario::RHO,
        SolverOptions::default(),
    )?;
    let r = continuity_experiment(&p1, &p2)?;
    outcome(
        r.verdict(),
        format!(
            "measured {:.4e} <= bound*1.05 = {:.4e}",
            r.measured,
            r.bound * (1.0 + r.slack)
        ),
    )
}

fn sequences() -> Result<Outcome> {
    let f = scenario::source()?;
    let h = scenario::perturbation()?;
    let perturbations: Vec<RealField> = (1..=scenario::SEQUENCE_COUNT)
        .map(|n| h.scaled(1.0 / n as f64))
        .collect();
    let r = sequence_experiment(&f, &perturbations, &LinearSolveOptions::default())?;
    let slope = r.log_log_slope().unwrap_or(f64::NAN);
    outcome(
        r.verdict && (slope + 1.0).abs() <= 0.05,
        format!(
            "all within majorant*1.01: {}, slope {slope:.6} (-1 +- 0.05)",
            r.verdict
        ),
    )
}

fn epsilon_smallness() -> Result<Outcome> {
    let ps = scenario::problem(scenario::quadratic(), EpsilonChoice::Auto)?;
    let eps_max = ps.epsilon();
    let mut norms = Vec::new();
    for factor in [1.0, 0.5, 0.25, 0.0] {
        let r = solve_fixed_point(&ps.with_epsilon(EpsilonChoice::Value(eps_max * factor))?)?;
        norms.push(norm_h4(&r.u_p));
    }
    let monotone = norms.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    outcome(
        monotone && norms[3] == 0.0,
        format!(
            "||u_p||_H4 = {:.4e}, {:.4e}, {:.4e}, {:.1e}",
            norms[0], norms[1], norms[2], norms[3]
        ),
    )
}

fn constants() -> Result<Outcome> {
    let mut recursion = [0.0; 11];
    recursion[1] = 2.0;
    recursion[2] = 2.0 * PI;
    for d in 3..=10 {
        recursion[d] = 2.0 * PI * recursion[d - 2] / (d - 2) as f64;
    }
    let sphere_gap = (1..=10)
        .map(|d| (sphere_measure(d) - recursion[d]).abs() / recursion[d])
        .fold(0.0, f64::max);
    let beta = statrs::function::beta::beta(1.25, 0.75) / 4.0;
    let radial = radial_integral(5, DEFAULT_QUAD_POINTS)?;
    let radial_gap = (radial - beta).abs();
    outcome(
        sphere_gap < 1e-12 && radial_gap < 1e-9,
        format!("sphere gap {sphere_gap:.2e} (< 1e-12); radial {radial:.11} vs Beta form gap {radial_gap:.2e} (< 1e-9)"),
    )
}

fn determinism() -> Result<Outcome> {
    let ps = scenario::problem(scenario::quadratic(), EpsilonChoice::Auto)?;
    let a = contraction_csv(&measure_contraction(
        &ps,
        scenario::CONTRACTION_TRIALS,
        scenario::SEED,
    )?);
    let b = contraction_csv(&measure_contraction(
        &ps,
        scenario::CONTRACTION_TRIALS,
        scenario::SEED,
    )?);
    outcome(
        a == b,
        format!("{} CSV bytes, identical: {}", a.len(), a == b),
    )
}

type Criterion = (&'static str, u64, fn() -> Result<Outcome>);

const CRITERIA: [Criterion; 12] = [
    ("linear solver exactness", 1, linear_exactness),
    ("convolution oracle", 1, convolution_oracle),
    ("phi minimiser closed form", 5, phi_minimiser),
    ("threshold consistency", 1, threshold_consistency),
    ("certified contraction", 60, certified_contraction),
    ("self-map", 120, self_map),
    ("fixed point", 60, fixed_point),
    ("continuity in g", 120, continuity),
    ("solvability along sequences", 30, sequences),
    ("epsilon-smallness", 120, epsilon_smallness),
    ("constants", 1, constants),
    ("determinism", 60, determinism),
];

fn main() -> ExitCode {
    let mut failures = 0;
    for (i, (name, budget, run)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(*budget);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.2} s, budget {budget} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        CRITERIA.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
