//! Closed-form examples from every module, run against the built library.

use std::f64::consts::PI;
use std::fs;

use nfs_core::bounds::{minimize_phi, sphere_measure};
use nfs_core::fixed_point::{apply_tg, solve_fixed_point};
use nfs_core::grid::{forward_transform, inverse_transform, norm_l2};
use nfs_core::io::{decode_nfs1, encode_nfs1, write_atomic};
use nfs_core::linear::solve_linear;
use nfs_core::nonlinearity::{build_interval, c2_norm, DEFAULT_SAMPLES};
use nfs_core::report::Summary;
use nfs_core::{
    scenario, EpsilonChoice, Error, FieldRole, GridSpec, LinearSolveOptions, Nonlinearity,
    ProblemSpec, RealField,
};

use crate::commands::{build_kernel, build_source, grid_for, solver_options, Failure, Invocation};
use crate::config::parse_config;

type Check = std::result::Result<bool, Error>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn grid_round_trip() -> Check {
    let spec = GridSpec::new(2, 8, PI)?;
    let f = RealField::from_fn(spec, FieldRole::Generic, |x| {
        x[0].cos() * (2.0 * x[1]).sin()
    })?;
    let back = inverse_transform(&forward_transform(&f))?;
    Ok(norm_l2(&back.sub(&f)?) <= 1e-13 * norm_l2(&f))
}

fn grid_constant_norm() -> Check {
    let spec = GridSpec::new(3, 4, 1.0)?;
    let one = RealField::from_fn(spec, FieldRole::Generic, |_| 1.0)?;
    Ok(rel(norm_l2(&one), 8f64.sqrt()) < 1e-14)
}

fn sphere_values() -> Check {
    Ok(rel(sphere_measure(2), 2.0 * PI) < 1e-14 && rel(sphere_measure(3), 4.0 * PI) < 1e-14)
}

fn phi_unit_case() -> Check {
    let r = minimize_phi(4.0, 5)?;
    Ok(r.r_star == 1.0 && r.phi_min == 5.0)
}

fn quadratic_c2_norm() -> Check {
    // on [-1, 1]: sup z^2 + sup 2|z| + 2
    let interval = build_interval(0.0, 1.0)?;
    let r = c2_norm(
        &Nonlinearity::polynomial(&[1.0]),
        &interval,
        DEFAULT_SAMPLES,
    )?;
    Ok(r.c2_norm == 5.0)
}

fn linear_nonlinearity_rejected() -> Check {
    let g = Nonlinearity::callable("z", |z| z, |_| 1.0, |_| 0.0);
    Ok(matches!(
        g.check_conforming(),
        Err(Error::NonconformingG { .. })
    ))
}

fn linear_trig_solutions() -> Check {
    let spec = GridSpec::new(5, 8, PI)?;
    let opts = LinearSolveOptions::default();
    let mut ok = true;
    for (k, symbol) in [(1.0, 2.0), (2.0, 20.0)] {
        let f = RealField::from_fn(spec, FieldRole::Source, |x| (k * x[0]).cos())?;
        let u = solve_linear(&f, &opts)?;
        ok &= norm_l2(&u.sub(&f.scaled(1.0 / symbol))?) <= 1e-12 * norm_l2(&f);
    }
    Ok(ok)
}

fn linear_trivial_source() -> Check {
    let spec = GridSpec::new(5, 4, PI)?;
    Ok(matches!(
        solve_linear(&RealField::zeros(spec), &LinearSolveOptions::default()),
        Err(Error::TrivialSource)
    ))
}

fn zero_epsilon_solve(ps: &ProblemSpec) -> Check {
    let ps = ps.with_epsilon(EpsilonChoice::Value(0.0))?;
    let r = solve_fixed_point(&ps)?;
    let tg_zero = apply_tg(&ps, &RealField::zeros(*ps.spec()))?.is_zero();
    Ok(r.iterations() == 1 && r.u_p.is_zero() && r.u.values() == ps.u0().values() && tg_zero)
}

fn nfs1_round_trip() -> Check {
    let spec = GridSpec::new(2, 4, 1.25)?;
    let f = RealField::from_fn(spec, FieldRole::Generic, |x| x[0] * x[1] - 0.5)?;
    let g = decode_nfs1(&encode_nfs1(&f), FieldRole::Generic)?;
    let mut bad = encode_nfs1(&f);
    bad[3] = b'0';
    Ok(g == f && decode_nfs1(&bad, FieldRole::Generic).is_err())
}

fn config_rules() -> Check {
    Ok(parse_config("problem.rho = 1.5").is_err()
        && parse_config(
            "grid.dimension = 5\ngrid.n = 8\ngrid.half_width = 12.566\nnonlinearity.coeffs = 1\n",
        )
        .is_ok())
}

pub fn run(inv: &Invocation) -> Result<(), Failure> {
    let (ps, out) = match &inv.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            let cfg = parse_config(&text)?;
            let spec = grid_for(&cfg)?;
            let base = path.parent().unwrap_or(std::path::Path::new("."));
            let ps = ProblemSpec::new(
                build_kernel(&cfg, spec, base)?,
                build_source(&cfg, spec, base)?,
                Nonlinearity::polynomial(&cfg.coeffs),
                EpsilonChoice::Value(0.0),
                cfg.rho,
                solver_options(&cfg),
            )?;
            (ps, Some(inv.out.clone().unwrap_or(cfg.output_dir)))
        }
        None => (
            scenario::problem(scenario::quadratic(), EpsilonChoice::Value(0.0))?,
            inv.out.clone(),
        ),
    };
    let checks: Vec<(&str, Check)> = vec![
        ("grid-spectral: transform round trip", grid_round_trip()),
        ("grid-spectral: L2 norm of a constant", grid_constant_norm()),
        ("bounds: unit sphere in 2 and 3 dimensions", sphere_values()),
        ("bounds: phi minimiser at alpha = 4, d = 5", phi_unit_case()),
        (
            "nonlinearity: C2 norm of z^2 on [-1, 1]",
            quadratic_c2_norm(),
        ),
        (
            "nonlinearity: g(z) = z rejected",
            linear_nonlinearity_rejected(),
        ),
        (
            "linear-poisson: cos and cos(2x) sources",
            linear_trig_solutions(),
        ),
        (
            "linear-poisson: zero source rejected",
            linear_trivial_source(),
        ),
        (
            "fixed-point: epsilon = 0 gives u = u0",
            zero_epsilon_solve(&ps),
        ),
        ("io: NFS1 round trip and bad magic", nfs1_round_trip()),
        (
            "cli: rho > 1 rejected, minimal config accepted",
            config_rules(),
        ),
    ];
    let mut summary = Summary::new();
    summary.text("command", "selfcheck");
    let mut failed = 0;
    for (name, result) in &checks {
        let status = match result {
            Ok(true) => "PASS".to_string(),
            Ok(false) => "FAIL".to_string(),
            Err(e) => format!("FAIL ({e})"),
        };
        if !matches!(result, Ok(true)) {
            failed += 1;
        }
        summary.text(format!("check.{name}"), status);
    }
    summary
        .text("passed", checks.len() - failed)
        .text("failed", failed);
    let text = summary.render();
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join("selfcheck.txt"), text.as_bytes())?;
    }
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} self-check(s) failed")));
    }
    Ok(())
}
