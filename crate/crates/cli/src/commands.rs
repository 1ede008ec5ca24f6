use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use nfs_core::bounds::self_map_radius;
use nfs_core::builders::{field_from_file, gaussian_diff_source, gaussian_kernel, gaussian_source};
use nfs_core::fixed_point::{
    continuity_experiment, continuity_pair, measure_contraction, solve_fixed_point,
};
use nfs_core::grid::{norm_h4, norm_l1, norm_l2, norm_linf, DEFAULT_MEMORY_BUDGET_MB};
use nfs_core::io::{write_atomic, write_nfs1};
use nfs_core::linear::{apply_operator, sequence_experiment, solve_linear_detailed};
use nfs_core::report::{contraction_csv, num, sequence_csv, trace_csv, Summary};
use nfs_core::{
    ErrorClass, FieldRole, GridSpec, LinearSolveOptions, Nonlinearity, ProblemSpec, RealField,
    SolverOptions,
};

use crate::config::{parse_config, ConfigError, KernelConfig, RunConfig, SourceConfig};
use crate::selfcheck;

pub const MEMORY_BUDGET_VAR: &str = "NFS_MEMORY_BUDGET_MB";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Bounds,
    SolveLinear,
    Solve,
    Contraction,
    Continuity,
    Sequences,
    Selfcheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::SolveLinear => "solve-linear",
            Command::Solve => "solve",
            Command::Contraction => "contraction",
            Command::Continuity => "continuity",
            Command::Sequences => "sequences",
            Command::Selfcheck => "selfcheck",
        }
    }

    /// Commands whose output rests on the `d >= 5` theory.
    fn needs_theorem_dimension(self) -> bool {
        !matches!(self, Command::SolveLinear | Command::Selfcheck)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Core(nfs_core::Error),
    Check(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<nfs_core::Error> for Failure {
    fn from(e: nfs_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Check(m) => write!(f, "{m}"),
        }
    }
}

impl Failure {
    /// 2 for configuration or input errors, 3 for violated assumptions,
    /// 4 for non-convergence, 1 for I/O and failed self-checks.
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Check(_) => 1,
            Failure::Core(e) => match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Assumption => 3,
                ErrorClass::Convergence => 4,
                ErrorClass::Io => 1,
            },
        }
    }
}

fn memory_budget() -> Result<usize, Failure> {
    match std::env::var(MEMORY_BUDGET_VAR) {
        Err(_) => Ok(DEFAULT_MEMORY_BUDGET_MB),
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::Config(format!(
                "{MEMORY_BUDGET_VAR} must be a whole number of MiB, got `{v}`"
            ))
        }),
    }
}

pub fn grid_for(cfg: &RunConfig) -> Result<GridSpec, Failure> {
    Ok(GridSpec::with_memory_budget(
        cfg.dimension,
        cfg.n,
        cfg.half_width,
        memory_budget()?,
    )?)
}

fn resolve(path: &Path, base: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

pub fn build_kernel(cfg: &RunConfig, spec: GridSpec, base: &Path) -> Result<RealField, Failure> {
    Ok(match &cfg.kernel {
        KernelConfig::Gaussian { sigma, amplitude } => gaussian_kernel(spec, *sigma, *amplitude)?,
        KernelConfig::File { path } => {
            field_from_file(spec, &resolve(path, base), FieldRole::Kernel)?
        }
    })
}

pub fn build_source(cfg: &RunConfig, spec: GridSpec, base: &Path) -> Result<RealField, Failure> {
    Ok(match &cfg.source {
        SourceConfig::GaussianDiff(p) => gaussian_diff_source(spec, p)?,
        SourceConfig::Gaussian {
            center,
            width,
            amplitude,
            axis,
        } => gaussian_source(spec, *center, *width, *amplitude, *axis)?,
        SourceConfig::File { path } => {
            field_from_file(spec, &resolve(path, base), FieldRole::Source)?
        }
    })
}

pub fn linear_options(cfg: &RunConfig) -> LinearSolveOptions {
    LinearSolveOptions {
        zero_mode_tol: cfg.zero_mode_tol,
        mean_policy: cfg.mean_policy,
    }
}

pub fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        tol_fp: cfg.tol_fp,
        max_iter: cfg.max_iter,
        slack: cfg.slack,
        linear: linear_options(cfg),
        big_m: cfg.big_m,
        ..SolverOptions::default()
    }
}

/// Everything a command needs: configuration, grid, data and output dir.
struct Context {
    cfg: RunConfig,
    spec: GridSpec,
    kernel: RealField,
    source: RealField,
    out: PathBuf,
}

impl Context {
    fn problem(&self, coeffs: &[f64]) -> Result<ProblemSpec, Failure> {
        Ok(ProblemSpec::new(
            self.kernel.clone(),
            self.source.clone(),
            Nonlinearity::polynomial(coeffs),
            self.cfg.epsilon,
            self.cfg.rho,
            solver_options(&self.cfg),
        )?)
    }

    fn summary(&self, command: Command) -> Summary {
        let mut s = Summary::new();
        s.text("command", command.name());
        for (k, v) in self.cfg.echo() {
            s.text(k, v);
        }
        s
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<(), Failure> {
        write_atomic(&self.out.join(name), contents)?;
        Ok(())
    }

    fn finish(&self, name: &str, summary: &Summary) -> Result<(), Failure> {
        let text = summary.render();
        self.write(name, text.as_bytes())?;
        print!("{text}");
        Ok(())
    }
}

fn problem_summary(s: &mut Summary, ps: &ProblemSpec) -> Result<(), Failure> {
    let (k_l1, k_l2) = ps.kernel_norms();
    let c2 = ps.c2_report();
    s.number("kernel.l1", k_l1)
        .number("kernel.l2", k_l2)
        .number("source.l1", norm_l1(ps.source()))
        .number("source.l2", norm_l2(ps.source()))
        .number("source.mean_adjustment", ps.source_mean_adjustment())
        .number("u0.h4", norm_h4(ps.u0()))
        .number("interval.upper", ps.interval().upper)
        .number("g.sup", c2.sup_g)
        .number("g.sup_first", c2.sup_g1)
        .number("g.sup_second", c2.sup_g2)
        .number("g.c2_norm", c2.c2_norm)
        .text("g", ps.nonlinearity())
        .number("epsilon", ps.epsilon())
        .text("guarantee", ps.guarantee());
    if let Some(b) = ps.bounds() {
        s.bounds(b);
        s.number("eps_sigma", ps.epsilon() * b.sigma);
        s.number(
            "self_map_radius",
            self_map_radius(ps.epsilon(), &b.inputs())?,
        );
    }
    Ok(())
}

fn bounds(ctx: &Context) -> Result<(), Failure> {
    let ps = ctx.problem(&ctx.cfg.coeffs)?;
    let mut s = ctx.summary(Command::Bounds);
    problem_summary(&mut s, &ps)?;
    ctx.finish("bounds.txt", &s)
}

fn solve_linear_cmd(ctx: &Context) -> Result<(), Failure> {
    let sol = solve_linear_detailed(&ctx.source, &linear_options(&ctx.cfg))?;
    let back = apply_operator(&sol.u)?;
    let target = ctx.source.map(|v| v - sol.mean_adjustment);
    let op_residual = norm_l2(&back.sub(&target)?);
    write_nfs1(&ctx.out.join("u0.nfs"), &sol.u)?;
    let mut s = ctx.summary(Command::SolveLinear);
    s.text(
        "scope",
        if ctx.spec.dim() >= 5 {
            "theorem"
        } else {
            "test-only, outside theorem scope"
        },
    )
    .number("source.l1", norm_l1(&ctx.source))
    .number("source.l2", norm_l2(&ctx.source))
    .number("mean_adjustment", sol.mean_adjustment)
    .number("u0.l2", norm_l2(&sol.u))
    .number("u0.linf", norm_linf(&sol.u))
    .number("u0.h4", norm_h4(&sol.u))
    .number("operator_residual", op_residual)
    .text("field", "u0.nfs");
    ctx.finish("solve-linear.txt", &s)
}

fn solve(ctx: &Context) -> Result<(), Failure> {
    let ps = ctx.problem(&ctx.cfg.coeffs)?;
    let r = solve_fixed_point(&ps)?;
    ctx.write("trace.csv", trace_csv(&r.trace).as_bytes())?;
    write_nfs1(&ctx.out.join("u.nfs"), &r.u)?;
    let mut s = ctx.summary(Command::Solve);
    problem_summary(&mut s, &ps)?;
    s.text("converged", r.converged)
        .text("iterations", r.iterations())
        .number("residual", r.residual)
        .number("u.h4", norm_h4(&r.u))
        .number("u.l2", norm_l2(&r.u))
        .number("u_p.h4", norm_h4(&r.u_p))
        .number("tg_mean_adjustment", r.tg_mean_adjustment)
        .text(
            "max_step_ratio",
            r.trace.max_ratio().map(num).unwrap_or_default(),
        )
        .text("trace", "trace.csv")
        .text("field", "u.nfs");
    ctx.finish("solve.txt", &s)
}

fn contraction(ctx: &Context) -> Result<(), Failure> {
    let ps = ctx.problem(&ctx.cfg.coeffs)?;
    let r = measure_contraction(&ps, ctx.cfg.trials, ctx.cfg.seed)?;
    ctx.write("contraction.csv", contraction_csv(&r).as_bytes())?;
    let mut s = ctx.summary(Command::Contraction);
    problem_summary(&mut s, &ps)?;
    s.text("trials", r.samples.len())
        .number("max_ratio", r.max_ratio)
        .number("mean_ratio", r.mean_ratio)
        .text(
            "verdict",
            r.verdict().map_or("n/a".into(), |v| v.to_string()),
        )
        .text("table", "contraction.csv");
    ctx.finish("contraction.txt", &s)
}

fn continuity(ctx: &Context) -> Result<(), Failure> {
    let (p1, p2) = continuity_pair(
        ctx.kernel.clone(),
        ctx.source.clone(),
        Nonlinearity::polynomial(&ctx.cfg.coeffs),
        Nonlinearity::polynomial(&ctx.cfg.continuity_coeffs),
        ctx.cfg.epsilon,
        ctx.cfg.rho,
        solver_options(&ctx.cfg),
    )?;
    let r = continuity_experiment(&p1, &p2)?;
    let mut s = ctx.summary(Command::Continuity);
    s.text("g1", p1.nonlinearity())
        .text("g2", p2.nonlinearity())
        .number("epsilon", r.epsilon)
        .bounds(&r.snapshot)
        .number("g_diff_c2", r.g_diff_c2)
        .number("u1.h4", r.u1_h4)
        .number("u2.h4", r.u2_h4)
        .text(
            "iterations",
            format!("{}, {}", r.iterations.0, r.iterations.1),
        )
        .number("measured", r.measured)
        .number("bound", r.bound)
        .text("verdict", r.verdict());
    ctx.finish("continuity.txt", &s)
}

fn sequences(ctx: &Context) -> Result<(), Failure> {
    let h = if ctx.cfg.sequence.amplitude == 0.0 {
        RealField::zeros(ctx.spec)
    } else {
        gaussian_diff_source(ctx.spec, &ctx.cfg.sequence)?
    };
    let perturbations: Vec<RealField> = (1..=ctx.cfg.sequence_count)
        .map(|n| h.scaled(1.0 / n as f64))
        .collect();
    let r = sequence_experiment(&ctx.source, &perturbations, &linear_options(&ctx.cfg))?;
    ctx.write("sequences.csv", sequence_csv(&r).as_bytes())?;
    let mut s = ctx.summary(Command::Sequences);
    s.text("verdict", r.verdict)
        .text(
            "log_log_slope",
            r.log_log_slope().map(num).unwrap_or_default(),
        )
        .text("table", "sequences.csv");
    ctx.finish("sequences.txt", &s)
}

pub fn run(inv: &Invocation) -> Result<(), Failure> {
    if inv.command == Command::Selfcheck {
        return selfcheck::run(inv);
    }
    let path = inv.config.as_ref().ok_or_else(|| {
        Failure::Config(format!("`{}` needs --config <path>", inv.command.name()))
    })?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = inv.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &inv.out {
        cfg.output_dir = out.clone();
    }
    if inv.command.needs_theorem_dimension() && cfg.dimension < 5 {
        return Err(Failure::Config(format!(
            "`{}` needs grid.dimension >= 5, got {}",
            inv.command.name(),
            cfg.dimension
        )));
    }
    let spec = grid_for(&cfg)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let kernel = build_kernel(&cfg, spec, base)?;
    let source = build_source(&cfg, spec, base)?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)?;
    let ctx = Context {
        cfg,
        spec,
        kernel,
        source,
        out,
    };
    log::info!(
        "running `{}` on a {}^{} grid",
        inv.command.name(),
        spec.n(),
        spec.dim()
    );
    match inv.command {
        Command::Bounds => bounds(&ctx),
        Command::SolveLinear => solve_linear_cmd(&ctx),
        Command::Solve => solve(&ctx),
        Command::Contraction => contraction(&ctx),
        Command::Continuity => continuity(&ctx),
        Command::Sequences => sequences(&ctx),
        Command::Selfcheck => unreachable!(),
    }
}
