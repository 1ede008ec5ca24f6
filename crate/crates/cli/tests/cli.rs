use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nfs_core::io::write_nfs1;
use nfs_core::scenario;
use tempfile::TempDir;

fn nfs(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nfs"));
    cmd.current_dir(dir)
        .args(args)
        .env_remove("NFS_MEMORY_BUDGET_MB");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn setup(config: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), config).unwrap();
    dir
}

fn run(dir: &TempDir, command: &str) -> Output {
    nfs(dir.path(), &[command, "--config", "run.cfg"], &[])
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing"))
        .to_string()
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join("out").join(name)).unwrap()
}

#[test]
fn zero_epsilon_solve_takes_one_iteration() {
    let dir = setup("problem.epsilon = 0\n");
    let out = run(&dir, "solve");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trace = read(&dir, "trace.csv");
    assert_eq!(trace.lines().count(), 2);
    assert!(trace.starts_with("iter,u_h4,step_h4,ratio,residual\n1,"));
    assert!(dir.path().join("out/u.nfs").exists());
}

#[test]
fn bounds_on_reference_scenario() {
    let dir = setup("");
    assert_eq!(code(&run(&dir, "bounds")), 0);
    let report = read(&dir, "bounds.txt");
    let eps: f64 = value(&report, "epsilon").parse().unwrap();
    let eps_max: f64 = value(&report, "bounds.epsilon_max").parse().unwrap();
    let sigma: f64 = value(&report, "bounds.sigma").parse().unwrap();
    assert_eq!(eps, eps_max);
    assert!(eps_max * sigma < 1.0);
    assert_eq!(value(&report, "guarantee"), "certified");
    assert_eq!(value(&report, "config.problem.epsilon"), "auto");
}

#[test]
fn zero_perturbations_pass() {
    let dir = setup("sequences.amplitude = 0\n");
    assert_eq!(code(&run(&dir, "sequences")), 0);
    let csv = read(&dir, "sequences.csv");
    assert!(csv.starts_with("n,df_l1,df_l2,du_h4,majorant,ok\n"));
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
    assert_eq!(value(&read(&dir, "sequences.txt"), "verdict"), "true");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&run(&setup("problem.rho = 1.5\n"), "solve")), 2);
    assert_eq!(code(&run(&setup("grid.spacing = 1\n"), "solve")), 2);
    assert_eq!(code(&run(&setup("grid.dimension = 3\n"), "bounds")), 2);
    // a wide source leaks into the outer shell of the box
    assert_eq!(code(&run(&setup("source.widths = 4\n"), "solve")), 3);
    // a plain Gaussian has a mean and the default policy rejects it
    assert_eq!(code(&run(&setup("source.type = gaussian\n"), "solve")), 3);
    assert_eq!(code(&run(&setup("solver.max_iter = 1\n"), "solve")), 4);
    let dir = setup("");
    assert_eq!(code(&nfs(dir.path(), &["solve"], &[])), 2);
    assert_eq!(
        code(&nfs(dir.path(), &["solve", "--config", "missing.cfg"], &[])),
        2
    );
    assert_eq!(
        code(&nfs(
            dir.path(),
            &["frobnicate", "--config", "run.cfg"],
            &[]
        )),
        2
    );
}

#[test]
fn projected_gaussian_source() {
    let dir = setup("source.type = gaussian\nlinear.mean_policy = project\n");
    assert_eq!(code(&run(&dir, "solve")), 0);
    let adj: f64 = value(&read(&dir, "solve.txt"), "source.mean_adjustment")
        .parse()
        .unwrap();
    assert!(adj > 0.0);
}

#[test]
fn memory_budget_caps_the_grid() {
    let dir = setup("grid.n = 16\n");
    let args = ["solve-linear", "--config", "run.cfg"];
    assert_eq!(
        code(&nfs(dir.path(), &args, &[("NFS_MEMORY_BUDGET_MB", "1")])),
        2
    );
    assert_eq!(
        code(&nfs(dir.path(), &args, &[("NFS_MEMORY_BUDGET_MB", "lots")])),
        2
    );
    assert_eq!(
        code(&nfs(dir.path(), &args, &[("NFS_MEMORY_BUDGET_MB", "64")])),
        0
    );
}

#[test]
fn low_dimension_linear_solve_is_labelled() {
    let dir = setup("grid.dimension = 2\ngrid.n = 32\ngrid.half_width = 16\n");
    assert_eq!(code(&run(&dir, "solve-linear")), 0);
    let report = read(&dir, "solve-linear.txt");
    assert_eq!(value(&report, "scope"), "test-only, outside theorem scope");
    let residual: f64 = value(&report, "operator_residual").parse().unwrap();
    let f_l2: f64 = value(&report, "source.l2").parse().unwrap();
    assert!(residual <= 1e-10 * f_l2);
}

#[test]
fn outputs_are_deterministic() {
    let a = setup("");
    let b = setup("");
    for dir in [&a, &b] {
        assert_eq!(code(&run(dir, "contraction")), 0);
        assert_eq!(code(&run(dir, "solve")), 0);
    }
    assert_eq!(read(&a, "contraction.csv"), read(&b, "contraction.csv"));
    assert_eq!(read(&a, "trace.csv"), read(&b, "trace.csv"));
    assert_eq!(
        fs::read(a.path().join("out/u.nfs")).unwrap(),
        fs::read(b.path().join("out/u.nfs")).unwrap()
    );
    let c = setup("");
    let out = nfs(
        c.path(),
        &[
            "contraction",
            "--config",
            "run.cfg",
            "--seed",
            "7",
            "--out",
            "other",
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let other = fs::read_to_string(c.path().join("other/contraction.csv")).unwrap();
    assert_ne!(other, read(&a, "contraction.csv"));
    assert!(fs::read_to_string(c.path().join("other/contraction.txt"))
        .unwrap()
        .contains("config.solver.seed = 7\n"));
}

#[test]
fn reports_echo_the_resolved_config() {
    let dir = setup("problem.epsilon = 0.001\n");
    for command in [
        "bounds",
        "solve-linear",
        "solve",
        "contraction",
        "continuity",
        "sequences",
    ] {
        assert_eq!(code(&run(&dir, command)), 0, "{command}");
    }
    for name in [
        "bounds.txt",
        "solve-linear.txt",
        "solve.txt",
        "contraction.txt",
        "continuity.txt",
        "sequences.txt",
    ] {
        let report = read(&dir, name);
        assert_eq!(value(&report, "config.problem.epsilon"), "0.001", "{name}");
        assert_eq!(value(&report, "config.grid.n"), "8", "{name}");
        assert_eq!(
            value(&report, "config.continuity.coeffs"),
            "1, 0.1",
            "{name}"
        );
    }
    let continuity = read(&dir, "continuity.txt");
    assert_eq!(value(&continuity, "verdict"), "true");
}

#[test]
fn file_source_matches_builtin_source() {
    let dir = setup("source.type = file\nsource.path = f.nfs\noutput.dir = from-file\n");
    write_nfs1(&dir.path().join("f.nfs"), &scenario::source().unwrap()).unwrap();
    fs::write(dir.path().join("builtin.cfg"), "output.dir = builtin\n").unwrap();
    assert_eq!(code(&run(&dir, "solve-linear")), 0);
    assert_eq!(
        code(&nfs(
            dir.path(),
            &["solve-linear", "--config", "builtin.cfg"],
            &[]
        )),
        0
    );
    assert_eq!(
        fs::read(dir.path().join("from-file/u0.nfs")).unwrap(),
        fs::read(dir.path().join("builtin/u0.nfs")).unwrap()
    );
    fs::write(dir.path().join("f.nfs"), b"NFS2").unwrap();
    assert_eq!(code(&run(&dir, "solve-linear")), 2);
}

#[test]
fn selfcheck_passes() {
    let dir = setup("");
    let out = nfs(dir.path(), &["selfcheck"], &[]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("failed = 0"));
    assert!(!dir.path().join("out").exists());
    assert_eq!(code(&run(&dir, "selfcheck")), 0);
    assert!(read(&dir, "selfcheck.txt").contains("passed = 11"));
}
