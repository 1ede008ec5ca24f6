//! `section.key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, unknown keys are errors.
//! Every key has a default (the reference scenario), so an empty file is a
//! valid configuration.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use nfs_core::builders::GaussianDiff;
use nfs_core::scenario;
use nfs_core::{EpsilonChoice, MeanPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelConfig {
    Gaussian { sigma: f64, amplitude: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceConfig {
    GaussianDiff(GaussianDiff),
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
        axis: usize,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dimension: usize,
    pub n: usize,
    pub half_width: f64,
    pub epsilon: EpsilonChoice,
    pub rho: f64,
    pub kernel: KernelConfig,
    pub source: SourceConfig,
    /// `a_2, a_3, ...` of `g(z) = a_2 z^2 + a_3 z^3 + ...`.
    pub coeffs: Vec<f64>,
    pub big_m: Option<f64>,
    pub tol_fp: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub slack: f64,
    pub mean_policy: MeanPolicy,
    pub zero_mode_tol: f64,
    pub trials: usize,
    pub continuity_coeffs: Vec<f64>,
    pub sequence_count: usize,
    pub sequence: GaussianDiff,
    pub output_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "grid.dimension",
    "grid.n",
    "grid.half_width",
    "problem.epsilon",
    "problem.rho",
    "kernel.type",
    "kernel.sigma",
    "kernel.amplitude",
    "kernel.path",
    "source.type",
    "source.centers",
    "source.widths",
    "source.amplitude",
    "source.axis",
    "source.path",
    "nonlinearity.coeffs",
    "nonlinearity.big_m",
    "solver.tol_fp",
    "solver.max_iter",
    "solver.seed",
    "solver.slack",
    "linear.mean_policy",
    "linear.zero_mode_tol",
    "contraction.trials",
    "continuity.coeffs",
    "sequences.count",
    "sequences.centers",
    "sequences.widths",
    "sequences.amplitude",
    "sequences.axis",
    "output.dir",
];

struct Raw {
    entries: Vec<(String, String, usize)>,
}

impl Raw {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, line)| (v.as_str(), *line))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse()
                .or_else(|_| err(format!("line {line}: cannot parse `{key} = {v}`"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .or_else(|_| {
                    err(format!(
                        "line {line}: `{key}` expects comma-separated numbers"
                    ))
                }),
        }
    }

    fn pair(&self, key: &str, default: [f64; 2]) -> Result<[f64; 2], ConfigError> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
            Some(v) if v.len() == 1 => Ok([v[0], v[0]]),
            Some(_) => err(format!("`{key}` expects one or two numbers")),
        }
    }
}

fn tokenize(text: &str) -> Result<Raw, ConfigError> {
    let known: BTreeSet<&str> = KEYS.iter().copied().collect();
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("line {line_no}: expected `section.key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if !known.contains(key) {
            return err(format!("line {line_no}: unknown key `{key}`"));
        }
        if value.is_empty() {
            return err(format!("line {line_no}: `{key}` has no value"));
        }
        if entries.iter().any(|(k, _, _)| k == key) {
            return err(format!("line {line_no}: duplicate key `{key}`"));
        }
        entries.push((key.to_string(), value.to_string(), line_no));
    }
    Ok(Raw { entries })
}

fn require(ok: bool, msg: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        err(msg)
    }
}

fn positive(v: f64, key: &str) -> Result<(), ConfigError> {
    require(
        v.is_finite() && v > 0.0,
        &format!("`{key}` must be positive"),
    )
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw = tokenize(text)?;
    let dimension: usize = raw.parse("grid.dimension", scenario::DIMENSION)?;
    require(
        (1..=7).contains(&dimension),
        "`grid.dimension` must lie in 1..=7",
    )?;
    let n: usize = raw.parse("grid.n", scenario::SAMPLES)?;
    require(
        n >= 4 && n.is_power_of_two(),
        "`grid.n` must be a power of two, at least 4",
    )?;
    let half_width: f64 = raw.parse("grid.half_width", scenario::HALF_WIDTH)?;
    positive(half_width, "grid.half_width")?;

    let epsilon = match raw.get("problem.epsilon") {
        None | Some(("auto", _)) => EpsilonChoice::Auto,
        Some(_) => {
            let e: f64 = raw.parse("problem.epsilon", 0.0)?;
            require(
                e.is_finite() && e >= 0.0,
                "`problem.epsilon` must be `auto` or nonnegative",
            )?;
            EpsilonChoice::Value(e)
        }
    };
    let rho: f64 = raw.parse("problem.rho", scenario::RHO)?;
    require(rho > 0.0 && rho <= 1.0, "`problem.rho` must lie in (0, 1]")?;

    let kernel_type: String = raw.parse("kernel.type", "gaussian".to_string())?;
    let kernel = match kernel_type.as_str() {
        "gaussian" => {
            let sigma = raw.parse("kernel.sigma", scenario::KERNEL_SIGMA)?;
            positive(sigma, "kernel.sigma")?;
            let amplitude: f64 = raw.parse("kernel.amplitude", scenario::KERNEL_AMPLITUDE)?;
            require(amplitude.is_finite(), "`kernel.amplitude` must be finite")?;
            KernelConfig::Gaussian { sigma, amplitude }
        }
        "file" => match raw.get("kernel.path") {
            Some((p, _)) => KernelConfig::File { path: p.into() },
            None => return err("`kernel.type = file` needs `kernel.path`"),
        },
        other => return err(format!("unknown kernel type `{other}`")),
    };

    let axis: usize = raw.parse("source.axis", 0)?;
    require(
        axis < dimension,
        "`source.axis` must be below the dimension",
    )?;
    let defaults = scenario::source_params(half_width, axis);
    let source_type: String = raw.parse("source.type", "gaussian-diff".to_string())?;
    let source = match source_type.as_str() {
        "gaussian-diff" => {
            let p = GaussianDiff {
                centers: raw.pair("source.centers", defaults.centers)?,
                widths: raw.pair("source.widths", defaults.widths)?,
                amplitude: raw.parse("source.amplitude", defaults.amplitude)?,
                axis,
            };
            positive(p.widths[0].min(p.widths[1]), "source.widths")?;
            SourceConfig::GaussianDiff(p)
        }
        "gaussian" => {
            let centre = raw.pair("source.centers", [0.0, 0.0])?;
            let width = raw.pair("source.widths", defaults.widths)?;
            require(
                centre[0] == centre[1] && width[0] == width[1],
                "`source.type = gaussian` takes a single centre and width",
            )?;
            positive(width[0], "source.widths")?;
            SourceConfig::Gaussian {
                center: centre[0],
                width: width[0],
                amplitude: raw.parse("source.amplitude", defaults.amplitude)?,
                axis,
            }
        }
        "file" => match raw.get("source.path") {
            Some((p, _)) => SourceConfig::File { path: p.into() },
            None => return err("`source.type = file` needs `source.path`"),
        },
        other => return err(format!("unknown source type `{other}`")),
    };

    let coeffs = raw
        .list("nonlinearity.coeffs")?
        .unwrap_or_else(|| vec![1.0]);
    require(
        coeffs.iter().all(|c| c.is_finite()),
        "`nonlinearity.coeffs` must be finite",
    )?;
    let big_m = match raw.get("nonlinearity.big_m") {
        None => None,
        Some(_) => {
            let m: f64 = raw.parse("nonlinearity.big_m", 0.0)?;
            positive(m, "nonlinearity.big_m")?;
            Some(m)
        }
    };

    let tol_fp: f64 = raw.parse("solver.tol_fp", nfs_core::fixed_point::DEFAULT_TOL_FP)?;
    positive(tol_fp, "solver.tol_fp")?;
    let max_iter: usize = raw.parse("solver.max_iter", nfs_core::fixed_point::DEFAULT_MAX_ITER)?;
    require(max_iter > 0, "`solver.max_iter` must be positive")?;
    let seed: u64 = raw.parse("solver.seed", scenario::SEED)?;
    let slack: f64 = raw.parse("solver.slack", nfs_core::fixed_point::DISCRETE_SLACK)?;
    require(
        slack.is_finite() && slack >= 0.0,
        "`solver.slack` must be nonnegative",
    )?;

    let mean_policy = match raw.get("linear.mean_policy").map(|(v, _)| v) {
        None | Some("reject") => MeanPolicy::Reject,
        Some("project") => MeanPolicy::Project,
        Some(other) => return err(format!("unknown mean policy `{other}` (reject or project)")),
    };
    let zero_mode_tol: f64 = raw.parse("linear.zero_mode_tol", 1e-10)?;
    positive(zero_mode_tol, "linear.zero_mode_tol")?;

    let trials: usize = raw.parse("contraction.trials", scenario::CONTRACTION_TRIALS)?;
    require(trials > 0, "`contraction.trials` must be positive")?;
    let continuity_coeffs = raw
        .list("continuity.coeffs")?
        .unwrap_or_else(|| vec![1.0, 0.1]);
    require(
        continuity_coeffs.iter().all(|c| c.is_finite()),
        "`continuity.coeffs` must be finite",
    )?;

    let sequence_count: usize = raw.parse("sequences.count", scenario::SEQUENCE_COUNT)?;
    require(sequence_count > 0, "`sequences.count` must be positive")?;
    let seq_axis: usize =
        raw.parse("sequences.axis", scenario::SEQUENCE_AXIS.min(dimension - 1))?;
    require(
        seq_axis < dimension,
        "`sequences.axis` must be below the dimension",
    )?;
    let seq_defaults = scenario::source_params(half_width, seq_axis);
    let sequence = GaussianDiff {
        centers: raw.pair("sequences.centers", seq_defaults.centers)?,
        widths: raw.pair("sequences.widths", seq_defaults.widths)?,
        amplitude: raw.parse("sequences.amplitude", seq_defaults.amplitude)?,
        axis: seq_axis,
    };
    positive(
        sequence.widths[0].min(sequence.widths[1]),
        "sequences.widths",
    )?;
    require(
        sequence.amplitude.is_finite(),
        "`sequences.amplitude` must be finite",
    )?;

    let output_dir: String = raw.parse("output.dir", "out".to_string())?;

    Ok(RunConfig {
        dimension,
        n,
        half_width,
        epsilon,
        rho,
        kernel,
        source,
        coeffs,
        big_m,
        tol_fp,
        max_iter,
        seed,
        slack,
        mean_policy,
        zero_mode_tol,
        trials,
        continuity_coeffs,
        sequence_count,
        sequence,
        output_dir: output_dir.into(),
    })
}

fn list_text(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl RunConfig {
    /// Every key with its resolved value, in declaration order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((format!("config.{k}"), v));
        put("grid.dimension", self.dimension.to_string());
        put("grid.n", self.n.to_string());
        put("grid.half_width", self.half_width.to_string());
        put(
            "problem.epsilon",
            match self.epsilon {
                EpsilonChoice::Auto => "auto".into(),
                EpsilonChoice::Value(e) => e.to_string(),
            },
        );
        put("problem.rho", self.rho.to_string());
        match &self.kernel {
            KernelConfig::Gaussian { sigma, amplitude } => {
                put("kernel.type", "gaussian".into());
                put("kernel.sigma", sigma.to_string());
                put("kernel.amplitude", amplitude.to_string());
            }
            KernelConfig::File { path } => {
                put("kernel.type", "file".into());
                put("kernel.path", path.display().to_string());
            }
        }
        match &self.source {
            SourceConfig::GaussianDiff(p) => {
                put("source.type", "gaussian-diff".into());
                put("source.centers", list_text(&p.centers));
                put("source.widths", list_text(&p.widths));
                put("source.amplitude", p.amplitude.to_string());
                put("source.axis", p.axis.to_string());
            }
            SourceConfig::Gaussian {
                center,
                width,
                amplitude,
                axis,
            } => {
                put("source.type", "gaussian".into());
                put("source.centers", center.to_string());
                put("source.widths", width.to_string());
                put("source.amplitude", amplitude.to_string());
                put("source.axis", axis.to_string());
            }
            SourceConfig::File { path } => {
                put("source.type", "file".into());
                put("source.path", path.display().to_string());
            }
        }
        put("nonlinearity.coeffs", list_text(&self.coeffs));
        put(
            "nonlinearity.big_m",
            self.big_m.map_or("measured".into(), |m| m.to_string()),
        );
        put("solver.tol_fp", self.tol_fp.to_string());
        put("solver.max_iter", self.max_iter.to_string());
        put("solver.seed", self.seed.to_string());
        put("solver.slack", self.slack.to_string());
        put(
            "linear.mean_policy",
            match self.mean_policy {
                MeanPolicy::Reject => "reject".into(),
                MeanPolicy::Project => "project".into(),
            },
        );
        put("linear.zero_mode_tol", self.zero_mode_tol.to_string());
        put("contraction.trials", self.trials.to_string());
        put("continuity.coeffs", list_text(&self.continuity_coeffs));
        put("sequences.count", self.sequence_count.to_string());
        put("sequences.centers", list_text(&self.sequence.centers));
        put("sequences.widths", list_text(&self.sequence.widths));
        put("sequences.amplitude", self.sequence.amplitude.to_string());
        put("sequences.axis", self.sequence.axis.to_string());
        put("output.dir", self.output_dir.display().to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
grid.dimension = 5
grid.n = 8
grid.half_width = 12.566
kernel.type = gaussian
kernel.sigma = 1
kernel.amplitude = 1
source.type = gaussian-diff
nonlinearity.coeffs = 1
";

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!((c.dimension, c.n, c.half_width), (5, 8, 12.566));
        assert_eq!(c.epsilon, EpsilonChoice::Auto);
        assert_eq!(c.coeffs, vec![1.0]);
        match c.source {
            SourceConfig::GaussianDiff(p) => assert_eq!(p.centers, [-12.566 / 4.0, 12.566 / 4.0]),
            _ => panic!("wrong source"),
        }
    }

    #[test]
    fn empty_config_is_the_reference_scenario() {
        let c = parse_config("# nothing\n\n").unwrap();
        assert_eq!(c.half_width, scenario::HALF_WIDTH);
        assert_eq!(c.seed, 42);
        assert_eq!(c.trials, 50);
        assert_eq!(c.continuity_coeffs, vec![1.0, 0.1]);
    }

    #[test]
    fn rho_above_one_rejected() {
        assert!(parse_config("problem.rho = 1.5").is_err());
        assert!(parse_config("problem.rho = 0").is_err());
        assert!(parse_config("problem.rho = 1").is_ok());
    }

    #[test]
    fn syntax_errors() {
        let e = parse_config("grid.dimenson = 5").unwrap_err();
        assert!(e.0.contains("unknown key"), "{e}");
        assert!(parse_config("grid.n 8").is_err());
        assert!(parse_config("grid.n = 6").is_err());
        assert!(parse_config("grid.n = 8\ngrid.n = 16").is_err());
        assert!(parse_config("grid.dimension = 8").is_err());
        assert!(parse_config("problem.epsilon = -1").is_err());
        assert!(parse_config("problem.epsilon = fast").is_err());
        assert!(parse_config("kernel.type = file").is_err());
        assert!(parse_config("linear.mean_policy = ignore").is_err());
        assert!(parse_config("nonlinearity.coeffs = 1, x").is_err());
        assert!(parse_config("source.axis = 5").is_err());
    }

    #[test]
    fn values_and_comments() {
        let c = parse_config(
            "problem.epsilon = 0.002 # fixed\nnonlinearity.coeffs = 1, 0, 0.5\nlinear.mean_policy = project\nsource.type = gaussian\nsource.centers = 0.5\nsource.widths = 2\n",
        )
        .unwrap();
        assert_eq!(c.epsilon, EpsilonChoice::Value(0.002));
        assert_eq!(c.coeffs, vec![1.0, 0.0, 0.5]);
        assert_eq!(c.mean_policy, MeanPolicy::Project);
        assert!(
            matches!(c.source, SourceConfig::Gaussian { center, width, .. } if center == 0.5 && width == 2.0)
        );
    }

    #[test]
    fn echo_covers_every_key() {
        let c = parse_config(MINIMAL).unwrap();
        let echoed: BTreeSet<String> = c.echo().into_iter().map(|(k, _)| k).collect();
        for key in KEYS {
            if key.ends_with(".path") {
                continue;
            }
            assert!(echoed.contains(&format!("config.{key}")), "{key}");
        }
    }
}
