//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! Precedence is flag, then config file, then `EPIBVP_OUT_DIR` (output
//! directory only), then built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use epibvp_core::shooting::DEFAULT_WINDOW;
use epibvp_core::{BoundaryKind, Label};
use serde::{Deserialize, Serialize};

pub const OUT_DIR_ENV: &str = "EPIBVP_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "epibvp-out";
pub const DEFAULT_GRID_STEP: f64 = 0.01;
/// Degree doubles with every step; past this the dense products get slow
/// and double-double runs out of digits for any interesting `a`.
pub const MAX_ITERATIONS: usize = 10;

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every subcommand. All optional so that a config file can
/// supply them.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// TOML file with any of the options below; flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long, value_parser = parse_bc)]
    pub bc: Option<BoundaryKind>,

    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["lambdas", "lambda_range"])]
    pub lambda: Option<f64>,

    /// Comma-separated list, e.g. 0,15,20,31
    #[arg(
        long,
        value_name = "LIST",
        allow_hyphen_values = true,
        conflicts_with = "lambda_range"
    )]
    pub lambdas: Option<String>,

    /// lo:hi:step, inclusive of hi
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    pub lambda_range: Option<String>,

    /// Iteration depth (default: 6 for dirichlet, 7 otherwise)
    #[arg(long)]
    pub n_iter: Option<usize>,

    /// Search window for the shooting parameter, lo:hi
    #[arg(long, value_name = "LO:HI", allow_hyphen_values = true)]
    pub a_window: Option<String>,

    /// Sampling step on [0, 1] for profile output; must divide 1
    #[arg(long)]
    pub grid_step: Option<f64>,

    /// Output directory (default: $EPIBVP_OUT_DIR, else ./epibvp-out)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Worker threads for multi-lambda runs (default: available cores)
    #[arg(long)]
    pub jobs: Option<usize>,

    /// critical: bracket width; oracle-check: agreement tolerance;
    /// otherwise the |B(a*)| bound reported per branch
    #[arg(long)]
    pub tol: Option<f64>,
}

fn parse_bc(s: &str) -> Result<BoundaryKind, String> {
    s.parse().map_err(|e: epibvp_core::Error| e.to_string())
}

/// Contents of a `--config` file. Keys mirror the flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bc: Option<BoundaryKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_range: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_window: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<Label>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("bad config {}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LambdaSpec {
    Single(f64),
    List(Vec<f64>),
    Range { lo: f64, hi: f64, step: f64 },
}

impl LambdaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaSpec::Single(l) => vec![*l],
            LambdaSpec::List(ls) => ls.clone(),
            LambdaSpec::Range { lo, hi, step } => {
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| lo + i as f64 * step).collect()
            }
        }
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, UsageError> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => usage(format!(
            "--lambdas expects a comma-separated list of numbers, got {s:?}"
        )),
    }
}

fn parse_numbers<const N: usize>(s: &str, flag: &str, shape: &str) -> Result<[f64; N], UsageError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != N {
        return usage(format!("{flag} expects {shape}, got {s:?}"));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = f64::from_str(p.trim())
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| UsageError(format!("{flag} expects {shape}, got {s:?}")))?;
    }
    Ok(out)
}

pub fn parse_range(s: &str) -> Result<LambdaSpec, UsageError> {
    let [lo, hi, step] = parse_numbers::<3>(s, "--lambda-range", "lo:hi:step")?;
    if step <= 0.0 || lo > hi {
        return usage(format!("--lambda-range needs lo <= hi and step > 0, got {s:?}"));
    }
    if (hi - lo) / step > 1e6 {
        return usage("--lambda-range has more than a million points");
    }
    Ok(LambdaSpec::Range { lo, hi, step })
}

pub fn parse_window(s: &str) -> Result<(f64, f64), UsageError> {
    let [lo, hi] = parse_numbers::<2>(s, "--a-window", "lo:hi")?;
    if lo >= hi {
        return usage(format!("--a-window needs lo < hi, got {s:?}"));
    }
    Ok((lo, hi))
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub bc: BoundaryKind,
    pub lambdas: Option<LambdaSpec>,
    pub n_iter: usize,
    pub a_window: (f64, f64),
    pub grid_step: f64,
    pub out: PathBuf,
    pub format: Format,
    pub jobs: usize,
    pub tol: Option<f64>,
    pub branch: Option<Label>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl RunConfig {
    /// Merges `flags` over the config file (if any) and the environment.
    pub fn resolve(
        flags: &CommonArgs,
        branch: Option<Label>,
        lo: Option<f64>,
        hi: Option<f64>,
        env_out: Option<PathBuf>,
    ) -> Result<Self, UsageError> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let bc = flags
            .bc
            .or(file.bc)
            .ok_or_else(|| UsageError("--bc is required (dirichlet, navier1 or navier2)".into()))?;

        let from_flags = lambda_spec(
            flags.lambda,
            flags.lambdas.as_deref().map(parse_list).transpose()?,
            flags.lambda_range.as_deref(),
        )?;
        let lambdas = match from_flags {
            Some(spec) => Some(spec),
            None => lambda_spec(file.lambda, file.lambdas.clone(), file.lambda_range.as_deref())?,
        };
        if let Some(LambdaSpec::List(ls)) = &lambdas {
            if ls.is_empty() || ls.iter().any(|l| !l.is_finite()) {
                return usage("lambda list must be non-empty and finite");
            }
        }
        if let Some(LambdaSpec::Single(l)) = lambdas {
            if !l.is_finite() {
                return usage("--lambda must be finite");
            }
        }

        let n_iter = flags.n_iter.or(file.n_iter).unwrap_or(bc.default_iterations());
        if !(1..=MAX_ITERATIONS).contains(&n_iter) {
            return usage(format!("--n-iter must be between 1 and {MAX_ITERATIONS}, got {n_iter}"));
        }

        let a_window = match flags.a_window.as_deref().or(file.a_window.as_deref()) {
            Some(s) => parse_window(s)?,
            None => DEFAULT_WINDOW,
        };

        let grid_step = flags.grid_step.or(file.grid_step).unwrap_or(DEFAULT_GRID_STEP);
        if !(grid_step > 0.0 && grid_step <= 0.5) {
            return usage(format!("--grid-step must lie in (0, 0.5], got {grid_step}"));
        }
        let cells = (1.0 / grid_step).round();
        if (cells * grid_step - 1.0).abs() > 1e-9 {
            return usage(format!("--grid-step must divide 1 evenly, got {grid_step}"));
        }

        let out = flags
            .out
            .clone()
            .or(file.out.clone())
            .or(env_out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

        let tol = flags.tol.or(file.tol);
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return usage(format!("--tol must be positive, got {t}"));
            }
        }
        let jobs = flags.jobs.or(file.jobs).unwrap_or(0);

        Ok(Self {
            bc,
            lambdas,
            n_iter,
            a_window,
            grid_step,
            out,
            format: flags.format.or(file.format).unwrap_or_default(),
            jobs,
            tol,
            branch: branch.or(file.branch),
            lo: lo.or(file.lo),
            hi: hi.or(file.hi),
        })
    }

    pub fn lambda_values(&self) -> Result<Vec<f64>, UsageError> {
        match &self.lambdas {
            Some(spec) => Ok(spec.values()),
            None => usage("one of --lambda, --lambdas or --lambda-range is required"),
        }
    }

    /// Points `i / n` covering `[0, 1]` at the configured step.
    pub fn sample_grid(&self) -> Vec<f64> {
        let n = (1.0 / self.grid_step).round() as usize;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    /// The config in file form, for echoing next to the results. The output
    /// directory and worker count do not influence results and are left out,
    /// so runs stay comparable across directories and machines.
    pub fn echo(&self) -> FileConfig {
        let (lambda, lambdas, lambda_range) = match &self.lambdas {
            Some(LambdaSpec::Single(l)) => (Some(*l), None, None),
            Some(LambdaSpec::List(ls)) => (None, Some(ls.clone()), None),
            Some(LambdaSpec::Range { lo, hi, step }) => (None, None, Some(format!("{lo:?}:{hi:?}:{step:?}"))),
            None => (None, None, None),
        };
        FileConfig {
            bc: Some(self.bc),
            lambda,
            lambdas,
            lambda_range,
            n_iter: Some(self.n_iter),
            a_window: Some(format!("{:?}:{:?}", self.a_window.0, self.a_window.1)),
            grid_step: Some(self.grid_step),
            out: None,
            format: Some(self.format),
            jobs: None,
            tol: self.tol,
            branch: self.branch,
            lo: self.lo,
            hi: self.hi,
        }
    }
}

fn lambda_spec(
    single: Option<f64>,
    list: Option<Vec<f64>>,
    range: Option<&str>,
) -> Result<Option<LambdaSpec>, UsageError> {
    let given = single.is_some() as u8 + list.is_some() as u8 + range.is_some() as u8;
    if given > 1 {
        return usage("give only one of lambda, lambdas and lambda_range");
    }
    Ok(if let Some(l) = single {
        Some(LambdaSpec::Single(l))
    } else if let Some(ls) = list {
        Some(LambdaSpec::List(ls))
    } else {
        range.map(parse_range).transpose()?
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> CommonArgs {
        CommonArgs {
            bc: Some(BoundaryKind::NavierOne),
            ..Default::default()
        }
    }

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_range("0:30:10").unwrap().values(), vec![0.0, 10.0, 20.0, 30.0]);
        assert_eq!(
            parse_range("-1:1:0.5").unwrap().values(),
            vec![-1.0, -0.5, 0.0, 0.5, 1.0]
        );
        assert_eq!(parse_range("0:0.3:0.1").unwrap().values().len(), 4);
        assert!(parse_range("3:1:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("0:1").is_err());
    }

    #[test]
    fn lists_and_windows() {
        assert_eq!(parse_list("0, 15,-20").unwrap(), vec![0.0, 15.0, -20.0]);
        assert!(parse_list("1,,2").is_err());
        assert!(parse_list("nan").is_err());
        assert_eq!(parse_window("-120:40").unwrap(), (-120.0, 40.0));
        assert!(parse_window("5:1").is_err());
    }

    #[test]
    fn defaults_follow_the_boundary_condition() {
        let cfg = RunConfig::resolve(&flags(), None, None, None, None).unwrap();
        assert_eq!(cfg.n_iter, 7);
        assert_eq!(cfg.a_window, DEFAULT_WINDOW);
        assert_eq!(cfg.out, PathBuf::from(DEFAULT_OUT_DIR));
        assert!(cfg.lambda_values().is_err());
        let d = CommonArgs {
            bc: Some(BoundaryKind::Dirichlet),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(&d, None, None, None, None).unwrap().n_iter, 6);
    }

    #[test]
    fn flag_beats_env_beats_default() {
        let env = Some(PathBuf::from("from-env"));
        let cfg = RunConfig::resolve(&flags(), None, None, None, env.clone()).unwrap();
        assert_eq!(cfg.out, PathBuf::from("from-env"));
        let f = CommonArgs {
            out: Some(PathBuf::from("from-flag")),
            ..flags()
        };
        assert_eq!(
            RunConfig::resolve(&f, None, None, None, env).unwrap().out,
            PathBuf::from("from-flag")
        );
    }

    #[test]
    fn grid_step_must_divide_one() {
        let f = CommonArgs {
            grid_step: Some(0.3),
            ..flags()
        };
        assert!(RunConfig::resolve(&f, None, None, None, None).is_err());
        let f = CommonArgs {
            grid_step: Some(0.1),
            ..flags()
        };
        let grid = RunConfig::resolve(&f, None, None, None, None).unwrap().sample_grid();
        assert_eq!(grid.len(), 11);
        assert_eq!(grid[3], 0.3);
        assert_eq!(grid[10], 1.0);
    }

    #[test]
    fn echo_round_trips_through_toml() {
        let f = CommonArgs {
            lambdas: Some("0,15".into()),
            tol: Some(1e-3),
            ..flags()
        };
        let cfg = RunConfig::resolve(&f, Some(Label::Upper), None, None, None).unwrap();
        let text = toml::to_string(&cfg.echo()).unwrap();
        let back: FileConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg.echo());
        assert_eq!(back.lambdas, Some(vec![0.0, 15.0]));
    }

    #[test]
    fn iteration_cap() {
        let f = CommonArgs {
            n_iter: Some(0),
            ..flags()
        };
        assert!(RunConfig::resolve(&f, None, None, None, None).is_err());
    }
}
