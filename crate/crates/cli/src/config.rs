//! Command-line flags, JSON config documents and their merge into a
//! validated [`RunConfig`].

use crate::CliError;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use stabfem::assembly::closure_by_name;
use stabfem::profiles::PROFILES;
use stabfem::solver::path_by_name;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Sweep,
    Neutral,
    Modes,
    Validate,
}

/// Flags. Every field is optional so the config file can supply it.
#[derive(Debug, Default, Parser)]
#[command(name = "stabfem", version, about = "Linear stability of plane shear flows by mixed finite elements")]
pub struct Args {
    /// Command to run (may instead come from the config file).
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON config document; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in base flow: poiseuille, couette or tanh.
    #[arg(long)]
    pub profile: Option<String>,
    /// Tabulated base flow, CSV with header `y,U`.
    #[arg(long)]
    pub profile_file: Option<PathBuf>,
    /// Constant added to the base flow.
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<f64>,
    /// Channel height.
    #[arg(long)]
    pub a: Option<f64>,
    /// Number of finite elements.
    #[arg(long)]
    pub elements: Option<usize>,
    /// Mesh grading exponent (1 = uniform).
    #[arg(long)]
    pub grading: Option<f64>,
    #[arg(long)]
    pub re: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub re_list: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_list: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha_lo: Option<f64>,
    #[arg(long)]
    pub alpha_hi: Option<f64>,
    /// Points between alpha-lo and alpha-hi for `sweep`.
    #[arg(long)]
    pub alpha_steps: Option<usize>,
    #[arg(long)]
    pub quad_points: Option<usize>,
    /// Eigen path: schur-qr or coupled-qz.
    #[arg(long)]
    pub path: Option<String>,
    /// Wall closure of the pressure equation: rotational or normal-viscous.
    #[arg(long)]
    pub closure: Option<String>,
    #[arg(long)]
    pub tol_neutral: Option<f64>,
    /// Agreement required by `validate`.
    #[arg(long)]
    pub tol_validate: Option<f64>,
    /// Number of modes written by `modes`.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Chebyshev modes of the collocation solver used by `validate`.
    #[arg(long)]
    pub oracle_modes: Option<usize>,
    /// Locate the critical point after the neutral scan.
    #[arg(long)]
    pub refine_critical: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write SVG plots next to the CSV files.
    #[arg(long)]
    pub plots: bool,
}

/// JSON config document; keys are the flag names in snake case.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub profile: Option<String>,
    pub profile_file: Option<PathBuf>,
    pub shift: Option<f64>,
    pub a: Option<f64>,
    pub elements: Option<usize>,
    pub grading: Option<f64>,
    pub re: Option<f64>,
    pub re_list: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub alpha_list: Option<Vec<f64>>,
    pub alpha_lo: Option<f64>,
    pub alpha_hi: Option<f64>,
    pub alpha_steps: Option<usize>,
    pub quad_points: Option<usize>,
    pub path: Option<String>,
    pub closure: Option<String>,
    pub tol_neutral: Option<f64>,
    pub tol_validate: Option<f64>,
    pub modes: Option<usize>,
    pub oracle_modes: Option<usize>,
    pub refine_critical: Option<bool>,
    pub out_dir: Option<PathBuf>,
    pub plots: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSpec {
    Named(String),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub profile: ProfileSpec,
    pub shift: f64,
    pub a: f64,
    pub elements: usize,
    pub grading: f64,
    pub re: Vec<f64>,
    /// Explicit wavenumbers; empty when only a bracket was given.
    pub alpha: Vec<f64>,
    pub alpha_lo: Option<f64>,
    pub alpha_hi: Option<f64>,
    pub alpha_steps: usize,
    pub quad_points: usize,
    pub path: String,
    pub closure: String,
    pub tol_neutral: f64,
    pub tol_validate: f64,
    pub modes: usize,
    pub oracle_modes: usize,
    pub refine_critical: bool,
    pub out_dir: PathBuf,
    pub plots: bool,
}

pub const VALIDATE_RE: [f64; 3] = [2000.0, 6000.0, 10000.0];
pub const VALIDATE_ALPHA: [f64; 3] = [0.8, 1.0, 1.2];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn read_config_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("malformed config {}: {e}", path.display())))
}

/// Parses argv (including the program name) into a validated config.
pub fn parse_argv<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| usage(e.to_string()))?;
    parse_config(args)
}

pub fn parse_config(args: Args) -> Result<RunConfig, CliError> {
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => FileConfig::default(),
    };
    merge(args, file)
}

fn check_positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be positive, got {v}")))
    }
}

fn check_list(name: &str, v: &[f64]) -> Result<(), CliError> {
    for &x in v {
        check_positive(name, x)?;
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage(format!("--{name} must be strictly increasing")));
    }
    Ok(())
}

fn merge(args: Args, file: FileConfig) -> Result<RunConfig, CliError> {
    let command = match (args.command, file.command) {
        (Some(a), Some(f)) if a != f => {
            return Err(usage(format!("command {a:?} contradicts {f:?} in the config file")))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(usage("no command given (solve, sweep, neutral, modes, validate)")),
    };

    if args.profile.is_some() && args.profile_file.is_some() {
        return Err(usage("--profile and --profile-file are mutually exclusive"));
    }
    let (profile, profile_file) = if args.profile.is_some() || args.profile_file.is_some() {
        (args.profile, args.profile_file)
    } else {
        (file.profile, file.profile_file)
    };
    let profile = match (profile, profile_file) {
        (Some(_), Some(_)) => return Err(usage("profile and profile_file are mutually exclusive")),
        (_, Some(path)) => {
            if !path.is_file() {
                return Err(usage(format!("profile file {} does not exist", path.display())));
            }
            ProfileSpec::File(path)
        }
        (Some(name), None) => {
            if PROFILES.get(&name).is_err() {
                return Err(usage(format!(
                    "unknown profile `{name}` (known: {})",
                    PROFILES.names().collect::<Vec<_>>().join(", ")
                )));
            }
            ProfileSpec::Named(name.to_lowercase())
        }
        (None, None) => ProfileSpec::Named("poiseuille".into()),
    };

    if args.re.is_some() && args.re_list.is_some() {
        return Err(usage("--re and --re-list are mutually exclusive"));
    }
    // Flags replace the whole Re specification of the file.
    let (re, re_list) = if args.re.is_some() || args.re_list.is_some() {
        (args.re, args.re_list)
    } else {
        (file.re, file.re_list)
    };
    let re = match (re, re_list) {
        (Some(_), Some(_)) => return Err(usage("re and re_list are mutually exclusive")),
        (Some(r), None) => vec![r],
        (None, Some(l)) => l,
        (None, None) if command == Command::Validate => VALIDATE_RE.to_vec(),
        (None, None) => return Err(usage("missing --re or --re-list")),
    };
    check_list("re", &re)?;

    if args.alpha.is_some() && args.alpha_list.is_some() {
        return Err(usage("--alpha and --alpha-list are mutually exclusive"));
    }
    let (alpha, alpha_list) = if args.alpha.is_some() || args.alpha_list.is_some() {
        (args.alpha, args.alpha_list)
    } else {
        (file.alpha, file.alpha_list)
    };
    let mut alpha = match (alpha, alpha_list) {
        (Some(_), Some(_)) => return Err(usage("alpha and alpha_list are mutually exclusive")),
        (Some(a), None) => vec![a],
        (None, Some(l)) => l,
        (None, None) => Vec::new(),
    };
    check_list("alpha", &alpha)?;
    let alpha_lo = args.alpha_lo.or(file.alpha_lo);
    let alpha_hi = args.alpha_hi.or(file.alpha_hi);
    let alpha_steps = args.alpha_steps.or(file.alpha_steps).unwrap_or(9);
    if let (Some(lo), Some(hi)) = (alpha_lo, alpha_hi) {
        check_positive("alpha-lo", lo)?;
        if !(hi > lo) {
            return Err(usage(format!("--alpha-hi ({hi}) must exceed --alpha-lo ({lo})")));
        }
    }

    let elements = args
        .elements
        .or(file.elements)
        .ok_or_else(|| usage("missing --elements"))?;
    if elements == 0 {
        return Err(usage("--elements must be at least 1"));
    }

    match command {
        Command::Solve | Command::Modes => {
            if re.len() != 1 {
                return Err(usage("solve and modes take a single --re"));
            }
            if alpha.len() != 1 {
                return Err(usage("solve and modes take a single --alpha"));
            }
        }
        Command::Sweep => {
            if alpha.is_empty() {
                match (alpha_lo, alpha_hi) {
                    (Some(lo), Some(hi)) if alpha_steps >= 2 => {
                        alpha = (0..alpha_steps)
                            .map(|k| lo + (hi - lo) * k as f64 / (alpha_steps - 1) as f64)
                            .collect();
                    }
                    (Some(_), Some(_)) => return Err(usage("--alpha-steps must be at least 2")),
                    _ => return Err(usage("sweep needs --alpha-list or --alpha-lo/--alpha-hi")),
                }
            }
        }
        Command::Neutral => {
            if alpha_lo.is_none() || alpha_hi.is_none() {
                return Err(usage("neutral needs --alpha-lo and --alpha-hi"));
            }
        }
        Command::Validate => {
            if alpha.is_empty() {
                alpha = VALIDATE_ALPHA.to_vec();
            }
        }
    }

    let path = args.path.or(file.path).unwrap_or_else(|| "schur-qr".into());
    path_by_name(&path).map_err(|e| usage(e.to_string()))?;
    let closure = args.closure.or(file.closure).unwrap_or_else(|| "rotational".into());
    closure_by_name(&closure).map_err(|e| usage(e.to_string()))?;

    let a = check_positive("a", args.a.or(file.a).unwrap_or(2.0))?;
    let grading = check_positive("grading", args.grading.or(file.grading).unwrap_or(1.0))?;
    let shift = args.shift.or(file.shift).unwrap_or(0.0);
    if !shift.is_finite() {
        return Err(usage("--shift must be finite"));
    }
    let tol_neutral = check_positive("tol-neutral", args.tol_neutral.or(file.tol_neutral).unwrap_or(1e-6))?;
    let tol_validate = check_positive("tol-validate", args.tol_validate.or(file.tol_validate).unwrap_or(1e-3))?;
    let quad_points = args.quad_points.or(file.quad_points).unwrap_or(5);
    let modes = args.modes.or(file.modes).unwrap_or(3);
    if modes == 0 {
        return Err(usage("--modes must be at least 1"));
    }
    let oracle_modes = args.oracle_modes.or(file.oracle_modes).unwrap_or(96);

    Ok(RunConfig {
        command,
        profile,
        shift,
        a,
        elements,
        grading,
        re,
        alpha,
        alpha_lo,
        alpha_hi,
        alpha_steps,
        quad_points,
        path: path.to_lowercase(),
        closure: closure.to_lowercase(),
        tol_neutral,
        tol_validate,
        modes,
        oracle_modes,
        refine_critical: args.refine_critical || file.refine_critical.unwrap_or(false),
        out_dir: args.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        plots: args.plots || file.plots.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_flags_fill_defaults() {
        let c = parse_argv(["stabfem", "solve", "--profile", "poiseuille", "--a", "2", "--re", "10000", "--alpha", "1", "--elements", "256"]).unwrap();
        assert_eq!(c.command, Command::Solve);
        assert_eq!(c.re, vec![10000.0]);
        assert_eq!(c.alpha, vec![1.0]);
        assert_eq!(c.elements, 256);
        assert_eq!(c.path, "schur-qr");
        assert_eq!(c.quad_points, 5);
        assert_eq!(c.profile, ProfileSpec::Named("poiseuille".into()));
    }

    #[test]
    fn missing_elements_is_usage_error() {
        let e = parse_argv(["stabfem", "solve", "--re", "100", "--alpha", "1"]).unwrap_err();
        assert!(matches!(e, CliError::Usage(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let e = parse_argv(["stabfem", "solve", "--bogus"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_path_is_usage_error() {
        let e = parse_argv(["stabfem", "solve", "--re", "1", "--alpha", "1", "--elements", "4", "--path", "lanczos"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn flag_overrides_file_re_list() {
        let file = FileConfig {
            command: Some(Command::Sweep),
            re_list: Some(vec![1000.0, 2000.0]),
            alpha_list: Some(vec![1.0]),
            elements: Some(8),
            ..Default::default()
        };
        let args = Args { re: Some(500.0), ..Default::default() };
        let c = merge(args, file).unwrap();
        assert_eq!(c.re, vec![500.0]);
    }

    #[test]
    fn contradictory_profile_flags() {
        let e = parse_argv(["stabfem", "solve", "--profile", "couette", "--profile-file", "x.csv"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn malformed_json_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, "{ \"re\": ").unwrap();
        let e = parse_argv(["stabfem", "solve", "--config", p.to_str().unwrap()]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn sweep_builds_alpha_grid() {
        let c = parse_argv([
            "stabfem", "sweep", "--re-list", "1000,2000", "--alpha-lo", "0.5", "--alpha-hi", "1.5", "--alpha-steps", "5",
            "--elements", "8",
        ])
        .unwrap();
        assert_eq!(c.alpha, vec![0.5, 0.75, 1.0, 1.25, 1.5]);
    }

    #[test]
    fn validate_defaults_to_three_by_three() {
        let c = parse_argv(["stabfem", "validate", "--elements", "16"]).unwrap();
        assert_eq!(c.re, VALIDATE_RE.to_vec());
        assert_eq!(c.alpha, VALIDATE_ALPHA.to_vec());
    }

    #[test]
    fn decreasing_list_rejected() {
        let e = parse_argv(["stabfem", "neutral", "--re-list", "2000,1000", "--alpha-lo", "0.5", "--alpha-hi", "1", "--elements", "4"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
