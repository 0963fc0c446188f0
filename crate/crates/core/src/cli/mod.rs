//! Command-line front end: `carleman <subcommand> [--config file] [--set key.path=value]...`.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error, 3 solver failure.

pub mod commands;
pub mod report;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

use crate::config::{Built, Config, LoadedConfig};
use crate::error::{Error, Result};
pub use report::{Check, Report, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CARLEMAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "carleman", version, about = "Dbar-problems, Carleman determinants and tau-function checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON scenario file; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Radial quadrature points per component (overrides `domain.radial_points`).
    #[arg(long, global = true)]
    pub radial: Option<usize>,
    /// Angular quadrature points per component (overrides `domain.angular_points`).
    #[arg(long, global = true)]
    pub angular: Option<usize>,
    /// Field override `key.path=value`, value parsed as JSON; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Suppress the one-line summary on stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the dbar-problem for Γ and report unimodularity and consistency residuals.
    SolveDbar,
    /// Regularized determinant by series, eigenvalues and LU, plus the resolvent identity.
    Det2,
    /// Integrate the Malgrange form along a path and compare with log det₂.
    TauPath,
    /// Miwa-shift connection matrices, τ-ratios and shift composition.
    MiwaCheck,
    /// Contour residue of Γ₁₂(z,t)Γ₂₁(z,s) at large radii.
    HirotaCheck,
    /// KP residual of log τ with Richardson step halving.
    KpResidual,
    /// ψ(x,t) on a grid of (x,t) samples.
    NlsSolve,
    /// Schwarz symmetry, Lax pair, NLS, cmKdV and det₂–|ψ|² checks.
    NlsVerify,
    /// Mother-body contour reduction against the area solver on an ellipse.
    RhCompare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveDbar => "solve-dbar",
            Command::Det2 => "det2",
            Command::TauPath => "tau-path",
            Command::MiwaCheck => "miwa-check",
            Command::HirotaCheck => "hirota-check",
            Command::KpResidual => "kp-residual",
            Command::NlsSolve => "nls-solve",
            Command::NlsVerify => "nls-verify",
            Command::RhCompare => "rh-compare",
        }
    }

    pub const ALL: [Command; 9] = [
        Command::SolveDbar,
        Command::Det2,
        Command::TauPath,
        Command::MiwaCheck,
        Command::HirotaCheck,
        Command::KpResidual,
        Command::NlsSolve,
        Command::NlsVerify,
        Command::RhCompare,
    ];

    pub fn from_name(name: &str) -> Option<Command> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn execute(self, cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
        match self {
            Command::SolveDbar => commands::solve_dbar(cfg, b, r),
            Command::Det2 => commands::det2(cfg, b, r),
            Command::TauPath => commands::tau_path(cfg, b, r),
            Command::MiwaCheck => commands::miwa_check(cfg, b, r),
            Command::HirotaCheck => commands::hirota_check(cfg, b, r),
            Command::KpResidual => commands::kp_residual(cfg, b, r),
            Command::NlsSolve => commands::nls_solve(cfg, b, r),
            Command::NlsVerify => commands::nls_verify(cfg, b, r),
            Command::RhCompare => commands::rh_compare(cfg, b, r),
        }
    }
}

/// Sets the rayon and faer worker counts from `CARLEMAN_THREADS`, if present.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    faer::set_global_parallelism(faer::Par::rayon(n));
    Ok(Some(n))
}

fn overrides(cli: &Cli) -> Vec<String> {
    let mut o = Vec::new();
    if let Some(p) = &cli.out {
        o.push(format!("output_dir={}", serde_json::Value::String(p.display().to_string())));
    }
    if let Some(n) = cli.radial {
        o.push(format!("domain.radial_points={n}"));
    }
    if let Some(n) = cli.angular {
        o.push(format!("domain.angular_points={n}"));
    }
    o.extend(cli.set.iter().cloned());
    o
}

/// Outcome of one run: the report (when the command got that far) and the exit code.
pub struct Outcome {
    pub code: i32,
    pub report: Option<Report>,
    pub json_path: Option<PathBuf>,
    pub message: String,
}

/// Exit code for an error: configuration problems are 2, everything else 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Runs one subcommand against a loaded configuration and writes its report.
pub fn run_loaded(command: Command, loaded: &LoadedConfig) -> Outcome {
    let fail = |code, message: String| Outcome { code, report: None, json_path: None, message };
    let built = match loaded.config.build() {
        Ok(b) => b,
        Err(e) => return fail(exit_code(&e), e.to_string()),
    };
    let mut report = Report::new(command.name());
    if let Err(e) = report.grid_table(&built.grid) {
        return fail(EXIT_CONFIG, e.to_string());
    }
    if let Err(e) = command.execute(&loaded.config, &built, &mut report) {
        return fail(exit_code(&e), e.to_string());
    }
    let path = match report.write(&loaded.config.output_dir, loaded, Some(&built.grid)) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, format!("cannot write report: {e}")),
    };
    let failed: Vec<&str> = report.checks().iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let (code, message) = if failed.is_empty() {
        (EXIT_OK, format!("{}: pass ({} checks) -> {}", command.name(), report.checks().len(), path.display()))
    } else {
        (EXIT_TOLERANCE, format!("{}: FAIL [{}] -> {}", command.name(), failed.join(", "), path.display()))
    };
    Outcome { code, report: Some(report), json_path: Some(path), message }
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("carleman: {e}");
        return EXIT_CONFIG;
    }
    let loaded = match LoadedConfig::from_path(cli.config.as_deref(), &overrides(&cli)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("carleman: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = run_loaded(cli.command, &loaded);
    if out.code == EXIT_CONFIG || out.code == EXIT_SOLVER {
        eprintln!("carleman {}: {}", cli.command.name(), out.message);
    } else if !cli.quiet {
        println!("{}", out.message);
    }
    out.code
}
