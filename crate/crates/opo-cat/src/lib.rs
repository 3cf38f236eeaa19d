//! Library behind the `opo-cat` binary: configuration, experiment
//! orchestration (stability scans, steady states, the heralded cat
//! pipeline, detection sweeps, Wigner grids, oracle-vs-formula reports),
//! and deterministic CSV/JSON emission.

pub mod config;
pub mod fmt;
pub mod report;
mod run;

use std::fmt::Display;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{GridSpec, RunConfig};
pub use report::{ComparisonReport, ReportFormat};
pub use run::{run_cat, run_check, run_detect, run_stability, run_steady, run_sweep, run_wigner};

/// Errors mapped onto process exit codes: configuration and filesystem
/// problems exit 2, physics-domain refusals exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Domain(opo_core::OpoError),
    Io(String),
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Domain(e) => write!(f, "domain error: {e}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<opo_core::OpoError> for CliError {
    fn from(e: opo_core::OpoError) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "opo-cat",
    about = "Cat-state parametric-oscillator simulator: Gaussian dynamics, Fock oracle, heralding, and detection diagnostics",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON configuration file; flags override individual keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (overrides the config `outputs` key).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    /// Override χ₁t.
    #[arg(long, global = true)]
    pub chi1_t: Option<f64>,

    /// Override χ₂t (mutually exclusive with --nbar).
    #[arg(long, global = true)]
    pub chi2_t: Option<f64>,

    /// Override κt.
    #[arg(long, global = true)]
    pub kappa_t: Option<f64>,

    /// Override the steady-state photon-number target N̄.
    #[arg(long, global = true)]
    pub nbar: Option<f64>,

    /// Override the per-mode Fock cutoffs m1,m2,m3.
    #[arg(long, global = true, value_delimiter = ',')]
    pub cutoffs: Option<Vec<usize>>,

    /// Override the φ-grid size.
    #[arg(long, global = true)]
    pub phi_points: Option<usize>,

    /// Override the d₋ projection amplitudes.
    #[arg(long, global = true)]
    pub alpha_re: Option<f64>,
    #[arg(long, global = true)]
    pub alpha_im: Option<f64>,
    #[arg(long, global = true)]
    pub beta_re: Option<f64>,
    #[arg(long, global = true)]
    pub beta_im: Option<f64>,

    /// Override the Wigner grid as xmin,xmax,n.
    #[arg(long, global = true, value_delimiter = ',')]
    pub grid: Option<Vec<String>>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Drift-matrix eigenvalues and threshold diagnostics.
    Stability {
        /// Rate χ₁ (alias for χ₁t in the t = 1 normalization).
        #[arg(long)]
        chi1: Option<f64>,
        /// Rate χ₂.
        #[arg(long)]
        chi2: Option<f64>,
        /// Rate κ (both cavities).
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Below-threshold steady state: covariance, N̄, purity (JSON).
    Steady,
    /// Heralded conditional blocks: traces, probabilities, block moments.
    Cat {
        /// Also dump the evolved three-mode density matrix in binary form.
        #[arg(long)]
        dump_rho: bool,
    },
    /// Detection records over the φ grid for cat and mixture (CSV).
    Detect,
    /// Conditioned d₊ Wigner grid and its quadrature marginals (CSV).
    Wigner,
    /// Run a target subcommand over an N̄ grid.
    Sweep {
        /// Comma-separated N̄ values.
        #[arg(long, value_delimiter = ',', required = true)]
        nbar_grid: Vec<f64>,
        /// What to run at each point.
        #[arg(long, value_enum, default_value_t = SweepTarget::Detect)]
        target: SweepTarget,
    },
    /// Oracle-vs-closed-form comparison report.
    Check {
        /// Report format.
        #[arg(long, value_enum, default_value_t = CheckFormat::Text)]
        format: CheckFormat,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepTarget {
    Steady,
    Stability,
    Detect,
    Check,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CheckFormat {
    Csv,
    Json,
    Text,
}

impl From<CheckFormat> for ReportFormat {
    fn from(f: CheckFormat) -> Self {
        match f {
            CheckFormat::Csv => ReportFormat::Csv,
            CheckFormat::Json => ReportFormat::Json,
            CheckFormat::Text => ReportFormat::Text,
        }
    }
}

/// Load the configuration, apply flag overrides, validate.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = cli.chi1_t {
        cfg.chi1_t = v;
    }
    if let Some(v) = cli.kappa_t {
        cfg.kappa_t = v;
    }
    if let Some(v) = cli.chi2_t {
        cfg.chi2_t = Some(v);
        cfg.nbar = None;
    }
    if let Some(v) = cli.nbar {
        cfg.nbar = Some(v);
        cfg.chi2_t = None;
    }
    if let Some(c) = &cli.cutoffs {
        if c.len() != 3 {
            return Err(CliError::Config(format!("--cutoffs needs m1,m2,m3; got {} values", c.len())));
        }
        cfg.cutoffs = [c[0], c[1], c[2]];
    }
    if let Some(v) = cli.phi_points {
        cfg.phi_points = v;
    }
    if let Some(v) = cli.alpha_re {
        cfg.alpha_re = v;
    }
    if let Some(v) = cli.alpha_im {
        cfg.alpha_im = v;
    }
    if let Some(v) = cli.beta_re {
        cfg.beta_re = v;
    }
    if let Some(v) = cli.beta_im {
        cfg.beta_im = v;
    }
    if let Some(g) = &cli.grid {
        if g.len() != 3 {
            return Err(CliError::Config(format!("--grid needs xmin,xmax,n; got {} values", g.len())));
        }
        let parse = |s: &String| -> Result<f64, CliError> {
            s.parse().map_err(|e| CliError::Config(format!("bad grid component {s}: {e}")))
        };
        let n: usize =
            g[2].parse().map_err(|e| CliError::Config(format!("bad grid size {}: {e}", g[2])))?;
        cfg.grid = GridSpec { xmin: parse(&g[0])?, xmax: parse(&g[1])?, n };
    }
    if let Some(out) = &cli.out {
        cfg.outputs = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run_cli(cli: &Cli) -> i32 {
    let result = (|| -> Result<i32, CliError> {
        match &cli.command {
            Command::Stability { chi1, chi2, kappa } => {
                let mut cfg = effective_config(cli)?;
                if let Some(k) = kappa {
                    cfg.kappa_t = *k;
                }
                if let Some(c) = chi1 {
                    cfg.chi1_t = *c;
                }
                if let Some(c) = chi2 {
                    cfg.chi2_t = Some(*c);
                    cfg.nbar = None;
                }
                cfg.validate()?;
                run_stability(&cfg)?;
                Ok(0)
            }
            Command::Steady => {
                run_steady(&effective_config(cli)?)?;
                Ok(0)
            }
            Command::Cat { dump_rho } => {
                run_cat(&effective_config(cli)?, *dump_rho)?;
                Ok(0)
            }
            Command::Detect => {
                run_detect(&effective_config(cli)?)?;
                Ok(0)
            }
            Command::Wigner => {
                run_wigner(&effective_config(cli)?)?;
                Ok(0)
            }
            Command::Sweep { nbar_grid, target } => {
                run_sweep(&effective_config(cli)?, nbar_grid, *target, cli.workers.max(1))?;
                Ok(0)
            }
            Command::Check { format } => {
                let all_pass = run_check(&effective_config(cli)?, (*format).into())?;
                Ok(if all_pass { 0 } else { 1 })
            }
        }
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("opo-cat: {e}");
            e.exit_code()
        }
    }
}
