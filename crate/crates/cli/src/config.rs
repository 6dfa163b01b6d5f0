//! Command-line arguments and the validated run configuration.

use std::path::PathBuf;

use astig_core::ModelParams;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "astig", version, about = "Critical curves of curvature energies and constant astigmatism surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the critical curves for one (rho, mu, d).
    Classify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
        /// Build the curves and measure crossings and self-intersections.
        #[arg(long)]
        geometry: bool,
    },
    /// Build, verify and export the critical curves for one (rho, mu, d).
    Curve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
    },
    /// Generate, verify and export the rotational surface of the inner curve,
    /// or a flat cylinder over a constant-curvature critical curve.
    Surface {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "cylinder")]
        d: Option<f64>,
        /// Index of the constant-curvature solution to sweep instead.
        #[arg(long, conflicts_with = "d")]
        cylinder: Option<usize>,
    },
    /// Singular points of the phase plane and, with --d, the orbits of that level.
    Phase {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        d: Option<f64>,
        /// Arc length after which orbit tracing stops.
        #[arg(long, default_value_t = 50.0)]
        s_max: f64,
    },
    /// Classify over a range of d.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        d_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        d_max: f64,
        #[arg(long)]
        d_step: f64,
        #[arg(long)]
        geometry: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    /// Samples per half-curve (default 2000 for curves, 200 for surfaces).
    #[arg(long)]
    pub n: Option<usize>,
    /// Samples around each sweep orbit of a surface.
    #[arg(long, default_value_t = 64)]
    pub nt: usize,
    /// Output directory.
    #[arg(long, env = "ASTIG_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
    /// Output formats, comma separated (default depends on the command).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Vec<Format>,
    /// Worker threads for sweeps (0: all cores).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub tol: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Obj,
    Plotdata,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct Tolerances {
    /// Unit-speed deviation of built curves.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_unit_speed: f64,
    /// Relative deviation of built curves from the level set F = d.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_level_set: f64,
    /// Relative quadric residual of ambient points.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_quadric: f64,
    /// Mirror symmetry of built curves.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_mirror: f64,
    /// Euler-Lagrange residual of built curves.
    #[arg(long, default_value_t = 1e-5)]
    pub tol_el: f64,
    /// Relative drift of F along traced orbits.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_drift: f64,
    /// Astigmatism deviation with analytic curvatures.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_astig: f64,
    /// Astigmatism deviation with finite-difference curvatures.
    #[arg(long, default_value_t = 1e-3)]
    pub tol_astig_fd: f64,
}

/// Validated parameters shared by all commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub rho: f64,
    pub mu: f64,
    pub n: Option<usize>,
    pub nt: usize,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub workers: usize,
    pub tol: Tolerances,
}

impl RunConfig {
    pub fn new(common: CommonArgs, default_formats: &[Format]) -> Result<Self> {
        let CommonArgs { rho, mu, n, nt, out, format, workers, tol } = common;
        if !rho.is_finite() || !mu.is_finite() {
            return Err(CliError::Params(format!("rho and mu must be finite (rho = {rho}, mu = {mu})")));
        }
        if mu == 0.0 {
            return Err(CliError::Params("mu must be nonzero".into()));
        }
        if n.is_some_and(|n| n < 16) {
            return Err(CliError::Params("--n must be at least 16".into()));
        }
        if nt < 9 {
            return Err(CliError::Params("--nt must be at least 9".into()));
        }
        let mut formats = if format.is_empty() { default_formats.to_vec() } else { format };
        formats.sort();
        formats.dedup();
        Ok(Self { rho, mu, n, nt, out, formats, workers, tol })
    }

    pub fn params(&self, d: f64) -> Result<ModelParams> {
        Ok(ModelParams::new(self.rho, self.mu, d)?)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// File stem shared by the outputs of one run.
    pub fn stem(&self, command: &str, tail: &str) -> String {
        format!("{command}_rho{}_mu{}{tail}", self.rho, self.mu)
    }
}

/// The grid `d_min, d_min + step, …` up to `d_max`.
pub fn d_grid(d_min: f64, d_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(d_min.is_finite() && d_max.is_finite() && step.is_finite()) || step <= 0.0 || d_max < d_min {
        return Err(CliError::Params(format!(
            "empty d range: need finite d_min <= d_max and d_step > 0 (got {d_min}, {d_max}, {step})"
        )));
    }
    let count = ((d_max - d_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| d_min + step * i as f64).collect())
}
