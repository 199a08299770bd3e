//! Batch front-end for the `tpns` solver.
//!
//! `tpns solve` reads a flat config file (see [`config`]), optionally
//! overridden by flags, and writes field files (see [`field_io`]) plus CSV
//! reports. `verify`, `probe` and `norms` evaluate existing fields and
//! multiplier symbols. Exit codes are listed in [`commands::exit`].

pub mod commands;
pub mod config;
pub mod field_io;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tpns::Params;

use commands::{exit, CliError, CliResult};
use config::Config;

#[derive(Debug, Parser)]
#[command(name = "tpns", version, about = "Time-periodic Navier-Stokes solver with drift")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the configured forcing and write fields and reports.
    Solve(Overrides),
    /// Check velocity/pressure files against the configured forcing.
    Verify {
        #[command(flatten)]
        overrides: Overrides,
        /// Velocity field file.
        #[arg(long)]
        u: PathBuf,
        /// Pressure field file; recovered from `u` when absent.
        #[arg(long)]
        p: Option<PathBuf>,
        /// Largest accepted relative PDE residual.
        #[arg(long, default_value_t = commands::VERIFY_RESIDUAL)]
        threshold: f64,
    },
    /// Marcinkiewicz probe of named symbols (m_l, m_1..m_3, oseen, helmholtz, helmholtz_ij, constant).
    Probe {
        #[arg(required = true)]
        symbols: Vec<String>,
        #[arg(long, default_value_t = 13)]
        resolution: usize,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        period: f64,
    },
    /// Norm report of a velocity file (and optional pressure file).
    Norms {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        p: Option<PathBuf>,
        /// Comma-separated plain L^q exponents; `inf` allowed.
        #[arg(long, value_delimiter = ',')]
        lq: Option<Vec<f64>>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        q_pres: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
    },
}

/// Config file plus flag overrides; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// zero, trig, analytic, steady, random or file.
    #[arg(long)]
    pub preset: Option<String>,
    /// `N` for N^3 x N, or `NxM`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Box edge, or three comma-separated edges.
    #[arg(long = "box")]
    pub box_len: Option<String>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Multiplies the forcing.
    #[arg(long, allow_hyphen_values = true)]
    pub scale: Option<f64>,
}

impl Overrides {
    /// Loads the config file, if any, and applies the flags on top.
    pub fn resolve(&self) -> CliResult<Config> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| field_io::FieldError::Io { path: path.display().to_string(), source })?;
                Config::parse(&text)?
            }
            None => Config::default(),
        };
        if let Some(g) = &self.grid {
            let (n, m) = g.split_once('x').unwrap_or((g, g));
            cfg.set("grid.n", n.trim());
            cfg.set("grid.m", m.trim());
        }
        let pairs: [(&str, Option<String>); 10] = [
            ("solver.tol", self.tol.map(|v| v.to_string())),
            ("solver.max_iter", self.max_iter.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("forcing.preset", self.preset.clone()),
            ("grid.box", self.box_len.clone()),
            ("physics.period", self.period.map(|v| v.to_string())),
            ("physics.lambda", self.lambda.map(|v| v.to_string())),
            ("output.dir", self.out_dir.as_ref().map(|p| p.display().to_string())),
            ("forcing.amplitude", self.amplitude.map(|v| v.to_string())),
            ("forcing.scale", self.scale.map(|v| v.to_string())),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v);
            }
        }
        Ok(cfg)
    }
}

/// Runs a parsed command, printing results to stdout. Returns the exit code
/// on success paths; errors carry their own.
pub fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Solve(o) => {
            let out = commands::run_solve(&o.resolve()?)?;
            let s = &out.solution;
            println!(
                "converged iterations={} final_update={:e} residual={:e} contraction={:e} out_dir={}",
                s.iterations,
                s.update_history.last().copied().unwrap_or(0.0),
                out.residual,
                s.contraction_estimate,
                out.out_dir.display()
            );
            Ok(exit::OK)
        }
        Command::Verify { overrides, u, p, threshold } => {
            let cfg = overrides.resolve()?;
            let out = commands::run_verify(&cfg, &u, p.as_deref(), threshold)?;
            print!("{}", out.verdict.to_csv());
            if let Some(dir) = cfg.get("output.dir").map(PathBuf::from) {
                std::fs::create_dir_all(&dir)
                    .and_then(|_| std::fs::write(dir.join("verify.csv"), out.verdict.to_csv()))
                    .and_then(|_| std::fs::write(dir.join("verify_norms.csv"), out.norms.to_csv()))
                    .map_err(|source| field_io::FieldError::Io { path: dir.display().to_string(), source })?;
            }
            if out.verdict.passed() {
                Ok(exit::OK)
            } else {
                Err(CliError::VerifyFailed(out.verdict.failures()))
            }
        }
        Command::Probe { symbols, resolution, lambda, period } => {
            let params = Params::new(lambda, period).map_err(|e| CliError::Usage(e.to_string()))?;
            print!("{}", report::probe_csv(&commands::run_probe(&symbols, resolution, &params)?));
            Ok(exit::OK)
        }
        Command::Norms { u, p, lq, q, q_pres, r } => {
            let d = tpns::diagnostics::NormExponents::default();
            let e = tpns::diagnostics::NormExponents {
                lebesgue: lq.unwrap_or(d.lebesgue),
                q: q.unwrap_or(d.q),
                q_pres: q_pres.unwrap_or(d.q_pres),
                r: r.unwrap_or(d.r),
            };
            e.validate().map_err(|err| CliError::Usage(err.to_string()))?;
            print!("{}", commands::run_norms(&u, p.as_deref(), &e)?);
            Ok(exit::OK)
        }
    }
}
