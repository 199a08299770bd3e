//! The four subcommands, independent of argument parsing.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;
use tpns::diagnostics::{
    energy_balance, energy_inequality_check, norms, spectrum_decay, NormExponents, NormReport, INEQUALITY_TOL,
};
use tpns::forcing::{manufactured, random_smooth, uniform, Preset, PresetKind};
use tpns::multipliers::{marcinkiewicz_probe, spectral_divergence, MultiplierReport, ProbeSymbol};
use tpns::solver::{recover_pressure, residual, solve, InitialGuess, Solution, SolverConfig};
use tpns::{forward, inverse, Grid, Params, PhysicalField, SpectralField};

use crate::config::{Config, ConfigError};
use crate::field_io::{self, FieldError};
use crate::report::{history_csv, Check, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] tpns::Error),
    #[error("verification failed: {}", .0.join(", "))]
    VerifyFailed(Vec<&'static str>),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NO_CONVERGENCE: i32 = 3;
    pub const DIVERGING: i32 = 4;
    pub const MEAN_MODE: i32 = 5;
    pub const IO: i32 = 6;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use tpns::Error as E;
        match self {
            Self::Usage(_) | Self::Config(_) => exit::USAGE,
            Self::Field(_) => exit::IO,
            Self::VerifyFailed(_) => exit::FAILED,
            Self::Solver(e) => match e {
                E::NoConvergence { .. } => exit::NO_CONVERGENCE,
                E::Diverging { .. } => exit::DIVERGING,
                E::MeanModeNonzero { .. } => exit::MEAN_MODE,
                E::InvalidGrid(_) | E::InvalidArgument(_) | E::InvalidExponent { .. } => exit::USAGE,
                _ => exit::FAILED,
            },
        }
    }

    /// One `key=value` line for the error stream.
    pub fn reason(&self) -> String {
        use tpns::Error as E;
        let quoted = |s: String| format!("{:?}", s);
        match self {
            Self::Solver(E::NoConvergence { iterations, last_update, .. }) => {
                format!("error=NoConvergence iterations={iterations} last_update={last_update:e}")
            }
            Self::Solver(E::Diverging { iterations, ratio, .. }) => {
                format!("error=Diverging iterations={iterations} ratio={ratio:e}")
            }
            Self::Solver(E::MeanModeNonzero { magnitude, tolerance }) => {
                format!("error=MeanModeNonzero magnitude={magnitude:e} tolerance={tolerance:e}")
            }
            Self::Solver(e) => format!("error=Solver message={}", quoted(e.to_string())),
            Self::Usage(m) => format!("error=Usage message={}", quoted(m.clone())),
            Self::Config(e) => format!("error=Usage message={}", quoted(e.to_string())),
            Self::Field(e @ FieldError::Io { .. }) => format!("error=Io message={}", quoted(e.to_string())),
            Self::Field(e) => format!("error=BadField message={}", quoted(e.to_string())),
            Self::VerifyFailed(names) => format!("error=VerifyFailed checks={}", names.join(";")),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSource {
    Preset(Preset),
    /// Seeded solenoidal field on shells `<= cutoff`, RMS `amplitude`.
    Random {
        seed: u64,
        amplitude: f64,
        cutoff: f64,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    pub source: ForcingSource,
    /// Multiplies the whole forcing.
    pub scale: f64,
    /// Constant vector added after scaling.
    pub offset: [f64; 3],
}

/// Everything a run needs, resolved from a [`Config`].
#[derive(Debug, Clone)]
pub struct Settings {
    pub grid: Arc<Grid>,
    pub forcing: ForcingSpec,
    pub solver: SolverConfig,
    pub exponents: NormExponents,
    pub out_dir: PathBuf,
}

fn triple(cfg: &Config, key: &str, default: f64) -> CliResult<[f64; 3]> {
    match cfg.parse_list::<f64>(key)? {
        None => Ok([default; 3]),
        Some(v) if v.len() == 1 => Ok([v[0]; 3]),
        Some(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
        Some(_) => Err(CliError::Usage(format!("'{key}' takes one or three values"))),
    }
}

/// Spatial resolution from `grid.n` (all axes) or `grid.n1..n3`.
fn resolution(cfg: &Config) -> CliResult<[usize; 3]> {
    if let Some(n) = cfg.parse_opt::<usize>("grid.n")? {
        return Ok([n; 3]);
    }
    if cfg.get("grid.n1").is_some() {
        return Ok([cfg.parse_required("grid.n1")?, cfg.parse_required("grid.n2")?, cfg.parse_required("grid.n3")?]);
    }
    Err(ConfigError::Missing("grid.n".into()).into())
}

pub fn grid_from_config(cfg: &Config) -> CliResult<Arc<Grid>> {
    let n = resolution(cfg)?;
    let m: usize = cfg.parse_required("grid.m")?;
    let box_len = triple(cfg, "grid.box", 2.0 * PI)?;
    let params = Params::new(cfg.parse_or("physics.lambda", 1.0)?, cfg.parse_or("physics.period", 2.0 * PI)?)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Grid::new(box_len, n, m, params).map_err(|e| CliError::Usage(e.to_string()))
}

impl Settings {
    pub fn from_config(cfg: &Config) -> CliResult<Self> {
        let grid = grid_from_config(cfg)?;
        let seed: u64 = cfg.parse_or("seed", 0)?;
        let preset = cfg.require("forcing.preset")?;
        let amplitude: f64 = cfg.parse_or("forcing.amplitude", 1e-2)?;
        let source = match preset {
            "random" => ForcingSource::Random { seed, amplitude, cutoff: cfg.parse_or("forcing.cutoff", 3.0)? },
            "file" => ForcingSource::File(PathBuf::from(cfg.require("forcing.file")?)),
            name => {
                let kind: PresetKind = name.parse().map_err(|e: tpns::Error| CliError::Usage(e.to_string()))?;
                ForcingSource::Preset(Preset::new(kind, amplitude))
            }
        };
        let forcing = ForcingSpec {
            source,
            scale: cfg.parse_or("forcing.scale", 1.0)?,
            offset: triple(cfg, "forcing.offset", 0.0)?,
        };
        let defaults = SolverConfig::default();
        let initial_guess = match cfg.get("solver.initial").unwrap_or("zero") {
            "zero" => InitialGuess::Zero,
            "random" => {
                let amp = cfg.parse_or("solver.initial_amplitude", 1e-3)?;
                let field = random_smooth(seed.wrapping_add(1), amp, 3.0, &grid)?;
                InitialGuess::Provided(forward(&field))
            }
            other => return Err(CliError::Usage(format!("solver.initial must be zero or random, got '{other}'"))),
        };
        let solver = SolverConfig {
            tol: cfg.parse_or("solver.tol", defaults.tol)?,
            max_iter: cfg.parse_or("solver.max_iter", defaults.max_iter)?,
            divergence_guard: cfg.parse_or("solver.divergence_guard", defaults.divergence_guard)?,
            guard_steps: cfg.parse_or("solver.guard_steps", defaults.guard_steps)?,
            tol_mean: defaults.tol_mean,
            initial_guess,
        };
        solver.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let exponents = exponents_from_config(cfg)?;
        exponents.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let out_dir = PathBuf::from(cfg.get("output.dir").unwrap_or("out"));
        Ok(Self { grid, forcing, solver, exponents, out_dir })
    }
}

pub fn exponents_from_config(cfg: &Config) -> CliResult<NormExponents> {
    let d = NormExponents::default();
    Ok(NormExponents {
        lebesgue: cfg.parse_list("norms.lebesgue")?.unwrap_or(d.lebesgue),
        q: cfg.parse_or("norms.q", d.q)?,
        q_pres: cfg.parse_or("norms.q_pres", d.q_pres)?,
        r: cfg.parse_or("norms.r", d.r)?,
    })
}

/// The physical forcing described by `spec` on `grid`.
pub fn build_forcing(spec: &ForcingSpec, grid: &Arc<Grid>) -> CliResult<PhysicalField> {
    let base = match &spec.source {
        ForcingSource::Preset(p) => manufactured(p, grid)?.forcing,
        ForcingSource::Random { seed, amplitude, cutoff } => random_smooth(*seed, *amplitude, *cutoff, grid)?,
        ForcingSource::File(path) => {
            let f = field_io::decode_on(&field_io::read(path)?, grid)?;
            if f.components() != 3 {
                return Err(CliError::Usage(format!("forcing file {} must have 3 components", path.display())));
            }
            f
        }
    };
    let scaled = if spec.scale == 1.0 { base } else { base.scaled(spec.scale) };
    Ok(if spec.offset == [0.0; 3] { scaled } else { scaled.add(&uniform(spec.offset, grid)) })
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: Solution,
    pub residual: f64,
    pub out_dir: PathBuf,
    pub written: Vec<PathBuf>,
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    FieldError::Io { path: path.display().to_string(), source }.into()
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Solves, then writes `u`, `v`, `w`, `p` field files and the CSV reports
/// into the output directory. Nothing is written unless the solve succeeds.
pub fn run_solve(cfg: &Config) -> CliResult<SolveOutcome> {
    let settings = Settings::from_config(cfg)?;
    let f = build_forcing(&settings.forcing, &settings.grid)?;
    let f_hat = forward(&f);
    let solution = solve(&f, &settings.solver)?;
    let u = solution.velocity();
    let res = residual(&u, &solution.p, &f_hat);
    let fields =
        [("u", inverse(&u)?), ("v", inverse(&solution.v)?), ("w", inverse(&solution.w)?), ("p", inverse(&solution.p)?)];
    let norm_report = norms(&u, Some(&solution.p), &settings.exponents)?;
    let energy = energy_balance(&u, &f_hat)?;
    let spectrum = spectrum_decay(&u);

    let dir = &settings.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = Vec::new();
    for (name, field) in &fields {
        let path = dir.join(format!("{name}.field"));
        field_io::write(&path, field)?;
        written.push(path);
    }
    for (name, text) in [
        ("norms.csv", norm_report.to_csv()),
        ("energy.csv", energy.to_csv()),
        ("history.csv", history_csv(&solution.update_history)),
        ("spectrum.csv", spectrum.to_csv()),
    ] {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
    }
    Ok(SolveOutcome { solution, residual: res, out_dir: dir.clone(), written })
}

/// Default bound on the relative PDE residual accepted by `verify`.
pub const VERIFY_RESIDUAL: f64 = 1e-8;
/// Bound on the relative spectral divergence accepted by `verify`.
pub const VERIFY_DIVERGENCE: f64 = 1e-10;

/// Checks user-supplied velocity (and optionally pressure) files against the
/// configured forcing. Without a pressure file the pressure is recovered
/// from the velocity.
#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub verdict: Verdict,
    pub norms: NormReport,
}

pub fn run_verify(cfg: &Config, u_path: &Path, p_path: Option<&Path>, threshold: f64) -> CliResult<VerifyOutcome> {
    let settings = Settings::from_config(cfg)?;
    let grid = &settings.grid;
    let u_field = field_io::decode_on(&field_io::read(u_path)?, grid)?;
    if u_field.components() != 3 {
        return Err(CliError::Usage(format!("{} must hold a 3-component velocity", u_path.display())));
    }
    let f_hat = forward(&build_forcing(&settings.forcing, grid)?);
    let u = forward(&u_field);
    let p = match p_path {
        Some(path) => {
            let p = field_io::decode_on(&field_io::read(path)?, grid)?;
            if p.components() != 1 {
                return Err(CliError::Usage(format!("{} must hold a scalar pressure", path.display())));
            }
            forward(&p)
        }
        None => recover_pressure(&u, &f_hat).unwrap_or_else(|_| SpectralField::zeros(grid.clone(), 1)),
    };
    let inequality = energy_inequality_check(&u, &f_hat)?;
    let norm_report = norms(&u, Some(&p), &settings.exponents)?;
    let slack = INEQUALITY_TOL * inequality.lhs.abs().max(inequality.rhs.abs());
    let verdict = Verdict {
        checks: vec![
            Check::at_most("divergence", spectral_divergence(&u), VERIFY_DIVERGENCE),
            Check::at_most("pde_residual", residual(&u, &p, &f_hat), threshold),
            Check::at_most("energy_inequality", inequality.lhs - inequality.rhs, slack),
        ],
    };
    Ok(VerifyOutcome { verdict, norms: norm_report })
}

pub fn run_probe(names: &[String], resolution: usize, params: &Params) -> CliResult<Vec<MultiplierReport>> {
    if names.is_empty() {
        return Err(CliError::Usage("probe needs at least one symbol name".into()));
    }
    if resolution < 2 {
        return Err(CliError::Usage("probe resolution must be at least 2".into()));
    }
    let symbols = names
        .iter()
        .map(|n| n.parse::<ProbeSymbol>().map_err(|_| CliError::Usage(format!("unknown symbol '{n}'"))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(symbols.into_iter().map(|s| marcinkiewicz_probe(s, params, resolution)).collect())
}

/// Norm report of a velocity file (grid taken from its header) and an
/// optional pressure file on the same grid.
pub fn run_norms(u_path: &Path, p_path: Option<&Path>, exponents: &NormExponents) -> CliResult<String> {
    let u_field = field_io::decode(&field_io::read(u_path)?)?;
    if u_field.components() != 3 {
        return Err(CliError::Usage(format!("{} must hold a 3-component velocity", u_path.display())));
    }
    let p = p_path
        .map(|path| -> CliResult<SpectralField> {
            Ok(forward(&field_io::decode_on(&field_io::read(path)?, u_field.grid())?))
        })
        .transpose()?;
    Ok(norms(&forward(&u_field), p.as_ref(), exponents)?.to_csv())
}
