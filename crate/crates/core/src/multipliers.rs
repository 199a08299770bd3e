//! Fourier multipliers: Leray-Helmholtz projection, the time-periodic Oseen
//! operator and its inverse, the half time derivative, the regularity
//! multiplier `M_l`, and a sampling probe for Marcinkiewicz-type bounds.
//!
//! All lattice multipliers are diagonal in `(xi, k)` and satisfy
//! `m(-xi, -k) = conj(m(xi, k))`, so they map real fields to real fields.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::domain::{Grid, Mode, Params};
use crate::error::{Error, Result};
use crate::fourier::{SpectralField, FLOOR};

/// Default relative tolerance on the `(0,0)` coefficient accepted by
/// [`oseen_tp_inverse`].
pub const MEAN_TOL: f64 = 1e-12;

/// Relative finite-difference step of [`marcinkiewicz_probe`].
pub const PROBE_STEP: f64 = 1e-4;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which square root of `i omega` the half derivative uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SqrtBranch {
    #[default]
    Principal,
    /// The other root, `-sqrt(i omega)`. Only useful as a negative control.
    Negated,
}

/// Symbol of `d_t - Lap - lambda d_1`: `|xi|^2 + i (omega - lambda xi_1)`.
pub fn oseen_symbol(mode: &Mode, lambda: f64) -> Complex64 {
    Complex64::new(mode.xi_sq(), mode.omega - lambda * mode.xi[0])
}

/// Principal `(i omega)^(1/2)`; zero at `omega = 0`.
pub fn half_derivative_symbol(omega: f64, branch: SqrtBranch) -> Complex64 {
    if omega == 0.0 {
        return Complex64::default();
    }
    let root = Complex64::new(0.0, omega).sqrt();
    match branch {
        SqrtBranch::Principal => root,
        SqrtBranch::Negated => -root,
    }
}

/// `M_l(xi, k) = (1 - delta) (i omega)^(1/2) (i xi_l) / (|xi|^2 + i omega)`.
pub fn regularity_symbol(mode: &Mode, axis: usize) -> Complex64 {
    if mode.index.k == 0 {
        return Complex64::default();
    }
    let denom = Complex64::new(mode.xi_sq(), mode.omega);
    half_derivative_symbol(mode.omega, SqrtBranch::Principal) * I * mode.xi[axis] / denom
}

/// Leray-Helmholtz projection `I - xi xi^T / |xi|^2`, identity on `xi = 0`.
///
/// Panics if `spec` is not a vector field.
pub fn helmholtz(spec: &SpectralField) -> SpectralField {
    assert_eq!(spec.components(), 3, "helmholtz needs a vector field");
    let grid = spec.grid().clone();
    let (a, b, c) = (spec.component(0), spec.component(1), spec.component(2));
    let projected: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|o| {
            let m = grid.mode(o);
            let u = [a[o], b[o], c[o]];
            let xi_sq = m.xi_sq();
            if xi_sq == 0.0 {
                return u;
            }
            let div = (u[0] * m.xi[0] + u[1] * m.xi[1] + u[2] * m.xi[2]) / xi_sq;
            [u[0] - div * m.xi[0], u[1] - div * m.xi[1], u[2] - div * m.xi[2]]
        })
        .collect();
    let data = (0..3).map(|j| projected.iter().map(|u| u[j]).collect()).collect();
    SpectralField::new(grid, data).expect("three components")
}

/// Relative spectral divergence `||xi . u|| / || |xi| u ||`.
pub fn spectral_divergence(spec: &SpectralField) -> f64 {
    assert_eq!(spec.components(), 3);
    let grid = spec.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for m in grid.modes() {
        let o = m.offset;
        let d = spec.component(0)[o] * m.xi[0] + spec.component(1)[o] * m.xi[1] + spec.component(2)[o] * m.xi[2];
        num += d.norm_sqr();
        den += m.xi_sq() * (0..3).map(|c| spec.component(c)[o].norm_sqr()).sum::<f64>();
    }
    num.sqrt() / den.sqrt().max(FLOOR)
}

/// Applies `d_t - Lap - lambda d_1` mode-wise.
pub fn apply_oseen(spec: &SpectralField) -> SpectralField {
    let lambda = spec.grid().lambda();
    spec.apply_symbol(|m| oseen_symbol(m, lambda))
}

/// Inverse of the time-periodic Oseen operator on all modes except `(0,0)`,
/// which is set to zero.
///
/// The operator annihilates constants, so input with a `(0,0)` coefficient
/// above `MEAN_TOL` of its largest coefficient is rejected.
pub fn oseen_tp_inverse(spec: &SpectralField) -> Result<SpectralField> {
    oseen_tp_inverse_with_tol(spec, MEAN_TOL)
}

pub fn oseen_tp_inverse_with_tol(spec: &SpectralField, tol_mean: f64) -> Result<SpectralField> {
    check_mean(spec, tol_mean)?;
    let lambda = spec.grid().lambda();
    Ok(spec.apply_symbol(|m| if m.index.is_zero() { Complex64::default() } else { oseen_symbol(m, lambda).inv() }))
}

pub(crate) fn check_mean(spec: &SpectralField, tol_mean: f64) -> Result<()> {
    let magnitude = spec.mean_mode();
    let tolerance = tol_mean * spec.max_abs();
    if magnitude > tolerance && magnitude > FLOOR {
        return Err(Error::MeanModeNonzero { magnitude, tolerance });
    }
    Ok(())
}

/// `d_t^(1/2)`: multiplies by the principal root of `i omega`.
pub fn half_time_derivative(spec: &SpectralField) -> SpectralField {
    half_time_derivative_branch(spec, SqrtBranch::Principal)
}

pub fn half_time_derivative_branch(spec: &SpectralField, branch: SqrtBranch) -> SpectralField {
    spec.apply_symbol(|m| half_derivative_symbol(m.omega, branch))
}

/// Spectral `d_t`.
pub fn time_derivative(spec: &SpectralField) -> SpectralField {
    spec.apply_symbol(|m| I * m.omega)
}

/// Spectral `d_j` along spatial axis `axis` (0-based).
pub fn space_derivative(spec: &SpectralField, axis: usize) -> SpectralField {
    spec.apply_symbol(|m| I * m.xi[axis])
}

/// Applies `M_l` for spatial axis `axis` (0-based).
pub fn regularity_multiplier(spec: &SpectralField, axis: usize) -> SpectralField {
    assert!(axis < 3, "axis must be 0, 1 or 2");
    spec.apply_symbol(|m| regularity_symbol(m, axis))
}

/// Supremum of `|M_l|` over the lattice of `grid`.
pub fn regularity_multiplier_sup(grid: &Grid, axis: usize) -> f64 {
    grid.modes().map(|m| regularity_symbol(&m, axis).norm()).fold(0.0, f64::max)
}

/// Continuous symbols understood by [`marcinkiewicz_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeSymbol {
    /// `m_l` with the smooth temporal cut-off, for spatial axis `axis` (0-based).
    RegularityCutoff {
        axis: usize,
    },
    /// `|xi|^2 / (|xi|^2 + i (eta - lambda xi_1))`.
    OseenScaled,
    /// Entry `(i, j)` of the Helmholtz symbol (0-based).
    HelmholtzEntry {
        i: usize,
        j: usize,
    },
    Constant,
}

impl fmt::Display for ProbeSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RegularityCutoff { axis } => write!(f, "m_{}", axis + 1),
            Self::OseenScaled => f.write_str("oseen"),
            Self::HelmholtzEntry { i, j } => write!(f, "helmholtz_{}{}", i + 1, j + 1),
            Self::Constant => f.write_str("constant"),
        }
    }
}

impl FromStr for ProbeSymbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown symbol '{s}'"));
        let axis = |c: char| match c {
            '1'..='3' => Ok(c as usize - '1' as usize),
            _ => Err(bad()),
        };
        match s {
            "m_l" => Ok(Self::RegularityCutoff { axis: 0 }),
            "oseen" => Ok(Self::OseenScaled),
            "helmholtz" => Ok(Self::HelmholtzEntry { i: 0, j: 0 }),
            "constant" => Ok(Self::Constant),
            _ => {
                if let Some(rest) = s.strip_prefix("m_") {
                    let mut cs = rest.chars();
                    match (cs.next(), cs.next()) {
                        (Some(c), None) => Ok(Self::RegularityCutoff { axis: axis(c)? }),
                        _ => Err(bad()),
                    }
                } else if let Some(rest) = s.strip_prefix("helmholtz_") {
                    let mut cs = rest.chars();
                    match (cs.next(), cs.next(), cs.next()) {
                        (Some(a), Some(b), None) => Ok(Self::HelmholtzEntry { i: axis(a)?, j: axis(b)? }),
                        _ => Err(bad()),
                    }
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// C^2 bump: 1 on `|s| <= 1/2`, 0 on `|s| >= 1`, quintic smoothstep between.
pub fn cutoff(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let x = (a - 0.5) / 0.5;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

impl ProbeSymbol {
    /// Evaluates the continuous symbol at `(xi, eta)`.
    pub fn eval(&self, xi: [f64; 3], eta: f64, params: &Params) -> Complex64 {
        let xi_sq = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        match *self {
            Self::RegularityCutoff { axis } => {
                let damp = 1.0 - cutoff(eta / params.base_frequency());
                if damp == 0.0 {
                    return Complex64::default();
                }
                let root = Complex64::new(0.0, eta).sqrt();
                damp * root * xi[axis] / Complex64::new(xi_sq, eta)
            }
            Self::OseenScaled => {
                let denom = Complex64::new(xi_sq, eta - params.lambda * xi[0]);
                if denom.norm() == 0.0 {
                    Complex64::default()
                } else {
                    xi_sq / denom
                }
            }
            Self::HelmholtzEntry { i, j } => {
                let delta = if i == j { 1.0 } else { 0.0 };
                Complex64::new(delta - xi[i] * xi[j] / xi_sq.max(FLOOR), 0.0)
            }
            Self::Constant => Complex64::new(1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierReport {
    pub name: String,
    pub max_abs: f64,
    pub marcinkiewicz_sup: f64,
    pub sample_count: usize,
}

impl MultiplierReport {
    pub const CSV_HEADER: &'static str = "name,max_abs,marcinkiewicz_sup,sample_count";

    pub fn csv_row(&self) -> String {
        format!("{},{:e},{:e},{}", self.name, self.max_abs, self.marcinkiewicz_sup, self.sample_count)
    }
}

/// Sampled check of `sup_eps |xi^eps eta^eps4 d^eps m|` over `eps in {0,1}^4`.
///
/// Each coordinate takes `resolution` log-spaced magnitudes in `[1e-3, 1e3]`
/// with both signs; mixed derivatives use tensor central differences with a
/// relative step of [`PROBE_STEP`]. This is a numerical spot check: fourth-order
/// mixed differences at this step carry round-off of order `1e-1`.
pub fn marcinkiewicz_probe(symbol: ProbeSymbol, params: &Params, resolution: usize) -> MultiplierReport {
    let resolution = resolution.max(2);
    let axis_values: Vec<f64> = (0..resolution)
        .flat_map(|i| {
            let mag = 10f64.powf(-3.0 + 6.0 * i as f64 / (resolution - 1) as f64);
            [mag, -mag]
        })
        .collect();
    let per_axis = axis_values.len();
    let total = per_axis.pow(4);
    let (max_abs, sup) = (0..total)
        .into_par_iter()
        .map(|idx| {
            let p = [
                axis_values[idx % per_axis],
                axis_values[(idx / per_axis) % per_axis],
                axis_values[(idx / per_axis.pow(2)) % per_axis],
                axis_values[idx / per_axis.pow(3)],
            ];
            let eval = |q: [f64; 4]| symbol.eval([q[0], q[1], q[2]], q[3], params);
            let value = eval(p).norm();
            let mut best = value;
            for mask in 1u32..16 {
                best = best.max(weighted_mixed_difference(&eval, p, mask));
            }
            (value, best)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    MultiplierReport { name: symbol.to_string(), max_abs, marcinkiewicz_sup: sup, sample_count: total }
}

/// `|prod_{j in mask} p_j * d^mask f(p)|` by tensor central differences.
fn weighted_mixed_difference(f: &impl Fn([f64; 4]) -> Complex64, p: [f64; 4], mask: u32) -> f64 {
    let axes: Vec<usize> = (0..4).filter(|j| mask & (1 << j) != 0).collect();
    let h: Vec<f64> = axes.iter().map(|&j| PROBE_STEP * p[j].abs()).collect();
    let mut acc = Complex64::default();
    for signs in 0u32..(1 << axes.len()) {
        let mut q = p;
        let mut weight = 1.0;
        for (a, &j) in axes.iter().enumerate() {
            if signs & (1 << a) != 0 {
                q[j] += h[a];
            } else {
                q[j] -= h[a];
                weight = -weight;
            }
        }
        acc += weight * f(q);
    }
    let scale: f64 = axes.iter().zip(&h).map(|(&j, hj)| p[j] / (2.0 * hj)).product();
    (acc * scale).norm()
}
