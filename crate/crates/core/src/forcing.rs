//! Forcing fields: manufactured solutions, seeded random smooth forcing and a
//! few fixed presets.
//!
//! Manufactured velocities come from a vector potential, `u* = curl A`, so they
//! are divergence free without any projection. The forcing is assembled from
//! the spectral curl of the sampled potential, which makes the discrete pair
//! `(u*, p*)` an exact fixed point of the discretized system.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::fourier::{forward, inverse, inverse_component, PhysicalField, SpectralField};
use crate::multipliers::{apply_oseen, helmholtz};
use crate::nonlinear::convective;

/// Tolerated mismatch between an analytic field and its periodic shift.
pub const PERIODICITY_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// An analytic velocity-pressure pair on the box `[0, L)^3 x [0, T)`.
pub trait AnalyticSolution: Sync {
    /// Vector potential `A` with `u = curl A`.
    fn potential(&self, x: [f64; 3], t: f64, box_len: [f64; 3], period: f64) -> [f64; 3];
    /// Exact `curl A`.
    fn velocity(&self, x: [f64; 3], t: f64, box_len: [f64; 3], period: f64) -> [f64; 3];
    fn pressure(&self, x: [f64; 3], t: f64, box_len: [f64; 3], period: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    Zero,
    /// Single-harmonic trigonometric pair; exactly representable on any grid.
    Trig,
    /// Entire-function pair with super-exponentially decaying spectrum.
    Analytic,
    /// Time-independent trigonometric pair.
    Steady,
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "zero",
            Self::Trig => "trig",
            Self::Analytic => "analytic",
            Self::Steady => "steady",
        })
    }
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "trig" | "manufactured" => Ok(Self::Trig),
            "analytic" => Ok(Self::Analytic),
            "steady" => Ok(Self::Steady),
            _ => Err(Error::InvalidArgument(format!("unknown manufactured preset '{s}'"))),
        }
    }
}

/// A named manufactured pair scaled by `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub kind: PresetKind,
    pub amplitude: f64,
}

impl Preset {
    pub fn new(kind: PresetKind, amplitude: f64) -> Self {
        Self { kind, amplitude }
    }
}

/// Scaled angles `theta_j = 2 pi x_j / L_j`, `tau = 2 pi t / T` and the chain-rule
/// factors `a_j = 2 pi / L_j`.
fn angles(x: [f64; 3], t: f64, box_len: [f64; 3], period: f64) -> ([f64; 3], f64, [f64; 3]) {
    let a = box_len.map(|l| 2.0 * PI / l);
    ([a[0] * x[0], a[1] * x[1], a[2] * x[2]], 2.0 * PI * t / period, a)
}

impl AnalyticSolution for Preset {
    fn potential(&self, x: [f64; 3], t: f64, box_len: [f64; 3], period: f64) -> [f64; 3] {
        let (th, tau, _) = angles(x, t, box_len, period);
        let e = self.amplitude;
        match self.kind {
            PresetKind::Zero => [0.0; 3],
            PresetKind::Trig => [0.0, 0.0, e * th[0].sin() * th[1].sin() * tau.cos()],
            PresetKind::Steady => [0.0, 0.0, e * th[0].sin() * th[1].sin()],
            PresetKind::Analytic => {
                let psi = e * (th[0].cos() + 0.5 * tau.sin()).exp() * th[1].sin();
                let phi = 0.5 * e * th[2].sin().exp() * th[1].cos() * tau.cos();
                [phi, 0.0, psi]
            }
        }
    }

    fn velocity(&self, x: [f64; 3], t: f64, box_len: [f64; 3], period: f64) -> [f64; 3] {
        let (th, tau, a) = angles(x, t, box_len, period);
        let e = self.amplitude;
        match self.kind {
            PresetKind::Zero => [0.0; 3],
            PresetKind::Trig | PresetKind::Steady => {
                let c = if self.kind == PresetKind::Trig { tau.cos() } else { 1.0 };
                // curl (0, 0, psi) = (d2 psi, -d1 psi, 0)
                [e * a[1] * th[0].sin() * th[1].cos() * c, -e * a[0] * th[0].cos() * th[1].sin() * c, 0.0]
            }
            PresetKind::Analytic => {
                let big = (th[0].cos() + 0.5 * tau.sin()).exp();
                let d1_psi = -e * a[0] * th[0].sin() * big * th[1].sin();
                let d2_psi = e * a[1] * big * th[1].cos();
                let small = th[2].sin().exp();
                let d2_phi = -0.5 * e * a[1] * small * th[1].sin() * tau.cos();
                let d3_phi = 0.5 * e * a[2] * th[2].cos() * small * th[1].cos() * tau.cos();
                // curl (phi, 0, psi) = (d2 psi, d3 phi - d1 psi, -d2 phi)
                [d2_psi, d3_phi - d1_psi, -d2_phi]
            }
        }
    }

    fn pressure(&self, x: [f64; 3], t: f64, box_len: [f64; 3], period: f64) -> f64 {
        let (th, tau, _) = angles(x, t, box_len, period);
        let e = self.amplitude;
        match self.kind {
            PresetKind::Zero => 0.0,
            PresetKind::Trig => e * th[0].cos() * tau.sin(),
            PresetKind::Steady => e * th[0].cos() * th[1].cos(),
            PresetKind::Analytic => e * th[0].sin() * th[1].cos() * tau.cos().exp(),
        }
    }
}

/// Output of [`manufactured`].
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub forcing: PhysicalField,
    /// Analytic `u*` sampled at the nodes.
    pub velocity: PhysicalField,
    /// Analytic `p*` sampled at the nodes.
    pub pressure: PhysicalField,
    /// Spectral curl of the sampled potential: the discrete truth.
    pub discrete_velocity: SpectralField,
}

fn check_periodic(solution: &dyn AnalyticSolution, grid: &Grid) -> Result<()> {
    let l = grid.box_len();
    let period = grid.period();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    let mut compare = |a: &[f64], b: &[f64]| {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs() / (1.0 + x.abs().max(y.abs())));
        }
    };
    for _ in 0..16 {
        let x = [rng.gen_range(0.0..l[0]), rng.gen_range(0.0..l[1]), rng.gen_range(0.0..l[2])];
        let t = rng.gen_range(0.0..period);
        let base_u = solution.velocity(x, t, l, period);
        let base_a = solution.potential(x, t, l, period);
        let base_p = solution.pressure(x, t, l, period);
        let mut shifts: Vec<([f64; 3], f64)> = (0..3)
            .map(|j| {
                let mut y = x;
                y[j] += l[j];
                (y, t)
            })
            .collect();
        shifts.push((x, t + period));
        for (y, s) in shifts {
            compare(&base_u, &solution.velocity(y, s, l, period));
            compare(&base_a, &solution.potential(y, s, l, period));
            compare(&[base_p], &[solution.pressure(y, s, l, period)]);
        }
    }
    if worst > PERIODICITY_TOL {
        return Err(Error::NotPeriodic { mismatch: worst });
    }
    Ok(())
}

/// Spectral curl of a vector field.
pub fn spectral_curl(a: &SpectralField) -> SpectralField {
    assert_eq!(a.components(), 3);
    let grid = a.grid().clone();
    let data = (0..3)
        .map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            grid.modes()
                .map(|m| {
                    let o = m.offset;
                    I * (m.xi[j] * a.component(k)[o] - m.xi[k] * a.component(j)[o])
                })
                .collect()
        })
        .collect();
    SpectralField::new(grid, data).expect("three components")
}

/// Spectral gradient of a scalar field.
pub fn spectral_gradient(p: &SpectralField) -> SpectralField {
    assert_eq!(p.components(), 1);
    let grid = p.grid().clone();
    let data = (0..3).map(|j| grid.modes().map(|m| I * m.xi[j] * p.component(0)[m.offset]).collect()).collect();
    SpectralField::new(grid, data).expect("three components")
}

/// Forcing `f = d_t u* - Lap u* - lambda d_1 u* + grad p* + u* . grad u*` with every
/// term evaluated spectrally.
pub fn manufactured(solution: &dyn AnalyticSolution, grid: &Arc<Grid>) -> Result<Manufactured> {
    check_periodic(solution, grid)?;
    let l = grid.box_len();
    let period = grid.period();
    let potential =
        PhysicalField::from_fn(grid.clone(), 3, |x, t, o| o.copy_from_slice(&solution.potential(x, t, l, period)));
    let velocity =
        PhysicalField::from_fn(grid.clone(), 3, |x, t, o| o.copy_from_slice(&solution.velocity(x, t, l, period)));
    let pressure = PhysicalField::from_fn(grid.clone(), 1, |x, t, o| o[0] = solution.pressure(x, t, l, period));

    let u_hat = spectral_curl(&forward(&potential));
    let p_hat = forward(&pressure);
    let f_hat = apply_oseen(&u_hat).add(&spectral_gradient(&p_hat)).add(&convective(&u_hat));
    Ok(Manufactured { forcing: inverse(&f_hat)?, velocity, pressure, discrete_velocity: u_hat })
}

/// Seeded, solenoidal, real random forcing supported on shells `<= cutoff_shell`
/// (excluding the `(0,0)` mode), scaled so that `amplitude` multiplies a fixed
/// unit-RMS field exactly.
pub fn random_smooth(seed: u64, amplitude: f64, cutoff_shell: f64, grid: &Arc<Grid>) -> Result<PhysicalField> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("amplitude must be positive, got {amplitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Vec<Complex64>> = (0..3)
        .map(|_| {
            grid.modes()
                .map(|m| {
                    let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if m.nyquist || m.index.is_zero() || m.index.shell() > cutoff_shell {
                        Complex64::default()
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let symmetric = hermitian_part(grid, raw);
    let projected = helmholtz(&SpectralField::new(grid.clone(), symmetric)?);
    let unit = inverse(&projected)?;
    let rms = unit.rms();
    if rms == 0.0 {
        return Ok(unit);
    }
    Ok(unit.scaled(1.0 / rms).scaled(amplitude))
}

fn hermitian_part(grid: &Grid, raw: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    raw.iter().map(|c| (0..grid.len()).map(|o| 0.5 * (c[o] + c[grid.conjugate_offset(o)].conj())).collect()).collect()
}

/// Seeded real field with independent uniform coefficients on every
/// non-Nyquist mode: white noise in the resolvable band.
pub fn random_field(seed: u64, components: usize, grid: &Arc<Grid>) -> Result<PhysicalField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Vec<Complex64>> = (0..components)
        .map(|_| {
            grid.modes()
                .map(|m| {
                    let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if m.nyquist {
                        Complex64::default()
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let data = hermitian_part(grid, raw).iter().map(|c| inverse_component(grid, c)).collect();
    PhysicalField::new(grid.clone(), data)
}

/// Spatially uniform, constant forcing. Its `(0,0)` mode is nonzero and
/// solenoidal, so the periodic problem has no solution for it.
pub fn uniform(value: [f64; 3], grid: &Arc<Grid>) -> PhysicalField {
    PhysicalField::from_fn(grid.clone(), 3, |_, _, o| o.copy_from_slice(&value))
}
