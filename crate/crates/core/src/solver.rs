//! Picard fixed-point iteration for the time-periodic problem.
//!
//! The pressure is eliminated with the Helmholtz projection, and the fixed-point
//! map is
//!
//! ```text
//! u  <-  A^{-1} ( P_H f - P_H [u . grad u] ),   A = d_t - Lap - lambda d_1,
//! ```
//!
//! where `A^{-1}` divides by `|xi|^2 + i (omega - lambda xi_1)` on every mode but
//! `(0,0)`. On the `k = 0` plane this is the steady Oseen inverse, elsewhere the
//! time-periodic one; a single diagonal pass covers both. The pressure is
//! recovered afterwards from the gradient part of `f - u . grad u`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forcing::spectral_gradient;
use crate::fourier::{apply_projection_p, apply_projection_pperp, forward, PhysicalField, SpectralField, FLOOR};
use crate::multipliers::{apply_oseen, check_mean, helmholtz, oseen_symbol, MEAN_TOL};
use crate::nonlinear::convective;

/// Relative transverse residue tolerated in the pressure source.
pub const GRADIENT_TOL: f64 = 1e-9;

/// Update norms above this are treated as blow-up.
const BLOWUP: f64 = 1e150;

#[derive(Debug, Clone, Default)]
pub enum InitialGuess {
    #[default]
    Zero,
    Provided(SpectralField),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative update tolerance in the discrete space-time 2-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Update ratio above which a step counts towards divergence.
    pub divergence_guard: f64,
    /// Consecutive steps above `divergence_guard` before giving up.
    pub guard_steps: usize,
    /// Relative size of the `(0,0)` mode of `P_H f` accepted as zero.
    pub tol_mean: f64,
    pub initial_guess: InitialGuess,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            divergence_guard: 10.0,
            guard_steps: 3,
            tol_mean: MEAN_TOL,
            initial_guess: InitialGuess::Zero,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.divergence_guard.is_nan() || self.divergence_guard <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "divergence guard must exceed 1, got {}",
                self.divergence_guard
            )));
        }
        Ok(())
    }
}

/// A converged solution split into steady and oscillatory velocity.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Steady part, supported on `k = 0`.
    pub v: SpectralField,
    /// Oscillatory part, supported on `k != 0`.
    pub w: SpectralField,
    pub p: SpectralField,
    pub iterations: usize,
    pub update_history: Vec<f64>,
    /// Largest of the last three successive update ratios.
    pub contraction_estimate: f64,
}

impl Solution {
    /// Full velocity `u = v + w`.
    pub fn velocity(&self) -> SpectralField {
        self.v.add(&self.w)
    }

    /// Successive update ratios `d_{n} / d_{n-1}`.
    pub fn update_ratios(&self) -> Vec<f64> {
        ratios(&self.update_history)
    }
}

fn ratios(history: &[f64]) -> Vec<f64> {
    history.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
}

/// `(P u, P_perp u)`.
pub fn split(u: &SpectralField) -> (SpectralField, SpectralField) {
    (apply_projection_p(u), apply_projection_pperp(u))
}

/// Checks that `P_H f` has no `(0,0)` content.
pub fn check_forcing(f_hat: &SpectralField, tol_mean: f64) -> Result<()> {
    check_mean(&helmholtz(f_hat), tol_mean)
}

/// One application of the fixed-point map.
pub fn picard_step(u: &SpectralField, f_hat: &SpectralField) -> Result<SpectralField> {
    check_forcing(f_hat, MEAN_TOL)?;
    Ok(picard_map(u, &helmholtz(f_hat)))
}

/// The fixed-point map with a precomputed `P_H f`.
fn picard_map(u: &SpectralField, projected_forcing: &SpectralField) -> SpectralField {
    let rhs = projected_forcing.sub(&helmholtz(&convective(u)));
    let lambda = u.grid().lambda();
    rhs.apply_symbol(|m| if m.index.is_zero() { Complex64::default() } else { oseen_symbol(m, lambda).inv() })
}

fn is_finite(s: &SpectralField) -> bool {
    (0..s.components()).all(|c| s.component(c).iter().all(|v| v.re.is_finite() && v.im.is_finite()))
}

pub fn solve(f: &PhysicalField, config: &SolverConfig) -> Result<Solution> {
    solve_spectral(&forward(f), config)
}

pub fn solve_spectral(f_hat: &SpectralField, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    if f_hat.components() != 3 {
        return Err(Error::ComponentMismatch { expected: 3, got: f_hat.components() });
    }
    if !is_finite(f_hat) {
        return Err(Error::NonFinite);
    }
    let projected = helmholtz(f_hat);
    check_mean(&projected, config.tol_mean)?;

    let mut u = match &config.initial_guess {
        InitialGuess::Zero => SpectralField::zeros(f_hat.grid().clone(), 3),
        InitialGuess::Provided(g) => {
            if g.grid() != f_hat.grid() {
                return Err(Error::GridMismatch);
            }
            g.clone()
        }
    };
    let mut history = Vec::new();
    let mut streak = 0;
    let mut converged = false;
    for it in 1..=config.max_iter {
        let mut next = picard_map(&u, &projected);
        next.symmetrize();
        let diff = next.sub(&u).norm();
        let size = next.norm();
        let update = diff / size.max(FLOOR);
        if !is_finite(&next) || !update.is_finite() || size > BLOWUP {
            return Err(Error::Diverging { iterations: it, ratio: f64::INFINITY, history });
        }
        history.push(update);
        u = next;
        if let [.., prev, last] = history[..] {
            let ratio = if prev > 0.0 { last / prev } else { 0.0 };
            if ratio > config.divergence_guard {
                streak += 1;
                if streak >= config.guard_steps {
                    return Err(Error::Diverging { iterations: it, ratio, history });
                }
            } else {
                streak = 0;
            }
        }
        if update < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: history.len(),
            last_update: history.last().copied().unwrap_or(f64::NAN),
            history,
        });
    }
    let contraction_estimate = ratios(&history).iter().rev().take(3).fold(0.0_f64, |m, r| m.max(*r));
    let mut p = recover_pressure(&u, f_hat)?;
    p.symmetrize();
    let (v, w) = split(&u);
    Ok(Solution { v, w, p, iterations: history.len(), update_history: history, contraction_estimate })
}

/// Pressure from the gradient part of `f - u . grad u`, with zero spatial mean
/// at every time frequency.
pub fn recover_pressure(u: &SpectralField, f_hat: &SpectralField) -> Result<SpectralField> {
    let source = f_hat.sub(&convective(u));
    let g = source.sub(&helmholtz(&source));
    let residue = helmholtz(&g).norm() / g.norm().max(FLOOR);
    if residue > GRADIENT_TOL {
        return Err(Error::NotAGradient { residue });
    }
    let grid = g.grid().clone();
    let p = grid
        .modes()
        .map(|m| {
            let xi_sq = m.xi_sq();
            if xi_sq == 0.0 {
                return Complex64::default();
            }
            let o = m.offset;
            let dot = g.component(0)[o] * m.xi[0] + g.component(1)[o] * m.xi[1] + g.component(2)[o] * m.xi[2];
            Complex64::new(0.0, -1.0) * dot / xi_sq
        })
        .collect();
    SpectralField::new(grid, vec![p])
}

/// Relative residual of `d_t u - Lap u - lambda d_1 u + grad p + u . grad u - f`
/// in the discrete space-time 2-norm.
pub fn residual(u: &SpectralField, p: &SpectralField, f_hat: &SpectralField) -> f64 {
    let linear = apply_oseen(u);
    let r = linear.add(&spectral_gradient(p)).add(&convective(u)).sub(f_hat);
    r.norm() / f_hat.norm().max(linear.norm()).max(FLOOR)
}

pub fn pde_residual(sol: &Solution, f_hat: &SpectralField) -> f64 {
    residual(&sol.velocity(), &sol.p, f_hat)
}
