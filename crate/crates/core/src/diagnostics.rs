//! Discrete function-space norms and solution diagnostics.
//!
//! Norms use the Lebesgue measure `dx dt` on `box x (0, T)` and the rectangle
//! rule, which is spectrally accurate for smooth periodic fields. Energy
//! quantities use the normalized measure `(1/T) int_0^T int_box`, so dissipation
//! and power input balance exactly for a solution.
//!
//! The Oseen-type exponents `2q/(2-q)` and `4/(4-q)` come from whole-space decay
//! of the Oseen fundamental solution. Every `L^s` norm is finite on the box, so
//! they are reported verbatim but carry less meaning here.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::domain::{Grid, Mode};
use crate::error::{Error, Result};
use crate::fourier::{inverse_component, SpectralField, FLOOR};
use crate::multipliers::{half_derivative_symbol, helmholtz, oseen_symbol, regularity_symbol, SqrtBranch};
use crate::nonlinear::{convective, outer_product};
use crate::solver::{split, Solution};

/// Relative slack in [`energy_inequality_check`].
pub const INEQUALITY_TOL: f64 = 1e-9;

/// Shell maxima below this fraction of the peak are treated as round-off when
/// judging monotone decay.
pub const SPECTRUM_FLOOR: f64 = 1e-13;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Exponents requested from [`norms`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormExponents {
    /// Plain space-time `L^q` norms of `u`; `f64::INFINITY` gives the max norm.
    pub lebesgue: Vec<f64>,
    /// `q` of the anisotropic `W^{2,1,q}` norm of `w` and of the Oseen norm of `v`, in `(1, 2)`.
    pub q: f64,
    /// `q` of the pressure norm, in `(1, 3)`.
    pub q_pres: f64,
    /// Second exponent `r` in `(1, inf)`.
    pub r: f64,
}

impl Default for NormExponents {
    fn default() -> Self {
        Self { lebesgue: vec![2.0, 4.0, f64::INFINITY], q: 1.5, q_pres: 1.5, r: 2.0 }
    }
}

impl NormExponents {
    pub fn validate(&self) -> Result<()> {
        for &q in &self.lebesgue {
            if q.is_nan() || q < 1.0 {
                return Err(Error::InvalidExponent { norm: "L^q", value: q, range: "[1, inf]" });
            }
        }
        open_range(self.q, 1.0, 2.0, "X_oseen / W^{2,1,q}", "(1, 2)")?;
        open_range(self.q_pres, 1.0, 3.0, "X_pres", "(1, 3)")?;
        open_range(self.r, 1.0, f64::INFINITY, "r", "(1, inf)")
    }
}

fn open_range(value: f64, lo: f64, hi: f64, norm: &'static str, range: &'static str) -> Result<()> {
    if value > lo && value < hi {
        Ok(())
    } else {
        Err(Error::InvalidExponent { norm, value, range })
    }
}

/// The four weighted terms of the steady Oseen norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OseenNorm {
    /// `|lambda|^{1/2} ||v||_{2q/(2-q)}`.
    pub velocity: f64,
    /// `|lambda|^{1/4} ||grad v||_{4/(4-q)}`.
    pub gradient: f64,
    /// `|lambda| ||d_1 v||_q`.
    pub drift: f64,
    /// `||grad^2 v||_q`.
    pub hessian: f64,
    /// `||grad^2 v||_r`, the extra term of the `(q, r)` variant.
    pub hessian_r: f64,
}

impl OseenNorm {
    pub fn total(&self) -> f64 {
        self.velocity + self.gradient + self.drift + self.hessian
    }

    pub fn total_qr(&self) -> f64 {
        self.total() + self.hessian_r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub exponents: NormExponents,
    /// `(q, ||u||_q)` in request order.
    pub lq: Vec<(f64, f64)>,
    /// `||w||_{2,1,q}` of the oscillatory part.
    pub w21q: f64,
    /// Oseen norm of the steady part.
    pub xoseen: OseenNorm,
    /// Pressure norm, when a pressure was supplied.
    pub xpres: Option<f64>,
}

impl NormReport {
    pub const CSV_HEADER: &'static str = "norm,q,r,value";

    pub fn to_csv(&self) -> String {
        let e = &self.exponents;
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (q, v) in &self.lq {
            let _ = writeln!(out, "lq,{q},,{v:e}");
        }
        let o = &self.xoseen;
        let _ = writeln!(out, "w21q,{},,{:e}", e.q, self.w21q);
        for (name, v) in [
            ("xoseen_velocity", o.velocity),
            ("xoseen_gradient", o.gradient),
            ("xoseen_drift", o.drift),
            ("xoseen_hessian", o.hessian),
            ("xoseen_q", o.total()),
        ] {
            let _ = writeln!(out, "{name},{},,{v:e}", e.q);
        }
        let _ = writeln!(out, "xoseen_qr,{},{},{:e}", e.q, e.r, o.total_qr());
        if let Some(p) = self.xpres {
            let _ = writeln!(out, "xpres,{},{},{p:e}", e.q_pres, e.r);
        }
        out
    }
}

/// `(||x||_q^q * weight sum)^(1/q)` of nonnegative samples, scaled by the
/// maximum so large exponents cannot overflow.
fn lebesgue(values: &[f64], q: f64, weight: f64) -> f64 {
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(*v));
    if peak == 0.0 || q.is_infinite() {
        return peak;
    }
    let s: f64 = values.par_iter().map(|v| (v / peak).powf(q)).sum();
    peak * (s * weight).powf(1.0 / q)
}

/// Pointwise Euclidean magnitude across several sample arrays.
fn magnitude(parts: &[Vec<f64>]) -> Vec<f64> {
    let n = parts.first().map_or(0, Vec::len);
    (0..n).into_par_iter().map(|i| parts.iter().map(|p| p[i] * p[i]).sum::<f64>().sqrt()).collect()
}

/// Samples of `d_x^alpha d_t^beta` applied to component `c`.
fn derivative(spec: &SpectralField, c: usize, alpha: [u32; 3], beta: u32) -> Vec<f64> {
    let grid = spec.grid();
    let symbol = |m: &Mode| {
        let mut s = (I * m.omega).powu(beta);
        for (j, a) in alpha.iter().enumerate() {
            s *= (I * m.xi[j]).powu(*a);
        }
        s
    };
    let coeffs: Vec<Complex64> =
        spec.component(c).par_iter().enumerate().map(|(o, v)| v * symbol(&grid.mode(o))).collect();
    inverse_component(grid, &coeffs)
}

/// All component samples of `d^alpha` applied to a field.
fn derivative_all(spec: &SpectralField, alpha: [u32; 3], beta: u32) -> Vec<Vec<f64>> {
    (0..spec.components()).map(|c| derivative(spec, c, alpha, beta)).collect()
}

fn unit(j: usize) -> [u32; 3] {
    let mut a = [0; 3];
    a[j] = 1;
    a
}

fn pair(i: usize, j: usize) -> [u32; 3] {
    let mut a = unit(i);
    a[j] += 1;
    a
}

/// Samples of every entry of the spatial gradient.
fn gradient_parts(spec: &SpectralField) -> Vec<Vec<f64>> {
    (0..3).flat_map(|j| derivative_all(spec, unit(j), 0)).collect()
}

/// Samples of every entry of the spatial Hessian (ordered pairs).
fn hessian_parts(spec: &SpectralField) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            out.extend(derivative_all(spec, pair(i, j), 0));
        }
    }
    out
}

fn spacetime_weight(grid: &Grid) -> f64 {
    grid.volume() * grid.period() / grid.len() as f64
}

fn space_weight(grid: &Grid) -> f64 {
    grid.volume() / grid.space_len() as f64
}

fn first_slice(parts: Vec<Vec<f64>>, len: usize) -> Vec<Vec<f64>> {
    parts
        .into_iter()
        .map(|mut p| {
            p.truncate(len);
            p
        })
        .collect()
}

/// `||w||_{2,1,q}`: all spatial derivatives up to order two plus the time
/// derivatives of order at most one.
pub fn w21q_norm(w: &SpectralField, q: f64) -> f64 {
    let grid = w.grid();
    let weight = spacetime_weight(grid);
    let mut spatial = vec![[0, 0, 0]];
    spatial.extend((0..3).map(unit));
    for i in 0..3 {
        for j in i..3 {
            spatial.push(pair(i, j));
        }
    }
    let mut sum: f64 = spatial.iter().map(|a| lebesgue(&magnitude(&derivative_all(w, *a, 0)), q, weight).powf(q)).sum();
    sum += (0..2).map(|b| lebesgue(&magnitude(&derivative_all(w, [0; 3], b)), q, weight).powf(q)).sum::<f64>();
    sum.powf(1.0 / q)
}

/// Oseen norm of a steady field (read from the first time slice).
pub fn oseen_norm(v: &SpectralField, q: f64, r: f64) -> OseenNorm {
    let grid = v.grid();
    let lambda = grid.lambda().abs();
    let space = grid.space_len();
    let weight = space_weight(grid);
    let values = magnitude(&first_slice(derivative_all(v, [0; 3], 0), space));
    let grad = magnitude(&first_slice(gradient_parts(v), space));
    let drift = magnitude(&first_slice(derivative_all(v, unit(0), 0), space));
    let hess = magnitude(&first_slice(hessian_parts(v), space));
    OseenNorm {
        velocity: lambda.sqrt() * lebesgue(&values, 2.0 * q / (2.0 - q), weight),
        gradient: lambda.powf(0.25) * lebesgue(&grad, 4.0 / (4.0 - q), weight),
        drift: lambda * lebesgue(&drift, q, weight),
        hessian: lebesgue(&hess, q, weight),
        hessian_r: lebesgue(&hess, r, weight),
    }
}

/// Pressure norm: per-slice spatial norms integrated in time, plus the
/// space-time `L^r` norm of the gradient.
pub fn pressure_norm(p: &SpectralField, q: f64, r: f64) -> f64 {
    let grid = p.grid();
    let space = grid.space_len();
    let sweight = space_weight(grid);
    let dt = grid.period() / grid.n_time() as f64;
    let values = magnitude(&derivative_all(p, [0; 3], 0));
    let grad = magnitude(&gradient_parts(p));
    let s = 3.0 * q / (3.0 - q);
    let inner: f64 = (0..grid.n_time())
        .map(|t| {
            let slice = t * space..(t + 1) * space;
            dt * (lebesgue(&values[slice.clone()], s, sweight).powf(q) + lebesgue(&grad[slice], q, sweight).powf(q))
        })
        .sum();
    inner.powf(1.0 / q) + lebesgue(&grad, r, spacetime_weight(grid))
}

/// Space-time `L^q` norm of the pointwise magnitude.
pub fn lq_norm(spec: &SpectralField, q: f64) -> f64 {
    lebesgue(&magnitude(&derivative_all(spec, [0; 3], 0)), q, spacetime_weight(spec.grid()))
}

/// All norms of a velocity `u = v + w` and, optionally, a pressure.
pub fn norms(u: &SpectralField, p: Option<&SpectralField>, exponents: &NormExponents) -> Result<NormReport> {
    exponents.validate()?;
    if u.components() != 3 {
        return Err(Error::ComponentMismatch { expected: 3, got: u.components() });
    }
    if let Some(p) = p {
        if p.components() != 1 {
            return Err(Error::ComponentMismatch { expected: 1, got: p.components() });
        }
        if p.grid() != u.grid() {
            return Err(Error::GridMismatch);
        }
    }
    let (v, w) = split(u);
    let e = exponents;
    Ok(NormReport {
        exponents: e.clone(),
        lq: e.lebesgue.iter().map(|&q| (q, lq_norm(u, q))).collect(),
        w21q: w21q_norm(&w, e.q),
        xoseen: oseen_norm(&v, e.q, e.r),
        xpres: p.map(|p| pressure_norm(p, e.q_pres, e.r)),
    })
}

/// `(1/T) int int grad a : grad b` by quadrature of spectral gradients.
fn gradient_dot(a: &SpectralField, b: &SpectralField) -> f64 {
    let ga = gradient_parts(a);
    let gb = gradient_parts(b);
    let s: f64 = ga.par_iter().zip(gb.par_iter()).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum();
    s * a.grid().cell_weight()
}

fn samples_dot(a: &SpectralField, b: &SpectralField) -> f64 {
    let grid = a.grid();
    let s: f64 = (0..a.components())
        .into_par_iter()
        .map(|c| {
            let x = inverse_component(grid, a.component(c));
            let y = inverse_component(grid, b.component(c));
            x.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>()
        })
        .sum();
    s * grid.cell_weight()
}

fn check_pair(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    if a.components() != b.components() {
        return Err(Error::ComponentMismatch { expected: a.components(), got: b.components() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `(1/T) int int |grad u|^2`.
    pub dissipation: f64,
    /// `(1/T) int int f . u`.
    pub power_in: f64,
    pub relative_gap: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "dissipation,power_in,relative_gap";

    pub fn to_csv(&self) -> String {
        format!("{}\n{:e},{:e},{:e}\n", Self::CSV_HEADER, self.dissipation, self.power_in, self.relative_gap)
    }
}

/// Compares viscous dissipation with the work done by the forcing.
pub fn energy_balance(u: &SpectralField, f: &SpectralField) -> Result<EnergyReport> {
    check_pair(u, f)?;
    let dissipation = gradient_dot(u, u);
    let power_in = samples_dot(f, u);
    let scale = dissipation.max(power_in).max(FLOOR);
    Ok(EnergyReport { dissipation, power_in, relative_gap: (dissipation - power_in).abs() / scale })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossReport {
    /// `(1/T) int int grad v : grad w`.
    pub inner: f64,
    /// `|inner| / (||grad v|| ||grad w||)`.
    pub relative: f64,
    /// Largest coefficient of `v` off `k = 0` or of `w` on `k = 0`.
    pub support_violation: f64,
}

impl CrossReport {
    pub const CSV_HEADER: &'static str = "inner,relative,support_violation";

    pub fn to_csv(&self) -> String {
        format!("{}\n{:e},{:e},{:e}\n", Self::CSV_HEADER, self.inner, self.relative, self.support_violation)
    }
}

/// Gradient inner product of the steady and oscillatory parts, which vanishes
/// because their time frequencies are disjoint.
pub fn cross_orthogonality(v: &SpectralField, w: &SpectralField) -> Result<CrossReport> {
    check_pair(v, w)?;
    let inner = gradient_dot(v, w);
    let scale = (gradient_dot(v, v) * gradient_dot(w, w)).sqrt();
    Ok(CrossReport {
        inner,
        relative: inner.abs() / scale.max(FLOOR),
        support_violation: v.leakage(true).max(w.leakage(false)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityReport {
    pub const CSV_HEADER: &'static str = "lhs,rhs,holds";

    pub fn to_csv(&self) -> String {
        format!("{}\n{:e},{:e},{}\n", Self::CSV_HEADER, self.lhs, self.rhs, self.holds)
    }
}

/// `dissipation <= power input`, up to `INEQUALITY_TOL` times the larger side.
pub fn energy_inequality_check(u: &SpectralField, f: &SpectralField) -> Result<InequalityReport> {
    let e = energy_balance(u, f)?;
    let (lhs, rhs) = (e.dissipation, e.power_in);
    let slack = INEQUALITY_TOL * lhs.abs().max(rhs.abs());
    Ok(InequalityReport { lhs, rhs, holds: lhs <= rhs + slack })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellRow {
    pub shell: usize,
    pub count: usize,
    pub max: f64,
    pub mean: f64,
}

/// Coefficient magnitudes binned by the rounded index radius `sqrt(|n|^2 + k^2)`.
/// Nyquist modes are left out; they carry no information.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub rows: Vec<ShellRow>,
    pub peak: f64,
    /// Largest shell whose sphere lies entirely inside the resolved lattice.
    pub top_shell: usize,
    /// Shell maxima never increase past the peak shell, up to `top_shell`.
    pub monotone: bool,
}

impl SpectrumReport {
    pub const CSV_HEADER: &'static str = "shell,count,max,mean";

    pub fn row(&self, shell: usize) -> Option<&ShellRow> {
        self.rows.iter().find(|r| r.shell == shell)
    }

    /// Maximum on `top_shell` relative to the peak.
    pub fn top_ratio(&self) -> f64 {
        self.row(self.top_shell).map_or(0.0, |r| r.max) / self.peak.max(FLOOR)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:e},{:e}", r.shell, r.count, r.max, r.mean);
        }
        out
    }

    /// Two-column `shell,max` table for plotting.
    pub fn plot_table(&self) -> String {
        let mut out = String::from("shell,max\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:e}", r.shell, r.max);
        }
        out
    }
}

pub fn spectrum_decay(u: &SpectralField) -> SpectrumReport {
    let grid = u.grid();
    let mut rows: Vec<ShellRow> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for m in grid.modes().filter(|m| !m.nyquist) {
        let s = m.index.shell().round() as usize;
        if rows.len() <= s {
            rows.resize(s + 1, ShellRow { shell: 0, count: 0, max: 0.0, mean: 0.0 });
            sums.resize(s + 1, 0.0);
        }
        let mag = (0..u.components()).map(|c| u.component(c)[m.offset].norm_sqr()).sum::<f64>().sqrt();
        let row = &mut rows[s];
        row.count += 1;
        row.max = row.max.max(mag);
        sums[s] += mag;
    }
    for (i, r) in rows.iter_mut().enumerate() {
        r.shell = i;
        if r.count > 0 {
            r.mean = sums[i] / r.count as f64;
        }
    }
    rows.retain(|r| r.count > 0);
    let peak = rows.iter().fold(0.0_f64, |m, r| m.max(r.max));
    let top_shell = grid.n_space().iter().chain([grid.n_time()].iter()).map(|n| n / 2 - 1).min().unwrap_or(0);
    let floor = SPECTRUM_FLOOR * peak;
    let start = rows.iter().position(|r| r.max == peak).unwrap_or(0);
    let monotone =
        rows[start..].windows(2).filter(|w| w[1].shell <= top_shell).all(|w| w[1].max <= w[0].max || w[1].max <= floor);
    SpectrumReport { rows, peak, top_shell, monotone }
}

/// Relative mismatches of the identities behind the temporal regularity
/// bootstrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// `(d_t - Lap - lambda d_1) d_t^{1/2} w = d_t^{1/2} P_H P_perp (f - u . grad u)`.
    pub oscillatory_equation: f64,
    /// `d_t d_j w = M_j (d_t - Lap) d_t^{1/2} w`, worst axis.
    pub mixed_derivative: f64,
    /// `d_t^{1/2} P_perp Div(w (x) w) = sum_l M_l (d_t - Lap)(w w_l)`.
    pub nonlinear_factorization: f64,
}

impl RegularityReport {
    pub const CSV_HEADER: &'static str = "oscillatory_equation,mixed_derivative,nonlinear_factorization";

    pub fn max(&self) -> f64 {
        self.oscillatory_equation.max(self.mixed_derivative).max(self.nonlinear_factorization)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{}\n{:e},{:e},{:e}\n",
            Self::CSV_HEADER,
            self.oscillatory_equation,
            self.mixed_derivative,
            self.nonlinear_factorization
        )
    }
}

fn mismatch(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).norm() / a.norm().max(b.norm()).max(FLOOR)
}

fn heat_symbol(m: &Mode) -> Complex64 {
    Complex64::new(m.xi_sq(), m.omega)
}

pub fn regularity_bootstrap_check(sol: &Solution, f_hat: &SpectralField) -> Result<RegularityReport> {
    regularity_bootstrap_check_with_branch(sol, f_hat, SqrtBranch::Principal)
}

/// As [`regularity_bootstrap_check`], with `branch` used for the half
/// derivatives taken of the solution. `M_l` and the half derivative of the
/// data keep the principal branch, so `SqrtBranch::Negated` must expose a
/// mismatch.
pub fn regularity_bootstrap_check_with_branch(
    sol: &Solution,
    f_hat: &SpectralField,
    branch: SqrtBranch,
) -> Result<RegularityReport> {
    check_pair(&sol.w, f_hat)?;
    let w = &sol.w;
    let grid = w.grid().clone();
    let lambda = grid.lambda();
    let half = |m: &Mode| half_derivative_symbol(m.omega, branch);

    let lhs = w.apply_symbol(|m| oseen_symbol(m, lambda) * half(m));
    let source = helmholtz(&f_hat.sub(&convective(&sol.velocity())));
    let rhs = source.apply_symbol(|m| half_derivative_symbol(m.omega, SqrtBranch::Principal));
    let oscillatory_equation = mismatch(&lhs, &rhs);

    let mixed_derivative = (0..3)
        .map(|j| {
            let direct = w.apply_symbol(|m| I * m.omega * I * m.xi[j]);
            let factored = w.apply_symbol(|m| regularity_symbol(m, j) * heat_symbol(m) * half(m));
            mismatch(&direct, &factored)
        })
        .fold(0.0, f64::max);

    let outer = outer_product(w);
    let mut lhs = Vec::with_capacity(3);
    let mut rhs = Vec::with_capacity(3);
    for j in 0..3 {
        let mut a = SpectralField::zeros(grid.clone(), 1);
        let mut b = SpectralField::zeros(grid.clone(), 1);
        for l in 0..3 {
            let e = &outer[3 * j + l];
            a = a.add(&e.apply_symbol(|m| if m.index.k == 0 { Complex64::default() } else { half(m) * I * m.xi[l] }));
            b = b.add(&e.apply_symbol(|m| regularity_symbol(m, l) * heat_symbol(m)));
        }
        lhs.push(a);
        rhs.push(b);
    }
    let nonlinear_factorization =
        mismatch(&SpectralField::from_components(lhs)?, &SpectralField::from_components(rhs)?);

    Ok(RegularityReport { oscillatory_equation, mixed_derivative, nonlinear_factorization })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FreqIndex, Params};
    use crate::fourier::tests::random_field;
    use crate::fourier::{forward, PhysicalField};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(n: usize, lambda: f64) -> Arc<Grid> {
        Grid::cube(n, n, Params::new(lambda, 2.0 * PI).unwrap()).unwrap()
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = grid(8, 1.0);
        let u = SpectralField::zeros(g.clone(), 3);
        let p = SpectralField::zeros(g, 1);
        let r = norms(&u, Some(&p), &NormExponents::default()).unwrap();
        assert!(r.lq.iter().all(|(_, v)| *v == 0.0));
        assert_eq!(r.w21q, 0.0);
        assert_eq!(r.xoseen.total_qr(), 0.0);
        assert_eq!(r.xpres, Some(0.0));
    }

    #[test]
    fn norms_are_homogeneous() {
        let g = grid(8, -2.0);
        let u = helmholtz(&forward(&random_field(&g, 3, 4)));
        let p = forward(&random_field(&g, 1, 5));
        let e = NormExponents::default();
        let a = norms(&u, Some(&p), &e).unwrap();
        let b = norms(&u.scaled(2.0), Some(&p.scaled(2.0)), &e).unwrap();
        let close = |x: f64, y: f64| (y - 2.0 * x).abs() <= 1e-12 * y;
        for ((_, x), (_, y)) in a.lq.iter().zip(&b.lq) {
            assert!(close(*x, *y));
        }
        assert!(close(a.w21q, b.w21q));
        assert!(close(a.xoseen.total_qr(), b.xoseen.total_qr()));
        assert!(close(a.xpres.unwrap(), b.xpres.unwrap()));
    }

    #[test]
    fn single_mode_l2_matches_hand_value() {
        // u_1 = a cos(x_2) sin(t): ||u||_2^2 = a^2 (2 pi)^3 / 2 * 2 pi / 2
        let g = grid(8, 1.0);
        let a = 0.7;
        let u = forward(&PhysicalField::from_fn(g.clone(), 3, |x, t, o| o[0] = a * x[1].cos() * t.sin()));
        let hand = a * (2.0 * PI).powi(2) / 2.0;
        assert!((lq_norm(&u, 2.0) - hand).abs() <= 1e-13 * hand);
        let parseval = (u.energy() * g.volume() * g.period()).sqrt();
        assert!((lq_norm(&u, 2.0) - parseval).abs() <= 1e-12 * parseval);
        assert!((lq_norm(&u, f64::INFINITY) - a).abs() <= 1e-12);
    }

    #[test]
    fn oseen_norm_of_steady_shear() {
        // v = (0, 0, sin x_1): |v|, |grad v|, |d_1 v|, |grad^2 v| are all |sin| or |cos|
        let g = grid(16, 4.0);
        let v = forward(&PhysicalField::from_fn(g.clone(), 3, |x, _, o| o[2] = x[0].sin()));
        let (q, r) = (1.5, 2.0);
        let o = oseen_norm(&v, q, r);
        let area = (2.0 * PI).powi(2);
        // int_0^{2 pi} |sin|^s dx by the rectangle rule on n equispaced nodes; the
        // kink of |sin|^s at its zeros limits the 16-node rule to ~2e-3 for s < 2
        let sine = |s: f64, n: usize| {
            (0..n).map(|i| (i as f64 * 2.0 * PI / n as f64).sin().abs().powf(s)).sum::<f64>() * 2.0 * PI / n as f64
        };
        let rel = |a: f64, b: f64| (a - b).abs() / b;
        for (n, tol) in [(16, 1e-12_f64), (1 << 16, 3e-3)] {
            let norm = |s: f64| (area * sine(s, n)).powf(1.0 / s);
            assert!(rel(o.velocity, 2.0 * norm(6.0)) < 1e-12);
            assert!(rel(o.gradient, 4f64.powf(0.25) * norm(1.6)) < tol);
            assert!(rel(o.drift, 4.0 * norm(q)) < tol);
            assert!(rel(o.hessian, norm(q)) < tol);
            assert!(rel(o.hessian_r, norm(r)) < 1e-12);
        }
    }

    #[test]
    fn exponents_outside_ranges_are_rejected() {
        let g = grid(4, 1.0);
        let u = SpectralField::zeros(g, 3);
        for e in [
            NormExponents { q: 2.0, ..Default::default() },
            NormExponents { q_pres: 3.0, ..Default::default() },
            NormExponents { r: 1.0, ..Default::default() },
            NormExponents { lebesgue: vec![0.5], ..Default::default() },
        ] {
            let err = norms(&u, None, &e).unwrap_err();
            assert!(matches!(err, Error::InvalidExponent { .. }));
            assert!(err.to_string().contains("range"), "{err}");
        }
    }

    #[test]
    fn cross_orthogonality_vanishes_on_split_fields() {
        let g = grid(8, 1.0);
        let u = forward(&random_field(&g, 3, 11));
        let (v, w) = split(&u);
        let c = cross_orthogonality(&v, &w).unwrap();
        assert!(c.relative <= 1e-13, "{c:?}");
        assert_eq!(c.support_violation, 0.0);
        let z = cross_orthogonality(&v, &SpectralField::zeros(g.clone(), 3)).unwrap();
        assert_eq!(z.inner, 0.0);
        let leaky = w.add(&v.scaled(0.5));
        let c = cross_orthogonality(&v, &leaky).unwrap();
        assert!(c.relative > 1e-3 && c.support_violation > 0.0, "{c:?}");
    }

    #[test]
    fn dissipation_splits_into_parts() {
        let g = grid(8, 1.0);
        let u = forward(&random_field(&g, 3, 12));
        let (v, w) = split(&u);
        let f = SpectralField::zeros(g.clone(), 3);
        let total = energy_balance(&u, &f).unwrap().dissipation;
        let parts = energy_balance(&v, &f).unwrap().dissipation + energy_balance(&w, &f).unwrap().dissipation;
        let cross = cross_orthogonality(&v, &w).unwrap().inner;
        assert!((total - parts - 2.0 * cross).abs() <= 1e-12 * total);
        // Parseval: (1/T) int int |grad u|^2 = |box| sum |xi|^2 |u_hat|^2
        let spectral: f64 = g
            .modes()
            .map(|m| m.xi_sq() * (0..3).map(|c| u.component(c)[m.offset].norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * g.volume();
        assert!((total - spectral).abs() <= 1e-12 * total);
    }

    #[test]
    fn zero_velocity_balances_trivially() {
        let g = grid(8, 1.0);
        let u = SpectralField::zeros(g.clone(), 3);
        let f = forward(&random_field(&g, 3, 1));
        let e = energy_balance(&u, &f).unwrap();
        assert_eq!((e.dissipation, e.power_in, e.relative_gap), (0.0, 0.0, 0.0));
        let i = energy_inequality_check(&u, &f).unwrap();
        assert!(i.holds);
    }

    #[test]
    fn spectrum_of_single_mode_and_noise() {
        let g = grid(8, 1.0);
        let mut u = SpectralField::zeros(g.clone(), 3);
        u.set(FreqIndex::new([1, 0, 0], 0), 1, Complex64::new(0.5, 0.0));
        u.set(FreqIndex::new([-1, 0, 0], 0), 1, Complex64::new(0.5, 0.0));
        let s = spectrum_decay(&u);
        assert_eq!(s.peak, 0.5);
        assert!(s.rows.iter().filter(|r| r.shell > 1).all(|r| r.max == 0.0));
        assert_eq!(s.top_shell, 3);
        assert_eq!(s.top_ratio(), 0.0);
        assert!(s.monotone);
        assert_eq!(s.plot_table().lines().count(), s.rows.len() + 1);

        let noise = spectrum_decay(&forward(&random_field(&g, 3, 3)));
        let means: Vec<f64> = noise.rows.iter().skip(1).map(|r| r.mean).collect();
        let (lo, hi) = means.iter().fold((f64::MAX, 0.0_f64), |(a, b), m| (a.min(*m), b.max(*m)));
        assert!(hi / lo < 3.0, "white noise should be flat: {means:?}");
    }

    #[test]
    fn regularity_identities_on_a_solution() {
        use crate::forcing::{manufactured, Preset, PresetKind};
        use crate::solver::{solve, SolverConfig};
        let g = grid(8, 1.0);
        let m = manufactured(&Preset::new(PresetKind::Analytic, 1e-2), &g).unwrap();
        let sol = solve(&m.forcing, &SolverConfig::default()).unwrap();
        let f_hat = forward(&m.forcing);
        let r = regularity_bootstrap_check(&sol, &f_hat).unwrap();
        assert!(r.max() <= 1e-9, "{r:?}");
        let bad = regularity_bootstrap_check_with_branch(&sol, &f_hat, SqrtBranch::Negated).unwrap();
        assert!(bad.oscillatory_equation >= 1.0 && bad.mixed_derivative >= 1.0, "{bad:?}");
        assert!(bad.nonlinear_factorization >= 1e-2, "{bad:?}");

        let e = energy_balance(&sol.velocity(), &f_hat).unwrap();
        assert!(e.relative_gap <= 1e-6, "{e:?}");
        assert!(energy_inequality_check(&sol.velocity(), &f_hat).unwrap().holds);
        assert!(!energy_inequality_check(&sol.velocity().scaled(2.0), &f_hat).unwrap().holds);
    }

    #[test]
    fn zero_solution_satisfies_identities() {
        use crate::solver::{solve, SolverConfig};
        let g = grid(8, 1.0);
        let sol = solve(&PhysicalField::zeros(g.clone(), 3), &SolverConfig::default()).unwrap();
        let r = regularity_bootstrap_check(&sol, &SpectralField::zeros(g, 3)).unwrap();
        assert_eq!(r.max(), 0.0);
    }
}
