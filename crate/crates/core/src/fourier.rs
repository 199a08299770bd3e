//! Space-time discrete Fourier analysis.
//!
//! `forward` carries the whole normalization `1 / (N1 N2 N3 M)`, so the mean
//! mode of a field equals its space-time average and `inverse` is a plain
//! exponential sum. Multipliers therefore act on coefficients without any
//! extra factors. Nyquist rows are zeroed by `forward`: the transform is an
//! exact isometry on the Nyquist-free subspace, which is where every field of
//! the solver lives.

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::domain::{Grid, Mode};
use crate::error::{Error, Result};

/// Imaginary residue tolerated by [`inverse`], relative to the field magnitude.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Guard against 0/0 in relative quantities.
pub const FLOOR: f64 = 1e-300;

pub(crate) struct FftPlans {
    dims: [usize; 4],
    forward: [Arc<dyn Fft<f64>>; 4],
    backward: [Arc<dyn Fft<f64>>; 4],
}

impl FftPlans {
    pub(crate) fn new(n_space: [usize; 3], n_time: usize) -> Self {
        let dims = [n_space[0], n_space[1], n_space[2], n_time];
        let mut planner = FftPlanner::new();
        Self {
            dims,
            forward: dims.map(|n| planner.plan_fft(n, FftDirection::Forward)),
            backward: dims.map(|n| planner.plan_fft(n, FftDirection::Inverse)),
        }
    }

    /// Unnormalized 4-D transform in place.
    pub(crate) fn transform(&self, data: &mut [Complex64], direction: FftDirection) {
        let plans = match direction {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.backward,
        };
        let mut stride = 1;
        for (&n, plan) in self.dims.iter().zip(plans.iter()) {
            transform_axis(data, n, stride, plan.as_ref());
            stride *= n;
        }
    }
}

fn transform_axis(data: &mut [Complex64], n: usize, stride: usize, fft: &dyn Fft<f64>) {
    const BATCH: usize = 64;
    if stride == 1 {
        data.par_chunks_mut(n * BATCH).for_each(|c| fft.process(c));
        return;
    }
    let block_len = n * stride;
    let blocks = data.len() / block_len;
    if blocks >= 4 * rayon::current_num_threads() {
        data.par_chunks_mut(block_len).for_each(|block| {
            let mut scratch = vec![Complex64::default(); block_len];
            for i in 0..stride {
                for j in 0..n {
                    scratch[i * n + j] = block[j * stride + i];
                }
            }
            fft.process(&mut scratch);
            for j in 0..n {
                for i in 0..stride {
                    block[j * stride + i] = scratch[i * n + j];
                }
            }
        });
    } else {
        let mut scratch = vec![Complex64::default(); block_len];
        for block in data.chunks_mut(block_len) {
            scratch.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = block[j * stride + i];
                }
            });
            scratch.par_chunks_mut(n * BATCH).for_each(|c| fft.process(c));
            block.par_chunks_mut(stride).enumerate().for_each(|(j, row)| {
                for (i, r) in row.iter_mut().enumerate() {
                    *r = scratch[i * n + j];
                }
            });
        }
    }
}

/// Real samples of a scalar (1 component) or vector (3 components) field,
/// one block per component in the grid's canonical node order.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    grid: Arc<Grid>,
    data: Vec<Vec<f64>>,
}

impl PhysicalField {
    pub fn new(grid: Arc<Grid>, data: Vec<Vec<f64>>) -> Result<Self> {
        check_components(data.len())?;
        if data.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidArgument(format!("each component needs {} samples", grid.len())));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: Arc<Grid>, components: usize) -> Self {
        let len = grid.len();
        Self { grid, data: vec![vec![0.0; len]; components] }
    }

    /// Samples `f(x, t, out)` at every node; `out` has one slot per component.
    pub fn from_fn<F>(grid: Arc<Grid>, components: usize, f: F) -> Self
    where
        F: Fn([f64; 3], f64, &mut [f64]) + Sync,
    {
        let len = grid.len();
        let samples: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|o| {
                let (x, t) = grid.node(o);
                let mut out = vec![0.0; components];
                f(x, t, &mut out);
                out
            })
            .collect();
        let mut data = vec![vec![0.0; len]; components];
        for (o, s) in samples.into_iter().enumerate() {
            for c in 0..components {
                data[c][o] = s[c];
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.data.len()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.data[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c]
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Root-mean-square over nodes and components.
    pub fn rms(&self) -> f64 {
        let s: f64 = self.data.iter().flatten().map(|v| v * v).sum();
        (s / self.grid.len() as f64).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let data = self.data.iter().map(|c| c.iter().map(|v| v * factor).collect()).collect();
        Self { grid: self.grid.clone(), data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_same(&self.grid, &other.grid, self.components(), other.components());
        let data =
            self.data.iter().zip(&other.data).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        Self { grid: self.grid.clone(), data }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.sub(&other.scaled(-1.0))
    }

    /// Grid quadrature of `u . v` under the measure `(1/T) int_0^T int_box`.
    pub fn integral_dot(&self, other: &Self) -> f64 {
        assert_same(&self.grid, &other.grid, self.components(), other.components());
        let s: f64 =
            self.data.iter().zip(&other.data).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()).sum();
        s * self.grid.cell_weight()
    }
}

/// Complex Fourier coefficients in FFT order, one block per component.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    data: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn new(grid: Arc<Grid>, data: Vec<Vec<Complex64>>) -> Result<Self> {
        check_components(data.len())?;
        if data.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidArgument(format!("each component needs {} coefficients", grid.len())));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: Arc<Grid>, components: usize) -> Self {
        let len = grid.len();
        Self { grid, data: vec![vec![Complex64::default(); len]; components] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.data.len()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.data[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c]
    }

    pub fn get(&self, f: crate::domain::FreqIndex, c: usize) -> Complex64 {
        self.grid.offset_of(f).map_or(Complex64::default(), |o| self.data[c][o])
    }

    pub fn set(&mut self, f: crate::domain::FreqIndex, c: usize, value: Complex64) {
        let o = self.grid.offset_of(f).unwrap_or_else(|| panic!("{f:?} outside the lattice"));
        self.data[c][o] = value;
    }

    /// Single-component view of component `c`.
    pub fn extract(&self, c: usize) -> Self {
        Self { grid: self.grid.clone(), data: vec![self.data[c].clone()] }
    }

    pub fn from_components(parts: Vec<SpectralField>) -> Result<Self> {
        let grid = parts.first().ok_or_else(|| Error::InvalidArgument("no components".into()))?.grid.clone();
        let mut data = Vec::with_capacity(parts.len());
        for p in parts {
            if *p.grid != *grid {
                return Err(Error::GridMismatch);
            }
            data.extend(p.data);
        }
        Self::new(grid, data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Sum of `|c|^2` over modes and components, i.e. the mean of `|u|^2` over
    /// the grid by Parseval.
    pub fn energy(&self) -> f64 {
        self.data.iter().flatten().map(|v| v.norm_sqr()).sum()
    }

    /// Discrete space-time RMS norm (square root of [`Self::energy`]).
    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// `sum_modes sum_c a conj(b)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_same(&self.grid, &other.grid, self.components(), other.components());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>())
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let data = self.data.iter().map(|c| c.iter().map(|v| v * factor).collect()).collect();
        Self { grid: self.grid.clone(), data }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_same(&self.grid, &other.grid, self.components(), other.components());
        let data =
            self.data.iter().zip(&other.data).map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()).collect();
        Self { grid: self.grid.clone(), data }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// `||self - other|| / max(||other||, floor)`.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        self.sub(other).norm() / other.norm().max(FLOOR)
    }

    /// Multiplies every component by the scalar symbol `m(mode)`.
    pub fn apply_symbol(&self, m: impl Fn(&Mode) -> Complex64 + Sync) -> Self {
        let grid = &self.grid;
        let symbol: Vec<Complex64> = (0..grid.len()).into_par_iter().map(|o| m(&grid.mode(o))).collect();
        let data = self.data.iter().map(|c| c.iter().zip(&symbol).map(|(v, s)| v * s).collect()).collect();
        Self { grid: self.grid.clone(), data }
    }

    /// Zeroes every mode on a Nyquist row.
    pub fn zero_nyquist(&mut self) {
        let grid = self.grid.clone();
        for c in &mut self.data {
            for (o, v) in c.iter_mut().enumerate() {
                if grid.mode(o).nyquist {
                    *v = Complex64::default();
                }
            }
        }
    }

    /// Largest `|c(-n,-k) - conj(c(n,k))|` over non-Nyquist modes, relative to
    /// the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.data {
            for (o, v) in c.iter().enumerate() {
                if self.grid.mode(o).nyquist {
                    continue;
                }
                let w = c[self.grid.conjugate_offset(o)];
                worst = worst.max((w - v.conj()).norm());
            }
        }
        worst / self.max_abs().max(FLOOR)
    }

    /// Largest magnitude found on Nyquist rows.
    pub fn nyquist_max(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.data {
            for (o, v) in c.iter().enumerate() {
                if self.grid.mode(o).nyquist {
                    worst = worst.max(v.norm());
                }
            }
        }
        worst
    }

    /// Coefficient magnitude of the `(0,0)` mode, Euclidean over components.
    pub fn mean_mode(&self) -> f64 {
        self.data.iter().map(|c| c[0].norm_sqr()).sum::<f64>().sqrt()
    }

    /// Replaces every coefficient pair by its Hermitian part
    /// `(c(xi, k) + conj c(-xi, -k)) / 2`: the nearest spectrum of a real field.
    /// The result is exactly symmetric in floating point.
    pub fn symmetrize(&mut self) {
        let grid = self.grid.clone();
        for c in &mut self.data {
            let old = c.clone();
            c.par_iter_mut().enumerate().for_each(|(o, v)| {
                *v = if grid.mode(o).nyquist {
                    Complex64::default()
                } else {
                    (old[o] + old[grid.conjugate_offset(o)].conj()) * 0.5
                };
            });
        }
    }

    /// Magnitude of the largest off-plane coefficient: content at `k != 0` for
    /// `steady == true`, at `k == 0` otherwise.
    pub fn leakage(&self, steady: bool) -> f64 {
        let plane = self.grid.space_len();
        self.data
            .iter()
            .map(|c| {
                let range = if steady { plane..c.len() } else { 0..plane };
                c[range].iter().fold(0.0_f64, |m, v| m.max(v.norm()))
            })
            .fold(0.0, f64::max)
    }
}

fn check_components(c: usize) -> Result<()> {
    if c == 1 || c == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("fields have 1 or 3 components, got {c}")))
    }
}

fn assert_same(a: &Grid, b: &Grid, ca: usize, cb: usize) {
    assert!(a == b, "fields live on different grids");
    assert_eq!(ca, cb, "component count mismatch");
}

pub(crate) fn forward_component(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.plans.transform(&mut buf, FftDirection::Forward);
    let norm = 1.0 / grid.len() as f64;
    buf.par_iter_mut().enumerate().for_each(|(o, v)| {
        *v = if grid.mode(o).nyquist { Complex64::default() } else { *v * norm };
    });
    buf
}

/// Inverse transform of one component; returns the complex samples.
pub(crate) fn inverse_component_complex(grid: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    grid.plans.transform(&mut buf, FftDirection::Inverse);
    buf
}

/// Inverse transform keeping only real parts; for internal paths whose inputs
/// are Hermitian by construction.
pub(crate) fn inverse_component(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    inverse_component_complex(grid, coeffs).into_iter().map(|v| v.re).collect()
}

/// Forward transform. The result is made exactly Hermitian, so fields whose
/// content is pure round-off still invert to real samples.
pub fn forward(field: &PhysicalField) -> SpectralField {
    let grid = field.grid.clone();
    let data = field.data.iter().map(|c| forward_component(&grid, c)).collect();
    let mut out = SpectralField { grid, data };
    out.symmetrize();
    out
}

/// Exponential sum back to real samples. Fails with [`Error::NonHermitian`]
/// when the imaginary residue exceeds [`HERMITIAN_TOL`] of the field magnitude.
pub fn inverse(spec: &SpectralField) -> Result<PhysicalField> {
    let grid = spec.grid.clone();
    let mut data = Vec::with_capacity(spec.components());
    for c in &spec.data {
        let samples = inverse_component_complex(&grid, c);
        let (re_max, im_max) =
            samples.iter().fold((0.0_f64, 0.0_f64), |(r, i), v| (r.max(v.re.abs()), i.max(v.im.abs())));
        let residue = im_max / re_max.max(im_max).max(FLOOR);
        if im_max > 0.0 && residue > HERMITIAN_TOL {
            return Err(Error::NonHermitian { residue });
        }
        data.push(samples.into_iter().map(|v| v.re).collect());
    }
    Ok(PhysicalField { grid, data })
}

fn keep_range(spec: &SpectralField, keep: Range<usize>) -> SpectralField {
    let data = spec
        .data
        .iter()
        .map(|c| c.iter().enumerate().map(|(o, v)| if keep.contains(&o) { *v } else { Complex64::default() }).collect())
        .collect();
    SpectralField { grid: spec.grid.clone(), data }
}

/// Time average over one period: keeps the `k = 0` plane.
pub fn apply_projection_p(spec: &SpectralField) -> SpectralField {
    keep_range(spec, 0..spec.grid.space_len())
}

/// Purely oscillatory part: removes the `k = 0` plane.
pub fn apply_projection_pperp(spec: &SpectralField) -> SpectralField {
    let plane = spec.grid.space_len();
    let mut out = spec.clone();
    for c in &mut out.data {
        c[..plane].fill(Complex64::default());
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::domain::{FreqIndex, Params};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Random real field without Nyquist content, built by symmetrizing random
    /// coefficients.
    pub(crate) fn random_field(grid: &Arc<Grid>, components: usize, seed: u64) -> PhysicalField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        for _ in 0..components {
            let raw: Vec<Complex64> =
                (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let sym: Vec<Complex64> = (0..grid.len())
                .map(|o| {
                    if grid.mode(o).nyquist {
                        Complex64::default()
                    } else {
                        0.5 * (raw[o] + raw[grid.conjugate_offset(o)].conj())
                    }
                })
                .collect();
            data.push(inverse_component(grid, &sym));
        }
        PhysicalField::new(grid.clone(), data).unwrap()
    }

    fn grid(n: usize, m: usize) -> Arc<Grid> {
        Grid::cube(n, m, Params::default()).unwrap()
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = grid(8, 8);
        let u = PhysicalField::from_fn(g.clone(), 1, |_, _, o| o[0] = 2.5);
        let s = forward(&u);
        assert!((s.component(0)[0] - Complex64::new(2.5, 0.0)).norm() < 1e-14);
        let rest = s.component(0)[1..].iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        assert!(rest < 1e-14);
    }

    #[test]
    fn cosine_splits_into_two_halves() {
        let g = grid(8, 8);
        let u = PhysicalField::from_fn(g.clone(), 1, |x, _, o| o[0] = x[0].cos());
        let s = forward(&u);
        for m in g.modes() {
            let v = s.component(0)[m.offset];
            let expected = if m.index.k == 0 && m.index.n[1] == 0 && m.index.n[2] == 0 && m.index.n[0].abs() == 1 {
                0.5
            } else {
                0.0
            };
            assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-14, "{:?}", m.index);
        }
    }

    #[test]
    fn white_noise_transform_is_hermitian() {
        let g = grid(8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = vec![(0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()];
        let s = forward(&PhysicalField::new(g, data).unwrap());
        assert!(s.hermitian_defect() <= 1e-13);
        assert_eq!(s.nyquist_max(), 0.0);
    }

    #[test]
    fn round_trip_and_zero() {
        let g = grid(8, 8);
        let u = random_field(&g, 3, 11);
        let back = inverse(&forward(&u)).unwrap();
        let err = back.sub(&u).rms() / u.rms();
        assert!(err <= 1e-12, "round trip {err}");
        let zero = inverse(&SpectralField::zeros(g.clone(), 1)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn broken_symmetry_is_rejected() {
        let g = grid(8, 8);
        let mut s = SpectralField::zeros(g, 1);
        s.set(FreqIndex::new([1, 0, 0], 0), 0, Complex64::new(1.0, 0.0));
        assert!(matches!(inverse(&s), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn parseval_and_linearity() {
        let g = grid(8, 8);
        let u = random_field(&g, 1, 5);
        let v = random_field(&g, 1, 6);
        let su = forward(&u);
        let mean_sq = u.component(0).iter().map(|x| x * x).sum::<f64>() / g.len() as f64;
        assert!((su.energy() - mean_sq).abs() / mean_sq <= 1e-12);

        let combo = u.scaled(0.3).add(&v.scaled(-1.7));
        let lhs = forward(&combo);
        let rhs = su.scaled(0.3).add(&forward(&v).scaled(-1.7));
        assert!(lhs.relative_distance(&rhs) <= 1e-13);
    }

    #[test]
    fn projections_are_complementary() {
        let g = grid(8, 8);
        let s = forward(&random_field(&g, 3, 9));
        let p = apply_projection_p(&s);
        let q = apply_projection_pperp(&s);
        assert_eq!(apply_projection_p(&p).component(1), p.component(1));
        assert_eq!(apply_projection_pperp(&q).component(2), q.component(2));
        assert_eq!(apply_projection_pperp(&p).max_abs(), 0.0);
        assert_eq!(apply_projection_p(&q).max_abs(), 0.0);
        let sum = p.add(&q);
        for c in 0..3 {
            assert_eq!(sum.component(c), s.component(c));
        }
    }

    #[test]
    fn projection_of_special_fields() {
        let g = grid(8, 8);
        let steady = forward(&PhysicalField::from_fn(g.clone(), 1, |x, _, o| o[0] = x[1].sin()));
        assert_eq!(apply_projection_p(&steady).component(0), steady.component(0));
        assert_eq!(apply_projection_pperp(&steady).max_abs(), 0.0);
        let osc = forward(&PhysicalField::from_fn(g, 1, |x, t, o| o[0] = x[0].cos() * t.sin()));
        assert!(apply_projection_p(&osc).max_abs() < 1e-15);
    }

    #[test]
    fn projected_parts_are_orthogonal_in_physical_space() {
        let g = grid(8, 8);
        let u = forward(&random_field(&g, 3, 1));
        let v = forward(&random_field(&g, 3, 2));
        let a = inverse(&apply_projection_p(&u)).unwrap();
        let b = inverse(&apply_projection_pperp(&v)).unwrap();
        let ip = a.integral_dot(&b);
        let scale = a.integral_dot(&a).sqrt() * b.integral_dot(&b).sqrt();
        assert!(ip.abs() / scale <= 1e-13, "{}", ip.abs() / scale);
    }

    #[test]
    fn non_cubic_grid_round_trip() {
        let g = Grid::new([1.0, 2.0, 3.0], [4, 6, 8], 6, Params::new(0.5, 1.0).unwrap()).unwrap();
        let u = PhysicalField::from_fn(g.clone(), 1, |x, t, o| {
            o[0] = (2.0 * PI * x[0]).sin() * (2.0 * PI * x[2] / 3.0).cos() + (2.0 * PI * t).cos()
        });
        let back = inverse(&forward(&u)).unwrap();
        assert!(back.sub(&u).max_abs() < 1e-13);
    }
}
