//! Discrete space-time domain: a periodic box in space times one period in time,
//! together with its dual frequency lattice.
//!
//! Spatial samples sit at `x_j = L_j * i / N_j`, temporal samples at `t = T * i / M`.
//! The dual lattice is `xi_j = 2 pi n_j / L_j` with `n_j` in `[-N_j/2, N_j/2)` and
//! `omega = 2 pi k / T` with `k` in `[-M/2, M/2)`. Viscosity is fixed to one.
//!
//! Every array in the crate uses the same linear layout: time is the slowest
//! index, then `x3`, `x2`, and `x1` varies fastest. Spectral arrays use the same
//! layout in FFT order (index `i` maps to `n = i` for `i < N/2`, else `i - N`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fourier::FftPlans;

/// Physical constants of the problem: drift speed and time period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub lambda: f64,
    pub period: f64,
}

impl Params {
    pub fn new(lambda: f64, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidGrid(format!("drift must be finite, got {lambda}")));
        }
        Ok(Self { lambda, period })
    }

    /// `lambda == 0` reduces the problem to the time-periodic Stokes-type case.
    pub fn is_drift_free(&self) -> bool {
        self.lambda == 0.0
    }

    /// Base temporal angular frequency `2 pi / T`.
    pub fn base_frequency(&self) -> f64 {
        2.0 * PI / self.period
    }
}

impl Default for Params {
    fn default() -> Self {
        Self { lambda: 1.0, period: 2.0 * PI }
    }
}

/// A lattice point of the dual group: integer spatial wave numbers and a
/// temporal harmonic index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreqIndex {
    pub n: [i64; 3],
    pub k: i64,
}

impl FreqIndex {
    pub const fn new(n: [i64; 3], k: i64) -> Self {
        Self { n, k }
    }

    pub fn conjugate(&self) -> Self {
        Self { n: [-self.n[0], -self.n[1], -self.n[2]], k: -self.k }
    }

    pub fn is_zero(&self) -> bool {
        self.n == [0, 0, 0] && self.k == 0
    }

    /// Euclidean length of `(n, k)` in index units.
    pub fn shell(&self) -> f64 {
        let [a, b, c] = self.n;
        ((a * a + b * b + c * c + self.k * self.k) as f64).sqrt()
    }
}

/// One lattice mode with its physical frequencies, as yielded by [`Grid::modes`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub offset: usize,
    pub index: FreqIndex,
    pub xi: [f64; 3],
    pub omega: f64,
    /// The mode sits on a Nyquist row in at least one direction.
    pub nyquist: bool,
}

impl Mode {
    pub fn xi_sq(&self) -> f64 {
        self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1] + self.xi[2] * self.xi[2]
    }

    pub fn is_steady(&self) -> bool {
        self.index.k == 0
    }

    pub fn is_spatially_constant(&self) -> bool {
        self.index.n == [0, 0, 0]
    }
}

pub struct Grid {
    box_len: [f64; 3],
    n_space: [usize; 3],
    n_time: usize,
    params: Params,
    wavenumbers: [Vec<f64>; 3],
    omegas: Vec<f64>,
    pub(crate) plans: FftPlans,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("box_len", &self.box_len)
            .field("n_space", &self.n_space)
            .field("n_time", &self.n_time)
            .field("params", &self.params)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.box_len == other.box_len
            && self.n_space == other.n_space
            && self.n_time == other.n_time
            && self.params == other.params
    }
}

fn check_resolution(name: &str, n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!("{name} must be even and at least 4, got {n}")));
    }
    Ok(())
}

/// Integer frequency of FFT-order index `i` on a lattice of length `n`.
pub(crate) fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT-order index of the integer frequency `f`.
pub(crate) fn wrap_index(f: i64, n: usize) -> usize {
    f.rem_euclid(n as i64) as usize
}

impl Grid {
    /// Builds a grid and precomputes its frequency lattices and FFT plans.
    pub fn new(box_len: [f64; 3], n_space: [usize; 3], n_time: usize, params: Params) -> Result<Arc<Self>> {
        for (j, &l) in box_len.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("box length L{} must be positive, got {l}", j + 1)));
            }
        }
        for (j, &n) in n_space.iter().enumerate() {
            check_resolution(&format!("N{}", j + 1), n)?;
        }
        check_resolution("M", n_time)?;
        let params = Params::new(params.lambda, params.period)?;

        let wavenumbers = std::array::from_fn(|j| {
            let scale = 2.0 * PI / box_len[j];
            (0..n_space[j]).map(|i| scale * signed_index(i, n_space[j]) as f64).collect()
        });
        let base = params.base_frequency();
        let omegas = (0..n_time).map(|i| base * signed_index(i, n_time) as f64).collect();

        Ok(Arc::new(Self {
            box_len,
            n_space,
            n_time,
            params,
            wavenumbers,
            omegas,
            plans: FftPlans::new(n_space, n_time),
        }))
    }

    /// The `2 pi` cube with equal resolution in every direction.
    pub fn cube(n: usize, m: usize, params: Params) -> Result<Arc<Self>> {
        Self::new([2.0 * PI; 3], [n; 3], m, params)
    }

    pub fn box_len(&self) -> [f64; 3] {
        self.box_len
    }

    pub fn n_space(&self) -> [usize; 3] {
        self.n_space
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn period(&self) -> f64 {
        self.params.period
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    /// Number of spatial nodes per time slice.
    pub fn space_len(&self) -> usize {
        self.n_space.iter().product()
    }

    /// Total number of space-time nodes (equivalently, lattice modes).
    pub fn len(&self) -> usize {
        self.space_len() * self.n_time
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.box_len.iter().product()
    }

    /// Integration weight of one node under `(1/T) int_0^T int_box dx dt`.
    pub fn cell_weight(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Spatial wave numbers of axis `j` in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// Temporal angular frequencies in FFT order.
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Node coordinates `(x, t)` of linear offset `offset`.
    pub fn node(&self, offset: usize) -> ([f64; 3], f64) {
        let [n1, n2, n3] = self.n_space;
        let i1 = offset % n1;
        let i2 = (offset / n1) % n2;
        let i3 = (offset / (n1 * n2)) % n3;
        let it = offset / (n1 * n2 * n3);
        let x = [
            self.box_len[0] * i1 as f64 / n1 as f64,
            self.box_len[1] * i2 as f64 / n2 as f64,
            self.box_len[2] * i3 as f64 / n3 as f64,
        ];
        (x, self.params.period * it as f64 / self.n_time as f64)
    }

    /// Linear offset of a lattice index in FFT-ordered storage.
    pub fn offset_of(&self, f: FreqIndex) -> Option<usize> {
        let [n1, n2, n3] = self.n_space;
        let inside = |v: i64, n: usize| v >= -(n as i64 / 2) && v < n as i64 / 2;
        if !(inside(f.n[0], n1) && inside(f.n[1], n2) && inside(f.n[2], n3) && inside(f.k, self.n_time)) {
            return None;
        }
        let i1 = wrap_index(f.n[0], n1);
        let i2 = wrap_index(f.n[1], n2);
        let i3 = wrap_index(f.n[2], n3);
        let it = wrap_index(f.k, self.n_time);
        Some(((it * n3 + i3) * n2 + i2) * n1 + i1)
    }

    /// Offset of the conjugate mode `(-n, -k)`, wrapping Nyquist rows onto themselves.
    pub fn conjugate_offset(&self, offset: usize) -> usize {
        let [n1, n2, n3] = self.n_space;
        let i1 = offset % n1;
        let i2 = (offset / n1) % n2;
        let i3 = (offset / (n1 * n2)) % n3;
        let it = offset / (n1 * n2 * n3);
        let c = |i: usize, n: usize| (n - i) % n;
        ((c(it, self.n_time) * n3 + c(i3, n3)) * n2 + c(i2, n2)) * n1 + c(i1, n1)
    }

    pub fn mode(&self, offset: usize) -> Mode {
        let [n1, n2, n3] = self.n_space;
        let idx = [offset % n1, (offset / n1) % n2, (offset / (n1 * n2)) % n3];
        let it = offset / (n1 * n2 * n3);
        let n = [signed_index(idx[0], n1), signed_index(idx[1], n2), signed_index(idx[2], n3)];
        let k = signed_index(it, self.n_time);
        let nyquist = (0..3).any(|j| n[j] == -(self.n_space[j] as i64) / 2) || k == -(self.n_time as i64) / 2;
        Mode {
            offset,
            index: FreqIndex { n, k },
            xi: [self.wavenumbers[0][idx[0]], self.wavenumbers[1][idx[1]], self.wavenumbers[2][idx[2]]],
            omega: self.omegas[it],
            nyquist,
        }
    }

    /// All lattice modes in storage order.
    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(move |o| self.mode(o))
    }

    /// Largest wave numbers kept by the two-thirds rule, per direction `(n1, n2, n3, k)`.
    pub fn dealias_limits(&self) -> [i64; 4] {
        [self.n_space[0] as i64 / 3, self.n_space[1] as i64 / 3, self.n_space[2] as i64 / 3, self.n_time as i64 / 3]
    }
}

/// Builds a [`Grid`]; see [`Grid::new`].
pub fn make_grid(box_len: [f64; 3], n_space: [usize; 3], n_time: usize, params: Params) -> Result<Arc<Grid>> {
    Grid::new(box_len, n_space, n_time, params)
}

/// Every lattice index exactly once: time-major, then `n3`, `n2`, `n1`, each ascending
/// from `-N/2`.
pub fn frequencies(grid: &Grid) -> Vec<FreqIndex> {
    let [n1, n2, n3] = grid.n_space.map(|n| n as i64);
    let m = grid.n_time as i64;
    let mut out = Vec::with_capacity(grid.len());
    for k in -m / 2..m / 2 {
        for c in -n3 / 2..n3 / 2 {
            for b in -n2 / 2..n2 / 2 {
                for a in -n1 / 2..n1 / 2 {
                    out.push(FreqIndex::new([a, b, c], k));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn unit_params() -> Params {
        Params::new(1.0, 2.0 * PI).unwrap()
    }

    #[test]
    fn two_pi_box_has_integer_frequencies() {
        let g = Grid::cube(8, 8, unit_params()).unwrap();
        for j in 0..3 {
            let xs: Vec<f64> = g.wavenumbers(j).to_vec();
            for (i, x) in xs.iter().enumerate() {
                assert!((x - signed_index(i, 8) as f64).abs() < 1e-14);
                assert!(*x >= -4.0 && *x < 4.0);
            }
        }
        for (i, w) in g.omegas().iter().enumerate() {
            assert!((w - signed_index(i, 8) as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_box_wavenumbers() {
        let g = Grid::new([1.0; 3], [4; 3], 4, unit_params()).unwrap();
        let mut xs = g.wavenumbers(0).to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-4.0 * PI, -2.0 * PI, 0.0, 2.0 * PI];
        for (a, b) in xs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_resolutions_and_lengths() {
        let p = unit_params();
        assert!(Grid::new([1.0; 3], [3, 8, 8], 8, p).is_err());
        assert!(Grid::new([1.0; 3], [2, 8, 8], 8, p).is_err());
        assert!(Grid::new([1.0; 3], [8, 8, 8], 5, p).is_err());
        assert!(Grid::new([1.0, 0.0, 1.0], [8, 8, 8], 8, p).is_err());
        assert!(Grid::new([1.0; 3], [6, 8, 8], 8, p).is_ok());
        assert!(Params::new(1.0, 0.0).is_err());
        assert!(Params::new(1.0, -1.0).is_err());
        assert!(Params::new(0.0, 1.0).unwrap().is_drift_free());
    }

    #[test]
    fn canonical_enumeration() {
        let g = Grid::new([1.0; 3], [4; 3], 4, unit_params()).unwrap();
        let f = frequencies(&g);
        assert_eq!(f.len(), 256);
        assert_eq!(f[0], FreqIndex::new([-2, -2, -2], -2));
        assert_eq!(f.iter().filter(|x| x.is_zero()).count(), 1);
        let set: HashSet<_> = f.iter().copied().collect();
        assert_eq!(set.len(), 256);
        // every enumerated index maps to a distinct storage offset
        let offsets: HashSet<_> = f.iter().map(|x| g.offset_of(*x).unwrap()).collect();
        assert_eq!(offsets.len(), 256);
    }

    #[test]
    fn conjugates_exist_off_nyquist() {
        let g = Grid::new([1.0, 2.0, 3.0], [4, 6, 8], 4, unit_params()).unwrap();
        for m in g.modes() {
            let c = g.conjugate_offset(m.offset);
            assert_eq!(g.conjugate_offset(c), m.offset);
            if !m.nyquist {
                assert_eq!(g.mode(c).index, m.index.conjugate());
                assert_eq!(g.offset_of(m.index.conjugate()), Some(c));
            }
        }
    }

    #[test]
    fn frequency_reconstruction_is_exact() {
        let g = Grid::new([0.7, 1.3, 5.0], [4, 6, 8], 6, unit_params()).unwrap();
        for m in g.modes() {
            for j in 0..3 {
                let recon = m.xi[j] * g.box_len()[j] / (2.0 * PI);
                assert_eq!(recon.round() as i64, m.index.n[j]);
                assert!((recon - m.index.n[j] as f64).abs() < 1e-12);
            }
            assert_eq!(g.offset_of(m.index), Some(m.offset));
        }
    }
}
