//! Dealiased evaluation of the convective term `u . grad u`.
//!
//! Products are formed pointwise in physical space and truncated with the
//! two-thirds rule in all four directions: every mode with `|n_j| > N_j / 3`
//! or `|k| > M / 3` is zeroed.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{forward_component, inverse_component, SpectralField, FLOOR};
use crate::multipliers::spectral_divergence;

/// Relative spectral divergence accepted by [`divergence_form`].
pub const SOLENOIDAL_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Two-thirds truncation in place.
pub fn dealias(spec: &mut SpectralField) {
    let grid = spec.grid().clone();
    let [l1, l2, l3, lk] = grid.dealias_limits();
    let keep: Vec<bool> = (0..grid.len())
        .map(|o| {
            let m = grid.mode(o);
            let [a, b, c] = m.index.n;
            a.abs() <= l1 && b.abs() <= l2 && c.abs() <= l3 && m.index.k.abs() <= lk
        })
        .collect();
    for c in 0..spec.components() {
        for (v, k) in spec.component_mut(c).iter_mut().zip(&keep) {
            if !k {
                *v = Complex64::default();
            }
        }
    }
}

pub fn dealiased(spec: &SpectralField) -> SpectralField {
    let mut out = spec.clone();
    dealias(&mut out);
    out
}

fn derivative_samples(spec: &SpectralField, c: usize, axis: usize) -> Vec<f64> {
    let grid = spec.grid();
    let coeffs: Vec<Complex64> =
        spec.component(c).par_iter().enumerate().map(|(o, v)| v * I * grid.mode(o).xi[axis]).collect();
    inverse_component(grid, &coeffs)
}

fn samples(spec: &SpectralField) -> Vec<Vec<f64>> {
    (0..spec.components()).map(|c| inverse_component(spec.grid(), spec.component(c))).collect()
}

/// Bilinear convective term `(u . grad) v`, dealiased.
pub fn convective_pair(u: &SpectralField, v: &SpectralField) -> SpectralField {
    assert_eq!(u.components(), 3);
    assert_eq!(v.components(), 3);
    assert!(u.grid() == v.grid(), "fields live on different grids");
    let grid = u.grid().clone();
    let u_phys = samples(u);
    let mut out = Vec::with_capacity(3);
    for i in 0..3 {
        let mut acc = vec![0.0; grid.len()];
        for (j, uj) in u_phys.iter().enumerate() {
            let dv = derivative_samples(v, i, j);
            acc.par_iter_mut().zip(uj.par_iter().zip(dv.par_iter())).for_each(|(a, (x, y))| *a += x * y);
        }
        out.push(forward_component(&grid, &acc));
    }
    let mut out = SpectralField::new(grid, out).expect("three components");
    dealias(&mut out);
    out
}

/// `u . grad u`, dealiased. The solver's nonlinearity.
pub fn convective(u: &SpectralField) -> SpectralField {
    convective_pair(u, u)
}

/// Dealiased entries `F[w_i w_j]` of the outer product, indexed `3 i + j`.
pub fn outer_product(w: &SpectralField) -> Vec<SpectralField> {
    assert_eq!(w.components(), 3);
    let grid = w.grid().clone();
    let phys = samples(w);
    let mut entries: Vec<Option<SpectralField>> = vec![None; 9];
    for i in 0..3 {
        for j in i..3 {
            let prod: Vec<f64> = phys[i].par_iter().zip(phys[j].par_iter()).map(|(a, b)| a * b).collect();
            let mut f = SpectralField::new(grid.clone(), vec![forward_component(&grid, &prod)]).expect("scalar");
            dealias(&mut f);
            entries[3 * j + i] = Some(f.clone());
            entries[3 * i + j] = Some(f);
        }
    }
    entries.into_iter().map(|e| e.expect("filled")).collect()
}

/// `Div (w (x) w)`, equal to `w . grad w` for solenoidal `w`.
pub fn divergence_form(w: &SpectralField) -> Result<SpectralField> {
    let divergence = spectral_divergence(w);
    if divergence > SOLENOIDAL_TOL {
        return Err(Error::NotSolenoidal { divergence });
    }
    let grid = w.grid().clone();
    let outer = outer_product(w);
    let data = (0..3)
        .map(|i| {
            (0..grid.len())
                .into_par_iter()
                .map(|o| {
                    let m = grid.mode(o);
                    (0..3).map(|j| I * m.xi[j] * outer[3 * i + j].component(0)[o]).sum()
                })
                .collect()
        })
        .collect();
    Ok(SpectralField::new(grid, data).expect("three components"))
}

/// `|<u . grad u, u>| / (||u|| ||u . grad u|| + floor)`: how far the discrete
/// nonlinearity is from being energy neutral.
pub fn energy_neutrality_defect(u: &SpectralField) -> f64 {
    let c = convective(u);
    c.inner(u).re.abs() / (u.norm() * c.norm() + FLOOR)
}
