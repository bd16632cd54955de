//! Initial-data recipes.
//!
//! All random recipes draw from a ChaCha8 stream seeded with the user seed
//! and visit modes in storage order, so a given `(grid, seed)` always yields
//! the same field. One draw is made per conjugate pair; the partner at `-k`
//! receives the complex conjugate.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralVectorField};
use crate::grid::Grid3;
use crate::spectral::sobolev_norm;

/// `amplitude · (sin k0 z, cos k0 z, 0)` with `k0 = 2π / box_length`: a curl
/// eigenfield with eigenvalue `k0` (1 on the default box).
pub fn beltrami(grid: Grid3, amplitude: f64) -> SpectralVectorField {
    let mut f = SpectralVectorField::zeros(grid);
    let half = 0.5 * amplitude;
    f.set_hermitian_pair(
        [0, 0, 1],
        [
            Complex64::new(0.0, -half),
            Complex64::new(half, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    f
}

fn normal_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn transverse(k: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == 0.0 {
        return v;
    }
    let kv = (k[0] * v[0] + k[1] * v[1] + k[2] * v[2]) / k2;
    [v[0] - k[0] * kv, v[1] - k[1] * kv, v[2] - k[2] * kv]
}

/// Visits one representative of every conjugate pair of retained, nonzero modes
/// whose magnitude lies in `[k_lo, k_hi]`.
fn for_each_pair(grid: Grid3, k_lo: f64, k_hi: f64, mut visit: impl FnMut(usize, usize, f64)) {
    for idx in 1..grid.len() {
        let conj = grid.conjugate_index(idx);
        if conj < idx || !grid.is_retained(idx) {
            continue;
        }
        let kmag = grid.wavenumber_magnitude(idx);
        if kmag < k_lo || kmag > k_hi {
            continue;
        }
        visit(idx, conj, kmag);
    }
}

fn check_band(k_lo: f64, k_hi: f64) -> Result<()> {
    if !(k_lo >= 0.0 && k_hi >= k_lo) {
        return Err(EmhdError::Parameter(format!(
            "invalid wavenumber band [{k_lo}, {k_hi}]"
        )));
    }
    Ok(())
}

/// Divergence-free projection of i.i.d. unit-normal complex coefficients on
/// the shell `k_lo <= |k| <= k_hi` (retained modes only). Not normalized.
pub fn random_band(grid: Grid3, k_lo: f64, k_hi: f64, seed: u64) -> Result<SpectralVectorField> {
    check_band(k_lo, k_hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralVectorField::zeros(grid);
    for_each_pair(grid, k_lo, k_hi, |idx, conj, _| {
        let v = [normal_c(&mut rng), normal_c(&mut rng), normal_c(&mut rng)];
        let p = transverse(grid.derivative_wavevector(idx), v);
        f.set(idx, p);
        f.set(conj, [p[0].conj(), p[1].conj(), p[2].conj()]);
    });
    Ok(f)
}

/// Divergence-free field with `|F(k)| = |k|^{-slope}` exactly on every retained
/// mode in `[k_lo, k_hi]` and a random transverse direction and phase.
pub fn power_law(grid: Grid3, slope: f64, k_lo: f64, k_hi: f64, seed: u64) -> Result<SpectralVectorField> {
    check_band(k_lo, k_hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralVectorField::zeros(grid);
    for_each_pair(grid, k_lo, k_hi, |idx, conj, kmag| {
        let mut p = [Complex64::new(0.0, 0.0); 3];
        let mut norm = 0.0;
        // Re-draw in the (measure-zero) event of a near-longitudinal sample.
        while norm < 1e-8 {
            let v = [normal_c(&mut rng), normal_c(&mut rng), normal_c(&mut rng)];
            p = transverse(grid.derivative_wavevector(idx), v);
            norm = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        }
        let scale = kmag.powf(-slope) / norm;
        let p = [p[0] * scale, p[1] * scale, p[2] * scale];
        f.set(idx, p);
        f.set(conj, [p[0].conj(), p[1].conj(), p[2].conj()]);
    });
    Ok(f)
}

/// Rescales `f` so that its `Ḣ^σ` norm equals `target`.
pub fn rescale_to_norm(f: &SpectralVectorField, sigma: f64, target: f64) -> Result<SpectralVectorField> {
    let current = sobolev_norm(f, sigma)?;
    if current == 0.0 {
        if target == 0.0 {
            return Ok(f.clone());
        }
        return Err(EmhdError::Parameter(
            "cannot rescale a zero field to a nonzero norm".into(),
        ));
    }
    Ok(f.scale(target / current))
}

/// Places the coarse field `f` on a grid `factor` times finer, sending the
/// coefficient at `k` to `factor · k`. In physical space this is `f(factor · x)`.
pub fn dilate(f: &SpectralVectorField, factor: usize) -> Result<SpectralVectorField> {
    let coarse = *f.grid();
    let fine_grid = Grid3::with_box_length(coarse.n() * factor, coarse.box_length())?
        .with_dealias_cutoff(coarse.dealias_cutoff() * factor as f64)?;
    let mut out = SpectralVectorField::zeros(fine_grid);
    let f_factor = factor as i64;
    for idx in 0..coarse.len() {
        let v = f.at(idx);
        if v.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let [ix, iy, iz] = coarse.unflatten(idx);
        if [ix, iy, iz].iter().any(|&i| coarse.is_nyquist(i)) {
            return Err(EmhdError::Resolution(
                "Nyquist content cannot be dilated consistently".into(),
            ));
        }
        let m = coarse.lattice(idx);
        out.set(
            fine_grid.index_of([m[0] * f_factor, m[1] * f_factor, m[2] * f_factor]),
            v,
        );
    }
    out.set_real(f.is_real());
    Ok(out)
}
