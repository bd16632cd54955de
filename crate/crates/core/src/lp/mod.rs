//! Littlewood-Paley analysis on the lattice.
//!
//! `Δ_j` multiplies by `φ(2^{-j}|k|)`. On the torus the only frequency below
//! 1 is `k = 0`, so the useful shells run from `j = -1` up to the first shell
//! whose low-pass `χ(2^{-j-1}|k|)` is 1 on the whole lattice; see
//! [`shell_range`].

mod bony;
mod commutator;
mod cutoff;
mod gevrey;

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::field::SpectralField;
use crate::grid::Grid3;
use crate::spectral::weighted_mass;

pub use bony::{bony_decompose, BonyTerms, Multiplicable};
pub use commutator::{
    commutator_curl, commutator_curl_ratio, commutator_scalar, commutator_scalar_ratio,
    gevrey_commutator_pairing_ratio, gradient_sup_norm, gradient_sup_norm_scalar, transport_term,
};
pub use cutoff::{chi_eval, smooth_step, CutoffProfile, PLATEAU, SUPPORT};
pub use gevrey::{
    bernstein_check, derivative_bound_check, derivative_bound_sides, dyadic_sobolev_norm,
    e_operator_apply, e_operator_multiplier, gevrey_apply, gevrey_norm, BernsteinRatios,
    GevreyParams, OVERFLOW_GUARD,
};

/// Shells `j_lo..=j_hi` that carry every nonzero lattice mode.
pub fn shell_range(grid: &Grid3) -> (i32, i32) {
    let j_lo = grid.min_wavenumber().log2().floor() as i32 - 1;
    let j_hi = (grid.max_wavenumber() / PLATEAU).log2().ceil() as i32 - 1;
    (j_lo, j_hi)
}

fn table_phi_j(grid: &Grid3, profile: &CutoffProfile, j: i32) -> Vec<f64> {
    let mut t = grid.radial_table(|k| profile.phi_j(j, k));
    t[0] = 0.0;
    t
}

/// Multiplier table of `Δ_j`.
pub fn lp_multiplier(grid: &Grid3, j: i32) -> Vec<f64> {
    table_phi_j(grid, &CutoffProfile::standard(), j)
}

/// `Δ_j F`.
pub fn lp_project<T: SpectralField>(f: &T, j: i32) -> T {
    let table = lp_multiplier(f.grid(), j);
    let mut out = f.clone();
    out.apply_radial_table(&table);
    out
}

/// `F_{≤k} = Σ_{j≤k} Δ_j F`, the multiplier `χ(2^{-k-1}|ξ|)`.
///
/// Because `χ(0) = 1` the mean mode is kept. The homogeneous blocks all vanish
/// at `k = 0`, so this is the sum of the blocks plus the mean, which is what
/// makes the paraproduct split exact on the torus.
pub fn low_pass<T: SpectralField>(f: &T, k: i32) -> T {
    let profile = CutoffProfile::standard();
    let scale = 2f64.powi(-k - 1);
    f.map_radial(|x| profile.chi(scale * x))
}

/// `Δ_{k-1} F + Δ_k F + Δ_{k+1} F`.
pub fn tilde_block<T: SpectralField>(f: &T, k: i32) -> T {
    let grid = *f.grid();
    let a = lp_multiplier(&grid, k - 1);
    let b = lp_multiplier(&grid, k);
    let c = lp_multiplier(&grid, k + 1);
    let table: Vec<f64> = a.iter().zip(&b).zip(&c).map(|((x, y), z)| x + y + z).collect();
    let mut out = f.clone();
    out.apply_radial_table(&table);
    out
}

/// `Σ_j Δ_j F` over [`shell_range`].
pub fn reconstruct<T: SpectralField>(f: &T) -> T {
    let grid = *f.grid();
    let (lo, hi) = shell_range(&grid);
    let mut table = vec![0.0; grid.max_lattice_norm_sq() + 1];
    for j in lo..=hi {
        for (t, v) in table.iter_mut().zip(lp_multiplier(&grid, j)) {
            *t += v;
        }
    }
    let mut out = f.clone();
    out.apply_radial_table(&table);
    out
}

/// Largest violation of the cutoff contract on this grid: the dyadic sum
/// `Σ_j φ(2^{-j}|k|)` must equal 1 at every nonzero lattice mode, `χ` must be 1
/// on `[0, 3/4]`, and must vanish on `[1, ∞)`.
pub fn partition_of_unity_error(grid: &Grid3, profile: &CutoffProfile) -> f64 {
    let (lo, hi) = shell_range(grid);
    let mut worst = 0.0_f64;
    for m2 in 1..=grid.max_lattice_norm_sq() {
        let k = grid.k0() * (m2 as f64).sqrt();
        let sum: f64 = (lo..=hi).map(|j| profile.phi_j(j, k)).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    for i in 0..=1000 {
        let xi = PLATEAU * i as f64 / 1000.0;
        worst = worst.max((profile.chi(xi) - 1.0).abs());
        worst = worst.max(profile.chi(SUPPORT + 2.0 * i as f64 / 1000.0).abs());
    }
    worst
}

/// Per-shell L² masses `‖Δ_j u‖²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSpectrum {
    pub j_min: i32,
    pub j_max: i32,
    pub masses: Vec<f64>,
}

impl ShellSpectrum {
    pub fn shells(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        (self.j_min..=self.j_max).zip(self.masses.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `2^{2σj} ‖Δ_j u‖²` per shell.
    pub fn weighted(&self, sigma: f64) -> Vec<f64> {
        self.shells()
            .map(|(j, m)| 2f64.powf(2.0 * sigma * j as f64) * m)
            .collect()
    }

    /// CSV with header `j,mass,sobolev_weighted_mass`.
    pub fn write_csv<W: Write>(&self, w: W, sigma: f64) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["j", "mass", "sobolev_weighted_mass"])?;
        for ((j, m), wm) in self.shells().zip(self.weighted(sigma)) {
            wtr.write_record([j.to_string(), format!("{m:e}"), format!("{wm:e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn shell_spectrum<T: SpectralField>(f: &T) -> ShellSpectrum {
    let grid = *f.grid();
    let (lo, hi) = shell_range(&grid);
    let masses = (lo..=hi)
        .map(|j| {
            let t: Vec<f64> = lp_multiplier(&grid, j).iter().map(|v| v * v).collect();
            weighted_mass(f, &t)
        })
        .collect();
    ShellSpectrum {
        j_min: lo,
        j_max: hi,
        masses,
    }
}
