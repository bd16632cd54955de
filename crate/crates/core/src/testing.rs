//! Random fixtures shared by unit tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::field::{PhysicalVectorField, SpectralVectorField};
use crate::grid::Grid3;
use crate::spectral::forward_transform;

/// I.i.d. unit-normal values at every grid point.
pub fn random_physical(grid: Grid3, seed: u64) -> PhysicalVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = PhysicalVectorField::zeros(grid);
    for comp in f.values_mut().iter_mut() {
        for v in comp.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    f
}

/// Hermitian field with content on every mode, including the mean.
pub fn random_spectral(grid: Grid3, seed: u64) -> SpectralVectorField {
    forward_transform(&random_physical(grid, seed))
}

/// Solenoidal, mean-free, dealiased field supported on `k_lo <= |k| <= k_hi`.
pub fn random_band_field(grid: Grid3, k_lo: f64, k_hi: f64, seed: u64) -> SpectralVectorField {
    crate::init::random_band(grid, k_lo, k_hi, seed).expect("valid band")
}
