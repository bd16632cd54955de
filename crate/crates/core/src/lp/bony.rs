use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralScalarField, SpectralVectorField};
use crate::spectral::{spectral_dot, spectral_scalar_product};

use super::{low_pass, lp_project, shell_range, tilde_block};

/// Fields with a dealiased pointwise product (`u v` for scalars, `u · v` for vectors).
pub trait Multiplicable: SpectralField {
    type Product: SpectralField;

    fn times(&self, other: &Self) -> Result<Self::Product>;
}

impl Multiplicable for SpectralScalarField {
    type Product = SpectralScalarField;

    fn times(&self, other: &Self) -> Result<Self::Product> {
        spectral_scalar_product(self, other)
    }
}

impl Multiplicable for SpectralVectorField {
    type Product = SpectralScalarField;

    fn times(&self, other: &Self) -> Result<Self::Product> {
        spectral_dot(self, other)
    }
}

/// The three paraproduct pieces of `Δ_j(u v)`.
#[derive(Debug, Clone)]
pub struct BonyTerms<T> {
    /// `Σ_{|k-j|≤2} Δ_j(u_{≤k-2} v_k)`
    pub low_high: T,
    /// `Σ_{|k-j|≤2} Δ_j(u_k v_{≤k-2})`
    pub high_low: T,
    /// `Σ_{k≥j-2} Δ_j(ũ_k v_k)`
    pub high_high: T,
}

impl BonyTerms<SpectralScalarField> {
    pub fn sum(&self) -> Result<SpectralScalarField> {
        self.low_high.try_add(&self.high_low)?.try_add(&self.high_high)
    }
}

/// Errors unless every nonzero mode survives dealiasing, which is what makes
/// the pseudospectral product exact on the retained band.
pub(crate) fn require_resolved<T: SpectralField>(f: &T, what: &str) -> Result<()> {
    let grid = *f.grid();
    for comp in f.components() {
        for (idx, c) in comp.iter().enumerate() {
            if c.norm_sqr() != 0.0 && !grid.is_retained(idx) {
                return Err(EmhdError::Resolution(format!(
                    "{what} has content at lattice mode {:?} beyond the dealiasing cutoff",
                    grid.lattice(idx)
                )));
            }
        }
    }
    Ok(())
}

fn accumulate<P: SpectralField>(acc: &mut Option<P>, term: P) {
    match acc {
        None => *acc = Some(term),
        Some(a) => {
            for (dst, src) in a.components_mut().iter_mut().zip(term.components()) {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
    }
}

fn is_zero<T: SpectralField>(f: &T) -> bool {
    f.components().iter().all(|c| c.iter().all(|z| z.norm_sqr() == 0.0))
}

/// Bony decomposition of `Δ_j(u v)` using dealiased products.
pub fn bony_decompose<T: Multiplicable>(u: &T, v: &T, j: i32) -> Result<BonyTerms<T::Product>> {
    if u.grid() != v.grid() {
        return Err(EmhdError::Shape("paraproduct factors on different grids".into()));
    }
    require_resolved(u, "u")?;
    require_resolved(v, "v")?;
    let grid = *u.grid();
    let (_, j_hi) = shell_range(&grid);

    let product_sum = |pairs: Vec<(T, T)>| -> Result<T::Product> {
        let mut acc = None;
        for (a, b) in pairs {
            if is_zero(&a) || is_zero(&b) {
                continue;
            }
            accumulate(&mut acc, a.times(&b)?);
        }
        Ok(match acc {
            Some(p) => lp_project(&p, j),
            None => lp_project(&u.times(&zero_like(u))?, j),
        })
    };

    let near = (j - 2)..=(j + 2);
    let low_high = product_sum(near.clone().map(|k| (low_pass(u, k - 2), lp_project(v, k))).collect())?;
    let high_low = product_sum(near.map(|k| (lp_project(u, k), low_pass(v, k - 2))).collect())?;
    let high_high = product_sum(((j - 2)..=j_hi).map(|k| (tilde_block(u, k), lp_project(v, k))).collect())?;
    Ok(BonyTerms {
        low_high,
        high_low,
        high_high,
    })
}

fn zero_like<T: SpectralField>(f: &T) -> T {
    let mut z = f.clone();
    for comp in z.components_mut() {
        comp.iter_mut().for_each(|c| *c = num_complex::Complex64::new(0.0, 0.0));
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{random_band_field, random_spectral};
    use crate::Grid3;
    use num_complex::Complex64;

    fn scalar_band(g: Grid3, seed: u64) -> SpectralScalarField {
        random_band_field(g, 1.0, 5.0, seed).component(0)
    }

    #[test]
    fn terms_reconstruct_projected_product() {
        let g = Grid3::new(16).unwrap();
        for seed in 0..3 {
            let u = scalar_band(g, seed);
            let v = scalar_band(g, seed + 100);
            let direct = u.times(&v).unwrap();
            for j in 0..4 {
                let terms = bony_decompose(&u, &v, j).unwrap();
                let target = lp_project(&direct, j);
                let err = terms.sum().unwrap().try_sub(&target).unwrap().l2_norm();
                assert!(err <= 1e-10 * target.l2_norm().max(1e-300), "j={j} err={err}");
            }
        }
    }

    #[test]
    fn constant_factor_lands_in_low_high() {
        let g = Grid3::new(16).unwrap();
        let mut u = SpectralScalarField::zeros(g);
        u.coeffs_mut()[0] = Complex64::new(2.5, 0.0);
        let v = scalar_band(g, 7);
        for j in 0..3 {
            let t = bony_decompose(&u, &v, j).unwrap();
            let target = lp_project(&v, j).scale(2.5);
            assert!(t.low_high.try_sub(&target).unwrap().l2_norm() < 1e-12 * target.l2_norm());
            assert!(t.high_low.l2_norm() < 1e-14);
            assert!(t.high_high.l2_norm() < 1e-14);
        }
    }

    #[test]
    fn separated_single_modes_hit_one_term() {
        let g = Grid3::new(32).unwrap();
        let mut u = SpectralScalarField::zeros(g);
        u.set_hermitian_pair([1, 0, 0], Complex64::new(1.0, 0.0));
        let mut v = SpectralScalarField::zeros(g);
        v.set_hermitian_pair([0, 8, 0], Complex64::new(0.0, 1.0));
        // u v lives at |k| = sqrt(65) ≈ 8.06, in shell 3 only.
        let t = bony_decompose(&u, &v, 3).unwrap();
        assert!(t.low_high.l2_norm() > 0.1);
        assert_eq!(t.high_low.l2_norm(), 0.0);
        assert_eq!(t.high_high.l2_norm(), 0.0);
    }

    #[test]
    fn vector_fields_use_the_dot_product() {
        let g = Grid3::new(16).unwrap();
        let u = random_band_field(g, 1.0, 5.0, 1);
        let v = random_band_field(g, 1.0, 5.0, 2);
        let direct = u.times(&v).unwrap();
        let t = bony_decompose(&u, &v, 2).unwrap();
        let target = lp_project(&direct, 2);
        assert!(t.sum().unwrap().try_sub(&target).unwrap().l2_norm() < 1e-10 * target.l2_norm());
    }

    #[test]
    fn unresolved_input_is_rejected() {
        let g = Grid3::new(8).unwrap();
        let u = random_spectral(g, 1).component(0);
        let v = scalar_band(g, 2);
        assert!(matches!(bony_decompose(&u, &v, 0), Err(EmhdError::Resolution(_))));
    }
}
