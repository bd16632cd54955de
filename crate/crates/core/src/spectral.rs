//! Exact spectral calculus on the periodic box.
//!
//! Forward transforms carry the `1/N^3` factor, so a coefficient is the
//! average of `f(x) e^{-ik·x}` over the grid and `cos z` maps to `1/2` at
//! `k = (0, 0, ±1)`. The L² norm used throughout is the root-mean-square
//! norm; Parseval then reads `rms(f)^2 = Σ_k |F(k)|^2`.

use num_complex::Complex64;

use crate::error::{EmhdError, Result};
use crate::fft::{fft3, Direction};
use crate::field::{
    PhysicalScalarField, PhysicalVectorField, SpectralField, SpectralScalarField,
    SpectralVectorField,
};

/// Relative Hermitian deviation tolerated by the inverse transforms.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn forward_component(grid: &crate::Grid3, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft3(&mut buf, grid.n(), Direction::Forward);
    let norm = 1.0 / grid.len() as f64;
    for c in buf.iter_mut() {
        *c *= norm;
    }
    buf
}

fn inverse_component(grid: &crate::Grid3, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    fft3(&mut buf, grid.n(), Direction::Inverse);
    buf.into_iter().map(|c| c.re).collect()
}

fn check_invertible<T: SpectralField>(f: &T) -> Result<()> {
    if !f.is_real() {
        return Err(EmhdError::NotReal);
    }
    let scale = f.max_abs();
    if scale == 0.0 {
        return Ok(());
    }
    let deviation = f.hermitian_deviation();
    if deviation > SYMMETRY_TOLERANCE * scale {
        return Err(EmhdError::Symmetry { deviation });
    }
    Ok(())
}

pub fn forward_transform(f: &PhysicalVectorField) -> SpectralVectorField {
    let grid = *f.grid();
    let [a, b, c] = f.values();
    let coeffs = [
        forward_component(&grid, a),
        forward_component(&grid, b),
        forward_component(&grid, c),
    ];
    SpectralVectorField::from_components(grid, coeffs, true).expect("shape preserved")
}

pub fn inverse_transform(f: &SpectralVectorField) -> Result<PhysicalVectorField> {
    check_invertible(f)?;
    let grid = *f.grid();
    let [a, b, c] = f.coeffs();
    PhysicalVectorField::from_components(
        grid,
        [
            inverse_component(&grid, a),
            inverse_component(&grid, b),
            inverse_component(&grid, c),
        ],
    )
}

pub fn forward_transform_scalar(f: &PhysicalScalarField) -> SpectralScalarField {
    let grid = *f.grid();
    SpectralScalarField::from_coeffs(grid, forward_component(&grid, f.values()), true)
        .expect("shape preserved")
}

pub fn inverse_transform_scalar(f: &SpectralScalarField) -> Result<PhysicalScalarField> {
    check_invertible(f)?;
    let grid = *f.grid();
    PhysicalScalarField::from_values(grid, inverse_component(&grid, f.coeffs()))
}

/// Applies `Λ^β`, the multiplier `|k|^β`.
///
/// The mean mode goes to zero for `β > 0`, stays as-is for `β = 0`, and must
/// already be zero for `β < 0`.
pub fn fractional_laplacian<T: SpectralField>(f: &T, beta: f64) -> Result<T> {
    if beta == 0.0 {
        return Ok(f.clone());
    }
    if beta < 0.0 {
        f.require_mean_free()?;
    }
    let mut table = f.grid().radial_table(|k| k.powf(beta));
    table[0] = 0.0;
    let mut out = f.clone();
    out.apply_radial_table(&table);
    Ok(out)
}

#[inline]
fn cross_c(k: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    [
        k[1] * v[2] - k[2] * v[1],
        k[2] * v[0] - k[0] * v[2],
        k[0] * v[1] - k[1] * v[0],
    ]
}

/// `i k × F(k)`.
pub fn curl(f: &SpectralVectorField) -> SpectralVectorField {
    let grid = *f.grid();
    let mut out = SpectralVectorField::zeros(grid);
    out.set_real(f.is_real());
    let d = grid.derivative_axis();
    grid.for_each_index(|idx, [ix, iy, iz]| {
        let w = cross_c([d[ix], d[iy], d[iz]], f.at(idx));
        out.set(idx, [I * w[0], I * w[1], I * w[2]]);
    });
    out
}

/// `i k · F(k)`.
pub fn divergence(f: &SpectralVectorField) -> SpectralScalarField {
    let grid = *f.grid();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let d = grid.derivative_axis();
    grid.for_each_index(|idx, [ix, iy, iz]| {
        let v = f.at(idx);
        coeffs[idx] = I * (d[ix] * v[0] + d[iy] * v[1] + d[iz] * v[2]);
    });
    SpectralScalarField::from_coeffs(grid, coeffs, f.is_real()).expect("shape preserved")
}

/// `i k f(k)`.
pub fn gradient(f: &SpectralScalarField) -> SpectralVectorField {
    let grid = *f.grid();
    let mut out = SpectralVectorField::zeros(grid);
    out.set_real(f.is_real());
    let d = grid.derivative_axis();
    grid.for_each_index(|idx, [ix, iy, iz]| {
        let c = f.coeffs()[idx];
        out.set(idx, [I * d[ix] * c, I * d[iy] * c, I * d[iz] * c]);
    });
    out
}

/// `(I - k k^T / |k|^2) F(k)` for `k ≠ 0`; the mean mode is untouched.
pub fn leray_project(f: &SpectralVectorField) -> SpectralVectorField {
    let grid = *f.grid();
    let mut out = f.clone();
    let d = grid.derivative_axis();
    grid.for_each_index(|idx, [ix, iy, iz]| {
        let k = [d[ix], d[iy], d[iz]];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return;
        }
        let v = f.at(idx);
        let kv = (k[0] * v[0] + k[1] * v[1] + k[2] * v[2]) / k2;
        out.set(idx, [v[0] - k[0] * kv, v[1] - k[1] * kv, v[2] - k[2] * kv]);
    });
    out
}

/// Pointwise `F × G`.
pub fn cross_product(f: &PhysicalVectorField, g: &PhysicalVectorField) -> Result<PhysicalVectorField> {
    if f.grid() != g.grid() {
        return Err(EmhdError::Shape("cross product of fields on different grids".into()));
    }
    let grid = *f.grid();
    let [f0, f1, f2] = f.values();
    let [g0, g1, g2] = g.values();
    let mut out = PhysicalVectorField::zeros(grid);
    {
        let [o0, o1, o2] = out.values_mut();
        for i in 0..grid.len() {
            o0[i] = f1[i] * g2[i] - f2[i] * g1[i];
            o1[i] = f2[i] * g0[i] - f0[i] * g2[i];
            o2[i] = f0[i] * g1[i] - f1[i] * g0[i];
        }
    }
    Ok(out)
}

/// Pointwise `F · G`.
pub fn dot_product(f: &PhysicalVectorField, g: &PhysicalVectorField) -> Result<PhysicalScalarField> {
    if f.grid() != g.grid() {
        return Err(EmhdError::Shape("dot product of fields on different grids".into()));
    }
    let grid = *f.grid();
    let values = (0..grid.len())
        .map(|i| {
            let a = f.at(i);
            let b = g.at(i);
            a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
        })
        .collect();
    PhysicalScalarField::from_values(grid, values)
}

/// Pointwise `f g`.
pub fn scalar_product(f: &PhysicalScalarField, g: &PhysicalScalarField) -> Result<PhysicalScalarField> {
    if f.grid() != g.grid() {
        return Err(EmhdError::Shape("product of fields on different grids".into()));
    }
    let values = f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    PhysicalScalarField::from_values(*f.grid(), values)
}

/// 2/3-rule truncation: zero every mode with some `|k_i|` above the cutoff.
pub fn dealias<T: SpectralField>(f: &T) -> T {
    f.dealiased()
}

/// Dealiased pseudospectral `F × G`.
pub fn spectral_cross(f: &SpectralVectorField, g: &SpectralVectorField) -> Result<SpectralVectorField> {
    let p = cross_product(&inverse_transform(f)?, &inverse_transform(g)?)?;
    Ok(dealias(&forward_transform(&p)))
}

/// Dealiased pseudospectral `F · G`.
pub fn spectral_dot(f: &SpectralVectorField, g: &SpectralVectorField) -> Result<SpectralScalarField> {
    let p = dot_product(&inverse_transform(f)?, &inverse_transform(g)?)?;
    Ok(dealias(&forward_transform_scalar(&p)))
}

/// Dealiased pseudospectral `f g`.
pub fn spectral_scalar_product(f: &SpectralScalarField, g: &SpectralScalarField) -> Result<SpectralScalarField> {
    let p = scalar_product(&inverse_transform_scalar(f)?, &inverse_transform_scalar(g)?)?;
    Ok(dealias(&forward_transform_scalar(&p)))
}

/// Homogeneous `Ḣ^σ` norm `(Σ_k |k|^{2σ} |F(k)|^2)^{1/2}`; `σ = 0` is the L² norm
/// including the mean.
pub fn sobolev_norm<T: SpectralField>(f: &T, sigma: f64) -> Result<f64> {
    if sigma < 0.0 {
        f.require_mean_free()?;
    }
    let mut table = f.grid().radial_table(|k| k.powf(2.0 * sigma));
    table[0] = if sigma == 0.0 { 1.0 } else { 0.0 };
    Ok(weighted_mass(f, &table).sqrt())
}

/// `Σ_k table[|m|^2] |F(k)|^2` in fixed storage order.
pub(crate) fn weighted_mass<T: SpectralField>(f: &T, table: &[f64]) -> f64 {
    let m2 = f.grid().lattice_norm_sq_map();
    f.components()
        .iter()
        .map(|comp| {
            comp.iter()
                .zip(&m2)
                .map(|(c, &q)| table[q] * c.norm_sqr())
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{random_band_field, random_physical};
    use crate::Grid3;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid() -> Grid3 {
        Grid3::new(16).unwrap()
    }

    #[test]
    fn cosine_maps_to_half_at_unit_modes() {
        let g = grid();
        let f = PhysicalVectorField::from_fn(g, |_, _, z| [z.cos(), 0.0, 0.0]);
        let s = forward_transform(&f);
        for idx in 0..g.len() {
            let m = g.lattice(idx);
            let v = s.at(idx);
            let expected = if m == [0, 0, 1] || m == [0, 0, -1] { 0.5 } else { 0.0 };
            assert!((v[0] - c(expected, 0.0)).norm() < 1e-15, "{m:?}");
            assert!(v[1].norm() < 1e-15 && v[2].norm() < 1e-15);
        }
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = grid();
        let s = forward_transform(&PhysicalVectorField::zeros(g));
        assert_eq!(s.max_abs(), 0.0);
        let p = inverse_transform(&SpectralVectorField::zeros(g)).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn inverse_of_unit_pair_is_cosine() {
        let g = grid();
        let mut s = SpectralVectorField::zeros(g);
        s.set_hermitian_pair([0, 0, 1], [c(0.5, 0.0), ZERO, ZERO]);
        let p = inverse_transform(&s).unwrap();
        let expected = PhysicalVectorField::from_fn(g, |_, _, z| [z.cos(), 0.0, 0.0]);
        assert!(p.try_sub(&expected).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn round_trips() {
        let g = grid();
        let f = random_physical(g, 7);
        let back = inverse_transform(&forward_transform(&f)).unwrap();
        assert!(back.try_sub(&f).unwrap().l2_norm() <= 1e-12 * f.l2_norm());

        let s = random_band_field(g, 1.0, 5.0, 11);
        let again = forward_transform(&inverse_transform(&s).unwrap());
        assert!((&again - &s).l2_norm() <= 1e-12 * s.l2_norm());
    }

    #[test]
    fn parseval() {
        let g = grid();
        let f = random_physical(g, 3);
        let s = forward_transform(&f);
        assert!((s.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn asymmetric_coefficients_are_rejected() {
        let g = grid();
        let mut s = SpectralVectorField::zeros(g);
        s.set(g.index_of([0, 0, 1]), [c(1.0, 0.0), ZERO, ZERO]);
        assert!(matches!(inverse_transform(&s), Err(EmhdError::Symmetry { .. })));
        let mut t = SpectralVectorField::zeros(g);
        t.set_real(false);
        assert!(matches!(inverse_transform(&t), Err(EmhdError::NotReal)));
    }

    #[test]
    fn fractional_laplacian_examples() {
        let g = grid();
        let mut unit = SpectralVectorField::zeros(g);
        unit.set_hermitian_pair([1, 0, 0], [ZERO, c(0.3, 0.1), ZERO]);
        for beta in [-1.3, 0.0, 0.7, 2.5] {
            let out = fractional_laplacian(&unit, beta).unwrap();
            assert!((&out - &unit).max_abs() < 1e-15);
        }
        let mut two = SpectralVectorField::zeros(g);
        two.set_hermitian_pair([0, 2, 0], [c(1.0, 0.0), ZERO, c(0.0, -0.5)]);
        let out = fractional_laplacian(&two, 1.5).unwrap();
        let v = out.at_lattice([0, 2, 0]);
        assert!((v[0].re - 2.828427124746190).abs() < 1e-12);
        assert!((v[2].im + 0.5 * 2.828427124746190).abs() < 1e-12);

        let mut with_mean = unit.clone();
        with_mean.set(0, [c(1.0, 0.0), ZERO, ZERO]);
        assert!(matches!(
            fractional_laplacian(&with_mean, -0.5),
            Err(EmhdError::MeanMode { .. })
        ));
        let lifted = fractional_laplacian(&with_mean, 0.5).unwrap();
        assert_eq!(lifted.at(0)[0], ZERO);
        assert_eq!(fractional_laplacian(&with_mean, 0.0).unwrap(), with_mean);
    }

    fn beltrami(g: Grid3) -> SpectralVectorField {
        forward_transform(&PhysicalVectorField::from_fn(g, |_, _, z| [z.sin(), z.cos(), 0.0]))
    }

    #[test]
    fn beltrami_is_a_curl_eigenfield() {
        let g = grid();
        let b = beltrami(g);
        assert!((&curl(&b) - &b).max_abs() < 1e-15);
        assert!(divergence(&b).max_abs() < 1e-15);
    }

    #[test]
    fn curl_of_gradient_and_div_of_curl_vanish() {
        let g = grid();
        let f = random_band_field(g, 1.0, 5.0, 4).component(0);
        let grad = gradient(&f);
        assert!(curl(&grad).max_abs() < 1e-12);
        let r = random_band_field(g, 1.0, 5.0, 5);
        assert!(divergence(&curl(&r)).max_abs() < 1e-12);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let g = grid();
        let f = random_band_field(g, 1.0, 5.0, 8).component(1);
        let div = divergence(&gradient(&f));
        for idx in 0..g.len() {
            let k2 = g.lattice_norm_sq(idx) as f64;
            assert!((div.coeffs()[idx] + k2 * f.coeffs()[idx]).norm() < 1e-12);
        }
    }

    #[test]
    fn leray_projection() {
        let g = grid();
        let f = random_band_field(g, 1.0, 5.0, 9).component(2);
        assert!(leray_project(&gradient(&f)).max_abs() < 1e-12);

        let r = crate::testing::random_spectral(g, 10);
        let p = leray_project(&r);
        assert!(divergence(&p).max_abs() < 1e-12);
        assert!((&leray_project(&p) - &p).max_abs() < 1e-12);
        // self-adjoint
        let q = crate::testing::random_spectral(g, 12);
        let lhs = leray_project(&r).inner(&q);
        let rhs = r.inner(&leray_project(&q));
        assert!((lhs - rhs).abs() < 1e-12 * r.l2_norm() * q.l2_norm());
    }

    #[test]
    fn cross_product_examples() {
        let g = Grid3::new(8).unwrap();
        let f = random_physical(g, 1);
        let h = random_physical(g, 2);
        assert_eq!(cross_product(&f, &f).unwrap().max_abs(), 0.0);
        let ex = PhysicalVectorField::from_fn(g, |_, _, _| [1.0, 0.0, 0.0]);
        let ey = PhysicalVectorField::from_fn(g, |_, _, _| [0.0, 1.0, 0.0]);
        let ez = cross_product(&ex, &ey).unwrap();
        assert!(ez.values()[2].iter().all(|&v| v == 1.0));
        let ab = cross_product(&f, &h).unwrap();
        let ba = cross_product(&h, &f).unwrap();
        for c in 0..3 {
            for (x, y) in ab.values()[c].iter().zip(&ba.values()[c]) {
                assert!((x + y).abs() < 1e-14);
            }
        }
        let other = PhysicalVectorField::zeros(Grid3::new(4).unwrap());
        assert!(matches!(cross_product(&f, &other), Err(EmhdError::Shape(_))));
    }

    #[test]
    fn dealias_behaviour() {
        let g = grid();
        let inside = random_band_field(g, 1.0, 4.0, 13);
        assert_eq!(dealias(&inside), inside);
        let mut outside = SpectralVectorField::zeros(g);
        outside.set_hermitian_pair([7, 0, 1], [c(1.0, 0.0), ZERO, ZERO]);
        assert_eq!(dealias(&outside).max_abs(), 0.0);
        let r = crate::testing::random_spectral(g, 14);
        assert_eq!(dealias(&dealias(&r)), dealias(&r));
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = grid();
        let mut f = SpectralVectorField::zeros(g);
        // unit L² mass at |k| = 2
        f.set_hermitian_pair([2, 0, 0], [ZERO, c(0.5_f64.sqrt(), 0.0), ZERO]);
        assert!((f.l2_norm() - 1.0).abs() < 1e-15);
        assert!((sobolev_norm(&f, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((sobolev_norm(&f, 1.5).unwrap() - 2.0_f64.powf(1.5)).abs() < 1e-13);

        let r = random_physical(g, 15);
        let s = forward_transform(&r);
        assert!((sobolev_norm(&s, 0.0).unwrap() - r.l2_norm()).abs() < 1e-12 * r.l2_norm());
        assert!(matches!(sobolev_norm(&s, -0.5), Err(EmhdError::MeanMode { .. })));
    }

    #[test]
    fn multipliers_commute_and_compose() {
        let g = grid();
        let f = random_band_field(g, 1.0, 5.0, 16);
        let a = fractional_laplacian(&curl(&f), 0.7).unwrap();
        let b = curl(&fractional_laplacian(&f, 0.7).unwrap());
        assert!((&a - &b).max_abs() < 1e-12 * f.max_abs());
        let ab = fractional_laplacian(&fractional_laplacian(&f, -0.4).unwrap(), 1.3).unwrap();
        let direct = fractional_laplacian(&f, 0.9).unwrap();
        assert!((&ab - &direct).max_abs() < 1e-12 * direct.max_abs());
    }
}
