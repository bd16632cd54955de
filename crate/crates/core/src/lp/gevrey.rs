use serde::{Deserialize, Serialize};

use crate::error::{EmhdError, Result};
use crate::field::{PhysicalVectorField, SpectralField, SpectralVectorField};
use crate::grid::Grid3;
use crate::numerics::phi1;
use crate::spectral::{inverse_transform, sobolev_norm, weighted_mass};

use super::{lp_project, shell_range};

/// Largest admissible exponent `λ |k_max|^α`; `exp` overflows near 709.
pub const OVERFLOW_GUARD: f64 = 600.0;

/// Gevrey order `α`, radius `λ`, and the rate `ε` in `λ(t) = ε t^{α/κ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    pub alpha: f64,
    pub lambda: f64,
    pub epsilon_rate: f64,
}

impl GevreyParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        Self::with_rate(alpha, lambda, 1.0)
    }

    pub fn with_rate(alpha: f64, lambda: f64, epsilon_rate: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(EmhdError::Parameter(format!("Gevrey order {alpha} outside (0, 1]")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(EmhdError::Parameter(format!("Gevrey radius {lambda} must be >= 0")));
        }
        if !(epsilon_rate > 0.0 && epsilon_rate.is_finite()) {
            return Err(EmhdError::Parameter(format!("radius rate {epsilon_rate} must be > 0")));
        }
        Ok(Self {
            alpha,
            lambda,
            epsilon_rate,
        })
    }

    /// `ε t^{α/κ}`.
    pub fn radius_at(&self, t: f64, kappa: f64) -> f64 {
        self.epsilon_rate * t.max(0.0).powf(self.alpha / kappa)
    }

    /// Copy with `λ` replaced by [`radius_at`](Self::radius_at).
    pub fn at_time(&self, t: f64, kappa: f64) -> Self {
        Self {
            lambda: self.radius_at(t, kappa),
            ..*self
        }
    }

    fn exponent(&self, k: f64) -> f64 {
        self.lambda * k.powf(self.alpha)
    }

    fn check_guard(&self, grid: &Grid3) -> Result<()> {
        let exponent = self.exponent(grid.max_wavenumber());
        if exponent > OVERFLOW_GUARD {
            return Err(EmhdError::Radius {
                exponent,
                guard: OVERFLOW_GUARD,
            });
        }
        Ok(())
    }
}

/// `e^{λ|k|^α}` multiplier.
pub fn gevrey_apply<T: SpectralField>(f: &T, p: &GevreyParams) -> Result<T> {
    p.check_guard(f.grid())?;
    Ok(f.map_radial(|k| p.exponent(k).exp()))
}

/// Symbol of `E`: `∫_0^1 e^{τ z} dτ = (e^z - 1)/z` at `z = λ|k|^α`.
pub fn e_operator_multiplier(p: &GevreyParams, k: f64) -> f64 {
    phi1(p.exponent(k))
}

pub fn e_operator_apply<T: SpectralField>(f: &T, p: &GevreyParams) -> Result<T> {
    p.check_guard(f.grid())?;
    Ok(f.map_radial(|k| e_operator_multiplier(p, k)))
}

/// `‖G^λ F‖_{Ḣ^σ}`.
pub fn gevrey_norm<T: SpectralField>(f: &T, p: &GevreyParams, sigma: f64) -> Result<f64> {
    sobolev_norm(&gevrey_apply(f, p)?, sigma)
}

/// `(Σ_j 2^{2σj} ‖Δ_j F‖²)^{1/2}` over the lattice shells.
pub fn dyadic_sobolev_norm<T: SpectralField>(f: &T, sigma: f64) -> f64 {
    let grid = *f.grid();
    let (lo, hi) = shell_range(&grid);
    (lo..=hi)
        .map(|j| 2f64.powf(2.0 * sigma * j as f64) * lp_project(f, j).l2_norm_sq())
        .sum::<f64>()
        .sqrt()
}

/// Ratios from a Bernstein check on a single shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinRatios {
    /// `‖∇F‖_p / (2^j ‖F‖_p)`
    pub gradient: f64,
    /// `‖F‖_q / (2^{3(1/p - 1/q) j} ‖F‖_p)`
    pub embedding: f64,
}

fn lp_norm(values: impl Iterator<Item = f64>, count: usize, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        (values.map(|v| v.powf(p)).sum::<f64>() / count as f64).powf(1.0 / p)
    }
}

fn pointwise_magnitude(f: &PhysicalVectorField) -> Vec<f64> {
    let [a, b, c] = f.values();
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .collect()
}

/// Pointwise Frobenius norm of `∇F`.
pub(crate) fn gradient_magnitude(f: &SpectralVectorField) -> Result<Vec<f64>> {
    let grid = *f.grid();
    let mut acc = vec![0.0; grid.len()];
    for axis in 0..3 {
        let mut d = f.clone();
        for comp in d.components_mut() {
            for (idx, c) in comp.iter_mut().enumerate() {
                let k = grid.derivative_wavevector(idx)[axis];
                *c *= num_complex::Complex64::new(0.0, k);
            }
        }
        let phys = inverse_transform(&d)?;
        for (a, m) in acc.iter_mut().zip(pointwise_magnitude(&phys)) {
            *a += m * m;
        }
    }
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// Bernstein ratios for `F` supported in the open ring `2^{j-1} < |k| < 2^{j+1}`,
/// using normalized `L^p` norms (`p = ∞` allowed).
pub fn bernstein_check(f: &SpectralVectorField, j: i32, p: f64, q: f64) -> Result<BernsteinRatios> {
    if !(p >= 1.0 && q > p) {
        return Err(EmhdError::Parameter(format!("need 1 <= p < q, got p = {p}, q = {q}")));
    }
    if f.max_abs() == 0.0 {
        return Err(EmhdError::Precondition("Bernstein check needs a nonzero field".into()));
    }
    let grid = *f.grid();
    let (lo, hi) = (2f64.powi(j - 1), 2f64.powi(j + 1));
    for comp in f.components() {
        for (idx, c) in comp.iter().enumerate() {
            let k = grid.wavenumber_magnitude(idx);
            if c.norm_sqr() != 0.0 && !(k > lo && k < hi) {
                return Err(EmhdError::Precondition(format!(
                    "mode |k| = {k} lies outside the ring ({lo}, {hi})"
                )));
            }
        }
    }
    let n = grid.len();
    let mag = pointwise_magnitude(&inverse_transform(f)?);
    let grad = gradient_magnitude(f)?;
    let fp = lp_norm(mag.iter().copied(), n, p);
    let fq = lp_norm(mag.iter().copied(), n, q);
    let gp = lp_norm(grad.iter().copied(), n, p);
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    Ok(BernsteinRatios {
        gradient: gp / (2f64.powi(j) * fp),
        embedding: fq / (2f64.powf(3.0 * (1.0 / p - inv_q) * j as f64) * fp),
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Both sides of `‖∂^β F‖_{Ḣ^σ} <= (β! / (λα)^{|β|})^{1/α} ‖G^λ F‖_{Ḣ^σ}`.
pub fn derivative_bound_sides(
    f: &SpectralVectorField,
    p: &GevreyParams,
    sigma: f64,
    beta: [u32; 3],
) -> Result<(f64, f64)> {
    let grid = *f.grid();
    let order: u32 = beta.iter().sum();
    let mut lhs_sq = 0.0;
    for comp in f.components() {
        for (idx, c) in comp.iter().enumerate() {
            if idx == 0 {
                if order == 0 && sigma == 0.0 {
                    lhs_sq += c.norm_sqr();
                }
                continue;
            }
            let k = grid.wavevector(idx);
            let mono: f64 = (0..3).map(|i| k[i].powi(beta[i] as i32)).product();
            let kmag = grid.wavenumber_magnitude(idx);
            lhs_sq += mono * mono * kmag.powf(2.0 * sigma) * c.norm_sqr();
        }
    }
    let beta_fact: f64 = beta.iter().map(|&b| factorial(b)).product();
    let constant = if order == 0 {
        1.0
    } else {
        (beta_fact / (p.lambda * p.alpha).powi(order as i32)).powf(1.0 / p.alpha)
    };
    let rhs = constant * gevrey_norm(f, p, sigma)?;
    Ok((lhs_sq.sqrt(), rhs))
}

/// Whether the Gevrey derivative bound holds, with `1e-10` relative slack.
pub fn derivative_bound_check(
    f: &SpectralVectorField,
    p: &GevreyParams,
    sigma: f64,
    beta: [u32; 3],
) -> Result<bool> {
    let (lhs, rhs) = derivative_bound_sides(f, p, sigma, beta)?;
    Ok(lhs <= rhs * (1.0 + 1e-10))
}

/// `Σ_k table[|m|^2] |F(k)|^2` with the `E` symbol squared, for diagnostics.
pub(crate) fn e_weighted_mass<T: SpectralField>(f: &T, p: &GevreyParams, sigma: f64) -> f64 {
    let mut table = f.grid().radial_table(|k| (e_operator_multiplier(p, k) * k.powf(sigma)).powi(2));
    table[0] = 0.0;
    weighted_mass(f, &table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{random_band_field, random_spectral};
    use num_complex::Complex64;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    fn mode(g: Grid3, m: [i64; 3]) -> SpectralVectorField {
        let mut f = SpectralVectorField::zeros(g);
        f.set_hermitian_pair(m, [ZERO, Complex64::new(0.5, 0.0), ZERO]);
        f
    }

    #[test]
    fn parameters_are_validated() {
        assert!(GevreyParams::new(0.0, 1.0).is_err());
        assert!(GevreyParams::new(1.5, 1.0).is_err());
        assert!(GevreyParams::new(0.5, -1.0).is_err());
        let p = GevreyParams::with_rate(0.5, 0.0, 0.2).unwrap();
        assert!((p.radius_at(16.0, 2.0) - 0.2 * 2.0).abs() < 1e-15);
        assert_eq!(p.at_time(0.0, 2.0).lambda, 0.0);
    }

    #[test]
    fn gevrey_multiplier_examples() {
        let g = Grid3::new(16).unwrap();
        let f = random_spectral(g, 1);
        assert_eq!(gevrey_apply(&f, &GevreyParams::new(0.7, 0.0).unwrap()).unwrap(), f);

        let m = mode(g, [2, 0, 0]);
        let out = gevrey_apply(&m, &GevreyParams::new(1.0, 0.5).unwrap()).unwrap();
        let ratio = out.at_lattice([2, 0, 0])[1].re / 0.5;
        assert!((ratio - std::f64::consts::E).abs() < 1e-14);

        let p1 = GevreyParams::new(0.6, 0.3).unwrap();
        let p2 = GevreyParams::new(0.6, 0.45).unwrap();
        let p12 = GevreyParams::new(0.6, 0.75).unwrap();
        let a = gevrey_apply(&gevrey_apply(&f, &p1).unwrap(), &p2).unwrap();
        let b = gevrey_apply(&f, &p12).unwrap();
        assert!((&a - &b).max_abs() < 1e-12 * b.max_abs());
    }

    #[test]
    fn overflow_guard_rejects_large_radius() {
        let g = Grid3::new(16).unwrap();
        let f = mode(g, [1, 0, 0]);
        let p = GevreyParams::new(1.0, 100.0).unwrap();
        assert!(matches!(gevrey_apply(&f, &p), Err(EmhdError::Radius { .. })));
        assert!(matches!(e_operator_apply(&f, &p), Err(EmhdError::Radius { .. })));
    }

    #[test]
    fn e_operator_examples() {
        let p = GevreyParams::new(1.0, 1.0).unwrap();
        assert!((e_operator_multiplier(&p, 1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        let tiny = GevreyParams::new(1.0, 1e-12).unwrap();
        assert!((e_operator_multiplier(&tiny, 3.0) - 1.0).abs() < 1e-11);
        let zero = GevreyParams::new(0.5, 0.0).unwrap();
        assert_eq!(e_operator_multiplier(&zero, 5.0), 1.0);
        // Continuity across the series switch.
        for z in [0.99999e-4_f64, 1.00001e-4] {
            let e = GevreyParams::new(1.0, z).unwrap();
            assert!((e_operator_multiplier(&e, 1.0) - (1.0 + z / 2.0 + z * z / 6.0)).abs() < 1e-12);
        }

        let q = GevreyParams::new(0.4, 0.8).unwrap();
        for i in 0..200 {
            let k = 0.1 * i as f64;
            assert!(e_operator_multiplier(&q, k) <= (q.lambda * k.powf(q.alpha)).exp());
        }
    }

    #[test]
    fn gevrey_norm_properties() {
        let g = Grid3::new(16).unwrap();
        let f = random_band_field(g, 1.0, 5.0, 2);
        let zero = GevreyParams::new(0.5, 0.0).unwrap();
        assert_eq!(gevrey_norm(&f, &zero, 1.2).unwrap(), sobolev_norm(&f, 1.2).unwrap());
        let mut prev = 0.0;
        for l in 0..10 {
            let p = GevreyParams::new(0.5, 0.1 * l as f64).unwrap();
            let v = gevrey_norm(&f, &p, 0.5).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let m = mode(g, [0, 3, 0]);
        let p = GevreyParams::new(1.0, 0.2).unwrap();
        // Two modes of amplitude 1/2 at |k| = 3.
        let expected = (2.0 * 0.25f64).sqrt() * 3f64.powf(1.5) * 0.6f64.exp();
        assert!((gevrey_norm(&m, &p, 1.5).unwrap() - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn dyadic_norm_equivalence() {
        let g = Grid3::new(16).unwrap();
        let m = mode(g, [1, 0, 0]);
        assert!((dyadic_sobolev_norm(&m, 1.3) - sobolev_norm(&m, 1.3).unwrap()).abs() < 1e-15);
        assert_eq!(dyadic_sobolev_norm(&SpectralVectorField::zeros(g), 1.0), 0.0);
        let mut worst = 1.0_f64;
        for seed in 0..5 {
            let f = random_band_field(g, 1.0, 5.0, seed);
            for sigma in [-0.5, 0.0, 0.7, 1.5] {
                let r = dyadic_sobolev_norm(&f, sigma) / sobolev_norm(&f, sigma).unwrap();
                worst = worst.max(r).max(1.0 / r);
            }
        }
        assert!(worst < 2.0, "equivalence constant {worst}");
    }

    #[test]
    fn bernstein_single_mode_and_random() {
        let g = Grid3::new(32).unwrap();
        let m = mode(g, [4, 0, 0]);
        let r = bernstein_check(&m, 2, 2.0, f64::INFINITY).unwrap();
        assert!((r.gradient - 1.0).abs() < 1e-12);

        assert!(matches!(
            bernstein_check(&SpectralVectorField::zeros(g), 2, 2.0, 4.0),
            Err(EmhdError::Precondition(_))
        ));
        assert!(matches!(
            bernstein_check(&mode(g, [1, 0, 0]), 2, 2.0, 4.0),
            Err(EmhdError::Precondition(_))
        ));

        for seed in 0..4 {
            let f = random_band_field(g, 2.01, 7.99, seed);
            for (p, q) in [(1.0, 2.0), (2.0, 4.0), (2.0, f64::INFINITY)] {
                let r = bernstein_check(&f, 2, p, q).unwrap();
                assert!((0.125..=8.0).contains(&r.gradient), "{r:?}");
                assert!(r.embedding <= 8.0, "{r:?}");
            }
        }
    }

    #[test]
    fn derivative_bound_examples() {
        let g = Grid3::new(16).unwrap();
        let zero = GevreyParams::new(1.0, 1e-300).unwrap();
        let f = random_band_field(g, 1.0, 5.0, 3);
        let (l, r) = derivative_bound_sides(&f, &zero, 0.5, [0, 0, 0]).unwrap();
        assert!((l - r).abs() < 1e-14 * r);

        let m = mode(g, [3, 4, 0]);
        let p = GevreyParams::new(0.5, 0.4).unwrap();
        let (l, r) = derivative_bound_sides(&m, &p, 1.0, [1, 0, 0]).unwrap();
        let expected_lhs = (2.0 * 0.25f64).sqrt() * 3.0 * 5.0;
        assert!((l - expected_lhs).abs() < 1e-12);
        assert!(l <= r);

        for alpha in [0.3, 0.7, 1.0] {
            for lambda in [0.05, 0.5, 2.0] {
                let p = GevreyParams::new(alpha, lambda).unwrap();
                for b in [[1, 0, 0], [0, 2, 0], [1, 1, 1], [0, 0, 3], [2, 1, 0]] {
                    assert!(derivative_bound_check(&f, &p, 0.3, b).unwrap());
                }
            }
        }
    }
}
