use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralScalarField, SpectralVectorField};
use crate::spectral::{curl, gradient, inverse_transform, sobolev_norm, spectral_cross, spectral_scalar_product};

use super::bony::require_resolved;
use super::gevrey::{e_weighted_mass, gevrey_apply, gradient_magnitude, GevreyParams};
use super::{lp_project, tilde_block};

fn block<T: SpectralField>(f: &T, j: i32, gevrey: Option<&GevreyParams>) -> Result<T> {
    let p = lp_project(f, j);
    match gevrey {
        Some(params) => gevrey_apply(&p, params),
        None => Ok(p),
    }
}

fn check_pair<A: SpectralField, B: SpectralField>(g: &A, f: &B) -> Result<()> {
    if g.grid() != f.grid() {
        return Err(EmhdError::Shape("commutator factors on different grids".into()));
    }
    require_resolved(g, "g")?;
    require_resolved(f, "f")
}

/// `A(g × ∇×f) - g × ∇×(A f)` with `A = Δ_j`, or `A = Δ_j G^λ` when `gevrey` is set.
pub fn commutator_curl(
    g: &SpectralVectorField,
    f: &SpectralVectorField,
    j: i32,
    gevrey: Option<&GevreyParams>,
) -> Result<SpectralVectorField> {
    check_pair(g, f)?;
    let outer = block(&spectral_cross(g, &curl(f))?, j, gevrey)?;
    let inner = spectral_cross(g, &curl(&block(f, j, gevrey)?))?;
    outer.try_sub(&inner)
}

/// `Δ_j(g f) - g Δ_j f`.
pub fn commutator_scalar(g: &SpectralScalarField, f: &SpectralScalarField, j: i32) -> Result<SpectralScalarField> {
    check_pair(g, f)?;
    let outer = lp_project(&spectral_scalar_product(g, f)?, j);
    let inner = spectral_scalar_product(g, &lp_project(f, j))?;
    outer.try_sub(&inner)
}

/// `max_x |∇g(x)|` with the Frobenius norm of the gradient tensor.
pub fn gradient_sup_norm(g: &SpectralVectorField) -> Result<f64> {
    Ok(gradient_magnitude(g)?.into_iter().fold(0.0, f64::max))
}

pub fn gradient_sup_norm_scalar(g: &SpectralScalarField) -> Result<f64> {
    let phys = inverse_transform(&gradient(g))?;
    let [a, b, c] = phys.values();
    Ok(a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .fold(0.0, f64::max))
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den == 0.0 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(EmhdError::Precondition(
            "commutator is nonzero while the reference scale vanishes".into(),
        ));
    }
    Ok(num / den)
}

/// `‖[Δ_j, g×∇×]f‖ / (2^{-j} ‖∇g‖_∞ ‖∇×f‖)`, the constant in the one-derivative gain.
pub fn commutator_curl_ratio(
    g: &SpectralVectorField,
    f: &SpectralVectorField,
    j: i32,
    gevrey: Option<&GevreyParams>,
) -> Result<f64> {
    let c = commutator_curl(g, f, j, gevrey)?;
    let den = 2f64.powi(-j) * gradient_sup_norm(g)? * curl(f).l2_norm();
    ratio(c.l2_norm(), den)
}

/// `‖[Δ_j, g]f‖ / (2^{-j} ‖∇g‖_∞ ‖f‖)`.
pub fn commutator_scalar_ratio(g: &SpectralScalarField, f: &SpectralScalarField, j: i32) -> Result<f64> {
    let c = commutator_scalar(g, f, j)?;
    let den = 2f64.powi(-j) * gradient_sup_norm_scalar(g)? * f.l2_norm();
    ratio(c.l2_norm(), den)
}

/// Ratio of `|⟨[Δ_j G^λ, g×∇×]f, ∇×h⟩|` to the weighted Gevrey commutator bound
/// with free parameter `eps`:
///
/// `2^{-j} (2^{εj} ‖Λ^{5/2-ε} g‖ + 2^{(α-1)j} 2^ε λ ‖Λ^{5/2-ε} E g‖) ‖Λ f̃_j‖ ‖Λ h‖`.
pub fn gevrey_commutator_pairing_ratio(
    g: &SpectralVectorField,
    f: &SpectralVectorField,
    h: &SpectralVectorField,
    j: i32,
    params: &GevreyParams,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(EmhdError::Parameter(format!("eps = {eps} outside (0, 1/2]")));
    }
    let c = commutator_curl(g, f, j, Some(params))?;
    let pairing = c.inner(&curl(h)).abs();
    let order = 2.5 - eps;
    let jf = j as f64;
    let g_term = 2f64.powf(eps * jf) * sobolev_norm(g, order)?;
    let e_term = 2f64.powf((params.alpha - 1.0) * jf)
        * 2f64.powf(eps)
        * params.lambda
        * e_weighted_mass(g, params, order).sqrt();
    let den = 2f64.powi(-j) * (g_term + e_term) * sobolev_norm(&tilde_block(f, j), 1.0)? * sobolev_norm(h, 1.0)?;
    ratio(pairing, den)
}

/// `g × ∇×(Δ_j f)` as used in the algebraic commutator identity.
pub fn transport_term(g: &SpectralVectorField, f: &SpectralVectorField, j: i32) -> Result<SpectralVectorField> {
    spectral_cross(g, &curl(&lp_project(f, j)))
}
