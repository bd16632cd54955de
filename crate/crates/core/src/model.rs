//! The generalized EMHD right-hand side.

use serde::{Deserialize, Serialize};

use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralVectorField};
use crate::spectral::{curl, fractional_laplacian, spectral_cross};

/// Nonlocality `s`, dissipation order `κ`, resistivity `μ`, and the
/// hyperviscous regularization `ε` in front of `Λ^4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub s: f64,
    pub kappa: f64,
    pub mu: f64,
    pub eps_visc: f64,
}

/// Which of the two announced parameter ranges `(s, κ)` falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admissibility {
    /// `-1/2 < s < 1/2` and `2 - 2s < κ < 5/2 - s`.
    TheoremRange,
    /// Only `1 < κ < 2`.
    IntroRangeOnly,
    Outside,
}

impl ModelParams {
    pub fn new(s: f64, kappa: f64) -> Result<Self> {
        Self::with_dissipation(s, kappa, 1.0, 0.0)
    }

    pub fn with_dissipation(s: f64, kappa: f64, mu: f64, eps_visc: f64) -> Result<Self> {
        if !s.is_finite() || !kappa.is_finite() || kappa <= 0.0 {
            return Err(EmhdError::Parameter(format!("need finite s and kappa > 0, got s = {s}, kappa = {kappa}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(EmhdError::Parameter(format!("resistivity mu = {mu} must be positive")));
        }
        if !(eps_visc >= 0.0 && eps_visc.is_finite()) {
            return Err(EmhdError::Parameter(format!("eps_visc = {eps_visc} must be nonnegative")));
        }
        Ok(Self { s, kappa, mu, eps_visc })
    }

    pub fn sigma_c(&self) -> f64 {
        critical_exponent(self)
    }

    pub fn admissibility(&self) -> Admissibility {
        check_admissible(self)
    }

    /// Linear decay rate `μ|k|^κ + ε|k|^4` of the mode `|k|`.
    pub fn linear_rate(&self, k: f64) -> f64 {
        self.mu * k.powf(self.kappa) + self.eps_visc * k.powi(4)
    }
}

/// `σ_c = 7/2 - s - κ`.
pub fn critical_exponent(p: &ModelParams) -> f64 {
    3.5 - p.s - p.kappa
}

pub fn check_admissible(p: &ModelParams) -> Admissibility {
    let (s, k) = (p.s, p.kappa);
    if s > -0.5 && s < 0.5 && k > 2.0 - 2.0 * s && k < 2.5 - s {
        Admissibility::TheoremRange
    } else if k > 1.0 && k < 2.0 {
        Admissibility::IntroRangeOnly
    } else {
        Admissibility::Outside
    }
}

fn is_zero(f: &SpectralVectorField) -> bool {
    f.components().iter().all(|c| c.iter().all(|z| z.norm_sqr() == 0.0))
}

/// `∇×Λ^{-s} B`.
pub fn twisted_current(b: &SpectralVectorField, p: &ModelParams) -> Result<SpectralVectorField> {
    Ok(curl(&fractional_laplacian(b, -p.s)?))
}

/// `-∇×((∇×Λ^{-s} B) × q)`, with the product dealiased.
pub fn hall_nonlinearity(b: &SpectralVectorField, q: &SpectralVectorField, p: &ModelParams) -> Result<SpectralVectorField> {
    if b.grid() != q.grid() {
        return Err(EmhdError::Shape("B and q live on different grids".into()));
    }
    let j = twisted_current(b, p)?;
    if is_zero(q) || is_zero(&j) {
        let mut z = SpectralVectorField::zeros(*b.grid());
        z.set_real(b.is_real());
        return Ok(z);
    }
    Ok(-&curl(&spectral_cross(&j, q)?))
}

/// `-μΛ^κ B - εΛ^4 B + hall_nonlinearity(B, q)`.
pub fn rhs(b: &SpectralVectorField, q: &SpectralVectorField, p: &ModelParams) -> Result<SpectralVectorField> {
    let mut out = hall_nonlinearity(b, q, p)?;
    let mut table = b.grid().radial_table(|k| -p.linear_rate(k));
    table[0] = 0.0;
    let mut lin = b.clone();
    lin.apply_radial_table(&table);
    out.axpy(1.0, &lin);
    Ok(out)
}
