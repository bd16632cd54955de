use serde::Serialize;

use crate::error::{EmhdError, Result};
use crate::field::SpectralField;
use crate::model::ModelParams;
use crate::solver::{NormSample, RunRecord};

use super::{fmt_flag, fmt_opt, Report};

/// Discrete residual of `½ d/dt‖B‖² + ‖Λ^{κ/2}B‖² = 0` along a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub s: f64,
    /// Longest sampling interval.
    pub max_interval: f64,
    pub order: u32,
    /// One residual per sampling interval.
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
    pub max_positive_excursion: f64,
    pub positive_intervals: usize,
    pub negative_intervals: usize,
    /// Only set for `s = 0`, where the law is exact.
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

/// `(a - b) / (ln a - ln b)`, the exact mean of an exponential through `a` and `b`.
pub fn logarithmic_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.5 * (a + b).max(0.0);
    }
    let x = b / a - 1.0;
    if x.abs() < 1e-4 {
        a * (1.0 + x / 2.0 - x * x / 12.0 + x * x * x / 24.0)
    } else {
        (a - b) / (a.ln() - b.ln())
    }
}

pub fn energy_balance(record: &RunRecord) -> Result<EnergyReport> {
    let p = &record.params;
    // Fastest resolved linear rate; bounds the spread of decay rates the
    // quadrature has to follow.
    let rate = record
        .final_state()
        .map_or(p.mu + p.eps_visc, |b| p.linear_rate(b.grid().max_retained_wavenumber()));
    energy_balance_samples(&record.samples, p, record.stepper.scheme.order(), rate)
}

/// The dissipation integral over each interval uses the logarithmic mean,
/// which is exact for a single decaying mode and second order otherwise.
pub fn energy_balance_samples(
    samples: &[NormSample],
    p: &ModelParams,
    order: u32,
    rate: f64,
) -> Result<EnergyReport> {
    if samples.len() < 3 {
        return Err(EmhdError::Data(format!(
            "energy balance needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let mut residuals = Vec::with_capacity(samples.len() - 1);
    let mut max_interval = 0.0_f64;
    let mut e_max = 0.0_f64;
    let mut d_max = 0.0_f64;
    for w in samples.windows(2) {
        let h = w[1].time - w[0].time;
        if !(h > 0.0) {
            return Err(EmhdError::Data("sample times must increase".into()));
        }
        let (e0, e1) = (w[0].l2 * w[0].l2, w[1].l2 * w[1].l2);
        let r = (e1 - e0) / (2.0 * h) + logarithmic_mean(w[0].dissipation, w[1].dissipation);
        residuals.push(r);
        max_interval = max_interval.max(h);
        e_max = e_max.max(e0).max(e1);
        d_max = d_max.max(w[0].dissipation).max(w[1].dissipation);
    }
    let max_abs_residual = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let max_positive_excursion = residuals.iter().fold(0.0_f64, |m, &r| m.max(r));
    let positive_intervals = residuals.iter().filter(|&&r| r > 0.0).count();
    let negative_intervals = residuals.iter().filter(|&&r| r < 0.0).count();

    let tolerance = (p.s == 0.0).then(|| {
        (max_interval * rate).powi(order as i32) * d_max + 1e-12 * e_max / max_interval
    });
    let pass = tolerance.map(|tol| max_abs_residual <= tol);
    Ok(EnergyReport {
        s: p.s,
        max_interval,
        order,
        residuals,
        max_abs_residual,
        max_positive_excursion,
        positive_intervals,
        negative_intervals,
        tolerance,
        pass,
    })
}

impl Report for EnergyReport {
    fn title(&self) -> &'static str {
        "energy balance"
    }

    fn rows(&self) -> Vec<(String, String)> {
        vec![
            ("s".into(), format!("{}", self.s)),
            ("intervals".into(), self.residuals.len().to_string()),
            ("max interval".into(), format!("{:.3e}", self.max_interval)),
            ("max |residual|".into(), format!("{:.6e}", self.max_abs_residual)),
            ("max positive excursion".into(), format!("{:.6e}", self.max_positive_excursion)),
            (
                "sign profile (+/-)".into(),
                format!("{}/{}", self.positive_intervals, self.negative_intervals),
            ),
            ("tolerance".into(), fmt_opt(self.tolerance)),
            ("verdict".into(), fmt_flag(self.pass)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpectralVectorField;
    use crate::grid::Grid3;
    use crate::init::beltrami;
    use crate::solver::{evolve, Coupling, Scheme, StepperConfig};
    use crate::testing::random_band_field;

    #[test]
    fn log_mean_matches_closed_form() {
        assert_eq!(logarithmic_mean(2.0, 2.0), 2.0);
        let (a, b) = (1.0, (-0.3f64).exp());
        assert!((logarithmic_mean(a, b) - (1.0 - b) / 0.3).abs() < 1e-15);
        let b = 1.0 + 1e-5;
        assert!((logarithmic_mean(1.0, b) - (b - 1.0) / b.ln()).abs() < 1e-12);
        assert_eq!(logarithmic_mean(0.0, 0.0), 0.0);
    }

    #[test]
    fn needs_three_samples() {
        let g = Grid3::new(8).unwrap();
        let p = ModelParams::new(0.0, 2.0).unwrap();
        let rec = evolve(&beltrami(g, 1.0), &p, &StepperConfig::new(0.1, 0.2, Scheme::Etd1, 1).unwrap(), Coupling::SelfCoupled)
            .unwrap();
        assert!(matches!(energy_balance_samples(&rec.samples[..2], &p, 1, 1.0), Err(EmhdError::Data(_))));
        assert!(energy_balance(&rec).is_ok());
    }

    #[test]
    fn beltrami_balance_is_exact() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::new(0.0, 2.0).unwrap();
        let cfg = StepperConfig::new(1e-3, 0.5, Scheme::Etd2rk, 10).unwrap();
        let rec = evolve(&beltrami(g, 1.0), &p, &cfg, Coupling::SelfCoupled).unwrap();
        let r = energy_balance(&rec).unwrap();
        assert!(r.max_positive_excursion < 1e-8);
        assert!(r.max_abs_residual < 1e-8);
        assert_eq!(r.pass, Some(true));
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let g = Grid3::new(8).unwrap();
        let p = ModelParams::new(0.0, 2.0).unwrap();
        let cfg = StepperConfig::new(0.1, 0.5, Scheme::Etd2rk, 1).unwrap();
        let rec = evolve(&SpectralVectorField::zeros(g), &p, &cfg, Coupling::SelfCoupled).unwrap();
        let r = energy_balance(&rec).unwrap();
        assert!(r.residuals.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn residual_converges_at_scheme_order() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::new(0.0, 2.2).unwrap();
        let b = random_band_field(g, 1.0, 4.0, 5);
        let b = b.scale(1.0 / b.l2_norm());
        let mut ex = Vec::new();
        for dt in [4e-3, 2e-3, 1e-3] {
            let cfg = StepperConfig::new(dt, 0.1, Scheme::Etd2rk, 1).unwrap();
            let rec = evolve(&b, &p, &cfg, Coupling::SelfCoupled).unwrap();
            ex.push(energy_balance(&rec).unwrap().max_abs_residual);
        }
        let order = (ex[0] / ex[2]).log2() / 2.0;
        assert!(order > 1.7, "{ex:?}");
    }
}
