//! Measurements on simulated trajectories: energy balance, Gevrey radius,
//! decay exponents, scaling symmetry, stability and smallness sweeps.

mod checks;
mod decay;
mod energy;
mod gevrey;

use serde::{Deserialize, Serialize};

use crate::error::{EmhdError, Result};
use crate::solver::{NormSample, RunRecord};

pub use checks::{
    scaling_symmetry_check, smallness_sweep, stability_check, sweep_row, ScalingReport, StabilityReport,
    SweepRow, SweepTable, Verdict, GROWTH_LIMIT,
};
pub use decay::{decay_fit, power_law_fit, DecayFit, LOWEST_SHELL_DOMINANCE, SPECTRAL_GAP_LIMIT};
pub use energy::{energy_balance, energy_balance_samples, logarithmic_mean, EnergyReport};
pub use gevrey::{
    gevrey_radius_fit, gevrey_rate_check, shell_amplitudes, xt_norm, GevreyFit, GevreyFitResult,
    GevreyRateFitter, GevreyRateReport, ShellAmplitude, XtNorm, AMPLITUDE_FLOOR, RATE_FIT_WIDTH,
};

/// Machine (JSON) and human (aligned text) renderings of a report.
pub trait Report: Serialize {
    fn title(&self) -> &'static str;

    /// Key/value lines of the text rendering.
    fn rows(&self) -> Vec<(String, String)>;

    fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn to_text(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = format!("{}\n", self.title());
        for (k, v) in rows {
            out.push_str(&format!("  {k:<width$}  {v}\n"));
        }
        out
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"))
}

pub(crate) fn fmt_flag(v: Option<bool>) -> String {
    match v {
        Some(true) => "PASS".into(),
        Some(false) => "FAIL".into(),
        None => "n/a".into(),
    }
}

/// A scalar quantity sampled along a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl NormSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(EmhdError::Data(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EmhdError::Data("times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(EmhdError::Data("norm values must be nonnegative".into()));
        }
        Ok(Self {
            label: label.into(),
            times,
            values,
        })
    }

    pub fn from_samples(label: &str, samples: &[NormSample], f: impl Fn(&NormSample) -> f64) -> Result<Self> {
        Self::new(
            label,
            samples.iter().map(|s| s.time).collect(),
            samples.iter().map(f).collect(),
        )
    }

    /// `‖B(t)‖_{Ḣ^{σ_c}}` and `‖B(t)‖_{Ḣ^{σ_c+κ/2}}` of a run.
    pub fn critical(record: &RunRecord) -> Result<[Self; 2]> {
        Ok([
            Self::from_samples("h_sigma_c", &record.samples, |s| s.hs_sigma_c)?,
            Self::from_samples("h_sigma_c_half_kappa", &record.samples, |s| s.hs_sigma_c_half_kappa)?,
        ])
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `(∫ v(t)^2 dt)^{1/2}` by the trapezoid rule.
    pub fn l2_in_time(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] * v[0] + v[1] * v[1]))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_validation() {
        assert!(NormSeries::new("a", vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(NormSeries::new("a", vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(NormSeries::new("a", vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        let s = NormSeries::new("a", vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.sup(), 3.0);
        // ∫ of the piecewise-linear interpolant of v² = 1, 9, 4.
        assert!((s.l2_in_time() - (5.0f64 + 6.5).sqrt()).abs() < 1e-14);
    }
}
