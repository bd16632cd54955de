use serde::Serialize;

use crate::error::{EmhdError, Result};
use crate::field::SpectralField;
use crate::model::ModelParams;
use crate::numerics::{linear_fit, r_squared};
use crate::solver::Trajectory;
use crate::spectral::sobolev_norm;

use super::{fmt_flag, Report};

/// Upper bound on `t_hi · μ · k_min^κ`; past it the lowest mode's exponential
/// decay dominates.
pub const SPECTRAL_GAP_LIMIT: f64 = 0.2;

/// Energy fraction in the lowest band at which data counts as single-shell.
pub const LOWEST_SHELL_DOMINANCE: f64 = 0.99;

const MIN_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub k_order: u32,
    pub delta: f64,
    pub window: (f64, f64),
    pub slope: f64,
    /// `-(k + δ)/κ`
    pub slope_expected: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares slope, intercept and `R²` of `ln v` against `ln t`.
pub fn power_law_fit(times: &[f64], values: &[f64]) -> Result<(f64, f64, f64)> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(EmhdError::Data("need at least two (t, v) pairs".into()));
    }
    if times.iter().chain(values).any(|v| !(*v > 0.0)) {
        return Err(EmhdError::Fit("power-law fit needs positive times and values".into()));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = linear_fit(&x, &y).ok_or_else(|| EmhdError::Fit("degenerate times".into()))?;
    let rows: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi]).collect();
    let r2 = r_squared(&rows, &y, &vec![1.0; x.len()], &[intercept, slope]);
    Ok((slope, intercept, r2))
}

/// Fits the decay of `‖Λ^k B(t)‖_{Ḣ^{σ_c+δ}}` over `window`.
pub fn decay_fit(traj: &Trajectory, p: &ModelParams, k_order: u32, delta: f64, window: (f64, f64)) -> Result<DecayFit> {
    let (t_lo, t_hi) = window;
    if !(t_lo > 0.0 && t_lo < t_hi) {
        return Err(EmhdError::Window(format!("need 0 < t_lo < t_hi, got ({t_lo}, {t_hi})")));
    }
    if !(delta > 0.0) {
        return Err(EmhdError::Parameter(format!("delta must be positive, got {delta}")));
    }
    let idx: Vec<usize> = (0..traj.len())
        .filter(|&i| traj.times[i] >= t_lo && traj.times[i] <= t_hi)
        .collect();
    if idx.len() < MIN_POINTS {
        return Err(EmhdError::Data(format!(
            "{} snapshots in the window, at least {MIN_POINTS} needed",
            idx.len()
        )));
    }
    let first = &traj.states[idx[0]];
    let grid = *first.grid();
    let k_min = grid.min_wavenumber();
    if t_hi * p.mu * k_min.powf(p.kappa) > SPECTRAL_GAP_LIMIT {
        return Err(EmhdError::Window(format!(
            "t_hi = {t_hi} reaches the spectral-gap regime (limit {:.4})",
            SPECTRAL_GAP_LIMIT / (p.mu * k_min.powf(p.kappa))
        )));
    }
    let total = first.l2_norm_sq();
    if total > 0.0 {
        let low = first.map_radial(|k| if k < 2.0 * k_min { 1.0 } else { 0.0 }).l2_norm_sq();
        if low >= LOWEST_SHELL_DOMINANCE * total {
            return Err(EmhdError::Window(format!(
                "{:.1}% of the energy sits in the lowest shell; the decay is exponential",
                100.0 * low / total
            )));
        }
    }
    let sigma = p.sigma_c() + delta + k_order as f64;
    let mut times = Vec::with_capacity(idx.len());
    let mut values = Vec::with_capacity(idx.len());
    for &i in &idx {
        times.push(traj.times[i]);
        values.push(sobolev_norm(&traj.states[i], sigma)?);
    }
    let (slope, _, r2) = power_law_fit(&times, &values)?;
    Ok(DecayFit {
        k_order,
        delta,
        window,
        slope,
        slope_expected: -(k_order as f64 + delta) / p.kappa,
        r_squared: r2,
        points: idx.len(),
    })
}

impl DecayFit {
    /// Decay at least as fast as predicted, with 0.3 slack.
    pub fn consistent(&self) -> bool {
        self.slope <= self.slope_expected + 0.3
    }
}

impl Report for DecayFit {
    fn title(&self) -> &'static str {
        "decay exponent"
    }

    fn rows(&self) -> Vec<(String, String)> {
        vec![
            ("k".into(), self.k_order.to_string()),
            ("delta".into(), self.delta.to_string()),
            ("window".into(), format!("[{:.4e}, {:.4e}]", self.window.0, self.window.1)),
            ("points".into(), self.points.to_string()),
            ("slope".into(), format!("{:.6}", self.slope)),
            ("expected slope".into(), format!("{:.6}", self.slope_expected)),
            ("r squared".into(), format!("{:.6}", self.r_squared)),
            ("verdict".into(), fmt_flag(Some(self.consistent()))),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;
    use crate::init::{beltrami, power_law};

    fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let t = log_times(0.01, 1.0, 12);
        let v: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-0.7)).collect();
        let (slope, c, r2) = power_law_fit(&t, &v).unwrap();
        assert!((slope + 0.7).abs() < 1e-10);
        assert!((c - 3f64.ln()).abs() < 1e-10);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_rules() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::new(0.0, 2.0).unwrap();
        let bel = beltrami(g, 1.0);
        let traj = Trajectory::heat_flow(&bel, &log_times(0.01, 0.15, 8), &p);
        assert!(matches!(decay_fit(&traj, &p, 0, 0.01, (0.01, 0.15)), Err(EmhdError::Window(_))));
        let b = power_law(g, p.sigma_c() + 1.5, 1.0, 8.0, 1).unwrap();
        let traj = Trajectory::heat_flow(&b, &log_times(0.01, 0.5, 8), &p);
        assert!(matches!(decay_fit(&traj, &p, 0, 0.01, (0.01, 0.5)), Err(EmhdError::Window(_))));
        assert!(matches!(decay_fit(&traj, &p, 0, 0.01, (0.2, 0.1)), Err(EmhdError::Window(_))));
        assert!(matches!(decay_fit(&traj, &p, 0, 0.01, (0.01, 0.05)), Err(EmhdError::Data(_))));
    }

    #[test]
    fn heat_flow_from_borderline_data() {
        let g = Grid3::new(64).unwrap();
        let p = ModelParams::new(0.0, 2.0).unwrap();
        let b = power_law(g, p.sigma_c() + 1.5, 1.0, g.max_wavenumber(), 2).unwrap();
        let traj = Trajectory::heat_flow(&b, &log_times(0.01, 0.2, 10), &p);
        let f0 = decay_fit(&traj, &p, 0, 0.01, (0.01, 0.2)).unwrap();
        let f1 = decay_fit(&traj, &p, 1, 0.01, (0.01, 0.2)).unwrap();
        assert!(f0.consistent(), "{f0:?}");
        assert!((f1.slope - f0.slope + 0.5).abs() < 0.3, "{f0:?} {f1:?}");
    }
}
