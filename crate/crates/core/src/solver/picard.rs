use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{EmhdError, Result};
use crate::field::SpectralVectorField;
use crate::model::ModelParams;
use crate::spectral::sobolev_norm;

use super::{evolve, Coupling, StepperConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub max_outer: usize,
    /// Stop once `‖B^{n+1} - B^n‖ < contraction_tol · ‖B^1 - B^0‖`.
    pub contraction_tol: f64,
    /// Spatial exponent of the difference norm, `2κ/3` by default.
    pub diff_norm_sigma: f64,
    /// Time exponent of the difference norm, 3 by default.
    pub diff_norm_time_p: f64,
}

impl PicardConfig {
    pub fn for_params(p: &ModelParams) -> Self {
        Self {
            max_outer: 30,
            contraction_tol: 1e-8,
            diff_norm_sigma: 2.0 * p.kappa / 3.0,
            diff_norm_time_p: 3.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_outer == 0 {
            return Err(EmhdError::Parameter("max_outer must be at least 1".into()));
        }
        if !(self.contraction_tol > 0.0) || !(self.diff_norm_time_p >= 1.0) {
            return Err(EmhdError::Parameter(
                "contraction_tol must be positive and the time exponent at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardIteration {
    /// `n` in `B^n`.
    pub index: usize,
    /// `‖B^n - B^{n-1}‖_{L^p_T Ḣ^σ}`
    pub diff_norm: f64,
    /// `diff_norm` over the previous one; for the first iterate, over `‖B^0‖`.
    pub ratio: f64,
    /// `sup_t ‖B^n(t)‖_{Ḣ^{σ_c}}`
    pub sup_critical_norm: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub iterations: Vec<PicardIteration>,
}

impl ConvergenceTrace {
    pub fn last_ratio(&self) -> Option<f64> {
        self.iterations.last().map(|i| i.ratio)
    }
}

/// Differences this far below `‖B^0‖` are rounding noise.
const ROUNDOFF_FLOOR: f64 = 1e-14;

fn quotient(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// `(∫_0^T ‖a(t) - b(t)‖_{Ḣ^σ}^p dt)^{1/p}` by the trapezoid rule on the common times.
pub fn trajectory_difference_norm(a: &Trajectory, b: Option<&Trajectory>, sigma: f64, p: f64) -> Result<f64> {
    if let Some(b) = b {
        if a.times.len() != b.times.len() {
            return Err(EmhdError::Shape("trajectories sampled at different times".into()));
        }
    }
    let mut values = Vec::with_capacity(a.len());
    for (i, s) in a.states.iter().enumerate() {
        let v = match b {
            Some(b) => sobolev_norm(&(s - &b.states[i]), sigma)?,
            None => sobolev_norm(s, sigma)?,
        };
        values.push(v.powf(p));
    }
    let mut acc = 0.0;
    for i in 1..values.len() {
        acc += 0.5 * (a.times[i] - a.times[i - 1]) * (values[i] + values[i - 1]);
    }
    Ok(acc.powf(1.0 / p))
}

fn sup_norm(traj: &Trajectory, sigma: f64) -> Result<f64> {
    let mut m = 0.0_f64;
    for s in &traj.states {
        m = m.max(sobolev_norm(s, sigma)?);
    }
    Ok(m)
}

/// Runs `B^0 = e^{-tL} B_0`, `B^{n+1}` = frozen-coupling evolution against
/// `q = B^n`, until the successive differences contract below the tolerance.
pub fn picard_solve(
    b0: &SpectralVectorField,
    p: &ModelParams,
    cfg: &PicardConfig,
    stepper: &StepperConfig,
) -> Result<(Trajectory, ConvergenceTrace)> {
    cfg.validate()?;
    stepper.validate()?;
    let sigma = cfg.diff_norm_sigma;
    let tp = cfg.diff_norm_time_p;
    let sc = p.sigma_c();

    let mut current = Trajectory::heat_flow(b0, &stepper.snapshot_times(), p);
    let reference = trajectory_difference_norm(&current, None, sigma, tp)?;
    let mut trace = ConvergenceTrace::default();
    let mut first_diff = 0.0;
    let mut previous_diff = reference;
    let mut growing = 0;

    for index in 1..=cfg.max_outer {
        let start = Instant::now();
        let record = evolve(b0, p, stepper, Coupling::Frozen(&current))?.into_result()?;
        let next = record.snapshots;
        let diff = trajectory_difference_norm(&next, Some(&current), sigma, tp)?;
        let ratio = quotient(diff, previous_diff);
        trace.iterations.push(PicardIteration {
            index,
            diff_norm: diff,
            ratio,
            sup_critical_norm: sup_norm(&next, sc)?,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        current = next;
        if index == 1 {
            first_diff = diff;
        }
        let settled = diff <= ROUNDOFF_FLOOR * reference;
        if settled || (index > 1 && diff < cfg.contraction_tol * first_diff) {
            return Ok((current, trace));
        }
        growing = if index > 1 && ratio >= 1.0 { growing + 1 } else { 0 };
        if growing >= 3 || !diff.is_finite() {
            return Err(EmhdError::Divergence { trace: Box::new(trace) });
        }
        previous_diff = diff;
    }
    Ok((current, trace))
}
