use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralVectorField};
use crate::init::{dilate, rescale_to_norm};
use crate::model::ModelParams;
use crate::solver::{evolve, evolve_with, picard_solve, Coupling, PicardConfig, RunStatus, StepperConfig};

use super::{fmt_flag, fmt_opt, Report};

/// Perturbations may grow by at most this factor over the window.
pub const GROWTH_LIMIT: f64 = 10.0;

fn final_state(b0: &SpectralVectorField, p: &ModelParams, cfg: &StepperConfig) -> Result<SpectralVectorField> {
    let mut last = None;
    evolve_with(b0, p, cfg, Coupling::SelfCoupled, |_, _, b| {
        last = Some(b.clone());
        Ok(())
    })?
    .into_result()?;
    last.ok_or_else(|| EmhdError::Data("run produced no snapshot".into()))
}

fn relative(diff: f64, reference: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / reference
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingReport {
    pub lambda_scale: usize,
    pub t_star: f64,
    pub coarse_n: usize,
    pub fine_n: usize,
    /// `λ^κ t*`, the end time of the coarse run.
    pub coarse_t_end: f64,
    pub dt: f64,
    pub discrepancy: f64,
}

/// Compares `λ^{κ+s-2} B(λ^κ t*, λx)` from a coarse run against the fine run
/// started from the rescaled data. Both runs use `stepper.dt`; the fine run
/// ends at `stepper.t_end = t*`.
pub fn scaling_symmetry_check(
    b0: &SpectralVectorField,
    p: &ModelParams,
    lambda_scale: usize,
    stepper: &StepperConfig,
) -> Result<ScalingReport> {
    if lambda_scale < 2 {
        return Err(EmhdError::Parameter(format!(
            "the dilation factor must be an integer >= 2, got {lambda_scale}"
        )));
    }
    let lam = lambda_scale as f64;
    let amp = lam.powf(p.kappa + p.s - 2.0);
    let t_star = stepper.t_end;
    let coarse_t = lam.powf(p.kappa) * t_star;
    let coarse_cfg = StepperConfig::new(stepper.dt, coarse_t, stepper.scheme, usize::MAX)?;
    let fine_cfg = StepperConfig::new(stepper.dt, t_star, stepper.scheme, usize::MAX)?;

    let b0_fine = dilate(b0, lambda_scale)?.scale(amp);
    let coarse_end = final_state(b0, p, &coarse_cfg)?;
    let fine_end = final_state(&b0_fine, p, &fine_cfg)?;
    let mapped = dilate(&coarse_end, lambda_scale)?.scale(amp);
    Ok(ScalingReport {
        lambda_scale,
        t_star,
        coarse_n: b0.grid().n(),
        fine_n: fine_end.grid().n(),
        coarse_t_end: coarse_t,
        dt: stepper.dt,
        discrepancy: relative((&mapped - &fine_end).l2_norm(), fine_end.l2_norm()),
    })
}

impl Report for ScalingReport {
    fn title(&self) -> &'static str {
        "scaling symmetry"
    }

    fn rows(&self) -> Vec<(String, String)> {
        vec![
            ("lambda".into(), self.lambda_scale.to_string()),
            ("grids".into(), format!("{} / {}", self.coarse_n, self.fine_n)),
            ("t*".into(), self.t_star.to_string()),
            ("coarse end time".into(), format!("{:.6}", self.coarse_t_end)),
            ("dt".into(), self.dt.to_string()),
            ("relative L2 discrepancy".into(), format!("{:.6e}", self.discrepancy)),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub eta: f64,
    pub times: Vec<f64>,
    /// `‖B̄(t)‖ / ‖B̄(0)‖` at each snapshot.
    pub ratios: Vec<f64>,
    pub growth_factor: f64,
    /// Smallest `C` with `‖B̄(t)‖ ≤ ‖B̄(0)‖ exp(C ∫_0^t ‖B‖²_{Ḣ^{σ_c+κ/2}})`.
    pub c_fit: f64,
    /// `‖B̄_{η/2}(T)‖ / ‖B̄_η(T)‖`, ideally 1/2.
    pub half_response: Option<f64>,
    pub bounded: bool,
    pub linear_response: Option<bool>,
}

/// Runs `B_0`, `B_0 + η d` and `B_0 + η d / 2` with `d` the unit-L² direction
/// of `direction`, and measures how the differences evolve.
pub fn stability_check(
    b0: &SpectralVectorField,
    direction: &SpectralVectorField,
    eta: f64,
    p: &ModelParams,
    stepper: &StepperConfig,
) -> Result<StabilityReport> {
    if !(eta >= 0.0) {
        return Err(EmhdError::Parameter(format!("eta must be nonnegative, got {eta}")));
    }
    let dn = direction.l2_norm();
    let d = if dn > 0.0 { direction.scale(1.0 / dn) } else { direction.clone() };
    if eta > 0.0 && dn == 0.0 {
        return Err(EmhdError::Parameter("zero perturbation direction".into()));
    }
    let mut b_full = b0.clone();
    b_full.axpy(eta, &d);
    let mut b_half = b0.clone();
    b_half.axpy(0.5 * eta, &d);

    let base = evolve(b0, p, stepper, Coupling::SelfCoupled)?.into_result()?;
    let full = evolve(&b_full, p, stepper, Coupling::SelfCoupled)?.into_result()?;
    let half = evolve(&b_half, p, stepper, Coupling::SelfCoupled)?.into_result()?;

    let diffs: Vec<f64> = base
        .snapshots
        .states
        .iter()
        .zip(&full.snapshots.states)
        .map(|(a, b)| (b - a).l2_norm())
        .collect();
    let d0 = diffs[0];
    let ratios: Vec<f64> = diffs.iter().map(|&x| relative(x, d0)).collect();
    let growth_factor = ratios.iter().copied().fold(0.0, f64::max);

    let mut integral = 0.0;
    let mut c_fit = 0.0_f64;
    for i in 1..full.samples.len() {
        let (a, b) = (&full.samples[i - 1], &full.samples[i]);
        integral += 0.5
            * (b.time - a.time)
            * (a.hs_sigma_c_half_kappa.powi(2) + b.hs_sigma_c_half_kappa.powi(2));
        if integral > 0.0 && ratios[i] > 0.0 {
            c_fit = c_fit.max(ratios[i].ln() / integral);
        }
    }

    let half_response = if d0 > 0.0 {
        let last_full = diffs[diffs.len() - 1];
        let last_half = (half.final_state().expect("completed run") - base.final_state().expect("completed run"))
            .l2_norm();
        (last_full > 0.0).then(|| last_half / last_full)
    } else {
        None
    };
    Ok(StabilityReport {
        eta,
        times: base.snapshots.times.clone(),
        ratios,
        growth_factor,
        c_fit,
        half_response,
        bounded: growth_factor <= GROWTH_LIMIT,
        linear_response: half_response.map(|r| (r / 0.5 - 1.0).abs() <= 0.2),
    })
}

impl Report for StabilityReport {
    fn title(&self) -> &'static str {
        "perturbation stability"
    }

    fn rows(&self) -> Vec<(String, String)> {
        vec![
            ("eta".into(), format!("{:e}", self.eta)),
            ("snapshots".into(), self.times.len().to_string()),
            ("growth factor".into(), format!("{:.6}", self.growth_factor)),
            ("fitted C".into(), format!("{:.6e}", self.c_fit)),
            ("half-eta response".into(), fmt_opt(self.half_response)),
            ("bounded".into(), fmt_flag(Some(self.bounded))),
            ("linear response".into(), fmt_flag(self.linear_response)),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Critical norm stays within twice its initial value and Picard contracts.
    Global,
    Unbounded,
    NotContracting,
    BlowUp,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Global => "global",
            Verdict::Unbounded => "unbounded",
            Verdict::NotContracting => "not_contracting",
            Verdict::BlowUp => "blow_up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Target `‖B_0‖_{Ḣ^{σ_c}}`.
    pub amplitude: f64,
    /// `sup_t ‖B(t)‖_{Ḣ^{σ_c}} / ‖B_0‖_{Ḣ^{σ_c}}`
    pub sup_ratio: f64,
    /// Largest successive-difference ratio after the first Picard iterate.
    pub contraction_ratio: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Set when a global verdict follows a non-global one at smaller amplitude.
    pub non_monotone: bool,
}

impl SweepTable {
    pub fn from_rows(rows: Vec<SweepRow>) -> Self {
        let mut sorted: Vec<&SweepRow> = rows.iter().collect();
        sorted.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
        let mut seen_bad = false;
        let mut non_monotone = false;
        for r in sorted {
            if r.verdict == Verdict::Global {
                non_monotone |= seen_bad;
            } else {
                seen_bad = true;
            }
        }
        Self { rows, non_monotone }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["amplitude", "sup_critical_ratio", "contraction_ratio", "verdict"])?;
        for r in &self.rows {
            wtr.write_record([
                format!("{:e}", r.amplitude),
                format!("{:.6e}", r.sup_ratio),
                r.contraction_ratio.map_or_else(String::new, |c| format!("{c:.6e}")),
                r.verdict.as_str().to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn contraction(ratios: impl Iterator<Item = f64>, first: Option<f64>) -> Option<f64> {
    let later = ratios.fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    later.or(first)
}

/// One row of a smallness sweep: `shape` rescaled to `amplitude` in `Ḣ^{σ_c}`.
pub fn sweep_row(
    shape: &SpectralVectorField,
    amplitude: f64,
    p: &ModelParams,
    stepper: &StepperConfig,
    picard: &PicardConfig,
) -> Result<SweepRow> {
    let sc = p.sigma_c();
    let b0 = rescale_to_norm(shape, sc, amplitude)?;
    let record = evolve_with(&b0, p, stepper, Coupling::SelfCoupled, |_, _, _| Ok(()))?;
    let initial = record.samples.first().map_or(0.0, |s| s.hs_sigma_c);
    let sup = record.samples.iter().map(|s| s.hs_sigma_c).fold(0.0, f64::max);
    let sup_ratio = relative(sup, initial);
    if let RunStatus::BlowUp { .. } = record.status {
        return Ok(SweepRow {
            amplitude,
            sup_ratio: f64::INFINITY,
            contraction_ratio: None,
            verdict: Verdict::BlowUp,
        });
    }
    let (contraction_ratio, contracts) = match picard_solve(&b0, p, picard, stepper) {
        Ok((_, trace)) => {
            let first = trace.iterations.first().map(|i| i.ratio);
            let c = contraction(trace.iterations.iter().skip(1).map(|i| i.ratio), first);
            (c, c.is_none_or(|c| c < 1.0))
        }
        Err(EmhdError::Divergence { trace }) => (trace.last_ratio(), false),
        Err(EmhdError::BlowUp { .. }) => (None, false),
        Err(e) => return Err(e),
    };
    let verdict = if sup_ratio > 2.0 {
        Verdict::Unbounded
    } else if !contracts {
        Verdict::NotContracting
    } else {
        Verdict::Global
    };
    Ok(SweepRow {
        amplitude,
        sup_ratio,
        contraction_ratio,
        verdict,
    })
}

/// Runs [`sweep_row`] for every amplitude; blow-ups become rows.
pub fn smallness_sweep(
    shape: &SpectralVectorField,
    amplitudes: &[f64],
    p: &ModelParams,
    stepper: &StepperConfig,
    picard: &PicardConfig,
) -> Result<SweepTable> {
    let rows = amplitudes
        .iter()
        .map(|&a| sweep_row(shape, a, p, stepper, picard))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::from_rows(rows))
}
