use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralVectorField};
use crate::lp::{gevrey_norm, GevreyParams};
use crate::model::ModelParams;
use crate::numerics::{linear_fit, r_squared, weighted_least_squares};
use crate::solver::Trajectory;

use super::{fmt_flag, fmt_opt, Report};

/// Shells whose squared amplitude falls below this are left out of fits.
pub const AMPLITUDE_FLOOR: f64 = 1e-24;

/// Width, in octaves, of the Gaussian weight around the dissipation scale.
pub const RATE_FIT_WIDTH: f64 = 0.5;

const MIN_SHELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellAmplitude {
    pub j: i32,
    /// Largest `|F(k)|` over `2^j ≤ |k| < 2^{j+1}`.
    pub amplitude: f64,
}

fn band_index(k: f64) -> i32 {
    (k.log2() + 1e-12).floor() as i32
}

/// Max coefficient magnitude in each sharp dyadic band, for every band that
/// contains a lattice mode.
pub fn shell_amplitudes(f: &SpectralVectorField) -> Vec<ShellAmplitude> {
    let grid = *f.grid();
    let mut bands: BTreeMap<i32, f64> = BTreeMap::new();
    for idx in 1..grid.len() {
        let k = grid.wavenumber_magnitude(idx);
        let a = f.at(idx).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let e = bands.entry(band_index(k)).or_insert(0.0);
        *e = e.max(a);
    }
    bands
        .into_iter()
        .map(|(j, amplitude)| ShellAmplitude { j, amplitude })
        .collect()
}

/// Shells usable for a fit: above the floor and below the top two bands
/// that hold retained modes.
fn eligible(f: &SpectralVectorField) -> Vec<ShellAmplitude> {
    let top = band_index(f.grid().max_retained_wavenumber());
    shell_amplitudes(f)
        .into_iter()
        .filter(|s| s.j <= top - 2 && s.amplitude * s.amplitude > AMPLITUDE_FLOOR)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevreyFitResult {
    pub lambda_hat: f64,
    /// Fitted slope before clamping at zero.
    pub lambda_raw: f64,
    pub r_squared: f64,
    pub fit_band: (i32, i32),
    pub shells: usize,
}

fn fit_shells(points: &[(i32, f64)], alpha: f64, weights: &[f64]) -> Result<GevreyFitResult> {
    if points.len() < MIN_SHELLS {
        return Err(EmhdError::Fit(format!(
            "{} usable shells, at least {MIN_SHELLS} needed",
            points.len()
        )));
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|&(j, _)| vec![1.0, -(2f64.powi(j)).powf(alpha)])
        .collect();
    let y: Vec<f64> = points.iter().map(|&(_, v)| v).collect();
    let beta = weighted_least_squares(&rows, &y, weights)
        .ok_or_else(|| EmhdError::Fit("singular normal equations".into()))?;
    Ok(GevreyFitResult {
        lambda_hat: beta[1].max(0.0),
        lambda_raw: beta[1],
        r_squared: r_squared(&rows, &y, weights, &beta),
        fit_band: (points[0].0, points[points.len() - 1].0),
        shells: points.len(),
    })
}

/// Fits `log A_j ≈ c - λ (2^j)^α` to the shell amplitudes of one snapshot.
pub fn gevrey_radius_fit(snapshot: &SpectralVectorField, alpha: f64) -> Result<GevreyFitResult> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(EmhdError::Parameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let points: Vec<(i32, f64)> = eligible(snapshot)
        .iter()
        .map(|s| (s.j, s.amplitude.ln()))
        .collect();
    let w = vec![1.0; points.len()];
    fit_shells(&points, alpha, &w)
}

/// Radius gained since the initial snapshot, measured at the dissipation scale.
///
/// The fitted quantity is `log(A_j(t) / A_j(0))`, which removes the algebraic
/// profile of the data, weighted by a Gaussian in `j` centred on
/// `log2 k*(t)` with `k* = (μt)^{-1/κ}` clamped to the usable shells.
pub struct GevreyRateFitter {
    initial: Vec<ShellAmplitude>,
    params: ModelParams,
    alpha: f64,
    pub width: f64,
}

impl GevreyRateFitter {
    pub fn new(initial: &SpectralVectorField, params: &ModelParams, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(EmhdError::Parameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self {
            initial: eligible(initial),
            params: *params,
            alpha,
            width: RATE_FIT_WIDTH,
        })
    }

    /// Whether the initial data spreads over enough shells for a fit.
    pub fn applicable(&self) -> bool {
        self.initial.len() >= MIN_SHELLS
    }

    pub fn fit(&self, t: f64, state: &SpectralVectorField) -> Result<GevreyFitResult> {
        let now = eligible(state);
        let points: Vec<(i32, f64)> = self
            .initial
            .iter()
            .filter_map(|a| {
                now.iter()
                    .find(|b| b.j == a.j)
                    .map(|b| (a.j, (b.amplitude / a.amplitude).ln()))
            })
            .collect();
        if points.is_empty() {
            return Err(EmhdError::Fit("no shells shared with the initial data".into()));
        }
        let (lo, hi) = (points[0].0 as f64, points[points.len() - 1].0 as f64);
        let centre = if t > 0.0 {
            let k_star = (self.params.mu * t).powf(-1.0 / self.params.kappa);
            k_star.log2().clamp(lo, hi)
        } else {
            lo
        };
        let w: Vec<f64> = points
            .iter()
            .map(|&(j, _)| (-(j as f64 - centre).powi(2) / (2.0 * self.width * self.width)).exp())
            .collect();
        fit_shells(&points, self.alpha, &w)
    }
}

/// Fitted radii along a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GevreyFit {
    pub alpha: f64,
    pub times: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub r_squared: Vec<f64>,
    pub fit_band: Vec<(i32, i32)>,
}

impl GevreyFit {
    pub fn push(&mut self, t: f64, r: &GevreyFitResult) {
        self.times.push(t);
        self.lambda_hat.push(r.lambda_hat);
        self.r_squared.push(r.r_squared);
        self.fit_band.push(r.fit_band);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GevreyRateReport {
    pub applicable: bool,
    pub alpha: f64,
    pub kappa: f64,
    pub fit: GevreyFit,
    pub increasing: Option<bool>,
    /// `λ̂(t_1) / λ̂(t_end)` with `t_1` the snapshot nearest `t_end / 100`.
    pub early_ratio: Option<f64>,
    pub early_time: Option<f64>,
    /// Log-log slope of `λ̂` over `[t_end / 10, t_end]`.
    pub slope: Option<f64>,
    pub slope_expected: f64,
    pub slope_within_30pct: Option<bool>,
}

impl GevreyRateReport {
    pub fn not_applicable(alpha: f64, kappa: f64) -> Self {
        Self {
            applicable: false,
            alpha,
            kappa,
            fit: GevreyFit {
                alpha,
                ..GevreyFit::default()
            },
            increasing: None,
            early_ratio: None,
            early_time: None,
            slope: None,
            slope_expected: alpha / kappa,
            slope_within_30pct: None,
        }
    }

    pub fn from_fit(fit: GevreyFit, kappa: f64) -> Self {
        let alpha = fit.alpha;
        let mut r = Self::not_applicable(alpha, kappa);
        r.applicable = true;
        let n = fit.times.len();
        if n >= 2 {
            r.increasing = Some(fit.lambda_hat.windows(2).all(|w| w[1] > w[0]));
            let t_end = fit.times[n - 1];
            let target = t_end / 100.0;
            let i1 = (0..n)
                .filter(|&i| fit.times[i] > 0.0)
                .min_by(|&a, &b| (fit.times[a] - target).abs().total_cmp(&(fit.times[b] - target).abs()));
            if let Some(i1) = i1 {
                if fit.lambda_hat[n - 1] > 0.0 {
                    r.early_ratio = Some(fit.lambda_hat[i1] / fit.lambda_hat[n - 1]);
                    r.early_time = Some(fit.times[i1]);
                }
            }
            let (x, y): (Vec<f64>, Vec<f64>) = fit
                .times
                .iter()
                .zip(&fit.lambda_hat)
                .filter(|(t, l)| **t >= t_end / 10.0 * (1.0 - 1e-12) && **l > 0.0)
                .map(|(t, l)| (t.ln(), l.ln()))
                .unzip();
            if x.len() >= 3 {
                r.slope = linear_fit(&x, &y).map(|(slope, _)| slope);
            }
            r.slope_within_30pct = r.slope.map(|s| (s - r.slope_expected).abs() <= 0.3 * r.slope_expected);
        }
        r.fit = fit;
        r
    }

    /// Increasing, vanishing as `t → 0`, and growing like `t^{α/κ}`.
    pub fn pass(&self) -> Option<bool> {
        if !self.applicable {
            return None;
        }
        Some(
            self.increasing == Some(true)
                && self.early_ratio.is_some_and(|r| r < 0.05)
                && self.slope_within_30pct == Some(true),
        )
    }
}

/// Fits the radius at every snapshot of `traj`, whose first entry must be `t = 0`.
pub fn gevrey_rate_check(traj: &Trajectory, p: &ModelParams, alpha: f64) -> Result<GevreyRateReport> {
    let (Some(&t0), Some(b0)) = (traj.times.first(), traj.states.first()) else {
        return Err(EmhdError::Data("empty trajectory".into()));
    };
    if t0 != 0.0 {
        return Err(EmhdError::Precondition("the first snapshot must be the initial data".into()));
    }
    let fitter = GevreyRateFitter::new(b0, p, alpha)?;
    if !fitter.applicable() {
        return Ok(GevreyRateReport::not_applicable(alpha, p.kappa));
    }
    let mut fit = GevreyFit {
        alpha,
        ..GevreyFit::default()
    };
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        fit.push(t, &fitter.fit(t, s)?);
    }
    Ok(GevreyRateReport::from_fit(fit, p.kappa))
}

impl Report for GevreyRateReport {
    fn title(&self) -> &'static str {
        "gevrey radius growth"
    }

    fn rows(&self) -> Vec<(String, String)> {
        let mut rows = vec![
            ("applicable".into(), self.applicable.to_string()),
            ("alpha".into(), self.alpha.to_string()),
            ("kappa".into(), self.kappa.to_string()),
        ];
        if !self.applicable {
            return rows;
        }
        rows.extend([
            ("snapshots".into(), self.fit.times.len().to_string()),
            (
                "final radius".into(),
                fmt_opt(self.fit.lambda_hat.last().copied()),
            ),
            ("increasing".into(), format!("{:?}", self.increasing)),
            ("early ratio".into(), fmt_opt(self.early_ratio)),
            ("slope".into(), fmt_opt(self.slope)),
            ("expected slope".into(), format!("{:.6}", self.slope_expected)),
            ("verdict".into(), fmt_flag(self.pass())),
        ]);
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XtNorm {
    pub value: f64,
    /// Time at which the supremum is attained.
    pub time: f64,
}

/// `sup_{t>0} t^{δ/κ} ‖B(t)‖_{G^{λ(t)}_{α,σ_c+δ}}` over the snapshots, with
/// `λ(t) = ε t^{α/κ}`. Snapshots at `t = 0` are skipped.
pub fn xt_norm(traj: &Trajectory, p: &ModelParams, alpha: f64, delta: f64, eps_rate: f64) -> Result<XtNorm> {
    let base = GevreyParams::with_rate(alpha, 0.0, eps_rate)?;
    let sigma = p.sigma_c() + delta;
    let mut best: Option<XtNorm> = None;
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        if t <= 0.0 {
            continue;
        }
        let g = base.at_time(t, p.kappa);
        let v = t.powf(delta / p.kappa) * gevrey_norm(s, &g, sigma)?;
        if best.is_none_or(|b| v > b.value) {
            best = Some(XtNorm { value: v, time: t });
        }
    }
    best.ok_or_else(|| EmhdError::Data("no snapshot with t > 0".into()))
}
