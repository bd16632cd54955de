//! Time integration: the exact linear semigroup, exponential time
//! differencing for the nonlinear flow, the Picard approximating sequence and
//! the regularized mild-solution fixed point.

mod mild;
mod picard;

use serde::{Deserialize, Serialize};

use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralVectorField};
use crate::model::{hall_nonlinearity, ModelParams};
use crate::numerics::{phi1, phi2};
use crate::spectral::{dealias, fractional_laplacian, leray_project, sobolev_norm};

pub use mild::{linear_mild_solve, MildConfig, MildSolution};
pub use picard::{picard_solve, trajectory_difference_norm, ConvergenceTrace, PicardConfig, PicardIteration};

/// Any norm above this counts as blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Etd1,
    #[default]
    Etd2rk,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Etd1 => 1,
            Scheme::Etd2rk => 2,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = EmhdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "etd1" => Ok(Scheme::Etd1),
            "etd2rk" => Ok(Scheme::Etd2rk),
            other => Err(EmhdError::Parameter(format!("unknown scheme `{other}` (etd1 | etd2rk)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Etd1 => "etd1",
            Scheme::Etd2rk => "etd2rk",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub snapshot_every: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme, snapshot_every: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            scheme,
            snapshot_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EmhdError::Parameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(EmhdError::Parameter(format!("t_end = {} must be positive", self.t_end)));
        }
        if self.dt >= self.t_end {
            return Err(EmhdError::Parameter(format!(
                "dt = {} must be smaller than t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.snapshot_every == 0 {
            return Err(EmhdError::Parameter("snapshot_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn n_steps(&self) -> usize {
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() <= 1e-12 * self.t_end {
            n as usize
        } else {
            (self.t_end / self.dt).ceil() as usize
        }
    }

    /// Time of step `m`.
    pub fn time(&self, m: usize) -> f64 {
        if m >= self.n_steps() {
            self.t_end
        } else {
            m as f64 * self.dt
        }
    }

    pub fn is_snapshot(&self, m: usize) -> bool {
        m % self.snapshot_every == 0 || m == self.n_steps()
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        (0..=self.n_steps())
            .filter(|&m| self.is_snapshot(m))
            .map(|m| self.time(m))
            .collect()
    }
}

/// `e^{-(μ|k|^κ + ε|k|^4) t}`.
pub fn heat_semigroup(b: &SpectralVectorField, t: f64, p: &ModelParams) -> SpectralVectorField {
    b.map_radial(|k| (-p.linear_rate(k) * t).exp())
}

/// States at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralVectorField>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    /// A trajectory that holds `state` for all time.
    pub fn constant(state: SpectralVectorField) -> Self {
        Self {
            times: vec![0.0],
            states: vec![state],
        }
    }

    pub fn push(&mut self, t: f64, state: SpectralVectorField) {
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&SpectralVectorField> {
        self.states.last()
    }

    /// Piecewise-constant lookup: the latest state with time `<= t`.
    pub fn left_value(&self, t: f64) -> &SpectralVectorField {
        let slack = 1e-9 * t.abs().max(1e-300);
        let i = self.times.partition_point(|&s| s <= t + slack);
        &self.states[i.saturating_sub(1)]
    }

    /// `B⁰`: the exact linear flow of `b0` sampled at `times`.
    pub fn heat_flow(b0: &SpectralVectorField, times: &[f64], p: &ModelParams) -> Self {
        Self {
            times: times.to_vec(),
            states: times.iter().map(|&t| heat_semigroup(b0, t, p)).collect(),
        }
    }
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::new()
    }
}

/// Where the advecting field `q` comes from.
#[derive(Debug, Clone, Copy)]
pub enum Coupling<'a> {
    /// `q = B`.
    SelfCoupled,
    /// `q` read from a given trajectory, piecewise constant in time.
    Frozen(&'a Trajectory),
}

impl Coupling<'_> {
    fn nonlinearity(&self, b: &SpectralVectorField, t: f64, p: &ModelParams) -> Result<SpectralVectorField> {
        match self {
            Coupling::SelfCoupled => hall_nonlinearity(b, b, p),
            Coupling::Frozen(q) => hall_nonlinearity(b, q.left_value(t), p),
        }
    }
}

fn linear_tables(b: &SpectralVectorField, h: f64, p: &ModelParams) -> [Vec<f64>; 3] {
    let grid = b.grid();
    let z = |k: f64| -p.linear_rate(k) * h;
    [
        grid.radial_table(|k| z(k).exp()),
        grid.radial_table(|k| h * phi1(z(k))),
        grid.radial_table(|k| h * phi2(z(k))),
    ]
}

fn with_table(f: &SpectralVectorField, table: &[f64]) -> SpectralVectorField {
    let mut out = f.clone();
    out.apply_radial_table(table);
    out
}

fn tidy(f: &SpectralVectorField) -> SpectralVectorField {
    dealias(&leray_project(f))
}

/// One exponential step of length `h` from time `t`, Leray-projected and dealiased.
pub fn etd_step(
    b: &SpectralVectorField,
    t: f64,
    h: f64,
    p: &ModelParams,
    scheme: Scheme,
    coupling: Coupling<'_>,
) -> Result<SpectralVectorField> {
    let [e, f1, f2] = linear_tables(b, h, p);
    let n0 = coupling.nonlinearity(b, t, p)?;
    let mut a = with_table(b, &e);
    a.axpy(1.0, &with_table(&n0, &f1));
    let out = match scheme {
        Scheme::Etd1 => a,
        Scheme::Etd2rk => {
            let n1 = coupling.nonlinearity(&a, t + h, p)?;
            let mut out = a;
            out.axpy(1.0, &with_table(&(&n1 - &n0), &f2));
            out
        }
    };
    Ok(tidy(&out))
}

/// Norms recorded at a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub step: usize,
    pub time: f64,
    /// `‖B‖_{L²}`
    pub l2: f64,
    /// `‖B‖_{Ḣ^{σ_c}}`
    pub hs_sigma_c: f64,
    /// `‖B‖_{Ḣ^{σ_c + κ/2}}`
    pub hs_sigma_c_half_kappa: f64,
    /// `‖Λ^{κ/2} B‖²_{L²}`
    pub dissipation: f64,
}

impl NormSample {
    pub fn measure(step: usize, time: f64, b: &SpectralVectorField, p: &ModelParams) -> Result<Self> {
        let sc = p.sigma_c();
        let d = sobolev_norm(b, p.kappa / 2.0)?;
        Ok(Self {
            step,
            time,
            l2: b.l2_norm(),
            hs_sigma_c: sobolev_norm(b, sc)?,
            hs_sigma_c_half_kappa: sobolev_norm(b, sc + p.kappa / 2.0)?,
            dissipation: d * d,
        })
    }

    fn blown_up(&self) -> bool {
        [self.l2, self.hs_sigma_c, self.hs_sigma_c_half_kappa, self.dissipation]
            .iter()
            .any(|v| !v.is_finite() || *v > BLOW_UP_THRESHOLD)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowUp { time: f64 },
}

/// Norm series of a run, plus the stored snapshot states when requested.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub params: ModelParams,
    pub stepper: StepperConfig,
    pub samples: Vec<NormSample>,
    pub snapshots: Trajectory,
    pub status: RunStatus,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Converts a blow-up status into an error.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            RunStatus::Completed => Ok(self),
            RunStatus::BlowUp { time } => Err(EmhdError::BlowUp { time }),
        }
    }

    pub fn final_state(&self) -> Option<&SpectralVectorField> {
        self.snapshots.last()
    }
}

fn check_initial(b0: &SpectralVectorField) -> Result<()> {
    if !b0.is_finite() {
        return Err(EmhdError::Precondition("initial data is not finite".into()));
    }
    b0.require_mean_free()?;
    let div = crate::spectral::divergence(b0).l2_norm();
    let scale = fractional_laplacian(b0, 1.0)?.l2_norm();
    if div > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(EmhdError::Precondition(format!(
            "initial data is not divergence-free (|div B| = {div:.3e})"
        )));
    }
    Ok(())
}

/// Steps `b0` to `t_end`, calling `observer(step, time, state)` at every snapshot.
/// Blow-up stops the run and is reported in the returned status.
pub fn evolve_with<F>(
    b0: &SpectralVectorField,
    p: &ModelParams,
    cfg: &StepperConfig,
    coupling: Coupling<'_>,
    mut observer: F,
) -> Result<RunRecord>
where
    F: FnMut(usize, f64, &SpectralVectorField) -> Result<()>,
{
    cfg.validate()?;
    check_initial(b0)?;
    let mut record = RunRecord {
        params: *p,
        stepper: *cfg,
        samples: Vec::new(),
        snapshots: Trajectory::new(),
        status: RunStatus::Completed,
    };
    let mut b = tidy(b0);
    let n = cfg.n_steps();
    for m in 0..=n {
        let t = cfg.time(m);
        if cfg.is_snapshot(m) || !b.is_finite() {
            let sample = NormSample::measure(m, t, &b, p)?;
            let blown = sample.blown_up() || !b.is_finite();
            record.samples.push(sample);
            if blown {
                record.status = RunStatus::BlowUp { time: t };
                return Ok(record);
            }
            observer(m, t, &b)?;
        }
        if m == n {
            break;
        }
        let h = cfg.time(m + 1) - t;
        b = match etd_step(&b, t, h, p, cfg.scheme, coupling) {
            Ok(next) => next,
            Err(e) if !b.is_finite() => return Err(e),
            Err(EmhdError::Symmetry { .. }) => {
                record.status = RunStatus::BlowUp { time: t + h };
                return Ok(record);
            }
            Err(e) => return Err(e),
        };
        if !b.is_finite() || b.max_abs() > BLOW_UP_THRESHOLD {
            let sample = NormSample::measure(m + 1, t + h, &b, p).unwrap_or(NormSample {
                step: m + 1,
                time: t + h,
                l2: f64::NAN,
                hs_sigma_c: f64::NAN,
                hs_sigma_c_half_kappa: f64::NAN,
                dissipation: f64::NAN,
            });
            record.samples.push(sample);
            record.status = RunStatus::BlowUp { time: t + h };
            return Ok(record);
        }
    }
    Ok(record)
}

/// [`evolve_with`] keeping every snapshot state in the record.
pub fn evolve(b0: &SpectralVectorField, p: &ModelParams, cfg: &StepperConfig, coupling: Coupling<'_>) -> Result<RunRecord> {
    let mut states = Trajectory::new();
    let mut record = evolve_with(b0, p, cfg, coupling, |_, t, b| {
        states.push(t, b.clone());
        Ok(())
    })?;
    record.snapshots = states;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;
    use crate::init::beltrami;
    use crate::spectral::divergence;
    use crate::testing::random_band_field;

    fn small_random(g: Grid3, seed: u64, size: f64) -> SpectralVectorField {
        let f = random_band_field(g, 1.0, 3.0, seed);
        f.scale(size / f.l2_norm())
    }

    #[test]
    fn config_validation_and_time_grid() {
        assert!(StepperConfig::new(0.0, 1.0, Scheme::Etd1, 1).is_err());
        assert!(StepperConfig::new(1.0, 1.0, Scheme::Etd1, 1).is_err());
        assert!(StepperConfig::new(0.1, 1.0, Scheme::Etd1, 0).is_err());
        let c = StepperConfig::new(0.1, 1.0, Scheme::Etd2rk, 3).unwrap();
        assert_eq!(c.n_steps(), 10);
        assert_eq!(c.time(10), 1.0);
        assert_eq!(c.snapshot_times().len(), 5);
        let c = StepperConfig::new(0.3, 1.0, Scheme::Etd2rk, 1).unwrap();
        assert_eq!(c.n_steps(), 4);
        assert_eq!(c.time(4), 1.0);
        assert_eq!("etd1".parse::<Scheme>().unwrap(), Scheme::Etd1);
        assert!("rk4".parse::<Scheme>().is_err());
    }

    #[test]
    fn heat_semigroup_examples() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::new(0.0, 2.0).unwrap();
        let b = beltrami(g, 1.0);
        assert_eq!(heat_semigroup(&b, 0.0, &p), b);
        let out = heat_semigroup(&b, 1.0, &p);
        assert!((&out - &b.scale((-1.0f64).exp())).max_abs() < 1e-16);

        let f = random_band_field(g, 1.0, 5.0, 3);
        let p = ModelParams::with_dissipation(0.1, 1.7, 0.8, 0.01).unwrap();
        let a = heat_semigroup(&heat_semigroup(&f, 0.013, &p), 0.021, &p);
        let c = heat_semigroup(&f, 0.034, &p);
        assert!((&a - &c).max_abs() < 1e-13 * f.max_abs());
        for sigma in [-0.5, 0.0, 1.0, 2.5] {
            assert!(sobolev_norm(&c, sigma).unwrap() <= sobolev_norm(&f, sigma).unwrap());
        }
    }

    #[test]
    fn beltrami_decays_exactly() {
        let g = Grid3::new(16).unwrap();
        let b = beltrami(g, 0.8);
        let p = ModelParams::new(0.2, 1.9).unwrap();
        for scheme in [Scheme::Etd1, Scheme::Etd2rk] {
            let cfg = StepperConfig::new(0.05, 1.0, scheme, 4).unwrap();
            let rec = evolve(&b, &p, &cfg, Coupling::SelfCoupled).unwrap();
            assert!(rec.completed());
            let last = rec.final_state().unwrap();
            let exact = b.scale((-1.0f64).exp());
            assert!((last - &exact).l2_norm() < 1e-10 * exact.l2_norm());
            for s in &rec.samples {
                assert!((s.l2 - 0.8 * (-s.time).exp()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_field_and_frozen_zero_q() {
        let g = Grid3::new(8).unwrap();
        let p = ModelParams::new(0.0, 2.2).unwrap();
        let cfg = StepperConfig::new(0.1, 0.5, Scheme::Etd2rk, 1).unwrap();
        let z = SpectralVectorField::zeros(g);
        let rec = evolve(&z, &p, &cfg, Coupling::SelfCoupled).unwrap();
        assert!(rec.snapshots.states.iter().all(|s| s.max_abs() == 0.0));

        let b = small_random(g, 1, 1.0);
        let q = Trajectory::constant(z);
        let rec = evolve(&b, &p, &cfg, Coupling::Frozen(&q)).unwrap();
        let exact = heat_semigroup(&b, 0.5, &p);
        assert!((rec.final_state().unwrap() - &exact).max_abs() < 1e-14);
    }

    #[test]
    fn states_stay_solenoidal_and_mean_free() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::new(0.0, 2.2).unwrap();
        let cfg = StepperConfig::new(0.01, 0.1, Scheme::Etd2rk, 2).unwrap();
        let b = small_random(g, 4, 1.0);
        let rec = evolve(&b, &p, &cfg, Coupling::SelfCoupled).unwrap();
        for s in &rec.snapshots.states {
            assert!(divergence(s).max_abs() < 1e-11);
            assert_eq!(s.mean_magnitude(), 0.0);
        }
    }

    #[test]
    fn self_convergence_orders() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::new(0.0, 2.2).unwrap();
        let b = small_random(g, 2, 2.0);
        let t_end = 0.2;
        for scheme in [Scheme::Etd1, Scheme::Etd2rk] {
            let run = |dt: f64| {
                let cfg = StepperConfig::new(dt, t_end, scheme, 1000).unwrap();
                evolve(&b, &p, &cfg, Coupling::SelfCoupled).unwrap().final_state().unwrap().clone()
            };
            let base = 0.02;
            let reference = run(base / 16.0);
            let e1 = (&run(base) - &reference).l2_norm();
            let e2 = (&run(base / 2.0) - &reference).l2_norm();
            let slope = (e1 / e2).log2();
            let order = scheme.order() as f64;
            assert!(slope > order / 2.0 && slope < order * 2.0, "{scheme}: slope {slope}");
        }
    }

    #[test]
    fn deterministic() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::new(0.1, 2.0).unwrap();
        let cfg = StepperConfig::new(0.01, 0.05, Scheme::Etd2rk, 1).unwrap();
        let b = small_random(g, 6, 1.0);
        let a = evolve(&b, &p, &cfg, Coupling::SelfCoupled).unwrap();
        let c = evolve(&b, &p, &cfg, Coupling::SelfCoupled).unwrap();
        assert_eq!(a.samples, c.samples);
        assert_eq!(a.snapshots, c.snapshots);
    }

    #[test]
    fn large_data_blows_up_with_partial_record() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::new(0.0, 1.2).unwrap();
        let cfg = StepperConfig::new(0.05, 5.0, Scheme::Etd1, 1).unwrap();
        let b = small_random(g, 7, 1e4);
        let rec = evolve(&b, &p, &cfg, Coupling::SelfCoupled).unwrap();
        match rec.status {
            RunStatus::BlowUp { time } => {
                assert!(time > 0.0 && time <= 5.0);
                assert!(!rec.samples.is_empty());
                assert!(matches!(rec.into_result(), Err(EmhdError::BlowUp { .. })));
            }
            RunStatus::Completed => panic!("expected blow-up"),
        }
    }

    #[test]
    fn rejects_bad_initial_data() {
        let g = Grid3::new(8).unwrap();
        let p = ModelParams::new(0.0, 2.0).unwrap();
        let cfg = StepperConfig::new(0.1, 0.5, Scheme::Etd1, 1).unwrap();
        let mut b = beltrami(g, 1.0);
        b.set(0, [num_complex::Complex64::new(0.1, 0.0); 3]);
        assert!(evolve(&b, &p, &cfg, Coupling::SelfCoupled).is_err());
        let mut b = SpectralVectorField::zeros(g);
        b.set_hermitian_pair([1, 0, 0], [num_complex::Complex64::new(1.0, 0.0); 3]);
        assert!(matches!(
            evolve(&b, &p, &cfg, Coupling::SelfCoupled),
            Err(EmhdError::Precondition(_))
        ));
    }
}
