//! End-to-end invariant checks behind `emhd verify`.

use std::time::Instant;

use emhd_core::diagnostics::{
    decay_fit, energy_balance, gevrey_radius_fit, scaling_symmetry_check, stability_check,
    GevreyFit, GevreyRateFitter, GevreyRateReport,
};
use emhd_core::init::{beltrami, power_law, random_band};
use emhd_core::lp::{bony_decompose, lp_project, partition_of_unity_error, reconstruct, CutoffProfile, Multiplicable};
use emhd_core::model::{hall_nonlinearity, ModelParams};
use emhd_core::solver::{
    evolve, heat_semigroup, linear_mild_solve, picard_solve, Coupling, MildConfig, PicardConfig,
    Scheme, StepperConfig, Trajectory,
};
use emhd_core::spectral::{divergence, fractional_laplacian};
use emhd_core::{checkpoint, Grid3, Result, SpectralField, SpectralVectorField};

use crate::config::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(format!("unknown level {other:?} (fast | full)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub measured: String,
    pub seconds: f64,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<34} {} ({:.2} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.seconds
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

const FAST: &[(&str, Check)] = &[
    ("lp.partition_of_unity", partition_of_unity),
    ("lp.reconstruction", lp_reconstruction),
    ("lp.bony_reconstruction", bony_reconstruction),
    ("model.beltrami_hall", beltrami_hall),
    ("model.twisted_cancellation", twisted_cancellation),
    ("solver.beltrami_decay", beltrami_decay),
    ("solver.divergence_free", divergence_free),
    ("solver.picard_beltrami", picard_beltrami),
    ("solver.mild_zero_coupling", mild_zero_coupling),
    ("diagnostics.energy_beltrami", energy_beltrami),
    ("diagnostics.gevrey_synthetic", gevrey_synthetic),
    ("diagnostics.scaling_beltrami", scaling_beltrami),
    ("diagnostics.stability_beltrami", stability_beltrami),
    ("io.checkpoint_round_trip", checkpoint_round_trip),
    ("io.config_round_trip", config_round_trip),
];

const FULL: &[(&str, Check)] = &[
    ("solver.etd2rk_order", etd2rk_order),
    ("diagnostics.energy_order", energy_order),
    ("solver.picard_contraction", picard_contraction),
    ("diagnostics.scaling_random", scaling_random),
    ("diagnostics.gevrey_heat_rate", gevrey_heat_rate),
    ("diagnostics.decay_exponents", decay_exponents),
    ("diagnostics.stability_random", stability_random),
    ("solver.mild_regularization_limit", mild_limit),
];

/// Runs the suite for `level`, calling `report` after each check.
pub fn run_verify(level: Level, mut report: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
    let checks: Vec<&(&str, Check)> = match level {
        Level::Fast => FAST.iter().collect(),
        Level::Full => FAST.iter().chain(FULL).collect(),
    };
    let mut out = Vec::new();
    for (name, check) in checks {
        let start = Instant::now();
        let (pass, measured) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let r = CheckResult {
            name,
            pass,
            measured,
            seconds: start.elapsed().as_secs_f64(),
        };
        report(&r);
        out.push(r);
    }
    out
}

fn g(n: usize) -> Grid3 {
    Grid3::new(n).expect("valid grid")
}

fn unit(f: SpectralVectorField) -> SpectralVectorField {
    let n = f.l2_norm();
    f.scale(1.0 / n)
}

fn band(n: usize, k_hi: f64, seed: u64) -> Result<SpectralVectorField> {
    Ok(unit(random_band(g(n), 1.0, k_hi, seed)?))
}

const THEOREM_PAIRS: [(f64, f64); 3] = [(-0.4, 2.85), (0.0, 2.2), (0.4, 1.8)];

fn partition_of_unity() -> Result<(bool, String)> {
    let e = partition_of_unity_error(&g(16), &CutoffProfile::standard());
    Ok((e < 1e-12, format!("max error {e:.3e}")))
}

fn lp_reconstruction() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for seed in 0..3 {
        let f = band(16, 5.0, seed)?;
        worst = worst.max(reconstruct(&f).try_sub(&f)?.l2_norm());
    }
    Ok((worst < 1e-10, format!("max relative error {worst:.3e}")))
}

fn bony_reconstruction() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for seed in 0..3 {
        let u = band(16, 5.0, seed)?.component(0);
        let v = band(16, 5.0, seed + 50)?.component(1);
        let direct = u.times(&v)?;
        for j in 0..4 {
            let target = lp_project(&direct, j);
            let sum = bony_decompose(&u, &v, j)?.sum()?;
            worst = worst.max(sum.try_sub(&target)?.l2_norm() / target.l2_norm());
        }
    }
    Ok((worst < 1e-10, format!("max relative error {worst:.3e}")))
}

fn beltrami_hall() -> Result<(bool, String)> {
    let b = beltrami(g(16), 1.0);
    let mut worst = 0.0_f64;
    for (s, k) in THEOREM_PAIRS {
        worst = worst.max(hall_nonlinearity(&b, &b, &ModelParams::new(s, k)?)?.l2_norm());
    }
    Ok((worst < 1e-12, format!("max |Hall(B, B)| {worst:.3e}")))
}

fn twisted_cancellation() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for (s, k) in THEOREM_PAIRS {
        let p = ModelParams::new(s, k)?;
        for seed in 0..3 {
            let b = band(16, 5.0, seed)?;
            let h = hall_nonlinearity(&b, &b, &p)?;
            let t = fractional_laplacian(&b, -s)?;
            worst = worst.max(h.inner(&t).abs() / (h.l2_norm() * t.l2_norm()));
        }
    }
    Ok((worst < 1e-10, format!("max normalized pairing {worst:.3e}")))
}

fn beltrami_decay() -> Result<(bool, String)> {
    let b = beltrami(g(16), 1.0);
    let p = ModelParams::new(0.0, 2.2)?;
    let rec = evolve(&b, &p, &StepperConfig::new(1e-3, 1.0, Scheme::Etd2rk, 100)?, Coupling::SelfCoupled)?;
    let mut worst = 0.0_f64;
    for (t, s) in rec.snapshots.times.iter().zip(&rec.snapshots.states) {
        let exact = b.scale((-t).exp());
        worst = worst.max(s.try_sub(&exact)?.l2_norm() / exact.l2_norm());
    }
    Ok((worst < 1e-8, format!("max relative error {worst:.3e}")))
}

fn divergence_free() -> Result<(bool, String)> {
    let b = band(16, 4.0, 3)?;
    let p = ModelParams::new(0.2, 1.9)?;
    let rec = evolve(&b, &p, &StepperConfig::new(2e-3, 0.1, Scheme::Etd2rk, 10)?, Coupling::SelfCoupled)?;
    let worst = rec
        .snapshots
        .states
        .iter()
        .map(|s| divergence(s).l2_norm() / s.l2_norm())
        .fold(0.0, f64::max);
    Ok((worst < 1e-12, format!("max relative |div B| {worst:.3e}")))
}

fn picard_beltrami() -> Result<(bool, String)> {
    let p = ModelParams::new(0.0, 2.2)?;
    let cfg = StepperConfig::new(0.05, 0.5, Scheme::Etd2rk, 1)?;
    let (_, trace) = picard_solve(&beltrami(g(8), 0.5), &p, &PicardConfig::for_params(&p), &cfg)?;
    let n = trace.iterations.len();
    Ok((n == 1, format!("{n} iteration(s)")))
}

fn mild_zero_coupling() -> Result<(bool, String)> {
    let p = ModelParams::with_dissipation(0.1, 2.0, 1.0, 0.01)?;
    let b = band(16, 4.0, 1)?;
    let q = Trajectory::constant(SpectralVectorField::zeros(g(16)));
    let sol = linear_mild_solve(&b, &q, &p, &MildConfig::new(0.05, 0.5)?)?;
    let err = sol.trajectory.last().expect("nonempty").try_sub(&heat_semigroup(&b, 0.5, &p))?.l2_norm();
    Ok((sol.iterations == [1] && err < 1e-12, format!("iterations {:?}, error {err:.3e}", sol.iterations)))
}

fn energy_beltrami() -> Result<(bool, String)> {
    let p = ModelParams::new(0.0, 2.0)?;
    let rec = evolve(&beltrami(g(16), 1.0), &p, &StepperConfig::new(1e-3, 0.5, Scheme::Etd2rk, 10)?, Coupling::SelfCoupled)?;
    let r = energy_balance(&rec)?;
    Ok((r.max_abs_residual < 1e-8, format!("max |residual| {:.3e}", r.max_abs_residual)))
}

fn gevrey_synthetic() -> Result<(bool, String)> {
    let grid = g(64);
    let f = power_law(grid, 0.0, 1.0, grid.max_wavenumber(), 3)?.map_radial(|k| (-0.3 * k).exp());
    let r = gevrey_radius_fit(&f, 1.0)?;
    Ok(((r.lambda_hat - 0.3).abs() < 0.02, format!("lambda_hat {:.4} (0.3)", r.lambda_hat)))
}

fn scaling_beltrami() -> Result<(bool, String)> {
    let p = ModelParams::new(0.1, 2.1)?;
    let r = scaling_symmetry_check(&beltrami(g(8), 1.0), &p, 2, &StepperConfig::new(0.01, 0.1, Scheme::Etd2rk, 1)?)?;
    Ok((r.discrepancy < 1e-8, format!("discrepancy {:.3e}", r.discrepancy)))
}

fn stability_beltrami() -> Result<(bool, String)> {
    let p = ModelParams::new(0.0, 2.0)?;
    let b = beltrami(g(8), 0.5);
    let r = stability_check(&b, &b, 1e-6, &p, &StepperConfig::new(0.01, 1.0, Scheme::Etd2rk, 10)?)?;
    let worst = r
        .times
        .iter()
        .zip(&r.ratios)
        .map(|(t, x)| (x - (-t).exp()).abs())
        .fold(0.0, f64::max);
    Ok((worst < 1e-8, format!("max deviation from exp(-t) {worst:.3e}")))
}

fn checkpoint_round_trip() -> Result<(bool, String)> {
    let b = band(8, 3.0, 4)?;
    let mut buf = Vec::new();
    checkpoint::write_checkpoint(&mut buf, &b, 0.1, 2.0, 0.5)?;
    let back = checkpoint::read_checkpoint(buf.as_slice())?;
    let same = back.field == b && back.time == 0.5;
    Ok((same, format!("{} bytes", buf.len())))
}

fn config_round_trip() -> Result<(bool, String)> {
    let mut c = SimConfig::default();
    c.apply_overrides(&[
        "--initial_data.kind=random_band".into(),
        "--initial_data.seed=9".into(),
        "--model.s=-0.125".into(),
        "--stepper.dt=3e-4".into(),
    ])?;
    let back = SimConfig::parse(&c.to_text())?;
    Ok((back == c, "parse(serialize(c)) == c".into()))
}

fn etd2rk_order() -> Result<(bool, String)> {
    let b = band(32, 4.0, 6)?;
    let p = ModelParams::new(0.0, 2.2)?;
    let run = |dt: f64| -> Result<SpectralVectorField> {
        let rec = evolve(&b, &p, &StepperConfig::new(dt, 0.1, Scheme::Etd2rk, 1_000_000)?, Coupling::SelfCoupled)?;
        Ok(rec.final_state().expect("completed").clone())
    };
    let reference = run(2.5e-4)?;
    let e1 = run(4e-3)?.try_sub(&reference)?.l2_norm();
    let e2 = run(2e-3)?.try_sub(&reference)?.l2_norm();
    let order = (e1 / e2).log2();
    Ok((order > 1.7, format!("order {order:.3}")))
}

fn energy_order() -> Result<(bool, String)> {
    let b = band(32, 4.0, 7)?;
    let p = ModelParams::new(0.0, 2.2)?;
    let mut ex = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        let rec = evolve(&b, &p, &StepperConfig::new(dt, 0.1, Scheme::Etd2rk, 1)?, Coupling::SelfCoupled)?;
        ex.push(energy_balance(&rec)?.max_abs_residual);
    }
    let order = (ex[0] / ex[2]).log2() / 2.0;
    Ok((order >= 1.7, format!("order {order:.3}")))
}

fn picard_contraction() -> Result<(bool, String)> {
    let p = ModelParams::new(0.0, 2.2)?;
    let b = emhd_core::init::rescale_to_norm(&band(32, 4.0, 8)?, p.sigma_c(), 1e-2)?;
    let cfg = StepperConfig::new(5e-3, 0.5, Scheme::Etd2rk, 1)?;
    let (traj, trace) = picard_solve(&b, &p, &PicardConfig::for_params(&p), &cfg)?;
    let by3 = trace.iterations.iter().take(3).skip(1).any(|i| i.ratio < 0.5);
    let direct = evolve(&b, &p, &cfg, Coupling::SelfCoupled)?;
    let err = traj.last().expect("nonempty").try_sub(direct.final_state().expect("completed"))?.l2_norm();
    Ok((by3 && err < 1e-6, format!("ratios [{}], error {err:.3e}", join_sci(trace.iterations.iter().map(|i| i.ratio)))))
}

fn scaling_random() -> Result<(bool, String)> {
    let p = ModelParams::new(0.0, 2.2)?;
    let b = band(32, 3.0, 9)?.scale(0.5);
    let a = scaling_symmetry_check(&b, &p, 2, &StepperConfig::new(1e-3, 0.02, Scheme::Etd2rk, 1)?)?;
    let c = scaling_symmetry_check(&b, &p, 2, &StepperConfig::new(5e-4, 0.02, Scheme::Etd2rk, 1)?)?;
    Ok((
        a.discrepancy < 1e-4 && c.discrepancy < a.discrepancy,
        format!("{:.3e} -> {:.3e}", a.discrepancy, c.discrepancy),
    ))
}

fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn gevrey_heat_rate() -> Result<(bool, String)> {
    let grid = g(128);
    let p = ModelParams::new(0.0, 2.0)?;
    let b = power_law(grid, p.sigma_c() + 1.5, 1.0, grid.max_wavenumber(), 5)?;
    let fitter = GevreyRateFitter::new(&b, &p, 1.0)?;
    let mut fit = GevreyFit {
        alpha: 1.0,
        ..GevreyFit::default()
    };
    fit.push(0.0, &fitter.fit(0.0, &b)?);
    // One state at a time; a 128³ trajectory does not fit in memory comfortably.
    for t in log_times(2e-3, 0.2, 21) {
        fit.push(t, &fitter.fit(t, &heat_semigroup(&b, t, &p))?);
    }
    let r = GevreyRateReport::from_fit(fit, p.kappa);
    Ok((
        r.pass() == Some(true),
        format!("early ratio {}, slope {} (0.5)", opt4(r.early_ratio), opt4(r.slope)),
    ))
}

fn decay_exponents() -> Result<(bool, String)> {
    let grid = g(64);
    let p = ModelParams::new(0.0, 2.0)?;
    let b = power_law(grid, p.sigma_c() + 1.5, 1.0, grid.max_wavenumber(), 2)?;
    let traj = Trajectory::heat_flow(&b, &log_times(0.01, 0.2, 10), &p);
    let f0 = decay_fit(&traj, &p, 0, 0.01, (0.01, 0.2))?;
    let f1 = decay_fit(&traj, &p, 1, 0.01, (0.01, 0.2))?;
    let d = f1.slope - f0.slope;
    Ok(((d + 0.5).abs() <= 0.3, format!("slope difference {d:.4} (-0.5)")))
}

fn stability_random() -> Result<(bool, String)> {
    let p = ModelParams::new(0.0, 2.2)?;
    let b = band(16, 4.0, 10)?.scale(0.1);
    let d = band(16, 4.0, 11)?;
    let r = stability_check(&b, &d, 1e-6, &p, &StepperConfig::new(5e-3, 1.0, Scheme::Etd2rk, 10)?)?;
    Ok((
        r.bounded && r.linear_response == Some(true),
        format!("growth {:.4}, half response {}", r.growth_factor, opt4(r.half_response)),
    ))
}

fn mild_limit() -> Result<(bool, String)> {
    let b = band(16, 3.0, 2)?.scale(0.5);
    let q = Trajectory::constant(b.clone());
    let reference = evolve(&b, &ModelParams::new(0.1, 2.0)?, &StepperConfig::new(1e-4, 0.2, Scheme::Etd2rk, 1_000_000)?, Coupling::Frozen(&q))?;
    let target = reference.final_state().expect("completed").clone();
    let mut errors = Vec::new();
    for (eps, dt) in [(1e-2, 1e-2), (1e-3, 5e-3), (1e-4, 2.5e-3)] {
        let p = ModelParams::with_dissipation(0.1, 2.0, 1.0, eps)?;
        let sol = linear_mild_solve(&b, &q, &p, &MildConfig::new(dt, 0.2)?)?;
        errors.push(sol.trajectory.last().expect("nonempty").try_sub(&target)?.l2_norm());
    }
    Ok((errors[0] > errors[1] && errors[1] > errors[2], format!("errors [{}]", join_sci(errors.iter().copied()))))
}

fn join_sci(v: impl Iterator<Item = f64>) -> String {
    v.map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn opt4(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}
