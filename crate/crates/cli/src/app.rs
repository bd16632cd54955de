//! The `run`, `picard`, `sweep` and `analyze` commands and their on-disk layout.
//!
//! A run directory holds
//!
//! - `config.cfg`: the effective configuration,
//! - `series.jsonl`: one [`SeriesLine`] per snapshot,
//! - `checkpoints/step_XXXXXXXX.bin`: the state at each snapshot,
//! - `record.json` and `report.txt`: status and summary.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use emhd_core::diagnostics::{
    decay_fit, energy_balance_samples, gevrey_rate_check, scaling_symmetry_check, stability_check,
    sweep_row, DecayFit, EnergyReport, GevreyRateFitter, Report, SPECTRAL_GAP_LIMIT,
};
use emhd_core::init::random_band;
use emhd_core::model::check_admissible;
use emhd_core::solver::{
    evolve_with, picard_solve, ConvergenceTrace, Coupling, NormSample, RunStatus, Trajectory,
};
use emhd_core::{checkpoint, EmhdError, Result, SpectralField};

use crate::config::SimConfig;

pub const OUTPUT_ROOT_ENV: &str = "EMHD_OUTPUT_ROOT";
const DEFAULT_ROOT: &str = "emhd-runs";

/// Where a command writes: `output_dir` if set, otherwise
/// `$EMHD_OUTPUT_ROOT/<command>-<config fingerprint>`.
pub fn output_dir(cfg: &SimConfig, command: &str) -> PathBuf {
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from(DEFAULT_ROOT), PathBuf::from);
    root.join(format!("{command}-{:016x}", cfg.fingerprint()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesLine {
    pub step: usize,
    pub time: f64,
    pub l2: f64,
    pub hs_sigma_c: f64,
    pub hs_sigma_c_half_kappa: f64,
    pub dissipation: f64,
    pub gevrey_lambda_hat: Option<f64>,
    pub gevrey_r_squared: Option<f64>,
}

impl SeriesLine {
    fn sample(&self) -> NormSample {
        NormSample {
            step: self.step,
            time: self.time,
            l2: self.l2,
            hs_sigma_c: self.hs_sigma_c,
            hs_sigma_c_half_kappa: self.hs_sigma_c_half_kappa,
            dissipation: self.dissipation,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordFile {
    pub command: String,
    pub status: RunStatus,
    pub snapshots: usize,
    pub final_time: Option<f64>,
    pub final_l2: Option<f64>,
    pub initial_l2: Option<f64>,
    pub admissibility: String,
    pub energy: Option<serde_json::Value>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub status: RunStatus,
    pub series: Vec<SeriesLine>,
}

fn checkpoint_path(dir: &Path, step: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("step_{step:08}.bin"))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series(dir: &Path) -> Result<Vec<SeriesLine>> {
    let f = File::open(dir.join("series.jsonl"))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn admissibility_label(cfg: &SimConfig) -> Result<String> {
    let a = check_admissible(&cfg.params()?);
    Ok(serde_json::to_value(a)?.as_str().unwrap_or_default().to_string())
}

fn prepare(dir: &Path, cfg: &SimConfig) -> Result<()> {
    fs::create_dir_all(dir.join("checkpoints"))?;
    fs::write(dir.join("config.cfg"), cfg.to_text())?;
    Ok(())
}

/// Evolves the configured data, persisting series, checkpoints and a summary.
pub fn cmd_run(cfg: &SimConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = output_dir(cfg, "run");
    prepare(&dir, cfg)?;
    let p = cfg.params()?;
    let stepper = cfg.stepper()?;
    let b0 = cfg.initial_data()?;
    let fitter = GevreyRateFitter::new(&b0, &p, cfg.alpha)?;
    let mut fits = Vec::new();
    let record = evolve_with(&b0, &p, &stepper, Coupling::SelfCoupled, |step, t, b| {
        checkpoint::save(&checkpoint_path(&dir, step), b, p.s, p.kappa, t)?;
        fits.push(if fitter.applicable() { fitter.fit(t, b).ok() } else { None });
        Ok(())
    })?;
    let series: Vec<SeriesLine> = record
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let fit = fits.get(i).copied().flatten();
            SeriesLine {
                step: s.step,
                time: s.time,
                l2: s.l2,
                hs_sigma_c: s.hs_sigma_c,
                hs_sigma_c_half_kappa: s.hs_sigma_c_half_kappa,
                dissipation: s.dissipation,
                gevrey_lambda_hat: fit.map(|f| f.lambda_hat),
                gevrey_r_squared: fit.map(|f| f.r_squared),
            }
        })
        .collect();
    write_jsonl(&dir.join("series.jsonl"), &series)?;

    let energy = if record.completed() && record.samples.len() >= 3 {
        let rate = p.linear_rate(b0.grid().max_retained_wavenumber());
        Some(energy_balance_samples(&record.samples, &p, stepper.scheme.order(), rate)?)
    } else {
        None
    };
    let summary = RecordFile {
        command: "run".into(),
        status: record.status,
        snapshots: series.len(),
        final_time: series.last().map(|s| s.time),
        final_l2: series.last().map(|s| s.l2),
        initial_l2: series.first().map(|s| s.l2),
        admissibility: admissibility_label(cfg)?,
        energy: energy.as_ref().map(serde_json::to_value).transpose()?,
    };
    fs::write(dir.join("record.json"), serde_json::to_string_pretty(&summary)?)?;
    let mut text = format!("status: {:?}\nsnapshots: {}\n", record.status, series.len());
    if let Some(e) = &energy {
        text.push_str(&e.to_text());
    }
    fs::write(dir.join("report.txt"), text)?;
    Ok(RunOutcome {
        dir,
        status: record.status,
        series,
    })
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub dir: PathBuf,
    pub converged: bool,
    pub trace: ConvergenceTrace,
}

/// Runs the Picard sequence; a non-contracting sequence is persisted, not raised.
pub fn cmd_picard(cfg: &SimConfig) -> Result<PicardOutcome> {
    cfg.validate()?;
    let dir = output_dir(cfg, "picard");
    prepare(&dir, cfg)?;
    let p = cfg.params()?;
    let stepper = cfg.stepper()?;
    let b0 = cfg.initial_data()?;
    let (limit, trace, converged) = match picard_solve(&b0, &p, &cfg.picard()?, &stepper) {
        Ok((traj, trace)) => (Some(traj), trace, true),
        Err(EmhdError::Divergence { trace }) => (None, *trace, false),
        Err(EmhdError::BlowUp { .. }) => (None, ConvergenceTrace::default(), false),
        Err(e) => return Err(e),
    };
    fs::write(dir.join("picard_trace.json"), serde_json::to_string_pretty(&trace)?)?;
    if let Some(traj) = &limit {
        let mut series = Vec::with_capacity(traj.len());
        for (i, (&t, b)) in traj.times.iter().zip(&traj.states).enumerate() {
            let s = NormSample::measure(i, t, b, &p)?;
            series.push(SeriesLine {
                step: i,
                time: t,
                l2: s.l2,
                hs_sigma_c: s.hs_sigma_c,
                hs_sigma_c_half_kappa: s.hs_sigma_c_half_kappa,
                dissipation: s.dissipation,
                gevrey_lambda_hat: None,
                gevrey_r_squared: None,
            });
        }
        write_jsonl(&dir.join("series.jsonl"), &series)?;
        if let (Some(&t), Some(b)) = (traj.times.last(), traj.last()) {
            checkpoint::save(&dir.join("checkpoints").join("limit.bin"), b, p.s, p.kappa, t)?;
        }
    }
    let mut text = format!("converged: {converged}\n");
    for it in &trace.iterations {
        text.push_str(&format!(
            "  iteration {:>3}  diff {:.6e}  ratio {:.6e}  sup critical {:.6e}\n",
            it.index, it.diff_norm, it.ratio, it.sup_critical_norm
        ));
    }
    fs::write(dir.join("report.txt"), text)?;
    Ok(PicardOutcome { dir, converged, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Amplitude,
    S,
    Kappa,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "amplitude" => Ok(SweepAxis::Amplitude),
            "s" => Ok(SweepAxis::S),
            "kappa" => Ok(SweepAxis::Kappa),
            other => Err(format!("unknown sweep axis {other:?} (amplitude | s | kappa)")),
        }
    }
}

impl SweepAxis {
    fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Amplitude => "amplitude",
            SweepAxis::S => "s",
            SweepAxis::Kappa => "kappa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLine {
    pub value: f64,
    pub admissibility: String,
    pub amplitude: f64,
    pub sup_ratio: Option<f64>,
    pub contraction_ratio: Option<f64>,
    pub verdict: String,
}

/// One row per value of `axis`, each an independent run of the template.
/// The table goes to `sweep_<axis>.csv` in the output directory.
pub fn cmd_sweep(template: &SimConfig, axis: SweepAxis, values: &[f64]) -> Result<(PathBuf, Vec<SweepLine>)> {
    template.validate()?;
    let dir = output_dir(template, "sweep");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.cfg"), template.to_text())?;

    let rows: Vec<Result<SweepLine>> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|&v| scope.spawn(move || sweep_one(template, axis, v)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(EmhdError::Data("sweep worker panicked".into()))))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let path = dir.join(format!("sweep_{}.csv", axis.as_str()));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([axis.as_str(), "admissibility", "amplitude", "sup_critical_ratio", "contraction_ratio", "verdict"])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6e}"));
    for r in &rows {
        w.write_record([
            format!("{}", r.value),
            r.admissibility.clone(),
            format!("{:e}", r.amplitude),
            opt(r.sup_ratio),
            opt(r.contraction_ratio),
            r.verdict.clone(),
        ])?;
    }
    w.flush()?;
    Ok((path, rows))
}

fn sweep_one(template: &SimConfig, axis: SweepAxis, value: f64) -> Result<SweepLine> {
    let mut cfg = template.clone();
    match axis {
        SweepAxis::Amplitude => cfg.amplitude = value,
        SweepAxis::S => cfg.s = value,
        SweepAxis::Kappa => cfg.kappa = value,
    }
    let Ok(p) = cfg.params() else {
        return Ok(SweepLine {
            value,
            admissibility: "invalid".into(),
            amplitude: cfg.amplitude,
            sup_ratio: None,
            contraction_ratio: None,
            verdict: "invalid".into(),
        });
    };
    let admissibility = admissibility_label(&cfg)?;
    // The template's data shape; `sweep_row` rescales it to the amplitude.
    let mut shape_cfg = cfg.clone();
    shape_cfg.amplitude = 1.0;
    let shape = shape_cfg.initial_data()?;
    let row = sweep_row(&shape, cfg.amplitude, &p, &cfg.stepper()?, &cfg.picard()?)?;
    Ok(SweepLine {
        value,
        admissibility,
        amplitude: cfg.amplitude,
        sup_ratio: Some(row.sup_ratio),
        contraction_ratio: row.contraction_ratio,
        verdict: row.verdict.as_str().to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Gevrey,
    Decay,
    Energy,
    Scaling,
    Stability,
}

impl std::str::FromStr for Analysis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gevrey" => Ok(Analysis::Gevrey),
            "decay" => Ok(Analysis::Decay),
            "energy" => Ok(Analysis::Energy),
            "scaling" => Ok(Analysis::Scaling),
            "stability" => Ok(Analysis::Stability),
            other => Err(format!(
                "unknown analysis {other:?} (gevrey | decay | energy | scaling | stability)"
            )),
        }
    }
}

impl Analysis {
    fn as_str(self) -> &'static str {
        match self {
            Analysis::Gevrey => "gevrey",
            Analysis::Decay => "decay",
            Analysis::Energy => "energy",
            Analysis::Scaling => "scaling",
            Analysis::Stability => "stability",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOutcome {
    pub json_path: PathBuf,
    pub text: String,
    pub pass: Option<bool>,
}

pub fn load_config(dir: &Path) -> Result<SimConfig> {
    let path = dir.join("config.cfg");
    let text = fs::read_to_string(&path).map_err(|e| {
        EmhdError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    SimConfig::parse(&text)
}

/// Snapshot states of a run directory, in time order.
pub fn load_trajectory(dir: &Path) -> Result<Trajectory> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.join("checkpoints"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("step_") && n.ends_with(".bin"))
        })
        .collect();
    paths.sort();
    let mut traj = Trajectory::new();
    for p in paths {
        let ck = checkpoint::load(&p)?;
        traj.push(ck.time, ck.field);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Serialize)]
struct DecayAnalysis {
    k0: DecayFit,
    k1: DecayFit,
    difference: f64,
    expected_difference: f64,
}

impl Report for DecayAnalysis {
    fn title(&self) -> &'static str {
        "decay exponents"
    }

    fn rows(&self) -> Vec<(String, String)> {
        let mut rows = Vec::new();
        for (name, f) in [("k=0", &self.k0), ("k=1", &self.k1)] {
            rows.push((format!("{name} slope"), format!("{:.6}", f.slope)));
            rows.push((format!("{name} expected"), format!("{:.6}", f.slope_expected)));
        }
        rows.push(("window".into(), format!("[{:.4e}, {:.4e}]", self.k0.window.0, self.k0.window.1)));
        rows.push(("slope difference".into(), format!("{:.6}", self.difference)));
        rows.push(("expected difference".into(), format!("{:.6}", self.expected_difference)));
        rows
    }
}

fn finish<R: Report>(dir: &Path, which: Analysis, report: &R, pass: Option<bool>) -> Result<AnalysisOutcome> {
    let json_path = dir.join(format!("analysis_{}.json", which.as_str()));
    fs::write(&json_path, report.to_json()?)?;
    let text = report.to_text();
    fs::write(dir.join(format!("analysis_{}.txt", which.as_str())), &text)?;
    Ok(AnalysisOutcome { json_path, text, pass })
}

/// Runs one diagnostic on a finished run directory and writes JSON and text reports.
pub fn cmd_analyze(dir: &Path, which: Analysis) -> Result<AnalysisOutcome> {
    let cfg = load_config(dir)?;
    let p = cfg.params()?;
    match which {
        Analysis::Energy => {
            let samples: Vec<NormSample> = read_series(dir)?.iter().map(SeriesLine::sample).collect();
            let rate = p.linear_rate(cfg.grid()?.max_retained_wavenumber());
            let r: EnergyReport = energy_balance_samples(&samples, &p, cfg.scheme.order(), rate)?;
            let pass = r.pass;
            finish(dir, which, &r, pass)
        }
        Analysis::Gevrey => {
            let r = gevrey_rate_check(&load_trajectory(dir)?, &p, cfg.alpha)?;
            let pass = r.pass();
            finish(dir, which, &r, pass)
        }
        Analysis::Decay => {
            let traj = load_trajectory(dir)?;
            let k_min = cfg.grid()?.min_wavenumber();
            let lo = cfg
                .window_lo
                .or_else(|| traj.times.iter().copied().find(|&t| t > 0.0))
                .ok_or_else(|| EmhdError::Data("no snapshot with t > 0".into()))?;
            let hi = cfg
                .window_hi
                .unwrap_or_else(|| cfg.t_end.min(SPECTRAL_GAP_LIMIT / (p.mu * k_min.powf(p.kappa))));
            let k0 = decay_fit(&traj, &p, 0, cfg.delta, (lo, hi))?;
            let k1 = decay_fit(&traj, &p, 1, cfg.delta, (lo, hi))?;
            let r = DecayAnalysis {
                difference: k1.slope - k0.slope,
                expected_difference: -1.0 / p.kappa,
                k0,
                k1,
            };
            let pass = Some(k0.consistent() && (r.difference - r.expected_difference).abs() <= 0.3);
            finish(dir, which, &r, pass)
        }
        Analysis::Scaling => {
            let r = scaling_symmetry_check(&cfg.initial_data()?, &p, 2, &cfg.stepper()?)?;
            finish(dir, which, &r, None)
        }
        Analysis::Stability => {
            let b0 = cfg.initial_data()?;
            let seed = cfg.seed.map_or(1, |s| s.wrapping_add(1));
            let direction = random_band(*b0.grid(), cfg.k_lo, cfg.k_hi, seed)?;
            let r = stability_check(&b0, &direction, 1e-6, &p, &cfg.stepper()?)?;
            let pass = Some(r.bounded && r.linear_response != Some(false));
            finish(dir, which, &r, pass)
        }
    }
}
