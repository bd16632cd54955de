//! Flat `section.key = value` run configuration.
//!
//! Blank lines and everything after `#` are ignored. Every key must be known,
//! may appear at most once, and all keys are optional; omitted keys take the
//! defaults below.
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `grid.n` | even integer ≥ 4 | 16 |
//! | `grid.box_length` | real > 0 | 2π |
//! | `model.s` | real | 0 |
//! | `model.kappa` | real > 0 | 2.2 |
//! | `model.mu` | real > 0 | 1 |
//! | `model.eps_visc` | real ≥ 0 | 0 |
//! | `stepper.dt` | real > 0 | 1e-3 |
//! | `stepper.t_end` | real > dt | 0.1 |
//! | `stepper.scheme` | `etd1` or `etd2rk` | `etd2rk` |
//! | `stepper.snapshot_every` | integer ≥ 1 | 10 |
//! | `initial_data.kind` | `beltrami`, `random_band`, `power_law_spectrum`, `checkpoint` | `beltrami` |
//! | `initial_data.amplitude` | real ≥ 0; L² norm for `beltrami`, `Ḣ^{σ_c}` norm for random kinds | 1 |
//! | `initial_data.seed` | integer, required for random kinds | none |
//! | `initial_data.k_lo`, `initial_data.k_hi` | band for random kinds | 1, 4 |
//! | `initial_data.slope` | spectral slope for `power_law_spectrum` | `σ_c + 3/2` |
//! | `initial_data.path` | checkpoint file for `checkpoint` | none |
//! | `diagnostics.alpha` | real in (0, 1] | 1 |
//! | `diagnostics.delta` | real > 0 | 0.01 |
//! | `diagnostics.eps_rate` | real ≥ 0 | 1 |
//! | `diagnostics.window_lo`, `diagnostics.window_hi` | decay-fit window | derived |
//! | `picard.max_outer` | integer ≥ 1 | 30 |
//! | `picard.contraction_tol` | real > 0 | 1e-8 |
//! | `output_dir` | path | derived |

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use emhd_core::init::{beltrami, power_law, random_band, rescale_to_norm};
use emhd_core::model::ModelParams;
use emhd_core::solver::{PicardConfig, Scheme, StepperConfig};
use emhd_core::{checkpoint, EmhdError, Grid3, Result, SpectralField, SpectralVectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Beltrami,
    RandomBand,
    PowerLawSpectrum,
    Checkpoint,
}

impl InitKind {
    fn as_str(self) -> &'static str {
        match self {
            InitKind::Beltrami => "beltrami",
            InitKind::RandomBand => "random_band",
            InitKind::PowerLawSpectrum => "power_law_spectrum",
            InitKind::Checkpoint => "checkpoint",
        }
    }
}

impl FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "beltrami" => Ok(InitKind::Beltrami),
            "random_band" => Ok(InitKind::RandomBand),
            "power_law_spectrum" => Ok(InitKind::PowerLawSpectrum),
            "checkpoint" => Ok(InitKind::Checkpoint),
            other => Err(format!("unknown initial data kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub box_length: f64,
    pub s: f64,
    pub kappa: f64,
    pub mu: f64,
    pub eps_visc: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub snapshot_every: usize,
    pub init_kind: InitKind,
    pub amplitude: f64,
    pub seed: Option<u64>,
    pub k_lo: f64,
    pub k_hi: f64,
    pub slope: Option<f64>,
    pub init_path: Option<PathBuf>,
    pub alpha: f64,
    pub delta: f64,
    pub eps_rate: f64,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub picard_max_outer: usize,
    pub picard_tol: f64,
    pub output_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 16,
            box_length: 2.0 * std::f64::consts::PI,
            s: 0.0,
            kappa: 2.2,
            mu: 1.0,
            eps_visc: 0.0,
            dt: 1e-3,
            t_end: 0.1,
            scheme: Scheme::Etd2rk,
            snapshot_every: 10,
            init_kind: InitKind::Beltrami,
            amplitude: 1.0,
            seed: None,
            k_lo: 1.0,
            k_hi: 4.0,
            slope: None,
            init_path: None,
            alpha: 1.0,
            delta: 0.01,
            eps_rate: 1.0,
            window_lo: None,
            window_hi: None,
            picard_max_outer: 30,
            picard_tol: 1e-8,
            output_dir: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "grid.n",
    "grid.box_length",
    "model.s",
    "model.kappa",
    "model.mu",
    "model.eps_visc",
    "stepper.dt",
    "stepper.t_end",
    "stepper.scheme",
    "stepper.snapshot_every",
    "initial_data.kind",
    "initial_data.amplitude",
    "initial_data.seed",
    "initial_data.k_lo",
    "initial_data.k_hi",
    "initial_data.slope",
    "initial_data.path",
    "diagnostics.alpha",
    "diagnostics.delta",
    "diagnostics.eps_rate",
    "diagnostics.window_lo",
    "diagnostics.window_hi",
    "picard.max_outer",
    "picard.contraction_tol",
    "output_dir",
];

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| format!("bad value {value:?} for {key}: {e}"))
}

fn real(v: f64) -> String {
    format!("{v:?}")
}

impl SimConfig {
    /// Sets one key from its textual value, without cross-field validation.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "grid.n" => self.n = parse(key, value)?,
            "grid.box_length" => self.box_length = parse(key, value)?,
            "model.s" => self.s = parse(key, value)?,
            "model.kappa" => self.kappa = parse(key, value)?,
            "model.mu" => self.mu = parse(key, value)?,
            "model.eps_visc" => self.eps_visc = parse(key, value)?,
            "stepper.dt" => self.dt = parse(key, value)?,
            "stepper.t_end" => self.t_end = parse(key, value)?,
            "stepper.scheme" => self.scheme = parse(key, value)?,
            "stepper.snapshot_every" => self.snapshot_every = parse(key, value)?,
            "initial_data.kind" => self.init_kind = parse(key, value)?,
            "initial_data.amplitude" => self.amplitude = parse(key, value)?,
            "initial_data.seed" => self.seed = Some(parse(key, value)?),
            "initial_data.k_lo" => self.k_lo = parse(key, value)?,
            "initial_data.k_hi" => self.k_hi = parse(key, value)?,
            "initial_data.slope" => self.slope = Some(parse(key, value)?),
            "initial_data.path" => self.init_path = Some(PathBuf::from(value)),
            "diagnostics.alpha" => self.alpha = parse(key, value)?,
            "diagnostics.delta" => self.delta = parse(key, value)?,
            "diagnostics.eps_rate" => self.eps_rate = parse(key, value)?,
            "diagnostics.window_lo" => self.window_lo = Some(parse(key, value)?),
            "diagnostics.window_hi" => self.window_hi = Some(parse(key, value)?),
            "picard.max_outer" => self.picard_max_outer = parse(key, value)?,
            "picard.contraction_tol" => self.picard_tol = parse(key, value)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Parses and validates a config file body.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = Self::parse_unvalidated(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without the cross-field checks, so overrides can still be applied.
    pub fn parse_unvalidated(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(EmhdError::Config {
                    line,
                    message: format!("expected `key = value`, found {content:?}"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) && KEYS.contains(&key) {
                return Err(EmhdError::Config {
                    line,
                    message: format!("duplicate key {key:?}"),
                });
            }
            cfg.set(key, value).map_err(|message| EmhdError::Config { line, message })?;
        }
        Ok(cfg)
    }

    /// Applies `--key value` / `--key=value` pairs.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<()> {
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(flag) = arg.strip_prefix("--") else {
                return Err(EmhdError::Parameter(format!("expected a --key flag, found {arg:?}")));
            };
            let (key, value) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| EmhdError::Parameter(format!("flag --{flag} needs a value")))?;
                    (flag.to_string(), v.clone())
                }
            };
            self.set(&key, &value)
                .map_err(|m| EmhdError::Parameter(format!("command line: {m}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EmhdError::Parameter(m));
        Grid3::with_box_length(self.n, self.box_length)?;
        self.params()?;
        self.stepper()?;
        if matches!(self.init_kind, InitKind::RandomBand | InitKind::PowerLawSpectrum) && self.seed.is_none() {
            return bad(format!("initial_data.seed is required for {}", self.init_kind.as_str()));
        }
        if self.init_kind == InitKind::Checkpoint && self.init_path.is_none() {
            return bad("initial_data.path is required for checkpoint data".into());
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude {} must be finite and nonnegative", self.amplitude));
        }
        if !(self.k_lo >= 0.0 && self.k_hi >= self.k_lo) {
            return bad(format!("invalid band [{}, {}]", self.k_lo, self.k_hi));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1]", self.alpha));
        }
        if !(self.delta > 0.0) || !(self.eps_rate >= 0.0) {
            return bad("delta must be positive and eps_rate nonnegative".into());
        }
        if let (Some(lo), Some(hi)) = (self.window_lo, self.window_hi) {
            if !(lo > 0.0 && lo < hi) {
                return bad(format!("invalid fit window ({lo}, {hi})"));
            }
        }
        if self.picard_max_outer == 0 || !(self.picard_tol > 0.0) {
            return bad("picard.max_outer must be >= 1 and picard.contraction_tol positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid3> {
        Grid3::with_box_length(self.n, self.box_length)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::with_dissipation(self.s, self.kappa, self.mu, self.eps_visc)
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        StepperConfig::new(self.dt, self.t_end, self.scheme, self.snapshot_every)
    }

    pub fn picard(&self) -> Result<PicardConfig> {
        let mut c = PicardConfig::for_params(&self.params()?);
        c.max_outer = self.picard_max_outer;
        c.contraction_tol = self.picard_tol;
        Ok(c)
    }

    pub fn initial_data(&self) -> Result<SpectralVectorField> {
        let g = self.grid()?;
        let p = self.params()?;
        let sc = p.sigma_c();
        let seed = || {
            self.seed
                .ok_or_else(|| EmhdError::Parameter("initial_data.seed is required".into()))
        };
        match self.init_kind {
            InitKind::Beltrami => Ok(beltrami(g, self.amplitude)),
            InitKind::RandomBand => rescale_to_norm(&random_band(g, self.k_lo, self.k_hi, seed()?)?, sc, self.amplitude),
            InitKind::PowerLawSpectrum => {
                let slope = self.slope.unwrap_or(sc + 1.5);
                rescale_to_norm(&power_law(g, slope, self.k_lo, self.k_hi, seed()?)?, sc, self.amplitude)
            }
            InitKind::Checkpoint => {
                let path = self
                    .init_path
                    .as_ref()
                    .ok_or_else(|| EmhdError::Parameter("initial_data.path is required".into()))?;
                let ck = checkpoint::load(path)?;
                if ck.field.grid().n() != self.n {
                    return Err(EmhdError::Shape(format!(
                        "checkpoint has n = {}, config has n = {}",
                        ck.field.grid().n(),
                        self.n
                    )));
                }
                Ok(ck.field)
            }
        }
    }

    /// `(key, value)` for every key that differs from "unset".
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("grid.n", self.n.to_string()),
            ("grid.box_length", real(self.box_length)),
            ("model.s", real(self.s)),
            ("model.kappa", real(self.kappa)),
            ("model.mu", real(self.mu)),
            ("model.eps_visc", real(self.eps_visc)),
            ("stepper.dt", real(self.dt)),
            ("stepper.t_end", real(self.t_end)),
            ("stepper.scheme", self.scheme.to_string()),
            ("stepper.snapshot_every", self.snapshot_every.to_string()),
            ("initial_data.kind", self.init_kind.as_str().to_string()),
            ("initial_data.amplitude", real(self.amplitude)),
        ];
        if let Some(seed) = self.seed {
            out.push(("initial_data.seed", seed.to_string()));
        }
        out.push(("initial_data.k_lo", real(self.k_lo)));
        out.push(("initial_data.k_hi", real(self.k_hi)));
        if let Some(v) = self.slope {
            out.push(("initial_data.slope", real(v)));
        }
        if let Some(p) = &self.init_path {
            out.push(("initial_data.path", p.display().to_string()));
        }
        out.push(("diagnostics.alpha", real(self.alpha)));
        out.push(("diagnostics.delta", real(self.delta)));
        out.push(("diagnostics.eps_rate", real(self.eps_rate)));
        if let Some(v) = self.window_lo {
            out.push(("diagnostics.window_lo", real(v)));
        }
        if let Some(v) = self.window_hi {
            out.push(("diagnostics.window_hi", real(v)));
        }
        out.push(("picard.max_outer", self.picard_max_outer.to_string()));
        out.push(("picard.contraction_tol", real(self.picard_tol)));
        if let Some(p) = &self.output_dir {
            out.push(("output_dir", p.display().to_string()));
        }
        out
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// FNV-1a of the serialized config, used to name default output directories.
    pub fn fingerprint(&self) -> u64 {
        self.to_text().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = SimConfig::default();
        assert_eq!(SimConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = SimConfig::parse("# header\n\ngrid.n = 32   # comment\nmodel.s=0.25\n").unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.s, 0.25);
    }

    #[test]
    fn errors_are_line_anchored() {
        let e = SimConfig::parse("grid.n = 8\nmodel.z = 1\n").unwrap_err();
        assert!(matches!(e, EmhdError::Config { line: 2, .. }), "{e}");
        let e = SimConfig::parse("grid.n = 8\n\nmodel.s 1\n").unwrap_err();
        assert!(matches!(e, EmhdError::Config { line: 3, .. }));
        let e = SimConfig::parse("model.s = 1\nmodel.s = 2\n").unwrap_err();
        assert!(matches!(e, EmhdError::Config { line: 2, .. }));
        let e = SimConfig::parse("stepper.scheme = rk4\n").unwrap_err();
        assert!(matches!(e, EmhdError::Config { line: 1, .. }));
    }

    #[test]
    fn random_kinds_need_a_seed() {
        assert!(SimConfig::parse("initial_data.kind = random_band\n").is_err());
        assert!(SimConfig::parse("initial_data.kind = random_band\ninitial_data.seed = 3\n").is_ok());
    }

    #[test]
    fn overrides() {
        let mut c = SimConfig::default();
        c.apply_overrides(&["--model.s".into(), "0.3".into(), "--grid.n=8".into()]).unwrap();
        assert_eq!((c.s, c.n), (0.3, 8));
        assert!(c.apply_overrides(&["--nope".into(), "1".into()]).is_err());
        assert!(c.apply_overrides(&["--model.s".into()]).is_err());
        assert!(c.apply_overrides(&["model.s".into()]).is_err());
    }
}
