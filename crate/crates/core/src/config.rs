//! Run configuration.
//!
//! The file format is flat `key = value` text. Repeating a key, or giving a
//! comma-separated value, builds a list; `#` starts a comment. Command-line
//! flags replace whole keys before the config is resolved.
//!
//! ```text
//! model = lmgm
//! size = 256
//! size = 512
//! scaled_velocity = 2.0
//! engine = eigenbasis
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Engine, IntegratorSettings, ReferenceOptions, DEFAULT_OUTPUT_POINTS};
use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelSpec, DEFAULT_TRUNCATION};
use crate::observables::DEFAULT_N_REPORT;
use crate::ode::Tolerances;
use crate::spectral::{GridSpec, SweepOptions};

pub const OUT_ENV: &str = "QPT_ANNEAL_OUT";
pub const DEFAULT_OUT: &str = "results";

const KEYS: &[&str] = &[
    "model",
    "size",
    "velocity",
    "scaled_velocity",
    "kappa",
    "lambda_start",
    "lambda_end",
    "engine",
    "levels",
    "truncation",
    "photon_cap",
    "dimension_cap",
    "output_points",
    "n_report",
    "dump_amplitudes",
    "grid_x_window",
    "grid_window_points",
    "grid_outer_step",
    "rtol",
    "atol",
    "out",
    "workers",
    "seed",
    "collapse",
    "collapse_window",
    "collapse_q_tol",
    "collapse_p0_tol",
    "fit",
    "converge",
    "converge_gate",
    "converge_doublings",
];

/// Raw key → values map, in file order per key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Vec<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected key = value, got '{line}'",
                    i + 1
                ))
            })?;
            raw.push(key.trim(), value.trim())?;
        }
        Ok(raw)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn check_key(key: &str) -> Result<()> {
        if KEYS.contains(&key) {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown config key '{key}'")))
        }
    }

    /// Append values (comma-separated allowed) to `key`.
    pub fn push(&mut self, key: &str, value: &str) -> Result<()> {
        Self::check_key(key)?;
        let list = self.entries.entry(key.to_string()).or_default();
        list.extend(
            value
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(String::from),
        );
        Ok(())
    }

    /// Replace every value of `key`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        Self::check_key(key)?;
        self.entries.remove(key);
        self.push(key, value)
    }

    pub fn clear(&mut self, key: &str) {
        self.entries.remove(key);
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.entries
            .get(key)
            .map(|vs| {
                vs.iter()
                    .map(|v| {
                        v.parse::<T>()
                            .map_err(|e| Error::Config(format!("{key} = {v}: {e}")))
                    })
                    .collect()
            })
            .unwrap_or_else(|| Ok(Vec::new()))
    }

    pub fn one<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        let mut vs = self.list::<T>(key)?;
        match vs.len() {
            0 => Ok(None),
            1 => Ok(vs.pop()),
            n => Err(Error::Config(format!("{key} takes one value, got {n}"))),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.one::<String>(key)?.as_deref() {
            None => Ok(false),
            Some("true" | "yes" | "on" | "1") => Ok(true),
            Some("false" | "no" | "off" | "0") => Ok(false),
            Some(v) => Err(Error::Config(format!(
                "{key} = {v}: expected true or false"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConvergenceAxis {
    /// Displaced-Fock truncation of the Dicke basis.
    #[serde(rename = "M")]
    Truncation,
    #[serde(rename = "n_levels")]
    Levels,
    /// Photon cutoff of the plain Fock reference basis.
    #[serde(rename = "photon_cap")]
    PhotonCap,
}

impl ConvergenceAxis {
    pub fn name(self) -> &'static str {
        match self {
            ConvergenceAxis::Truncation => "M",
            ConvergenceAxis::Levels => "n_levels",
            ConvergenceAxis::PhotonCap => "photon_cap",
        }
    }
}

impl fmt::Display for ConvergenceAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConvergenceAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "m" | "truncation" => Ok(ConvergenceAxis::Truncation),
            "n_levels" | "levels" => Ok(ConvergenceAxis::Levels),
            "photon_cap" => Ok(ConvergenceAxis::PhotonCap),
            other => Err(Error::Config(format!("unknown convergence axis '{other}'"))),
        }
    }
}

/// Either velocities or scaled velocities drive a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityAxis {
    Velocity(Vec<f64>),
    Scaled(Vec<f64>),
}

impl VelocityAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            VelocityAxis::Velocity(v) | VelocityAxis::Scaled(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub sizes: Vec<usize>,
    pub velocities: VelocityAxis,
    pub kappas: Vec<f64>,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub engine: Engine,
    /// Tracked levels; `None` picks the model default.
    pub n_levels: Option<usize>,
    pub truncation: usize,
    pub photon_cap: usize,
    pub dimension_cap: usize,
    pub output_points: usize,
    pub n_report: usize,
    pub dump_amplitudes: bool,
    pub grid_x_window: f64,
    pub grid_window_points: usize,
    pub grid_outer_step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub out: PathBuf,
    /// Worker threads for grid points; 0 uses every core.
    pub workers: usize,
    /// Reserved for resampled fits; the physics is deterministic.
    pub seed: u64,
    pub collapse: bool,
    pub collapse_window: (f64, f64),
    pub collapse_q_tol: f64,
    pub collapse_p0_tol: f64,
    pub fit: bool,
    pub converge: Vec<ConvergenceAxis>,
    pub converge_gate: f64,
    pub converge_doublings: usize,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let model: ModelKind = raw
            .one("model")?
            .ok_or_else(|| Error::Config("missing model".into()))?;
        let sizes: Vec<usize> = raw.list("size")?;
        if sizes.is_empty() {
            return Err(Error::Config("missing sweep axis: size".into()));
        }
        let v: Vec<f64> = raw.list("velocity")?;
        let s: Vec<f64> = raw.list("scaled_velocity")?;
        let velocities = match (v.is_empty(), s.is_empty()) {
            (false, true) => VelocityAxis::Velocity(v),
            (true, false) => VelocityAxis::Scaled(s),
            (true, true) => {
                return Err(Error::Config(
                    "missing sweep axis: velocity or scaled_velocity".into(),
                ))
            }
            (false, false) => {
                return Err(Error::Config(
                    "give either velocity or scaled_velocity, not both".into(),
                ))
            }
        };
        let mut kappas: Vec<f64> = raw.list("kappa")?;
        if kappas.is_empty() {
            kappas.push(1.0);
        }
        let default_engine = if model == ModelKind::Tfim {
            Engine::Direct
        } else {
            Engine::Eigenbasis
        };
        let grid = GridSpec::default();
        let tol = Tolerances::default();
        let window: Vec<f64> = raw.list("collapse_window")?;
        let collapse_window = match window.as_slice() {
            [] => (-10.0, 10.0),
            [lo, hi] => (*lo, *hi),
            _ => return Err(Error::Config("collapse_window takes lo, hi".into())),
        };
        let out = match raw.one::<String>("out")? {
            Some(o) => PathBuf::from(o),
            None => std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        };
        let cfg = Self {
            model,
            sizes,
            velocities,
            kappas,
            lambda_start: raw.one("lambda_start")?.unwrap_or(-1.0),
            lambda_end: raw.one("lambda_end")?.unwrap_or(1.0),
            engine: raw.one("engine")?.unwrap_or(default_engine),
            n_levels: raw.one("levels")?,
            truncation: raw.one("truncation")?.unwrap_or(DEFAULT_TRUNCATION),
            photon_cap: raw
                .one("photon_cap")?
                .unwrap_or(ReferenceOptions::default().photon_cap),
            dimension_cap: raw
                .one("dimension_cap")?
                .unwrap_or(ReferenceOptions::default().dimension_cap),
            output_points: raw.one("output_points")?.unwrap_or(DEFAULT_OUTPUT_POINTS),
            n_report: raw.one("n_report")?.unwrap_or(DEFAULT_N_REPORT),
            dump_amplitudes: raw.flag("dump_amplitudes")?,
            grid_x_window: raw.one("grid_x_window")?.unwrap_or(grid.x_window),
            grid_window_points: raw.one("grid_window_points")?.unwrap_or(grid.window_points),
            grid_outer_step: raw.one("grid_outer_step")?.unwrap_or(grid.outer_step),
            rtol: raw.one("rtol")?.unwrap_or(tol.rtol),
            atol: raw.one("atol")?.unwrap_or(tol.atol),
            out,
            workers: raw.one("workers")?.unwrap_or(0),
            seed: raw.one("seed")?.unwrap_or(0),
            collapse: raw.flag("collapse")?,
            collapse_window,
            collapse_q_tol: raw.one("collapse_q_tol")?.unwrap_or(0.03),
            collapse_p0_tol: raw.one("collapse_p0_tol")?.unwrap_or(0.02),
            fit: raw.flag("fit")?,
            converge: raw.list("converge")?,
            converge_gate: raw.one("converge_gate")?.unwrap_or(1e-6),
            converge_doublings: raw.one("converge_doublings")?.unwrap_or(3),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        for &n in &self.sizes {
            ModelSpec::with_truncation(self.model, n, self.truncation)?;
        }
        if self
            .velocities
            .values()
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::Config("velocities must be positive".into()));
        }
        if self.kappas.iter().any(|k| !(k.is_finite() && *k >= 1.0)) {
            return Err(Error::Config("kappa must be ≥ 1".into()));
        }
        if !(self.lambda_start < 0.0 && self.lambda_end > 0.0) {
            return Err(Error::Config(format!(
                "the sweep [{}, {}] must cross λ = 0",
                self.lambda_start, self.lambda_end
            )));
        }
        if self.engine == Engine::Scaled && matches!(self.velocities, VelocityAxis::Velocity(_)) {
            log::info!("scaled engine: velocities converted to Λ per size");
        }
        if self.output_points < 2 || self.n_report == 0 {
            return Err(Error::Config(
                "output_points ≥ 2 and n_report ≥ 1 required".into(),
            ));
        }
        if let Some(0) = self.n_levels {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.collapse_window.0 < self.collapse_window.1) {
            return Err(Error::Config("collapse_window must have lo < hi".into()));
        }
        Ok(())
    }

    pub fn spec(&self, n_qubits: usize) -> Result<ModelSpec> {
        ModelSpec::with_truncation(self.model, n_qubits, self.truncation)
    }

    pub fn levels_for(&self, spec: &ModelSpec) -> usize {
        match spec.kind {
            ModelKind::Tfim => 2,
            _ => self
                .n_levels
                .unwrap_or_else(|| spec.default_levels())
                .min(spec.effective_dimension()),
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x_window: self.grid_x_window,
            window_points: self.grid_window_points,
            outer_step: self.grid_outer_step,
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions::default()
    }

    pub fn integrator(&self) -> IntegratorSettings {
        IntegratorSettings {
            tol: Tolerances {
                rtol: self.rtol,
                atol: self.atol,
            },
            ..IntegratorSettings::default()
        }
    }

    pub fn reference_options(&self) -> ReferenceOptions {
        ReferenceOptions {
            dimension_cap: self.dimension_cap,
            photon_cap: self.photon_cap,
            n_report: self.n_report.max(1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_come_from_repeats_and_commas() {
        let c = RunConfig::parse(
            "# comment\nmodel = lmgm\nsize = 16\nsize = 32, 64\nscaled_velocity = 1.5 # trailing\n",
        )
        .unwrap();
        assert_eq!(c.sizes, vec![16, 32, 64]);
        assert_eq!(c.velocities, VelocityAxis::Scaled(vec![1.5]));
        assert_eq!(c.kappas, vec![1.0]);
        assert_eq!(c.engine, Engine::Eigenbasis);
    }

    #[test]
    fn missing_axes_are_named() {
        let e = RunConfig::parse("model = tfim\nvelocity = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("size"), "{e}");
        let e = RunConfig::parse("model = tfim\nsize = 8\n").unwrap_err();
        assert!(e.to_string().contains("velocity"), "{e}");
        let e = RunConfig::parse("model = tfim\nsize = 8\nvelocity = 1\nscaled_velocity = 1\n")
            .unwrap_err();
        assert!(e.to_string().contains("not both"), "{e}");
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(RunConfig::parse("model = tfim\nsize = 7\nvelocity = 0.1\n").is_err());
        assert!(
            RunConfig::parse("model = tfim\nsize = 8\nvelocity = 0.1\ncolour = red\n").is_err()
        );
        assert!(RunConfig::parse("model = tfim\nsize = 8\nvelocity = -1\n").is_err());
        assert!(RunConfig::parse("model = tfim\nsize = 8\nvelocity = 1\nkappa = 0.5\n").is_err());
        assert!(RunConfig::parse("model tfim\n").is_err());
    }

    #[test]
    fn set_replaces_a_key() {
        let mut raw =
            RawConfig::parse("model = tfim\nsize = 8\nsize = 16\nvelocity = 0.1\n").unwrap();
        raw.set("size", "32,64").unwrap();
        raw.set("out", "/tmp/x").unwrap();
        let c = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(c.sizes, vec![32, 64]);
        assert_eq!(c.out, PathBuf::from("/tmp/x"));
    }
}
