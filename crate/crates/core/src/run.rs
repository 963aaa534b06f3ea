//! Batch runs over a grid of sizes, velocities and exponents `κ`.
//!
//! Each grid point writes `<out>/<model>/N<n>_v<υ>_k<κ>/trace.csv` and a
//! `report.json` next to it; the run writes a summary `<out>/report.json`.
//! A failing point is recorded and the others carry on.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConvergenceAxis, RunConfig, VelocityAxis};
use crate::dynamics::{
    evolve_direct_reference, evolve_direct_tfim, evolve_eigenbasis, evolve_scaled, output_grid,
    Engine, ScaledTables, Trace,
};
use crate::error::{Error, Result};
use crate::models::{tfim, ModelKind, ModelSpec};
use crate::observables::{amplitudes_csv, emit_trace, EmitOptions, ObservableTrace};
use crate::scaling::{
    apt_window, collapse_metric, fit_power_law, kzm_window, write_json, Abscissa, CollapseReport,
    FinalSample, PowerLawFit,
};
use crate::schedule::{size_factor, velocity_for_scaled, AnnealingSchedule};
use crate::spectral::{ReducedSystem, SpectralSweep};

/// One resolved grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub model: ModelKind,
    pub n_qubits: usize,
    pub velocity: f64,
    /// The requested `Λ` for scaled-velocity sweeps.
    pub scaled_velocity: Option<f64>,
    pub kappa: f64,
}

impl GridPoint {
    pub fn dir_name(&self) -> String {
        format!("N{}_v{}_k{}", self.n_qubits, self.velocity, self.kappa)
    }

    /// Directory relative to the output root.
    pub fn rel_dir(&self) -> PathBuf {
        Path::new(self.model.name()).join(self.dir_name())
    }
}

/// Expand the sweep axes in config order: sizes, then velocities, then `κ`.
pub fn resolve_grid(cfg: &RunConfig) -> Result<Vec<GridPoint>> {
    let exps = cfg.model.exponents();
    let mut points = Vec::new();
    for &n in &cfg.sizes {
        for &v in cfg.velocities.values() {
            for &kappa in &cfg.kappas {
                let (velocity, scaled_velocity) = match cfg.velocities {
                    VelocityAxis::Velocity(_) => (v, None),
                    VelocityAxis::Scaled(_) => (velocity_for_scaled(n, v, kappa, &exps)?, Some(v)),
                };
                points.push(GridPoint {
                    model: cfg.model,
                    n_qubits: n,
                    velocity,
                    scaled_velocity,
                    kappa,
                });
            }
        }
    }
    Ok(points)
}

/// Everything a single point produced.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub observables: ObservableTrace,
    pub traces: Vec<Trace>,
    /// Sweep of the critical reduced system (tabulated engines).
    pub sweep: Option<SpectralSweep>,
    pub n_levels: usize,
}

impl PointResult {
    pub fn steps(&self) -> usize {
        self.traces
            .iter()
            .map(|t| t.stats.accepted + t.stats.rejected)
            .sum()
    }
}

fn block_sweep(cfg: &RunConfig, n: usize, k: f64) -> Result<SpectralSweep> {
    let exps = ModelKind::Tfim.exponents();
    let sys = ReducedSystem::tfim_block(n, k)?;
    let grid = cfg
        .grid()
        .build(n, &exps, cfg.lambda_start, cfg.lambda_end)?;
    SpectralSweep::compute(&sys, &grid, 2, &cfg.sweep_options())
}

/// Evolve one grid point with the configured engine.
pub fn simulate_point(cfg: &RunConfig, spec: &ModelSpec, point: &GridPoint) -> Result<PointResult> {
    let exps = spec.exponents();
    let n = spec.n_qubits;
    let schedule = AnnealingSchedule::new(
        point.velocity,
        point.kappa,
        cfg.lambda_start,
        cfg.lambda_end,
    )?;
    let outputs = output_grid(cfg.lambda_start, cfg.lambda_end, cfg.output_points);
    let sf = size_factor(n, exps.nu);
    let x_outputs: Vec<f64> = outputs.iter().map(|l| sf * l).collect();
    let settings = cfg.integrator();
    let levels = cfg.levels_for(spec);
    let scaled = |sweep: &SpectralSweep| -> Result<Trace> {
        let tables = ScaledTables::from_sweep(sweep, &exps)?;
        let lam = point
            .scaled_velocity
            .unwrap_or_else(|| crate::schedule::scaled_velocity(n, &schedule, &exps));
        evolve_scaled(
            &tables,
            n,
            &exps,
            lam,
            point.kappa,
            cfg.lambda_start,
            &x_outputs,
            &settings,
        )
    };

    let mut sweep_out = None;
    let traces = match (spec.kind, cfg.engine) {
        (ModelKind::Tfim, Engine::Direct) => {
            evolve_direct_tfim(n, &schedule, &outputs, &exps, &settings)?
        }
        (ModelKind::Tfim, Engine::Eigenbasis | Engine::Scaled) => tfim::momenta(n)
            .into_par_iter()
            .map(|k| {
                let sweep = block_sweep(cfg, n, k)?;
                let mut t = if cfg.engine == Engine::Scaled {
                    scaled(&sweep)?
                } else {
                    evolve_eigenbasis(&sweep, &schedule, 2, &outputs, &exps, &settings)?
                };
                t.momentum = Some(k);
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?,
        (_, Engine::Direct | Engine::Reference) => vec![evolve_direct_reference(
            spec,
            &schedule,
            &outputs,
            &exps,
            &settings,
            &cfg.reference_options(),
        )?],
        (_, Engine::Eigenbasis | Engine::Scaled) => {
            let sys = ReducedSystem::critical(spec)?;
            let grid = cfg
                .grid()
                .build(n, &exps, cfg.lambda_start, cfg.lambda_end)?;
            let sweep = SpectralSweep::compute(&sys, &grid, levels, &cfg.sweep_options())?;
            let t = if cfg.engine == Engine::Scaled {
                scaled(&sweep)?
            } else {
                evolve_eigenbasis(&sweep, &schedule, levels, &outputs, &exps, &settings)?
            };
            sweep_out = Some(sweep);
            vec![t]
        }
    };
    let mut observables = emit_trace(
        spec,
        &traces,
        &schedule,
        &exps,
        &EmitOptions {
            n_report: cfg.n_report,
            n_levels: levels,
        },
    )?;
    if let Some(lam) = point.scaled_velocity {
        observables.meta.scaled_velocity = lam;
    }
    Ok(PointResult {
        observables,
        traces,
        sweep: sweep_out,
        n_levels: levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub point: GridPoint,
    pub dir: PathBuf,
    pub engine: Engine,
    pub ok: bool,
    pub error: Option<String>,
    pub final_q: Option<f64>,
    pub final_p0: Option<f64>,
    pub max_norm_drift: Option<f64>,
    pub steps: Option<usize>,
    pub clamped: Option<usize>,
    pub tracking_events: Option<usize>,
    pub refined_nodes: Option<usize>,
}

fn run_point(cfg: &RunConfig, point: &GridPoint) -> (PointReport, Option<ObservableTrace>) {
    let dir = cfg.out.join(point.rel_dir());
    let mut report = PointReport {
        point: point.clone(),
        dir: point.rel_dir(),
        engine: cfg.engine,
        ok: false,
        error: None,
        final_q: None,
        final_p0: None,
        max_norm_drift: None,
        steps: None,
        clamped: None,
        tracking_events: None,
        refined_nodes: None,
    };
    let outcome = (|| -> Result<PointResult> {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let spec = cfg.spec(point.n_qubits)?;
        let res = simulate_point(cfg, &spec, point)?;
        res.observables.write_csv(&dir.join("trace.csv"))?;
        if cfg.dump_amplitudes {
            for (i, t) in res.traces.iter().enumerate() {
                let name = if res.traces.len() == 1 {
                    "amplitudes.csv".to_string()
                } else {
                    format!("amplitudes_block{i}.csv")
                };
                let path = dir.join(name);
                fs::write(&path, amplitudes_csv(t)).map_err(|e| Error::io(&path, e))?;
            }
        }
        Ok(res)
    })();
    let trace = match outcome {
        Ok(res) => {
            let last = res.observables.last();
            report.ok = true;
            report.final_q = Some(last.q);
            report.final_p0 = Some(last.p0());
            report.max_norm_drift = Some(res.observables.meta.max_norm_drift);
            report.steps = Some(res.steps());
            report.clamped = Some(res.observables.meta.clamped);
            report.tracking_events = res.sweep.as_ref().map(|s| s.events.len());
            report.refined_nodes = res.sweep.as_ref().map(|s| s.refined.len());
            Some(res.observables)
        }
        Err(e) => {
            log::error!("{}: {e}", point.rel_dir().display());
            report.error = Some(e.to_string());
            None
        }
    };
    if let Err(e) = write_json(&dir.join("report.json"), &report) {
        log::error!("{e}");
    }
    (report, trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseEntry {
    pub scaled_velocity: f64,
    pub kappa: f64,
    pub report: Option<CollapseReport>,
    pub passed: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub n_qubits: usize,
    pub kappa: f64,
    pub regime: String,
    pub fit: Option<PowerLawFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub value: usize,
    pub final_q: f64,
    pub final_p0: f64,
    /// Relative change of the final heating from the previous row.
    pub q_change: Option<f64>,
    /// Largest relative change of the ground energy on shared sweep nodes.
    pub energy_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub axis: ConvergenceAxis,
    pub point: GridPoint,
    pub gate: f64,
    pub rows: Vec<ConvergenceRow>,
    pub converged: Option<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub points: Vec<PointReport>,
    pub collapses: Vec<CollapseEntry>,
    pub fits: Vec<FitEntry>,
    pub convergence: Vec<ConvergenceTable>,
    pub convergence_errors: Vec<String>,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.ok).count()
            + self
                .collapses
                .iter()
                .filter(|c| c.passed != Some(true))
                .count()
            + self.fits.iter().filter(|f| f.fit.is_none()).count()
            + self
                .convergence
                .iter()
                .filter(|c| c.converged.is_none())
                .count()
            + self.convergence_errors.len()
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Run every grid point and the requested analyses; writes all outputs.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let points = resolve_grid(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let results: Vec<(PointReport, Option<ObservableTrace>)> =
        pool(cfg.workers)?.install(|| points.par_iter().map(|p| run_point(cfg, p)).collect());

    let collapses = if cfg.collapse {
        collapse_entries(cfg, &points, &results)
    } else {
        Vec::new()
    };
    let fits = if cfg.fit {
        fit_entries(&points, &results)
    } else {
        Vec::new()
    };
    let mut convergence = Vec::new();
    let mut convergence_errors = Vec::new();
    for &axis in &cfg.converge {
        match convergence_sweep(cfg, axis, None) {
            Ok(t) => convergence.push(t),
            Err(e) => convergence_errors.push(format!("{axis}: {e}")),
        }
    }
    let report = RunReport {
        config: cfg.clone(),
        points: results.into_iter().map(|(r, _)| r).collect(),
        collapses,
        fits,
        convergence,
        convergence_errors,
    };
    write_json(&cfg.out.join("report.json"), &report)?;
    Ok(report)
}

fn collapse_entries(
    cfg: &RunConfig,
    points: &[GridPoint],
    results: &[(PointReport, Option<ObservableTrace>)],
) -> Vec<CollapseEntry> {
    // group by (Λ, κ) bit patterns; sizes ascend within a group
    let mut groups: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        if let Some(lam) = p.scaled_velocity {
            groups
                .entry((lam.to_bits(), p.kappa.to_bits()))
                .or_default()
                .push(i);
        }
    }
    if groups.is_empty() {
        log::warn!("collapse needs scaled_velocity sweeps; none found");
    }
    let mut out = Vec::new();
    for ((lam, kappa), mut idx) in groups {
        idx.sort_by_key(|&i| points[i].n_qubits);
        for w in idx.windows(2) {
            let (a, b) = (&results[w[0]], &results[w[1]]);
            let entry = match (&a.1, &b.1) {
                (Some(ta), Some(tb)) => {
                    let la = a.0.dir.display().to_string();
                    let lb = b.0.dir.display().to_string();
                    match collapse_metric(ta, tb, cfg.collapse_window, (&la, &lb)) {
                        Ok(r) => CollapseEntry {
                            scaled_velocity: f64::from_bits(lam),
                            kappa: f64::from_bits(kappa),
                            passed: Some(r.passes(cfg.collapse_q_tol, cfg.collapse_p0_tol)),
                            report: Some(r),
                            error: None,
                        },
                        Err(e) => CollapseEntry {
                            scaled_velocity: f64::from_bits(lam),
                            kappa: f64::from_bits(kappa),
                            report: None,
                            passed: None,
                            error: Some(e.to_string()),
                        },
                    }
                }
                _ => CollapseEntry {
                    scaled_velocity: f64::from_bits(lam),
                    kappa: f64::from_bits(kappa),
                    report: None,
                    passed: None,
                    error: Some("a trace of the pair failed".into()),
                },
            };
            out.push(entry);
        }
    }
    out
}

fn fit_entries(
    points: &[GridPoint],
    results: &[(PointReport, Option<ObservableTrace>)],
) -> Vec<FitEntry> {
    let mut groups: BTreeMap<(usize, u64), Vec<FinalSample>> = BTreeMap::new();
    for (p, (_, t)) in points.iter().zip(results) {
        if let Some(t) = t {
            groups
                .entry((p.n_qubits, p.kappa.to_bits()))
                .or_default()
                .push(FinalSample::from_trace(t));
        }
    }
    let mut out = Vec::new();
    for ((n, kappa), samples) in groups {
        let kappa = f64::from_bits(kappa);
        let apt = apt_window(&samples).and_then(|w| {
            let s: Vec<(f64, f64)> = samples.iter().map(|f| (f.velocity, f.q_final)).collect();
            fit_power_law(&s, w, Abscissa::Velocity)
        });
        let kzm = kzm_window(&samples).and_then(|w| {
            let s: Vec<(f64, f64)> = samples
                .iter()
                .map(|f| (f.scaled_velocity, f.q_final))
                .collect();
            fit_power_law(&s, w, Abscissa::ScaledVelocity)
        });
        for (regime, fit) in [("apt", apt), ("kzm", kzm)] {
            let (fit, error) = match fit {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(FitEntry {
                n_qubits: n,
                kappa,
                regime: regime.into(),
                fit,
                error,
            });
        }
    }
    out
}

pub const CONVERGENCE_CAP: usize = 4096;

/// Repeat the first grid point while the axis value grows, until the final
/// heating changes by less than the gate. `values` overrides the doubling
/// sequence that starts from the configured value.
pub fn convergence_sweep(
    cfg: &RunConfig,
    axis: ConvergenceAxis,
    values: Option<&[usize]>,
) -> Result<ConvergenceTable> {
    let point = resolve_grid(cfg)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("empty grid".into()))?;
    let tabulated = matches!(cfg.engine, Engine::Eigenbasis | Engine::Scaled);
    let applicable = match axis {
        ConvergenceAxis::Truncation => cfg.model == ModelKind::Dicke && tabulated,
        ConvergenceAxis::Levels => cfg.model != ModelKind::Tfim && tabulated,
        ConvergenceAxis::PhotonCap => cfg.model == ModelKind::Dicke && !tabulated,
    };
    if !applicable {
        return Err(Error::Config(format!(
            "convergence axis {axis} does not apply to {} with the {} engine",
            cfg.model, cfg.engine
        )));
    }
    let base = match axis {
        ConvergenceAxis::Truncation => cfg.truncation,
        ConvergenceAxis::Levels => cfg.levels_for(&cfg.spec(point.n_qubits)?),
        ConvergenceAxis::PhotonCap => cfg.photon_cap,
    };
    let seq: Vec<usize> = match values {
        Some(v) if !v.is_empty() => v.to_vec(),
        Some(_) => return Err(Error::Config("empty convergence value list".into())),
        None => (0..=cfg.converge_doublings)
            .map(|i| base << i)
            .take_while(|&v| v <= CONVERGENCE_CAP)
            .collect(),
    };

    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut prev_sweep: Option<SpectralSweep> = None;
    let mut converged = None;
    let mut residual = f64::INFINITY;
    for &value in &seq {
        let mut c = cfg.clone();
        match axis {
            ConvergenceAxis::Truncation => c.truncation = value,
            ConvergenceAxis::Levels => c.n_levels = Some(value),
            ConvergenceAxis::PhotonCap => c.photon_cap = value,
        }
        let spec = c.spec(point.n_qubits)?;
        if axis == ConvergenceAxis::Levels && value > spec.effective_dimension() {
            log::warn!("n_levels = {value} exceeds the reduced dimension; stopping");
            break;
        }
        let res = simulate_point(&c, &spec, &point)?;
        let last = res.observables.last();
        let q_change = rows.last().map(|r| relative(last.q, r.final_q));
        let energy_change = match (&prev_sweep, &res.sweep) {
            (Some(a), Some(b)) => Some(ground_energy_change(a, b)),
            _ => None,
        };
        rows.push(ConvergenceRow {
            value,
            final_q: last.q,
            final_p0: last.p0(),
            q_change,
            energy_change,
        });
        if let Some(dq) = q_change {
            residual = dq;
            if dq < cfg.converge_gate {
                converged = Some(value);
                break;
            }
        }
        prev_sweep = res.sweep;
    }
    if converged.is_none() {
        log::warn!("{axis}: no convergence within {seq:?}, last change {residual:e}");
    }
    Ok(ConvergenceTable {
        axis,
        point,
        gate: cfg.converge_gate,
        rows,
        converged,
        residual,
    })
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest relative ground-energy change over λ nodes both sweeps share.
pub fn ground_energy_change(a: &SpectralSweep, b: &SpectralSweep) -> f64 {
    let (mut i, mut j, mut worst) = (0, 0, 0.0f64);
    while i < a.rows() && j < b.rows() {
        let (la, lb) = (a.lambdas[i], b.lambdas[j]);
        if la == lb {
            worst = worst.max(relative(a.energy(i, 0), b.energy(j, 0)));
            i += 1;
            j += 1;
        } else if la < lb {
            i += 1;
        } else {
            j += 1;
        }
    }
    worst
}

/// Human-readable grid listing for dry runs.
pub fn describe_grid(cfg: &RunConfig) -> Result<String> {
    let points = resolve_grid(cfg)?;
    let mut s = format!(
        "{} point(s), engine {}, output {}\n",
        points.len(),
        cfg.engine,
        cfg.out.display()
    );
    for p in &points {
        let spec = cfg.spec(p.n_qubits)?;
        let lam = p.scaled_velocity.unwrap_or_else(|| {
            AnnealingSchedule::new(p.velocity, p.kappa, cfg.lambda_start, cfg.lambda_end)
                .map(|sch| crate::schedule::scaled_velocity(p.n_qubits, &sch, &spec.exponents()))
                .unwrap_or(f64::NAN)
        });
        s.push_str(&format!(
            "{}  N={} υ={} Λ={} κ={} levels={}\n",
            p.rel_dir().display(),
            p.n_qubits,
            p.velocity,
            lam,
            p.kappa,
            cfg.levels_for(&spec)
        ));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str, out: &Path) -> RunConfig {
        let mut raw = crate::config::RawConfig::parse(text).unwrap();
        raw.set("out", out.to_str().unwrap()).unwrap();
        RunConfig::from_raw(&raw).unwrap()
    }

    #[test]
    fn grid_expands_in_order_and_converts_scaled_velocities() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "model = lmgm\nsize = 16, 32\nscaled_velocity = 2\nkappa = 1, 2\n",
            dir.path(),
        );
        let g = resolve_grid(&c).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!((g[0].n_qubits, g[0].kappa), (16, 1.0));
        assert_eq!((g[1].n_qubits, g[1].kappa), (16, 2.0));
        let exps = ModelKind::Lmgm.exponents();
        for p in &g {
            let sch = AnnealingSchedule::new(p.velocity, p.kappa, -1.0, 1.0).unwrap();
            let lam = crate::schedule::scaled_velocity(p.n_qubits, &sch, &exps);
            assert!((lam - 2.0).abs() < 1e-12);
        }
        assert!(g[0].dir_name().starts_with("N16_v"));
        assert!(describe_grid(&c).unwrap().starts_with("4 point(s)"));
    }

    #[test]
    fn run_writes_the_layout_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let text = "model = tfim\nsize = 8, 16\nscaled_velocity = 4\noutput_points = 101\ncollapse = true\ncollapse_window = -4, 4\n";
        let c = cfg(text, &dir.path().join("a"));
        let r = run(&c).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.points.iter().all(|p| p.ok));
        assert_eq!(r.collapses.len(), 1);
        assert!(r.collapses[0].report.is_some());
        let first = dir
            .path()
            .join("a")
            .join(&r.points[0].dir)
            .join("trace.csv");
        assert!(first.exists());
        assert!(dir
            .path()
            .join("a")
            .join(&r.points[0].dir)
            .join("report.json")
            .exists());
        assert!(dir.path().join("a/report.json").exists());

        let c2 = cfg(text, &dir.path().join("b"));
        let r2 = run(&c2).unwrap();
        for (p, q) in r.points.iter().zip(&r2.points) {
            let a = fs::read(dir.path().join("a").join(&p.dir).join("trace.csv")).unwrap();
            let b = fs::read(dir.path().join("b").join(&q.dir).join("trace.csv")).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn failing_points_are_isolated() {
        let dir = tempfile::tempdir().unwrap();
        // N = 32 exceeds a tiny reference cap; N = 4 fits
        let c = cfg(
            "model = lmgm\nsize = 4, 32\nvelocity = 0.5\nengine = reference\ndimension_cap = 10\noutput_points = 11\n",
            dir.path(),
        );
        let r = run(&c).unwrap();
        assert!(r.points[0].ok);
        assert!(!r.points[1].ok);
        assert!(r.points[1].error.as_deref().unwrap().contains("10"));
        assert_eq!(r.failures(), 1);
        assert!(dir.path().join(&r.points[0].dir).join("trace.csv").exists());
        assert!(dir
            .path()
            .join(&r.points[1].dir)
            .join("report.json")
            .exists());
    }

    #[test]
    fn convergence_sweep_stops_when_the_gate_is_met() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "model = lmgm\nsize = 16\nvelocity = 0.1\nlevels = 2\noutput_points = 11\nconverge_gate = 1e-4\n",
            dir.path(),
        );
        let t = convergence_sweep(&c, ConvergenceAxis::Levels, None).unwrap();
        assert_eq!(t.rows[0].value, 2);
        assert_eq!(t.converged, Some(8), "{t:?}");
        assert!(convergence_sweep(&c, ConvergenceAxis::PhotonCap, None).is_err());
    }
}
