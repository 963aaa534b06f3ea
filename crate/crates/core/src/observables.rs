//! Heating `Q = ⟨H⟩ - E_0` and ground-state fidelity `p_0` along a sweep.
//!
//! Tabulated engines give `Q` as the spectral sum `Σ p_n Δ_{n,0}`; the
//! Schrödinger engines carry the full state, so `Q` comes from the energy
//! expectation instead. TFIM momentum blocks combine as a sum (`Q`) and a
//! product (`p_0`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Engine, QuenchState, Trace, TraceRow};
use crate::error::{Error, Result};
use crate::models::{tfim, ModelKind, ModelSpec};
use crate::schedule::{scaled_velocity, size_factor, AnnealingSchedule, ScalingExponents};
use crate::spectral::SpectralSnapshot;

pub const DEFAULT_N_REPORT: usize = 5;

/// Heating values in `[HEATING_FLOOR, 0)` are rounding and clamp to zero.
pub const HEATING_FLOOR: f64 = -1e-12;

pub fn fidelity(state: &QuenchState) -> f64 {
    state.population(0)
}

/// `Σ_n |a_n|² Δ_{n,0}` with the gaps given level by level.
pub fn spectral_heating(state: &QuenchState, gaps: &[f64]) -> Result<f64> {
    if gaps.len() < state.n_levels() {
        return Err(Error::LevelMismatch {
            state: state.n_levels(),
            snapshot: gaps.len(),
        });
    }
    Ok(state
        .amplitudes
        .iter()
        .zip(gaps)
        .map(|(a, g)| a.norm_sqr() * g)
        .sum())
}

/// Spectral-sum heating against a snapshot at the same λ. The snapshot may
/// hold extra levels above the state's.
pub fn heating(state: &QuenchState, snapshot: &SpectralSnapshot) -> Result<f64> {
    if (state.lambda - snapshot.lambda).abs() > 1e-12 * snapshot.lambda.abs().max(1.0) {
        return Err(Error::Config(format!(
            "state at λ = {} but snapshot at λ = {}",
            state.lambda, snapshot.lambda
        )));
    }
    let e0 = snapshot.energies[0];
    let gaps: Vec<f64> = snapshot.energies.iter().map(|e| e - e0).collect();
    spectral_heating(state, &gaps)
}

/// Heating of one trace row: the energy expectation when the engine kept the
/// full state, the spectral sum otherwise.
pub fn row_heating(row: &TraceRow) -> Result<f64> {
    match row.expectation_excess {
        Some(q) => Ok(q),
        None => spectral_heating(&row.state, &row.gaps),
    }
}

/// Applies the heating floor and counts clamped values.
#[derive(Debug, Default, Clone, Copy)]
pub struct HeatingFloor {
    pub clamped: usize,
}

impl HeatingFloor {
    pub fn apply(&mut self, q: f64, lambda: f64) -> Result<f64> {
        if q >= 0.0 {
            Ok(q)
        } else if q >= HEATING_FLOOR {
            self.clamped += 1;
            Ok(0.0)
        } else {
            Err(Error::NegativeHeating { value: q, lambda })
        }
    }
}

/// One TFIM block at one instant.
#[derive(Debug, Clone, Copy)]
pub struct BlockSample<'a> {
    pub momentum: f64,
    pub state: &'a QuenchState,
    pub gaps: &'a [f64],
}

/// Total heating and fidelity of a TFIM chain from its momentum blocks.
pub fn aggregate_tfim(n_qubits: usize, blocks: &[BlockSample<'_>]) -> Result<(f64, f64)> {
    let order = block_order(n_qubits, blocks.iter().map(|b| b.momentum))?;
    let mut q = 0.0;
    let mut p0 = 1.0;
    for &i in &order {
        let b = &blocks[i];
        q += spectral_heating(b.state, b.gaps)?;
        p0 *= fidelity(b.state);
    }
    Ok((q, p0))
}

/// Indices of `momenta` in grid order; every grid momentum exactly once.
fn block_order(n_qubits: usize, momenta: impl Iterator<Item = f64>) -> Result<Vec<usize>> {
    let grid = tfim::momenta(n_qubits);
    let mut slot: Vec<Option<usize>> = vec![None; grid.len()];
    for (i, k) in momenta.enumerate() {
        let j = grid
            .iter()
            .position(|g| (g - k).abs() < 1e-12)
            .ok_or(Error::OffGridMomentum { n_qubits, k })?;
        if slot[j].replace(i).is_some() {
            return Err(Error::Config(format!("momentum block k = {k} given twice")));
        }
    }
    slot.iter()
        .zip(&grid)
        .map(|(s, k)| s.ok_or_else(|| Error::Config(format!("missing momentum block k = {k}"))))
        .collect()
}

/// Run parameters carried in the trace header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub model: ModelKind,
    pub n_qubits: usize,
    pub velocity: f64,
    pub kappa: f64,
    pub scaled_velocity: f64,
    pub mu: f64,
    pub nu: f64,
    pub z: f64,
    pub engine: Engine,
    pub n_levels: usize,
    /// Displaced-Fock truncation (Dicke only).
    pub truncation: Option<usize>,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub n_report: usize,
    /// Rows whose heating was clamped up to zero.
    pub clamped: usize,
    pub max_norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRow {
    pub t: f64,
    pub lambda: f64,
    pub x: f64,
    pub q: f64,
    pub q_scaled: f64,
    /// `p_0, p_1, ..` up to `n_report`.
    pub p: Vec<f64>,
}

impl ObservableRow {
    pub fn p0(&self) -> f64 {
        self.p[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableTrace {
    pub meta: TraceMetadata,
    pub rows: Vec<ObservableRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct EmitOptions {
    pub n_report: usize,
    /// Levels the engine evolved.
    pub n_levels: usize,
}

impl Default for EmitOptions {
    fn default() -> Self {
        Self {
            n_report: DEFAULT_N_REPORT,
            n_levels: 0,
        }
    }
}

/// Observables of a finished run. Several traces are read as the momentum
/// blocks of a TFIM chain; only `p_0` is reported for them.
pub fn emit_trace(
    spec: &ModelSpec,
    traces: &[Trace],
    schedule: &AnnealingSchedule,
    exps: &ScalingExponents,
    opts: &EmitOptions,
) -> Result<ObservableTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Config("no traces to emit".into()))?;
    let rows_n = first.rows.len();
    if traces.iter().any(|t| t.rows.len() != rows_n) {
        return Err(Error::Config("block traces differ in length".into()));
    }
    let sf = size_factor(spec.n_qubits, exps.nu);
    let nz = (spec.n_qubits as f64).powf(exps.z_f64());
    let mut floor = HeatingFloor::default();
    let blocks = traces.len() > 1;
    let order = if blocks {
        block_order(
            spec.n_qubits,
            traces.iter().map(|t| t.momentum.unwrap_or(f64::NAN)),
        )?
    } else {
        vec![0]
    };
    let n_report = if blocks {
        1
    } else {
        opts.n_report.clamp(1, first.rows[0].state.n_levels())
    };

    let mut rows = Vec::with_capacity(rows_n);
    for i in 0..rows_n {
        let lead = &first.rows[i];
        let lambda = lead.lambda();
        let (q, p) = if blocks {
            let mut q = 0.0;
            let mut p0 = 1.0;
            for &b in &order {
                let row = &traces[b].rows[i];
                if row.lambda() != lambda {
                    return Err(Error::Config("block traces on different λ grids".into()));
                }
                q += floor.apply(row_heating(row)?, lambda)?;
                p0 *= fidelity(&row.state);
            }
            (q, vec![unit_round(p0)])
        } else {
            let q = floor.apply(row_heating(lead)?, lambda)?;
            (
                q,
                (0..n_report)
                    .map(|n| unit_round(lead.state.population(n)))
                    .collect(),
            )
        };
        rows.push(ObservableRow {
            t: lead.t,
            lambda,
            x: sf * lambda,
            q,
            q_scaled: q * nz,
            p,
        });
    }
    if floor.clamped > 0 {
        log::debug!("{} heating values clamped to zero", floor.clamped);
    }
    let kappa = schedule.kappa();
    let meta = TraceMetadata {
        model: spec.kind,
        n_qubits: spec.n_qubits,
        velocity: schedule.velocity(),
        kappa,
        scaled_velocity: scaled_velocity(spec.n_qubits, schedule, exps),
        mu: exps.mu(kappa),
        nu: exps.nu_f64(),
        z: exps.z_f64(),
        engine: first.engine,
        n_levels: if opts.n_levels > 0 {
            opts.n_levels
        } else {
            lead_levels(first)
        },
        truncation: (spec.kind == ModelKind::Dicke).then_some(spec.truncation),
        lambda_start: schedule.lambda_start(),
        lambda_end: schedule.lambda_end(),
        n_report,
        clamped: floor.clamped,
        max_norm_drift: traces.iter().map(Trace::max_norm_drift).fold(0.0, f64::max),
    };
    Ok(ObservableTrace { meta, rows })
}

/// Pull probabilities within rounding of 0 or 1 back into range.
fn unit_round(p: f64) -> f64 {
    if p > 1.0 && p < 1.0 + 1e-12 {
        1.0
    } else if p < 0.0 && p > -1e-12 {
        0.0
    } else {
        p
    }
}

fn lead_levels(trace: &Trace) -> usize {
    trace.rows[0].state.n_levels()
}

impl ObservableTrace {
    pub fn last(&self) -> &ObservableRow {
        self.rows.last().expect("traces are never empty")
    }

    pub fn final_heating(&self) -> f64 {
        self.last().q
    }

    pub fn header(&self) -> String {
        let mut h = String::from("t,lambda,x,Q,Q_scaled,p0");
        for n in 1..self.meta.n_report {
            let _ = write!(h, ",p{n}");
        }
        h
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::with_capacity(64 * (self.rows.len() + 2));
        out.push_str("# ");
        out.push_str(&serde_json::to_string(&self.meta)?);
        out.push('\n');
        out.push_str(&self.header());
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{:?},{:?},{:?},{:?},{:?}",
                r.t, r.lambda, r.x, r.q, r.q_scaled
            );
            for p in &r.p {
                let _ = write!(out, ",{p:?}");
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let meta_line = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Config("trace CSV lacks the metadata line".into()))?;
        let meta: TraceMetadata = serde_json::from_str(meta_line.trim())?;
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("trace CSV lacks a header".into()))?;
        let cols = header.split(',').count();
        if cols != 5 + meta.n_report {
            return Err(Error::Config(format!(
                "trace header has {cols} columns, metadata says n_report = {}",
                meta.n_report
            )));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("trace row {}: {e}", i + 1)))?;
            if vals.len() != cols {
                return Err(Error::Config(format!(
                    "trace row {} has {} columns, expected {cols}",
                    i + 1,
                    vals.len()
                )));
            }
            rows.push(ObservableRow {
                t: vals[0],
                lambda: vals[1],
                x: vals[2],
                q: vals[3],
                q_scaled: vals[4],
                p: vals[5..].to_vec(),
            });
        }
        if rows.is_empty() {
            return Err(Error::Config("trace CSV has no rows".into()));
        }
        Ok(Self { meta, rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Full amplitude dump of one trace: `t,lambda,x,re_a0,im_a0,..`.
pub fn amplitudes_csv(trace: &Trace) -> String {
    let l = lead_levels(trace);
    let mut out = String::from("t,lambda,x");
    for n in 0..l {
        let _ = write!(out, ",re_a{n},im_a{n}");
    }
    out.push('\n');
    for r in &trace.rows {
        let _ = write!(out, "{:?},{:?},{:?}", r.t, r.lambda(), r.x);
        for a in &r.state.amplitudes {
            let _ = write!(out, ",{:?},{:?}", a.re, a.im);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        evolve_direct_reference, evolve_direct_tfim, output_grid, IntegratorSettings,
        ReferenceOptions,
    };
    use crate::spectral::ReducedSystem;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn state(amps: &[(f64, f64)]) -> QuenchState {
        QuenchState {
            lambda: 0.0,
            amplitudes: amps.iter().map(|&(r, i)| Complex64::new(r, i)).collect(),
            phases: vec![0.0; amps.len()],
            engine: Engine::Eigenbasis,
        }
    }

    #[test]
    fn heating_and_fidelity_examples() {
        let sys = ReducedSystem::tfim_block(4, tfim::critical_momentum(4)).unwrap();
        let snap = crate::spectral::snapshot_at(
            &sys,
            0.0,
            2,
            1e-5,
            0,
            &crate::spectral::SweepOptions::default(),
        )
        .unwrap();
        let gap = tfim::tfim_gap_exact(4, 0.0);
        assert!((gap - 1.5307).abs() < 1e-4);

        let ground = state(&[(1.0, 0.0), (0.0, 0.0)]);
        assert_eq!(heating(&ground, &snap).unwrap(), 0.0);
        assert_eq!(fidelity(&ground), 1.0);

        let excited = state(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!((heating(&excited, &snap).unwrap() - gap).abs() < 1e-12);
        assert_eq!(fidelity(&excited), 0.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let half = state(&[(h, 0.0), (0.0, h)]);
        assert!((heating(&half, &snap).unwrap() - gap / 2.0).abs() < 1e-12);

        let s = state(&[(0.6, 0.0), (0.0, 0.8)]);
        assert!((fidelity(&s) - 0.36).abs() < 1e-15);

        let three = state(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert!(matches!(
            heating(&three, &snap),
            Err(Error::LevelMismatch {
                state: 3,
                snapshot: 2
            })
        ));
    }

    #[test]
    fn floor_clamps_rounding_and_rejects_real_negatives() {
        let mut f = HeatingFloor::default();
        assert_eq!(f.apply(-5e-13, 0.0).unwrap(), 0.0);
        assert_eq!(f.apply(0.25, 0.0).unwrap(), 0.25);
        assert_eq!(f.clamped, 1);
        assert!(matches!(
            f.apply(-1e-9, 0.3),
            Err(Error::NegativeHeating { .. })
        ));
    }

    #[test]
    fn aggregation_rules() {
        let n = 8;
        let ks = tfim::momenta(n);
        let ground = state(&[(1.0, 0.0), (0.0, 0.0)]);
        let gaps = [0.0, 2.0];
        let blocks: Vec<BlockSample> = ks
            .iter()
            .map(|&k| BlockSample {
                momentum: k,
                state: &ground,
                gaps: &gaps,
            })
            .collect();
        assert_eq!(aggregate_tfim(n, &blocks).unwrap(), (0.0, 1.0));

        let s = 0.9f64.sqrt();
        let partial = state(&[(s, 0.0), ((0.1f64).sqrt(), 0.0)]);
        let mut mixed = blocks.clone();
        mixed[0].state = &partial;
        mixed[2].state = &partial;
        let (q, p0) = aggregate_tfim(n, &mixed).unwrap();
        assert!((p0 - 0.81).abs() < 1e-12);
        assert!((q - 0.4).abs() < 1e-12);

        assert!(aggregate_tfim(n, &blocks[1..]).is_err());
        let mut twice = blocks.clone();
        twice[1].momentum = twice[0].momentum;
        assert!(aggregate_tfim(n, &twice).is_err());
    }

    // block sum against the full 2^N space
    #[test]
    fn aggregate_matches_full_space() {
        let n = 8;
        let spec = ModelSpec::tfim(n).unwrap();
        let exps = spec.exponents();
        let sched = AnnealingSchedule::linear(0.1).unwrap();
        let outputs = output_grid(-1.0, 1.0, 21);
        let settings = IntegratorSettings::default();
        let blocks = evolve_direct_tfim(n, &sched, &outputs, &exps, &settings).unwrap();
        let full = evolve_direct_reference(
            &spec,
            &sched,
            &outputs,
            &exps,
            &settings,
            &ReferenceOptions::default(),
        )
        .unwrap();
        let agg = emit_trace(&spec, &blocks, &sched, &exps, &EmitOptions::default()).unwrap();
        let reference = emit_trace(
            &spec,
            std::slice::from_ref(&full),
            &sched,
            &exps,
            &EmitOptions::default(),
        )
        .unwrap();
        for (a, b) in agg.rows.iter().zip(&reference.rows) {
            assert!(
                (a.q - b.q).abs() < 1e-8,
                "λ = {}: {} vs {}",
                a.lambda,
                a.q,
                b.q
            );
            assert!((a.p0() - b.p0()).abs() < 1e-8);
        }
        assert!(agg.rows.iter().any(|r| r.q > 1e-3));

        // both heating paths on the block traces
        for t in &blocks {
            for r in &t.rows {
                let spectral = spectral_heating(&r.state, &r.gaps).unwrap();
                assert!((spectral - r.expectation_excess.unwrap()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn emitted_columns_are_consistent() {
        let n = 16;
        let spec = ModelSpec::lmgm(n).unwrap();
        let exps = spec.exponents();
        let sched = AnnealingSchedule::linear(0.2).unwrap();
        let outputs = output_grid(-1.0, 1.0, 31);
        let full = evolve_direct_reference(
            &spec,
            &sched,
            &outputs,
            &exps,
            &IntegratorSettings::default(),
            &ReferenceOptions::default(),
        )
        .unwrap();
        let tr = emit_trace(
            &spec,
            std::slice::from_ref(&full),
            &sched,
            &exps,
            &EmitOptions::default(),
        )
        .unwrap();
        assert_eq!(tr.rows[0].lambda, -1.0);
        assert_eq!(tr.last().lambda, 1.0);
        let sf = (n as f64).powf(2.0 / 3.0);
        let nz = (n as f64).powf(1.0 / 3.0);
        for r in &tr.rows {
            assert!((r.x - sf * r.lambda).abs() < 1e-12);
            if r.q > 0.0 {
                assert!((r.q_scaled / r.q - nz).abs() < 1e-12);
            }
            assert!((0.0..=1.0).contains(&r.p0()));
            assert!(r.p.iter().sum::<f64>() <= 1.0 + 1e-9);
            assert!(r.q >= 0.0);
        }
        assert_eq!(tr.header(), "t,lambda,x,Q,Q_scaled,p0,p1,p2,p3,p4");

        let csv = tr.to_csv().unwrap();
        assert!(csv.starts_with("# {"));
        assert_eq!(csv.lines().nth(1).unwrap(), tr.header());
        let back = ObservableTrace::from_csv(&csv).unwrap();
        assert_eq!(back, tr);
    }

    proptest! {
        #[test]
        fn spectral_heating_is_linear_in_populations(
            w in proptest::collection::vec(0.0f64..1.0, 2..6),
            g in proptest::collection::vec(0.0f64..5.0, 6),
        ) {
            let total: f64 = w.iter().sum::<f64>().max(1e-9);
            let amps: Vec<(f64, f64)> = w.iter().map(|x| ((x / total).sqrt(), 0.0)).collect();
            let s = state(&amps);
            let mut gaps = g[..w.len()].to_vec();
            gaps[0] = 0.0;
            let q = spectral_heating(&s, &gaps).unwrap();
            let expect: f64 = w.iter().zip(&gaps).map(|(x, d)| x / total * d).sum();
            prop_assert!((q - expect).abs() < 1e-12);
            prop_assert!(q >= 0.0);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&fidelity(&s)));
        }
    }
}
