//! Finite-size scaling: critical functions `C(x) = N^{-1/ν} χ`,
//! `D(x) = N^z Δ`, collapse of traces taken at equal `Λ`, and power-law
//! fits of the final heating.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::cubic;
use crate::models::{ModelKind, ModelSpec};
use crate::observables::ObservableTrace;
use crate::schedule::{size_factor, ScalingExponents};
use crate::spectral::{GridSpec, ReducedSystem, SpectralSweep, SweepOptions};

/// Critical functions of one level pair at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurve {
    pub n_qubits: usize,
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl CriticalCurve {
    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn c_at(&self, x: f64) -> Result<f64> {
        cubic(&self.x, &self.c, x)
    }

    pub fn d_at(&self, x: f64) -> Result<f64> {
        cubic(&self.x, &self.d, x)
    }
}

/// `C_{n,m}` and `D_{n,m}` on the `x` axis, one curve per source size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalFunctionTable {
    pub model: ModelKind,
    pub pair: (usize, usize),
    pub nu: f64,
    pub z: f64,
    /// Sorted by size.
    pub curves: Vec<CriticalCurve>,
}

/// Rescale the tracked sweeps of one model onto `x`.
pub fn tables_from_sweeps(
    model: ModelKind,
    exps: &ScalingExponents,
    sweeps: &[&SpectralSweep],
    pairs: &[(usize, usize)],
    x_window: Option<(f64, f64)>,
) -> Result<Vec<CriticalFunctionTable>> {
    if sweeps.is_empty() {
        return Err(Error::Scaling("no sweeps to rescale".into()));
    }
    let nz_of = |n: usize| (n as f64).powf(exps.z_f64());
    let mut out = Vec::with_capacity(pairs.len());
    for &(n, m) in pairs {
        let mut curves = Vec::with_capacity(sweeps.len());
        for sweep in sweeps {
            if n.max(m) >= sweep.n_levels {
                return Err(Error::LevelMismatch {
                    state: n.max(m) + 1,
                    snapshot: sweep.n_levels,
                });
            }
            let sf = size_factor(sweep.n_qubits, exps.nu);
            let nz = nz_of(sweep.n_qubits);
            let mut curve = CriticalCurve {
                n_qubits: sweep.n_qubits,
                x: Vec::new(),
                c: Vec::new(),
                d: Vec::new(),
            };
            for r in 0..sweep.rows() {
                let x = sf * sweep.lambdas[r];
                if let Some((lo, hi)) = x_window {
                    if x < lo || x > hi {
                        continue;
                    }
                }
                curve.x.push(x);
                curve.c.push(sweep.chi(r, n, m) / sf);
                curve.d.push(nz * sweep.gap(r, n, m));
            }
            if curve.x.len() < 4 {
                return Err(Error::Scaling(format!(
                    "N = {}: fewer than 4 sweep points inside the x window",
                    sweep.n_qubits
                )));
            }
            curves.push(curve);
        }
        curves.sort_by_key(|c| c.n_qubits);
        out.push(CriticalFunctionTable {
            model,
            pair: (n, m),
            nu: exps.nu_f64(),
            z: exps.z_f64(),
            curves,
        });
    }
    Ok(out)
}

/// Sweep the critical reduced system of every spec over `[λ_start, λ_end]`
/// and tabulate the requested pairs. All specs must share one model.
pub fn extract_critical_functions(
    specs: &[ModelSpec],
    lambda_window: (f64, f64),
    pairs: &[(usize, usize)],
    grid: &GridSpec,
    opts: &SweepOptions,
) -> Result<Vec<CriticalFunctionTable>> {
    let first = specs
        .first()
        .ok_or_else(|| Error::Scaling("no sizes given".into()))?;
    let exps = first.exponents();
    for s in specs {
        if s.exponents() != exps || s.kind != first.kind {
            return Err(Error::Scaling(format!(
                "inconsistent inputs: {} (ν = {}, z = {}) vs {} (ν = {}, z = {})",
                first.kind,
                exps.nu,
                exps.z,
                s.kind,
                s.exponents().nu,
                s.exponents().z
            )));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Scaling("no level pairs requested".into()));
    }
    let levels = pairs.iter().map(|&(n, m)| n.max(m) + 1).max().unwrap_or(2);
    let sweeps: Vec<SpectralSweep> = specs
        .par_iter()
        .map(|s| {
            let sys = ReducedSystem::critical(s)?;
            let g = grid.build(s.n_qubits, &exps, lambda_window.0, lambda_window.1)?;
            SpectralSweep::compute(&sys, &g, levels.max(2).min(sys.dim()), opts)
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&SpectralSweep> = sweeps.iter().collect();
    tables_from_sweeps(first.kind, &exps, &refs, pairs, None)
}

/// Largest pointwise mismatch between two sizes, relative to the larger
/// size's peak, on the nodes of the larger size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveBand {
    pub n_a: usize,
    pub n_b: usize,
    pub c_rel: f64,
    pub d_rel: f64,
}

impl CriticalFunctionTable {
    pub fn curve(&self, n_qubits: usize) -> Option<&CriticalCurve> {
        self.curves.iter().find(|c| c.n_qubits == n_qubits)
    }

    pub fn largest(&self) -> &CriticalCurve {
        self.curves.last().expect("tables hold at least one curve")
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.curves.iter().map(|c| c.n_qubits).collect()
    }

    /// Mismatch of consecutive sizes over `window` in x.
    pub fn bands(&self, window: (f64, f64)) -> Result<Vec<CurveBand>> {
        self.curves
            .windows(2)
            .map(|w| curve_band(&w[0], &w[1], window))
            .collect()
    }

    /// Rows `x,C,D,N_source` sorted by x, then size.
    pub fn merged_rows(&self) -> Vec<(f64, f64, f64, usize)> {
        let mut rows: Vec<_> = self
            .curves
            .iter()
            .flat_map(|c| (0..c.x.len()).map(move |i| (c.x[i], c.c[i], c.d[i], c.n_qubits)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.3.cmp(&b.3)));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,C,D,N_source\n");
        for (x, c, d, n) in self.merged_rows() {
            let _ = writeln!(out, "{x:?},{c:?},{d:?},{n}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn curve_band(a: &CriticalCurve, b: &CriticalCurve, window: (f64, f64)) -> Result<CurveBand> {
    let lo = window.0.max(a.range().0).max(b.range().0);
    let hi = window.1.min(a.range().1).min(b.range().1);
    if !(lo < hi) {
        return Err(Error::Scaling(format!(
            "N = {} and N = {} share no x inside [{}, {}]",
            a.n_qubits, b.n_qubits, window.0, window.1
        )));
    }
    let (mut dc, mut dd, mut pc, mut pd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, &x) in b.x.iter().enumerate() {
        if x < lo || x > hi {
            continue;
        }
        dc = dc.max((a.c_at(x)? - b.c[i]).abs());
        dd = dd.max((a.d_at(x)? - b.d[i]).abs());
        pc = pc.max(b.c[i].abs());
        pd = pd.max(b.d[i].abs());
    }
    Ok(CurveBand {
        n_a: a.n_qubits,
        n_b: b.n_qubits,
        c_rel: if pc > 0.0 { dc / pc } else { dc },
        d_rel: if pd > 0.0 { dd / pd } else { dd },
    })
}

/// Deviation between two traces at equal `Λ` on a common `x` window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub trace_a: String,
    pub trace_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub scaled_velocity: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// `sup |Q_a N_a^z - Q_b N_b^z| / sup max(Q_a N_a^z, Q_b N_b^z)`.
    pub q_scaled_rel: f64,
    /// `sup |p0_a - p0_b|`.
    pub p0_sup: f64,
    /// Difference of the window averages of `p_0`.
    pub p0_mean: f64,
}

impl CollapseReport {
    pub fn passes(&self, q_tol: f64, p0_mean_tol: f64) -> bool {
        self.q_scaled_rel <= q_tol && self.p0_mean <= p0_mean_tol
    }
}

pub const COLLAPSE_POINTS: usize = 2001;

/// Compare two traces on `window` in x. Both must hold the same model and
/// the same `Λ` to 1e-12 relative.
pub fn collapse_metric(
    a: &ObservableTrace,
    b: &ObservableTrace,
    window: (f64, f64),
    labels: (&str, &str),
) -> Result<CollapseReport> {
    if a.meta.model != b.meta.model {
        return Err(Error::Scaling(format!(
            "collapse needs one model, got {} and {}",
            a.meta.model, b.meta.model
        )));
    }
    let (la, lb) = (a.meta.scaled_velocity, b.meta.scaled_velocity);
    if (la - lb).abs() > 1e-12 * la.abs().max(lb.abs()) {
        return Err(Error::Scaling(format!("Λ differs: {la} vs {lb}")));
    }
    if !(window.0 < window.1) {
        return Err(Error::Scaling(format!(
            "empty window [{}, {}]",
            window.0, window.1
        )));
    }
    let xa: Vec<f64> = a.rows.iter().map(|r| r.x).collect();
    let xb: Vec<f64> = b.rows.iter().map(|r| r.x).collect();
    for (name, xs) in [(labels.0, &xa), (labels.1, &xb)] {
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        if window.0 < lo || window.1 > hi {
            return Err(Error::Scaling(format!(
                "window [{}, {}] outside trace {name} (x ∈ [{lo}, {hi}])",
                window.0, window.1
            )));
        }
    }
    let col = |t: &ObservableTrace, f: fn(&crate::observables::ObservableRow) -> f64| -> Vec<f64> {
        t.rows.iter().map(f).collect()
    };
    let (qa, qb) = (col(a, |r| r.q_scaled), col(b, |r| r.q_scaled));
    let (pa, pb) = (col(a, |r| r.p0()), col(b, |r| r.p0()));

    let n = COLLAPSE_POINTS;
    let (mut dq, mut peak, mut dp) = (0.0f64, 0.0f64, 0.0f64);
    let (mut mean_a, mut mean_b) = (0.0, 0.0);
    for i in 0..n {
        let x = if i == n - 1 {
            window.1
        } else {
            window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64
        };
        let (q1, q2) = (cubic(&xa, &qa, x)?, cubic(&xb, &qb, x)?);
        let (p1, p2) = (cubic(&xa, &pa, x)?, cubic(&xb, &pb, x)?);
        dq = dq.max((q1 - q2).abs());
        peak = peak.max(q1.abs()).max(q2.abs());
        dp = dp.max((p1 - p2).abs());
        // trapezoid weights
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        mean_a += w * p1;
        mean_b += w * p2;
    }
    let norm = (n - 1) as f64;
    Ok(CollapseReport {
        trace_a: labels.0.to_string(),
        trace_b: labels.1.to_string(),
        n_a: a.meta.n_qubits,
        n_b: b.meta.n_qubits,
        scaled_velocity: la,
        window,
        points: n,
        q_scaled_rel: if peak > 0.0 { dq / peak } else { 0.0 },
        p0_sup: dp,
        p0_mean: ((mean_a - mean_b) / norm).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    Velocity,
    ScaledVelocity,
    /// Anything else (e.g. `x` for critical-function tails).
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub abscissa: Abscissa,
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub samples: usize,
    pub dropped: usize,
}

pub const MIN_FIT_SAMPLES: usize = 5;

/// Least squares of `ln y` on `ln x` for the samples with `x` in `window`.
/// Nonpositive samples are dropped with a warning.
pub fn fit_power_law(
    samples: &[(f64, f64)],
    window: (f64, f64),
    abscissa: Abscissa,
) -> Result<PowerLawFit> {
    if !(window.0 <= window.1) {
        return Err(Error::Scaling(format!(
            "empty fit window [{}, {}]",
            window.0, window.1
        )));
    }
    let mut dropped = 0;
    let mut pts = Vec::new();
    for &(x, y) in samples {
        if x < window.0 || x > window.1 {
            continue;
        }
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            pts.push((x.ln(), y.ln()));
        } else {
            log::warn!("dropping sample ({x}, {y}) from the power-law fit");
            dropped += 1;
        }
    }
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Scaling(format!(
            "power-law fit needs {MIN_FIT_SAMPLES} positive samples in [{}, {}], got {}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Scaling("all fit abscissas coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_stderr = (sse / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(PowerLawFit {
        abscissa,
        window,
        slope,
        intercept,
        slope_stderr,
        r_squared,
        samples: pts.len(),
        dropped,
    })
}

/// Final heating at one velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalSample {
    pub velocity: f64,
    pub scaled_velocity: f64,
    pub q_final: f64,
    /// `Q_f N^z`.
    pub q_scaled: f64,
    /// `1 - p_0` at the sweep end.
    pub p_excited: f64,
}

impl FinalSample {
    pub fn from_trace(t: &ObservableTrace) -> Self {
        let last = t.last();
        Self {
            velocity: t.meta.velocity,
            scaled_velocity: t.meta.scaled_velocity,
            q_final: last.q,
            q_scaled: last.q_scaled,
            p_excited: 1.0 - last.p0(),
        }
    }
}

pub const KZM_EXCITATION: (f64, f64) = (0.05, 0.5);
pub const APT_MAX_SCALED_HEATING: f64 = 1e-2;
/// Heating below this is not trusted for fits.
pub const APT_MIN_SCALED_HEATING: f64 = 1e-10;

/// One decade of `Λ` centred (geometrically) on the range where the final
/// excitation probability lies in [0.05, 0.5].
pub fn kzm_window(samples: &[FinalSample]) -> Result<(f64, f64)> {
    let mut s: Vec<&FinalSample> = samples.iter().collect();
    s.sort_by(|a, b| a.scaled_velocity.total_cmp(&b.scaled_velocity));
    let inside: Vec<f64> = s
        .iter()
        .filter(|f| f.p_excited >= KZM_EXCITATION.0 && f.p_excited <= KZM_EXCITATION.1)
        .map(|f| f.scaled_velocity)
        .collect();
    let (lo, hi) = match (inside.first(), inside.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => {
            return Err(Error::Scaling(
                "no sample with final excitation in [0.05, 0.5]".into(),
            ))
        }
    };
    let centre = (lo * hi).sqrt();
    let half = 10f64.sqrt();
    Ok((centre / half, centre * half))
}

/// The lowest usable velocity decade: starts at the smallest velocity whose
/// scaled heating is resolved and stays below 1e-2.
pub fn apt_window(samples: &[FinalSample]) -> Result<(f64, f64)> {
    let mut usable: Vec<f64> = samples
        .iter()
        .filter(|f| f.q_scaled >= APT_MIN_SCALED_HEATING && f.q_scaled <= APT_MAX_SCALED_HEATING)
        .map(|f| f.velocity)
        .collect();
    usable.sort_by(f64::total_cmp);
    let (lo, top) = match (usable.first(), usable.last()) {
        (Some(&lo), Some(&top)) => (lo, top),
        _ => {
            return Err(Error::Scaling(
                "no velocity inside the perturbative range".into(),
            ))
        }
    };
    Ok((lo, (10.0 * lo).min(top)))
}

/// Best `α` for `α C_a(αx) ≈ C_b(x)` over a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleReport {
    pub best_alpha: f64,
    /// Sup-norm mismatch at `best_alpha`, relative to `sup |C_b|`.
    pub residual: f64,
    pub scan: Vec<(f64, f64)>,
}

/// Scan `alphas` for a rescaling mapping the largest-size curve of `a`
/// onto that of `b`.
pub fn universality_rescale_check(
    a: &CriticalFunctionTable,
    b: &CriticalFunctionTable,
    alphas: &[f64],
) -> Result<RescaleReport> {
    if alphas.is_empty() {
        return Err(Error::Scaling("no α values to scan".into()));
    }
    let ca = a.largest();
    let cb = b.largest();
    let (alo, ahi) = ca.range();
    let mut scan = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !(alpha > 0.0) {
            return Err(Error::Scaling(format!("α must be positive, got {alpha}")));
        }
        let (mut worst, mut peak, mut used) = (0.0f64, 0.0f64, 0);
        for (i, &x) in cb.x.iter().enumerate() {
            let ax = alpha * x;
            if ax < alo || ax > ahi {
                continue;
            }
            worst = worst.max((alpha * ca.c_at(ax)? - cb.c[i]).abs());
            peak = peak.max(cb.c[i].abs());
            used += 1;
        }
        if used == 0 {
            return Err(Error::Scaling(format!("no x overlap at α = {alpha}")));
        }
        let r = if peak > 0.0 { worst / peak } else { worst };
        log::debug!("α = {alpha}: residual {r}");
        scan.push((alpha, r));
    }
    let &(best_alpha, residual) = scan
        .iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("scan is non-empty");
    Ok(RescaleReport {
        best_alpha,
        residual,
        scan,
    })
}

/// Log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Engine;
    use crate::observables::{ObservableRow, TraceMetadata};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn synthetic_trace(n: usize, lambda_scaled: f64, shift: f64) -> ObservableTrace {
        let rows = (0..401)
            .map(|i| {
                let x = -20.0 + 0.1 * i as f64;
                let q = 1.0 / (1.0 + (-x).exp()) + shift;
                ObservableRow {
                    t: x,
                    lambda: x / n as f64,
                    x,
                    q: q / n as f64,
                    q_scaled: q,
                    p: vec![0.5 + 0.4 * (x * 3.0).sin() * (1.0 + shift)],
                }
            })
            .collect();
        ObservableTrace {
            meta: TraceMetadata {
                model: ModelKind::Tfim,
                n_qubits: n,
                velocity: 0.1,
                kappa: 1.0,
                scaled_velocity: lambda_scaled,
                mu: 0.5,
                nu: 1.0,
                z: 1.0,
                engine: Engine::Direct,
                n_levels: 2,
                truncation: None,
                lambda_start: -1.0,
                lambda_end: 1.0,
                n_report: 1,
                clamped: 0,
                max_norm_drift: 0.0,
            },
            rows,
        }
    }

    #[test]
    fn collapse_of_a_trace_with_itself_is_zero() {
        let t = synthetic_trace(80, 3.0, 0.0);
        let r = collapse_metric(&t, &t, (-10.0, 10.0), ("a", "a")).unwrap();
        assert_eq!((r.q_scaled_rel, r.p0_sup, r.p0_mean), (0.0, 0.0, 0.0));
    }

    #[test]
    fn collapse_checks_inputs() {
        let a = synthetic_trace(80, 3.0, 0.0);
        let b = synthetic_trace(160, 3.0 * (1.0 + 1e-9), 0.0);
        assert!(collapse_metric(&a, &b, (-10.0, 10.0), ("a", "b")).is_err());
        let b = synthetic_trace(160, 3.0, 0.0);
        assert!(collapse_metric(&a, &b, (-30.0, 10.0), ("a", "b")).is_err());
        let mut c = synthetic_trace(160, 3.0, 0.0);
        c.meta.model = ModelKind::Lmgm;
        assert!(collapse_metric(&a, &c, (-10.0, 10.0), ("a", "c")).is_err());
    }

    #[test]
    fn oscillation_mismatch_shows_in_sup_but_not_in_mean() {
        let a = synthetic_trace(80, 3.0, 0.0);
        let b = synthetic_trace(160, 3.0, 0.01);
        let r = collapse_metric(&a, &b, (-10.0, 10.0), ("a", "b")).unwrap();
        assert!(r.p0_sup > 3e-3);
        assert!(r.p0_mean < 1e-3);
        assert!(r.q_scaled_rel > 0.0 && r.q_scaled_rel < 0.02);
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let xs = log_grid(1e-3, 1e-1, 9);
        let s: Vec<(f64, f64)> = xs.iter().map(|&v| (v, 3.7 * v * v)).collect();
        let f = fit_power_law(&s, (1e-3, 1e-1), Abscissa::Velocity).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-6);
        assert!((f.intercept - 3.7f64.ln()).abs() < 1e-6);
        assert!(f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn fit_drops_nonpositive_and_needs_five() {
        let mut s: Vec<(f64, f64)> = (1..=6).map(|i| (i as f64, (i * i) as f64)).collect();
        s.push((7.0, 0.0));
        let f = fit_power_law(&s, (0.0, 10.0), Abscissa::ScaledVelocity).unwrap();
        assert_eq!((f.samples, f.dropped), (6, 1));
        assert!(fit_power_law(&s[..4], (0.0, 10.0), Abscissa::Velocity).is_err());
    }

    #[test]
    fn windows_follow_the_rules() {
        let mk = |v: f64, p: f64, q: f64| FinalSample {
            velocity: v,
            scaled_velocity: 10.0 * v,
            q_final: q,
            q_scaled: q,
            p_excited: p,
        };
        let s = [
            mk(0.01, 0.01, 1e-12),
            mk(0.02, 0.02, 1e-8),
            mk(0.1, 0.05, 1e-3),
            mk(1.0, 0.3, 0.5),
            mk(10.0, 0.5, 2.0),
            mk(100.0, 0.9, 5.0),
        ];
        let (lo, hi) = kzm_window(&s).unwrap();
        assert!((lo * hi - 100.0).abs() < 1e-9);
        assert!((hi / lo - 10.0).abs() < 1e-9);
        assert_eq!(apt_window(&s).unwrap(), (0.02, 0.1));
    }

    #[test]
    fn rescaled_copy_is_found() {
        let mk = |f: &dyn Fn(f64) -> f64| {
            let x: Vec<f64> = (0..801).map(|i| -40.0 + 0.1 * i as f64).collect();
            let c = x.iter().map(|&v| f(v)).collect();
            CriticalFunctionTable {
                model: ModelKind::Lmgm,
                pair: (1, 0),
                nu: 1.5,
                z: 1.0 / 3.0,
                curves: vec![CriticalCurve {
                    n_qubits: 64,
                    d: vec![1.0; x.len()],
                    x,
                    c,
                }],
            }
        };
        let base = |x: f64| 1.0 / (1.0 + x * x);
        let alpha = 2.0;
        let a = mk(&base);
        let b = mk(&|x| alpha * base(alpha * x));
        let r = universality_rescale_check(&a, &b, &log_grid(0.5, 8.0, 17)).unwrap();
        assert_eq!(r.best_alpha, 2.0);
        assert!(r.residual < 1e-12);
        assert_eq!(r.scan.len(), 17);
    }

    #[test]
    fn tfim_tables_approach_the_thermodynamic_limit() {
        let specs: Vec<ModelSpec> = [40usize, 80]
            .iter()
            .map(|&n| ModelSpec::tfim(n).unwrap())
            .collect();
        let t = extract_critical_functions(
            &specs,
            (-1.0, 1.0),
            &[(1, 0)],
            &GridSpec::default(),
            &SweepOptions::default(),
        )
        .unwrap();
        let t = &t[0];
        assert_eq!(t.sizes(), vec![40, 80]);
        let c = t.largest();
        for x in [-5.0, 0.0, 3.0] {
            let d_tl = 2.0 * (x * x + PI * PI).sqrt();
            let c_tl = (PI / 2.0) / (x * x + PI * PI);
            assert!((c.d_at(x).unwrap() / d_tl - 1.0).abs() < 0.02);
            assert!((c.c_at(x).unwrap().abs() / c_tl - 1.0).abs() < 0.02);
        }
        assert!(t.curves.iter().all(|c| c.d_at(0.0).unwrap() > 0.0));
        let band = t.bands((-10.0, 10.0)).unwrap();
        assert!(band[0].c_rel < 0.05 && band[0].d_rel < 0.05, "{band:?}");

        let csv = t.to_csv();
        assert!(csv.starts_with("x,C,D,N_source\n"));
        assert_eq!(
            csv.lines().count(),
            1 + t.curves.iter().map(|c| c.x.len()).sum::<usize>()
        );

        let mixed = [ModelSpec::tfim(8).unwrap(), ModelSpec::lmgm(8).unwrap()];
        assert!(extract_critical_functions(
            &mixed,
            (-1.0, 1.0),
            &[(1, 0)],
            &GridSpec::default(),
            &SweepOptions::default()
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn power_law_fit_is_exact_for_any_window(
            p in -3.0f64..3.0,
            c in 0.1f64..10.0,
            lo in 1e-4f64..1e-2,
            decades in 0.5f64..3.0,
        ) {
            let hi = lo * 10f64.powf(decades);
            let s: Vec<(f64, f64)> = log_grid(lo, hi, 7).iter().map(|&v| (v, c * v.powf(p))).collect();
            let f = fit_power_law(&s, (lo, hi), Abscissa::Velocity).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-6);
        }

        #[test]
        fn collapse_is_symmetric(shift in 0.0f64..0.2) {
            let a = synthetic_trace(80, 3.0, 0.0);
            let b = synthetic_trace(160, 3.0, shift);
            let ab = collapse_metric(&a, &b, (-10.0, 10.0), ("a", "b")).unwrap();
            let ba = collapse_metric(&b, &a, (-10.0, 10.0), ("b", "a")).unwrap();
            prop_assert_eq!(ab.q_scaled_rel, ba.q_scaled_rel);
            prop_assert_eq!(ab.p0_sup, ba.p0_sup);
            prop_assert!((ab.p0_mean - ba.p0_mean).abs() < 1e-15);
            prop_assert!(ab.q_scaled_rel >= 0.0 && ab.p0_sup >= 0.0 && ab.p0_mean >= 0.0);
        }
    }
}
