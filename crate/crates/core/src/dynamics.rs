//! Time evolution across the sweep.
//!
//! Three engines:
//! * `Direct`: Schrödinger equation for each TFIM momentum block;
//! * `Eigenbasis`: amplitudes in the instantaneous eigenbasis, driven by
//!   tabulated `χ` and `Δ` with the dynamical phases carried as extra ODE
//!   variables;
//! * `Scaled`: the same equations written in `x = N^{1/ν}λ` with the
//!   critical functions `C(x)`, `D(x)` and the scaled velocity `Λ`.
//!
//! `Reference` integrates the Schrödinger equation in a full (even-parity)
//! space and serves as an oracle for small systems.
//!
//! All engines integrate in `σ = sign(u)|u|^{1/κ}` (`u` being λ or x), so the
//! phase rate is constant and the coupling carries `κ|σ|^{κ-1}`. Phases are
//! zero at the critical point; the starting phases come from integrating the
//! phase equations alone from 0 back to the start.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::CubicTable;
use crate::linalg::lowest_dense;
use crate::models::{lmgm, tfim, ModelKind, ModelSpec, PlainFockDicke, SpinRing};
use crate::ode::{Dopri5, Stats, Tolerances};
use crate::schedule::{
    power_map, size_factor, velocity_for_scaled, AnnealingSchedule, ScalingExponents,
};
use crate::spectral::SpectralSweep;

pub const DEFAULT_OUTPUT_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Direct,
    Eigenbasis,
    Scaled,
    Reference,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Direct => "direct",
            Engine::Eigenbasis => "eigenbasis",
            Engine::Scaled => "scaled",
            Engine::Reference => "reference",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Engine::Direct),
            "eigenbasis" | "eigen" => Ok(Engine::Eigenbasis),
            "scaled" => Ok(Engine::Scaled),
            "reference" | "ref" => Ok(Engine::Reference),
            other => Err(Error::Config(format!("unknown engine '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub tol: Tolerances,
    /// Largest phase advance (radians) of the fastest level per step.
    pub phase_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            phase_step: 0.1,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorSettings {
    fn integrator(&self, dim: usize, h_max: f64) -> Dopri5 {
        Dopri5::new(dim, self.tol, h_max).with_max_steps(self.max_steps)
    }
}

/// Uniform output grid including both sweep ends.
pub fn output_grid(lambda_start: f64, lambda_end: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let last = points - 1;
    (0..points)
        .map(|i| {
            if i == last {
                lambda_end
            } else {
                lambda_start + (lambda_end - lambda_start) * i as f64 / last as f64
            }
        })
        .collect()
}

/// Amplitudes on the lowest levels at one instant.
///
/// For the tabulated engines `amplitudes` are the `a_n` of the eigenbasis
/// expansion and `phases[n]` is the dynamical phase `θ_n = ∫ Δ_{n,0} dt`
/// (zero at λ = 0). For the Schrödinger engines the amplitudes are the
/// overlaps `⟨φ_n(λ)|Ψ⟩` and the phases are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchState {
    pub lambda: f64,
    pub amplitudes: Vec<Complex64>,
    pub phases: Vec<f64>,
    pub engine: Engine,
}

impl QuenchState {
    pub fn ground(n_levels: usize, lambda: f64, engine: Engine) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_levels];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            lambda,
            amplitudes,
            phases: vec![0.0; n_levels],
            engine,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn population(&self, n: usize) -> f64 {
        self.amplitudes[n].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub state: QuenchState,
    /// `Δ_{n,0}` at this λ for the levels in `state`.
    pub gaps: Vec<f64>,
    /// `⟨Ψ|H|Ψ⟩ - E_0` from the full state (Schrödinger engines only).
    pub expectation_excess: Option<f64>,
    /// Norm of the full state (equals `state.norm_sqr()` for the
    /// tabulated engines).
    pub norm_sqr: f64,
}

impl TraceRow {
    pub fn lambda(&self) -> f64 {
        self.state.lambda
    }
}

/// Output of one engine on one reduced system.
#[derive(Debug, Clone)]
pub struct Trace {
    pub engine: Engine,
    pub n_qubits: usize,
    /// Momentum of a TFIM block.
    pub momentum: Option<f64>,
    pub rows: Vec<TraceRow>,
    pub stats: Stats,
}

impl Trace {
    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("traces are never empty")
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.norm_sqr - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_outputs(outputs: &[f64], lo: f64, hi: f64) -> Result<()> {
    if outputs.is_empty() {
        return Err(Error::Config("empty output grid".into()));
    }
    if outputs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("output grid must be non-decreasing".into()));
    }
    for &o in [outputs[0], outputs[outputs.len() - 1]].iter() {
        if !(o >= lo && o <= hi) {
            return Err(Error::OutOfRange { lambda: o, lo, hi });
        }
    }
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa < 1.0 {
        return Err(Error::Schedule(format!(
            "engines need κ ≥ 1 (the sweep velocity diverges at λ = 0 otherwise), got {kappa}"
        )));
    }
    Ok(())
}

/// `du/dσ` for `u = sign(σ)|σ|^κ`.
fn jacobian(sigma: f64, kappa: f64, linear: bool) -> f64 {
    if linear {
        1.0
    } else {
        kappa * sigma.abs().powf(kappa - 1.0)
    }
}

/// Tabulated amplitude equations in `σ`:
/// `dθ_n/dσ = ω g_n(u)`, `da_n/dσ = u'(σ) Σ_m e^{i(θ_n-θ_m)} c_{n,m}(u) a_m`.
struct Tabulated<'a> {
    table: &'a CubicTable,
    levels: usize,
    kappa: f64,
    linear: bool,
    omega: f64,
    gap_max: f64,
    /// Sorted nodes in u where the integrator must stop.
    breakpoints: &'a [f64],
}

struct TabulatedRow {
    u: f64,
    amplitudes: Vec<Complex64>,
    phases: Vec<f64>,
    gaps: Vec<f64>,
}

impl Tabulated<'_> {
    fn u_of(&self, sigma: f64) -> f64 {
        let (lo, hi) = self.table.range();
        power_map(sigma, self.kappa, self.linear).clamp(lo, hi)
    }

    fn sigma_of(&self, u: f64) -> f64 {
        power_map(u, 1.0 / self.kappa, self.linear)
    }

    fn h_max(&self, settings: &IntegratorSettings) -> f64 {
        let fastest = self.omega * self.gap_max;
        if fastest > 0.0 {
            settings.phase_step / fastest
        } else {
            f64::INFINITY
        }
    }

    fn run(
        &self,
        u_start: f64,
        outputs: &[f64],
        settings: &IntegratorSettings,
    ) -> Result<(Vec<TabulatedRow>, Stats)> {
        let (lo, hi) = self.table.range();
        check_outputs(outputs, lo, hi)?;
        if !(u_start >= lo && u_start <= outputs[0]) {
            return Err(Error::OutOfRange {
                lambda: u_start,
                lo,
                hi: outputs[0],
            });
        }
        let l = self.levels;
        let cols = self.table.cols();
        let h_max = self.h_max(settings);
        let sigma0 = self.sigma_of(u_start);

        // starting phases: θ(0) = 0, integrated back to the start
        let mut theta = vec![0.0; l - 1];
        let mut row = vec![0.0; cols];
        if l > 1 {
            let mut ode = settings.integrator(l - 1, h_max);
            ode.integrate(
                |s, _, dy| {
                    self.table
                        .eval_into(self.u_of(s), &mut row)
                        .expect("clamped to table range");
                    for n in 1..l {
                        dy[n - 1] = self.omega * row[n];
                    }
                },
                0.0,
                sigma0,
                &mut theta,
            )?;
        }

        let dim = 2 * l + (l - 1);
        let mut y = vec![0.0; dim];
        y[0] = 1.0;
        y[2 * l..].copy_from_slice(&theta);
        let mut b = vec![Complex64::new(0.0, 0.0); l];
        let mut rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
            self.table
                .eval_into(self.u_of(s), &mut row)
                .expect("clamped to table range");
            let du = jacobian(s, self.kappa, self.linear);
            let phase = |m: usize| if m == 0 { 0.0 } else { y[2 * l + m - 1] };
            for (m, bm) in b.iter_mut().enumerate() {
                let (sn, cs) = phase(m).sin_cos();
                let (ar, ai) = (y[2 * m], y[2 * m + 1]);
                *bm = Complex64::new(ar * cs + ai * sn, ai * cs - ar * sn);
            }
            for n in 0..l {
                let coupling = &row[l + n * l..l + (n + 1) * l];
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, bm) in coupling.iter().zip(&b) {
                    acc += bm * *c;
                }
                let (sn, cs) = phase(n).sin_cos();
                let rot = Complex64::new(cs, sn) * acc * du;
                dy[2 * n] = rot.re;
                dy[2 * n + 1] = rot.im;
            }
            for n in 1..l {
                dy[2 * l + n - 1] = self.omega * row[n];
            }
        };

        let mut ode = settings.integrator(dim, h_max);
        let mut sigma = sigma0;
        let mut rows = Vec::with_capacity(outputs.len());
        let mut gaps_buf = vec![0.0; cols];
        let mut next_bp = self.breakpoints.partition_point(|&b| b <= u_start);
        for &u in outputs {
            while next_bp < self.breakpoints.len() && self.breakpoints[next_bp] < u {
                let stop = self.sigma_of(self.breakpoints[next_bp]);
                ode.integrate(&mut rhs, sigma, stop, &mut y)?;
                sigma = stop;
                next_bp += 1;
            }
            let target = self.sigma_of(u);
            ode.integrate(&mut rhs, sigma, target, &mut y)?;
            sigma = target;
            self.table.eval_into(u, &mut gaps_buf)?;
            let amplitudes = (0..l)
                .map(|n| Complex64::new(y[2 * n], y[2 * n + 1]))
                .collect();
            let mut phases = vec![0.0; l];
            phases[1..].copy_from_slice(&y[2 * l..]);
            rows.push(TabulatedRow {
                u,
                amplitudes,
                phases,
                gaps: gaps_buf[..l].to_vec(),
            });
        }
        Ok((rows, ode.stats))
    }
}

/// Eigenbasis amplitudes `a_n(λ)` under `schedule`, starting in the ground
/// state at `λ_start`, reported at `outputs`.
pub fn evolve_eigenbasis(
    sweep: &SpectralSweep,
    schedule: &AnnealingSchedule,
    n_levels: usize,
    outputs: &[f64],
    exps: &ScalingExponents,
    settings: &IntegratorSettings,
) -> Result<Trace> {
    check_kappa(schedule.kappa())?;
    if n_levels == 0 || n_levels > sweep.n_levels {
        return Err(Error::LevelMismatch {
            state: n_levels,
            snapshot: sweep.n_levels,
        });
    }
    let sweep = if n_levels < sweep.n_levels {
        Cow::Owned(sweep.truncated(n_levels))
    } else {
        Cow::Borrowed(sweep)
    };
    let table = sweep.table()?;
    let mut refined = sweep.refined.clone();
    refined.sort_by(f64::total_cmp);
    let problem = Tabulated {
        table: &table,
        levels: n_levels,
        kappa: schedule.kappa(),
        linear: schedule.is_linear(),
        omega: schedule.phase_rate(),
        gap_max: sweep.max_gap(),
        breakpoints: &refined,
    };
    let (rows, stats) = problem.run(schedule.lambda_start(), outputs, settings)?;
    let sf = size_factor(sweep.n_qubits, exps.nu);
    Ok(Trace {
        engine: Engine::Eigenbasis,
        n_qubits: sweep.n_qubits,
        momentum: None,
        rows: rows
            .into_iter()
            .map(|r| {
                let state = QuenchState {
                    lambda: r.u,
                    amplitudes: r.amplitudes,
                    phases: r.phases,
                    engine: Engine::Eigenbasis,
                };
                TraceRow {
                    t: schedule.t_of_lambda(r.u),
                    x: sf * r.u,
                    norm_sqr: state.norm_sqr(),
                    state,
                    gaps: r.gaps,
                    expectation_excess: None,
                }
            })
            .collect(),
        stats,
    })
}

/// Critical functions of one reduced system on the `x` axis:
/// `D_{n,0} = N^z Δ_{n,0}` and `C_{n,m} = N^{-1/ν} χ_{n,m}`.
#[derive(Debug, Clone)]
pub struct ScaledTables {
    pub n_source: usize,
    pub n_levels: usize,
    table: CubicTable,
    refined: Vec<f64>,
}

impl ScaledTables {
    pub fn from_sweep(sweep: &SpectralSweep, exps: &ScalingExponents) -> Result<Self> {
        let sf = size_factor(sweep.n_qubits, exps.nu);
        let nz = (sweep.n_qubits as f64).powf(exps.z_f64());
        let l = sweep.n_levels;
        let cols = l + l * l;
        let mut data = Vec::with_capacity(sweep.rows() * cols);
        for r in 0..sweep.rows() {
            let e0 = sweep.energy(r, 0);
            data.extend(sweep.energies(r).iter().map(|e| nz * (e - e0)));
            data.extend(sweep.chi_row(r).iter().map(|c| c / sf));
        }
        let xs = sweep.lambdas.iter().map(|l| sf * l).collect();
        let mut refined: Vec<f64> = sweep.refined.iter().map(|l| sf * l).collect();
        refined.sort_by(f64::total_cmp);
        Ok(Self {
            n_source: sweep.n_qubits,
            n_levels: l,
            table: CubicTable::new(xs, cols, data)?,
            refined,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        self.table.range()
    }

    pub fn xs(&self) -> &[f64] {
        self.table.xs()
    }

    /// `D_{n,0}(x)` and `C_{n,m}(x)` (row-major) at one `x`.
    pub fn eval(&self, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut row = vec![0.0; self.table.cols()];
        self.table.eval_into(x, &mut row)?;
        let c = row.split_off(self.n_levels);
        Ok((row, c))
    }

    fn max_d(&self) -> f64 {
        (0..self.table.xs().len())
            .flat_map(|i| self.table.row(i)[..self.n_levels].to_vec())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Scaled amplitudes `a_n(x)` at scaled velocity `Λ`, for a system of
/// `n_qubits` (which sets `x_start = N^{1/ν} λ_start` and the reported
/// `λ`, `t` and gaps). The tables may come from any size.
#[allow(clippy::too_many_arguments)]
pub fn evolve_scaled(
    tables: &ScaledTables,
    n_qubits: usize,
    exps: &ScalingExponents,
    scaled_velocity: f64,
    kappa: f64,
    lambda_start: f64,
    x_outputs: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trace> {
    if !(scaled_velocity.is_finite() && scaled_velocity > 0.0) {
        return Err(Error::Schedule(format!(
            "scaled velocity must be positive, got {scaled_velocity}"
        )));
    }
    check_kappa(kappa)?;
    let linear = kappa == 1.0;
    let sf = size_factor(n_qubits, exps.nu);
    let nz = (n_qubits as f64).powf(exps.z_f64());
    let omega = if linear {
        scaled_velocity.powf(-exps.inv_mu(kappa))
    } else {
        scaled_velocity.powf(-exps.inv_mu(kappa)) * kappa
    };
    let problem = Tabulated {
        table: &tables.table,
        levels: tables.n_levels,
        kappa,
        linear,
        omega,
        gap_max: tables.max_d(),
        breakpoints: &tables.refined,
    };
    let (rows, stats) = problem.run(sf * lambda_start, x_outputs, settings)?;
    let velocity = velocity_for_scaled(n_qubits, scaled_velocity, kappa, exps)?;
    let lambda_end = (x_outputs[x_outputs.len() - 1] / sf).max(f64::MIN_POSITIVE);
    let schedule = AnnealingSchedule::new(
        velocity,
        kappa,
        lambda_start.min(-f64::MIN_POSITIVE),
        lambda_end,
    )?;
    Ok(Trace {
        engine: Engine::Scaled,
        n_qubits,
        momentum: None,
        rows: rows
            .into_iter()
            .map(|r| {
                let lambda = r.u / sf;
                let state = QuenchState {
                    lambda,
                    amplitudes: r.amplitudes,
                    phases: r.phases,
                    engine: Engine::Scaled,
                };
                TraceRow {
                    t: schedule.t_of_lambda(lambda),
                    x: r.u,
                    norm_sqr: state.norm_sqr(),
                    state,
                    gaps: r.gaps.iter().map(|d| d / nz).collect(),
                    expectation_excess: None,
                }
            })
            .collect(),
        stats,
    })
}

/// Schrödinger evolution of a real two-level Hamiltonian `h(λ)`, starting in
/// its ground state at `λ_start`.
pub fn evolve_two_level<H>(
    h: H,
    schedule: &AnnealingSchedule,
    outputs: &[f64],
    settings: &IntegratorSettings,
) -> Result<(Vec<TraceRow>, Stats)>
where
    H: Fn(f64) -> [[f64; 2]; 2],
{
    check_kappa(schedule.kappa())?;
    check_outputs(outputs, schedule.lambda_start(), schedule.lambda_end())?;
    let dense = |lam: f64| {
        let m = h(lam);
        DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
    };
    let rate = schedule.phase_rate();
    let start = lowest_dense(&dense(schedule.lambda_start()), 1)?;
    let mut y = vec![start.vectors[(0, 0)], 0.0, start.vectors[(1, 0)], 0.0];
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
        let m = h(schedule.lambda_of_s(s));
        // subtract the instantaneous ground energy (a global phase)
        let half = 0.5 * (m[0][0] - m[1][1]);
        let e0 = 0.5 * (m[0][0] + m[1][1]) - half.hypot(m[0][1]);
        for r in 0..2 {
            let re = m[r][0] * y[0] + m[r][1] * y[2] - e0 * y[2 * r];
            let im = m[r][0] * y[1] + m[r][1] * y[3] - e0 * y[2 * r + 1];
            // -i·rate·(re + i im)
            dy[2 * r] = rate * im;
            dy[2 * r + 1] = -rate * re;
        }
    };
    let mut ode = settings.integrator(4, f64::INFINITY);
    let mut s = schedule.s_of_lambda(schedule.lambda_start());
    let mut rows = Vec::with_capacity(outputs.len());
    let mut f = rhs;
    for &lam in outputs {
        let target = schedule.s_of_lambda(lam);
        ode.integrate(&mut f, s, target, &mut y)?;
        s = target;
        let psi = [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])];
        rows.push(project_row(
            &dense(lam),
            &psi,
            2,
            lam,
            schedule,
            Engine::Direct,
        )?);
    }
    Ok((rows, ode.stats))
}

/// Overlaps with the lowest `n_report` eigenstates and `⟨H⟩ - E_0`.
fn project_row(
    h: &DMatrix<f64>,
    psi: &[Complex64],
    n_report: usize,
    lambda: f64,
    schedule: &AnnealingSchedule,
    engine: Engine,
) -> Result<TraceRow> {
    let eig = lowest_dense(h, n_report).map_err(|e| match e {
        Error::Eigensolver { reason, .. } => Error::Eigensolver { lambda, reason },
        other => other,
    })?;
    let amplitudes: Vec<Complex64> = (0..n_report)
        .map(|n| {
            eig.vectors
                .column(n)
                .iter()
                .zip(psi)
                .map(|(v, p)| p * *v)
                .sum()
        })
        .collect();
    let norm_sqr: f64 = psi.iter().map(|p| p.norm_sqr()).sum();
    let mut energy = 0.0;
    for (i, pi) in psi.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, pj) in psi.iter().enumerate() {
            acc += pj * h[(i, j)];
        }
        energy += (pi.conj() * acc).re;
    }
    let e0 = eig.values[0];
    Ok(TraceRow {
        t: schedule.t_of_lambda(lambda),
        x: f64::NAN,
        state: QuenchState {
            lambda,
            amplitudes,
            phases: vec![0.0; n_report],
            engine,
        },
        gaps: eig.values.iter().map(|e| e - e0).collect(),
        expectation_excess: Some(energy - e0 * norm_sqr),
        norm_sqr,
    })
}

/// Schrödinger evolution of every TFIM momentum block.
pub fn evolve_direct_tfim(
    n_qubits: usize,
    schedule: &AnnealingSchedule,
    outputs: &[f64],
    exps: &ScalingExponents,
    settings: &IntegratorSettings,
) -> Result<Vec<Trace>> {
    if n_qubits < 2 || !n_qubits.is_multiple_of(2) {
        return Err(Error::Model(format!(
            "TFIM needs an even N, got {n_qubits}"
        )));
    }
    let sf = size_factor(n_qubits, exps.nu);
    tfim::momenta(n_qubits)
        .into_par_iter()
        .map(|k| {
            let h = |lam: f64| {
                tfim::build_tfim_block(n_qubits, k, lam)
                    .expect("momentum on grid")
                    .matrix
            };
            let (mut rows, stats) = evolve_two_level(h, schedule, outputs, settings)?;
            for r in &mut rows {
                r.x = sf * r.lambda();
            }
            Ok(Trace {
                engine: Engine::Direct,
                n_qubits,
                momentum: Some(k),
                rows,
                stats,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceOptions {
    pub dimension_cap: usize,
    /// Photon cutoff of the plain Fock basis (Dicke).
    pub photon_cap: usize,
    /// Lowest levels whose overlaps are reported.
    pub n_report: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            dimension_cap: 4096,
            photon_cap: 40,
            n_report: 5,
        }
    }
}

/// `H(λ) = A + λB` in sparse form.
#[derive(Debug, Clone)]
pub struct AffineHamiltonian {
    a: CsrMatrix<f64>,
    b: CsrMatrix<f64>,
}

fn to_csr(m: &DMatrix<f64>) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != 0.0 {
                coo.push(r, c, v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

/// `out += scale · M x` for interleaved complex `x`.
fn csr_apply(m: &CsrMatrix<f64>, scale: f64, x: &[f64], out: &mut [f64]) {
    for (r, row) in m.row_iter().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            re += v * x[2 * c];
            im += v * x[2 * c + 1];
        }
        out[2 * r] += scale * re;
        out[2 * r + 1] += scale * im;
    }
}

impl AffineHamiltonian {
    pub fn new(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Self {
        Self {
            a: to_csr(a),
            b: to_csr(b),
        }
    }

    /// Full even-parity space of a model: spin ring (TFIM), reduced
    /// `J = N/2` basis (LMGM) or plain Fock basis (Dicke).
    pub fn for_model(spec: &ModelSpec, opts: &ReferenceOptions) -> Result<Self> {
        let dim = match spec.kind {
            ModelKind::Tfim => {
                if spec.n_qubits > 24 {
                    usize::MAX
                } else {
                    1usize << (spec.n_qubits - 1)
                }
            }
            ModelKind::Lmgm => lmgm::dimension(spec.n_qubits),
            ModelKind::Dicke => {
                let per_spin = opts.photon_cap / 2 + 1;
                (spec.n_qubits + 1) * per_spin
            }
        };
        if dim > opts.dimension_cap {
            return Err(Error::DimensionCap {
                dimension: dim,
                cap: opts.dimension_cap,
            });
        }
        Ok(match spec.kind {
            ModelKind::Tfim => {
                let ring = SpinRing::new(spec.n_qubits)?;
                Self::new(&ring.hamiltonian(0.0), &ring.interaction())
            }
            ModelKind::Lmgm => Self::new(
                &lmgm::build_lmgm(spec.n_qubits, 0.0)?.to_dense(),
                &lmgm::lmgm_interaction(spec.n_qubits)?.to_dense(),
            ),
            ModelKind::Dicke => {
                let pf = PlainFockDicke::new(spec.n_qubits, opts.photon_cap)?;
                let (h0, x) = pf.parts();
                let v = x / (spec.n_qubits as f64).sqrt();
                Self::new(&(h0 + &v), &v)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn dense(&self, lambda: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (mat, s) in [(&self.a, 1.0), (&self.b, lambda)] {
            for (r, row) in mat.row_iter().enumerate() {
                for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                    m[(r, c)] += s * v;
                }
            }
        }
        m
    }

    /// `out = -i·rate·(H(λ) - shift) x`.
    fn schrodinger(
        &self,
        lambda: f64,
        shift: f64,
        rate: f64,
        x: &[f64],
        out: &mut [f64],
        hx: &mut [f64],
    ) {
        for (o, v) in hx.iter_mut().zip(x) {
            *o = -shift * v;
        }
        csr_apply(&self.a, 1.0, x, hx);
        csr_apply(&self.b, lambda, x, hx);
        for i in 0..self.dim() {
            out[2 * i] = rate * hx[2 * i + 1];
            out[2 * i + 1] = -rate * hx[2 * i];
        }
    }
}

/// Schrödinger evolution in the full even-parity space of `spec`.
pub fn evolve_direct_reference(
    spec: &ModelSpec,
    schedule: &AnnealingSchedule,
    outputs: &[f64],
    exps: &ScalingExponents,
    settings: &IntegratorSettings,
    opts: &ReferenceOptions,
) -> Result<Trace> {
    check_kappa(schedule.kappa())?;
    check_outputs(outputs, schedule.lambda_start(), schedule.lambda_end())?;
    let h = AffineHamiltonian::for_model(spec, opts)?;
    evolve_affine(
        &h,
        spec.n_qubits,
        schedule,
        outputs,
        exps,
        settings,
        opts.n_report,
    )
}

/// Schrödinger evolution under an affine Hamiltonian from its ground state.
pub fn evolve_affine(
    h: &AffineHamiltonian,
    n_qubits: usize,
    schedule: &AnnealingSchedule,
    outputs: &[f64],
    exps: &ScalingExponents,
    settings: &IntegratorSettings,
    n_report: usize,
) -> Result<Trace> {
    let dim = h.dim();
    let n_report = n_report.min(dim).max(1);
    let start = lowest_dense(&h.dense(schedule.lambda_start()), 1)?;
    let mut y = vec![0.0; 2 * dim];
    for i in 0..dim {
        y[2 * i] = start.vectors[(i, 0)];
    }
    let rate = schedule.phase_rate();
    // Removing a smooth estimate of E_0(λ) (a global phase) keeps the ground
    // component nearly stationary; the explicit scheme otherwise leaks norm
    // at a rate set by the absolute energy.
    let shift_grid = output_grid(schedule.lambda_start(), schedule.lambda_end(), 201);
    let shifts = shift_grid
        .iter()
        .map(|&l| Ok(lowest_dense(&h.dense(l), 1)?.values[0]))
        .collect::<Result<Vec<f64>>>()?;
    let shift = CubicTable::new(shift_grid, 1, shifts)?;
    let mut hx = vec![0.0; 2 * dim];
    let mut c = [0.0];
    let mut rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
        let (lo, hi) = shift.range();
        let lam = schedule.lambda_of_s(s).clamp(lo, hi);
        shift.eval_into(lam, &mut c).expect("clamped to range");
        h.schrodinger(lam, c[0], rate, y, dy, &mut hx);
    };
    let sf = size_factor(n_qubits, exps.nu);
    let mut ode = settings.integrator(2 * dim, f64::INFINITY);
    let mut s = schedule.s_of_lambda(schedule.lambda_start());
    let mut rows = Vec::with_capacity(outputs.len());
    for &lam in outputs {
        let target = schedule.s_of_lambda(lam);
        ode.integrate(&mut rhs, s, target, &mut y)?;
        s = target;
        let psi: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new(y[2 * i], y[2 * i + 1]))
            .collect();
        let mut row = project_row(
            &h.dense(lam),
            &psi,
            n_report,
            lam,
            schedule,
            Engine::Reference,
        )?;
        row.x = sf * lam;
        rows.push(row);
    }
    Ok(Trace {
        engine: Engine::Reference,
        n_qubits,
        momentum: None,
        rows,
        stats: ode.stats,
    })
}
