//! Instantaneous spectra along a λ sweep.
//!
//! Each grid point is diagonalized independently (in parallel); a sequential
//! pass then fixes signs and labels so that level `n` follows one continuous
//! eigenstate. Transition amplitudes `χ_{n,m} = -⟨n|∂_λ m⟩` come from
//! `V_{n,m}/Δ_{n,m}` where that is defined, and from central finite
//! differences of the eigenvectors otherwise. The Dicke basis moves with λ,
//! so there the finite-difference path is always used, with the neighbouring
//! eigenvectors mapped into the central basis through the exact overlaps.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::CubicTable;
use crate::linalg::{lowest_dense, Eigenpairs, SymTridiagonal};
use crate::models::{dicke::DickeBasis, lmgm, tfim, ModelKind, ModelSpec};
use crate::schedule::{size_factor, ScalingExponents};

/// One symmetry-reduced eigenproblem.
#[derive(Debug, Clone)]
pub enum ReducedSystem {
    TfimBlock {
        n_qubits: usize,
        k: f64,
    },
    Lmgm {
        n_qubits: usize,
        interaction: SymTridiagonal,
    },
    Dicke(DickeBasis),
    /// `H = A + λB` in a fixed basis.
    Affine {
        n_qubits: usize,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
    },
}

impl ReducedSystem {
    pub fn tfim_block(n_qubits: usize, k: f64) -> Result<Self> {
        tfim::build_tfim_block(n_qubits, k, 0.0)?;
        Ok(Self::TfimBlock { n_qubits, k })
    }

    /// All momentum blocks of a TFIM ring.
    pub fn tfim_blocks(n_qubits: usize) -> Result<Vec<Self>> {
        tfim::momenta(n_qubits)
            .into_iter()
            .map(|k| Self::tfim_block(n_qubits, k))
            .collect()
    }

    pub fn lmgm(n_qubits: usize) -> Result<Self> {
        Ok(Self::Lmgm {
            n_qubits,
            interaction: lmgm::lmgm_interaction(n_qubits)?,
        })
    }

    pub fn dicke(n_qubits: usize, truncation: usize) -> Result<Self> {
        Ok(Self::Dicke(DickeBasis::new(n_qubits, truncation)?))
    }

    /// The system whose lowest gap closes: the whole model for LMGM and
    /// Dicke, the `π(N-1)/N` block for TFIM.
    pub fn critical(spec: &ModelSpec) -> Result<Self> {
        match spec.kind {
            ModelKind::Tfim => {
                Self::tfim_block(spec.n_qubits, tfim::critical_momentum(spec.n_qubits))
            }
            ModelKind::Lmgm => Self::lmgm(spec.n_qubits),
            ModelKind::Dicke => Self::dicke(spec.n_qubits, spec.truncation),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Self::TfimBlock { n_qubits, .. } | Self::Lmgm { n_qubits, .. } => *n_qubits,
            Self::Dicke(b) => b.n_qubits(),
            Self::Affine { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::TfimBlock { .. } => 2,
            Self::Lmgm { n_qubits, .. } => lmgm::dimension(*n_qubits),
            Self::Dicke(b) => b.dim(),
            Self::Affine { a, .. } => a.nrows(),
        }
    }

    /// Whether the basis itself depends on λ.
    pub fn moving_basis(&self) -> bool {
        matches!(self, Self::Dicke(_))
    }

    pub fn hamiltonian(&self, lambda: f64) -> DMatrix<f64> {
        match self {
            Self::TfimBlock { n_qubits, k } => tfim::build_tfim_block(*n_qubits, *k, lambda)
                .expect("momentum validated at construction")
                .to_dense(),
            Self::Lmgm { n_qubits, .. } => lmgm::build_lmgm(*n_qubits, lambda)
                .expect("size validated at construction")
                .to_dense(),
            Self::Dicke(b) => b.hamiltonian(lambda),
            Self::Affine { a, b, .. } => a + b * lambda,
        }
    }

    /// `∂H/∂λ` in the basis at `λ` (held fixed).
    pub fn interaction(&self, lambda: f64) -> DMatrix<f64> {
        match self {
            Self::TfimBlock { k, .. } => {
                let m = tfim::tfim_block_interaction(*k);
                DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
            }
            Self::Lmgm { interaction, .. } => interaction.to_dense(),
            Self::Dicke(b) => b.interaction(lambda),
            Self::Affine { b, .. } => b.clone(),
        }
    }

    /// `vᵀ (∂H/∂λ) v` for the given columns.
    pub fn project_interaction(&self, lambda: f64, vectors: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Self::Lmgm { interaction, .. } => {
                let (n, c) = vectors.shape();
                let mut hv = DMatrix::zeros(n, c);
                for j in 0..c {
                    let col: Vec<f64> = vectors.column(j).iter().copied().collect();
                    let mut out = vec![0.0; n];
                    interaction.matvec(&col, &mut out);
                    hv.column_mut(j).copy_from_slice(&out);
                }
                vectors.transpose() * hv
            }
            _ => vectors.transpose() * self.interaction(lambda) * vectors,
        }
    }

    /// `⟨i(λ_a)|j(λ_b)⟩`; `None` when the basis does not move.
    pub fn overlap(&self, lambda_a: f64, lambda_b: f64) -> Option<DMatrix<f64>> {
        match self {
            Self::Dicke(b) => Some(b.overlap(lambda_a, lambda_b)),
            _ => None,
        }
    }

    /// Lowest `n_levels` eigenpairs at `λ`, energies ascending.
    pub fn diagonalize(&self, lambda: f64, n_levels: usize) -> Result<Eigenpairs> {
        let res = match self {
            Self::Lmgm { n_qubits, .. } => lmgm::build_lmgm(*n_qubits, lambda)?.lowest(n_levels),
            _ => lowest_dense(&self.hamiltonian(lambda), n_levels),
        };
        res.map_err(|e| match e {
            Error::Eigensolver { reason, .. } => Error::Eigensolver { lambda, reason },
            other => other,
        })
    }
}

/// Lowest eigenpairs of a model; TFIM returns its critical block.
pub fn diagonalize(spec: &ModelSpec, lambda: f64, n_levels: usize) -> Result<Eigenpairs> {
    ReducedSystem::critical(spec)?.diagonalize(lambda, n_levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiMethod {
    /// `V/Δ` for non-degenerate pairs of a fixed basis, finite differences
    /// otherwise.
    Auto,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Extra candidate levels diagonalized for tracking.
    pub buffer: usize,
    pub chi_method: ChiMethod,
    /// Finite-difference step in λ.
    pub fd_step: f64,
    /// Upper bound on the finite-difference step relative to the local
    /// grid spacing.
    pub fd_fraction: f64,
    /// Relative (to the spectral span) degeneracy threshold.
    pub degeneracy: f64,
    /// Overlap below which a tracked level is reported.
    pub min_overlap: f64,
    /// Bisect a grid interval while some tracked level keeps less overlap
    /// than this with itself across it.
    pub refine_overlap: f64,
    /// Smallest interval produced by bisection.
    pub min_spacing: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            buffer: 4,
            chi_method: ChiMethod::Auto,
            fd_step: 1e-5,
            fd_fraction: 1.0 / 8.0,
            degeneracy: 1e-10,
            min_overlap: 0.5,
            refine_overlap: 0.999,
            min_spacing: 1e-9,
        }
    }
}

/// Snapshot grid: uniform in `x = N^{1/ν}λ` for `|x| ≤ x_window`, uniform in
/// λ with step at most `outer_step` beyond, clipped to `[λ_start, λ_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_window: f64,
    pub window_points: usize,
    pub outer_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_window: 50.0,
            window_points: 2001,
            outer_step: 1e-3,
        }
    }
}

impl GridSpec {
    pub fn build(
        &self,
        n_qubits: usize,
        exps: &ScalingExponents,
        lambda_start: f64,
        lambda_end: f64,
    ) -> Result<Vec<f64>> {
        if !(lambda_start < 0.0 && lambda_end > 0.0) {
            return Err(Error::Config(format!(
                "snapshot grid [{lambda_start}, {lambda_end}] must contain λ = 0"
            )));
        }
        if self.window_points < 3 || self.window_points.is_multiple_of(2) || !(self.x_window > 0.0)
        {
            return Err(Error::Config(
                "grid window needs an odd point count ≥ 3 and a positive width".into(),
            ));
        }
        let scale = 1.0 / size_factor(n_qubits, exps.nu);
        // small sizes stretch the window in λ; keep its spacing ≤ outer_step
        let half = ((self.window_points - 1) / 2)
            .max((self.x_window * scale / self.outer_step).ceil() as usize);
        let points = 2 * half + 1;
        let dx = self.x_window / half as f64;
        let mut grid = Vec::with_capacity(points.min(20_001) + 4000);
        let lo_edge = (-self.x_window * scale).max(lambda_start);
        let hi_edge = (self.x_window * scale).min(lambda_end);
        push_outer(&mut grid, lambda_start, lo_edge, self.outer_step);
        for i in 0..points {
            let x = if i == half {
                0.0
            } else {
                (i as f64 - half as f64) * dx
            };
            let lam = x * scale;
            if lam >= lo_edge && lam <= hi_edge {
                grid.push(lam);
            }
        }
        let mut tail = Vec::new();
        push_outer(&mut tail, hi_edge, lambda_end, self.outer_step);
        grid.extend(tail.into_iter().skip(1));
        if grid.first() != Some(&lambda_start) {
            grid.insert(0, lambda_start);
        }
        if grid.last() != Some(&lambda_end) {
            grid.push(lambda_end);
        }
        grid.dedup_by(|b, a| *b - *a <= 1e-14 * a.abs().max(1.0));
        // no slivers next to the ends
        let sliver = 0.5 * (dx * scale).min(self.outer_step);
        grid.retain(|&l| {
            l == lambda_start
                || l == lambda_end
                || (l - lambda_start > sliver && lambda_end - l > sliver)
        });
        let n = grid.len();
        if n > 2 && grid[n - 1] - grid[n - 2] > self.outer_step {
            grid.insert(n - 1, 0.5 * (grid[n - 2] + grid[n - 1]));
        }
        if grid.len() > 2 && grid[1] - grid[0] > self.outer_step {
            grid.insert(1, 0.5 * (grid[0] + grid[1]));
        }
        let n = grid.len();
        grid[n - 1] = lambda_end;
        grid[0] = lambda_start;
        Ok(grid)
    }
}

/// Points from `a` (included) towards `b` (excluded) with step ≤ `step`.
fn push_outer(grid: &mut Vec<f64>, a: f64, b: f64, step: f64) {
    let len = b - a;
    if len <= 0.0 {
        return;
    }
    let n = (len / step).ceil().max(1.0) as usize;
    for i in 0..n {
        grid.push(a + len * i as f64 / n as f64);
    }
}

/// Eigen-data at one λ.
#[derive(Debug, Clone)]
pub struct SpectralSnapshot {
    pub lambda: f64,
    pub energies: Vec<f64>,
    /// Orthonormal columns in the basis at `lambda`.
    pub vectors: DMatrix<f64>,
    /// `V_{n,m}` (basis held fixed).
    pub v: DMatrix<f64>,
    pub chi: DMatrix<f64>,
}

impl SpectralSnapshot {
    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    pub fn gap(&self, n: usize, m: usize) -> f64 {
        self.energies[n] - self.energies[m]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stencil {
    Central,
    Forward,
    Backward,
}

/// Diagonalize at `λ` and compute `χ` among the lowest `n_levels` states.
///
/// `h` is the finite-difference step; `stencil_side` is `-1`/`+1` to force a
/// one-sided stencil at a sweep boundary, `0` for central differences.
pub fn snapshot_at(
    sys: &ReducedSystem,
    lambda: f64,
    n_levels: usize,
    h: f64,
    stencil_side: i8,
    opts: &SweepOptions,
) -> Result<SpectralSnapshot> {
    let dim = sys.dim();
    if n_levels > dim {
        return Err(Error::TooManyLevels {
            requested: n_levels,
            dimension: dim,
        });
    }
    let mut eig = sys.diagonalize(lambda, n_levels)?;
    let span = spectral_span(&eig.values);
    let thr = opts.degeneracy * span;
    let mut v = sys.project_interaction(lambda, &eig.vectors);
    if rotate_degenerate_clusters(&mut eig, &mut v, 1e-9 * span) {
        v = sys.project_interaction(lambda, &eig.vectors);
    }
    let use_fd_everywhere = sys.moving_basis() || opts.chi_method == ChiMethod::FiniteDifference;
    let any_degenerate =
        (0..n_levels).any(|n| (0..n).any(|m| (eig.values[n] - eig.values[m]).abs() <= thr));
    let fd = if use_fd_everywhere || any_degenerate {
        let stencil = match stencil_side {
            s if s > 0 => Stencil::Forward,
            s if s < 0 => Stencil::Backward,
            _ => Stencil::Central,
        };
        Some(fd_chi(sys, lambda, &eig, h, stencil, opts)?)
    } else {
        None
    };
    let mut chi = DMatrix::zeros(n_levels, n_levels);
    for n in 0..n_levels {
        for m in 0..n_levels {
            if n == m {
                continue;
            }
            let d = eig.values[n] - eig.values[m];
            chi[(n, m)] = match (&fd, use_fd_everywhere || d.abs() <= thr) {
                (Some(f), true) => f[(n, m)],
                _ => v[(n, m)] / d,
            };
        }
    }
    Ok(SpectralSnapshot {
        lambda,
        energies: eig.values,
        vectors: eig.vectors,
        v,
        chi,
    })
}

fn spectral_span(values: &[f64]) -> f64 {
    let span = values.last().unwrap_or(&0.0) - values.first().unwrap_or(&0.0);
    span.max(values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .max(1.0)
}

/// Within clusters of (numerically) equal energies, rotate the vectors so
/// that `V` is diagonal there; those are the states that split off
/// continuously. Returns whether anything was rotated.
fn rotate_degenerate_clusters(eig: &mut Eigenpairs, v: &mut DMatrix<f64>, tol: f64) -> bool {
    let n = eig.values.len();
    let mut rotated = false;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] <= tol {
            end += 1;
        }
        let size = end - start;
        if size > 1 {
            let block = v.view((start, start), (size, size)).into_owned();
            let sub = lowest_dense(&block, size).expect("cluster block is square");
            let cols = eig.vectors.columns(start, size).into_owned() * &sub.vectors;
            eig.vectors.columns_mut(start, size).copy_from(&cols);
            let mean = eig.values[start..end].iter().sum::<f64>() / size as f64;
            eig.values[start..end].iter_mut().for_each(|e| *e = mean);
            rotated = true;
        }
        start = end;
    }
    if rotated {
        *v = DMatrix::zeros(0, 0);
    }
    rotated
}

/// `χ = -Φᵀ ∂_λΦ` with `∂_λΦ` from eigenvectors at neighbouring λ.
fn fd_chi(
    sys: &ReducedSystem,
    lambda: f64,
    center: &Eigenpairs,
    h: f64,
    stencil: Stencil,
    opts: &SweepOptions,
) -> Result<DMatrix<f64>> {
    let n_levels = center.values.len();
    let dim = sys.dim();
    let candidates = (n_levels + opts.buffer).min(dim);
    let (offsets, weights): (Vec<f64>, Vec<f64>) = match stencil {
        Stencil::Central => (vec![-h, h], vec![-0.5 / h, 0.5 / h]),
        Stencil::Forward => (vec![0.0, h, 2.0 * h], vec![-1.5 / h, 2.0 / h, -0.5 / h]),
        Stencil::Backward => (vec![0.0, -h, -2.0 * h], vec![1.5 / h, -2.0 / h, 0.5 / h]),
    };
    let mut deriv = DMatrix::zeros(dim, n_levels);
    for (&o, &w) in offsets.iter().zip(&weights) {
        if o == 0.0 {
            deriv += &center.vectors * w;
            continue;
        }
        let other = sys.diagonalize(lambda + o, candidates)?;
        let mapped = match sys.overlap(lambda, lambda + o) {
            Some(ov) => ov * &other.vectors,
            None => other.vectors,
        };
        let overlaps = center.vectors.transpose() * &mapped;
        let assign = greedy_assignment(&overlaps, &center.values, &other.values, 1e-3).0;
        for (n, &j) in assign.iter().enumerate() {
            let s = overlaps[(n, j)].signum();
            let col = mapped.column(j) * (s * w);
            let mut target = deriv.column_mut(n);
            target += col;
        }
    }
    let raw = -(center.vectors.transpose() * deriv);
    Ok((&raw - raw.transpose()) * 0.5)
}

/// Assign each row (previous level) to a distinct column (candidate) by
/// descending `|overlap|`. Near-ties are broken by the smaller energy change.
/// Returns the assignment and the number of ties resolved.
fn greedy_assignment(
    overlaps: &DMatrix<f64>,
    prev_energies: &[f64],
    cur_energies: &[f64],
    tie: f64,
) -> (Vec<usize>, usize) {
    let (rows, cols) = overlaps.shape();
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            entries.push((overlaps[(r, c)].abs(), r, c));
        }
    }
    entries.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut row_done = vec![false; rows];
    let mut col_done = vec![false; cols];
    let mut assign = vec![usize::MAX; rows];
    let mut ties = 0;
    let mut left = rows;
    let mut i = 0;
    while left > 0 && i < entries.len() {
        let (val, r, c) = entries[i];
        i += 1;
        if row_done[r] || col_done[c] {
            continue;
        }
        // competing free column for the same row within the tie band
        let mut best = c;
        for &(v2, r2, c2) in &entries[i..] {
            if val - v2 > tie {
                break;
            }
            if r2 == r && !col_done[c2] && c2 != c {
                ties += 1;
                let de = |cc: usize| (cur_energies[cc] - prev_energies[r]).abs();
                if de(c2) < de(best) {
                    best = c2;
                }
            }
        }
        row_done[r] = true;
        col_done[best] = true;
        assign[r] = best;
        left -= 1;
    }
    (assign, ties)
}

/// Flip column signs of `current` so each overlaps positively with the same
/// column of `previous`. Returns the aligned vectors and the indices of
/// columns whose overlap magnitude fell below `min_overlap`.
pub fn align_phases(
    previous: &DMatrix<f64>,
    current: &DMatrix<f64>,
    min_overlap: f64,
) -> (DMatrix<f64>, Vec<usize>) {
    let mut out = current.clone();
    let mut flagged = Vec::new();
    for j in 0..current.ncols() {
        let ov = previous.column(j).dot(&current.column(j));
        if ov.abs() < min_overlap {
            flagged.push(j);
        }
        if ov < 0.0 {
            out.column_mut(j).neg_mut();
        }
    }
    (out, flagged)
}

/// First-snapshot convention: largest-magnitude component positive.
pub fn canonical_signs(vectors: &mut DMatrix<f64>) {
    for j in 0..vectors.ncols() {
        let mut best = 0.0f64;
        for v in vectors.column(j).iter() {
            if v.abs() > best.abs() {
                best = *v;
            }
        }
        if best < 0.0 {
            vectors.column_mut(j).neg_mut();
        }
    }
}

/// Result of matching raw eigenpairs against the previous snapshot.
#[derive(Debug, Clone)]
pub struct Tracking {
    /// `permutation[n]` is the raw index that continues level `n`.
    pub permutation: Vec<usize>,
    pub signs: Vec<f64>,
    /// `⟨previous n|current permutation[n]⟩` (after sign alignment, ≥ 0).
    pub overlaps: Vec<f64>,
    pub low_overlap: Vec<usize>,
    pub ties: usize,
}

impl Tracking {
    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Match raw eigenvectors at the new λ to the tracked ones at the previous λ.
///
/// `basis_overlap` maps the current basis into the previous one when the
/// basis moves with λ.
pub fn track_levels(
    prev_vectors: &DMatrix<f64>,
    prev_energies: &[f64],
    cur: &Eigenpairs,
    basis_overlap: Option<&DMatrix<f64>>,
    opts: &SweepOptions,
) -> Tracking {
    let mapped;
    let cur_vecs = match basis_overlap {
        Some(o) => {
            mapped = o * &cur.vectors;
            &mapped
        }
        None => &cur.vectors,
    };
    let overlaps = prev_vectors.transpose() * cur_vecs;
    let (permutation, ties) = greedy_assignment(&overlaps, prev_energies, &cur.values, 1e-3);
    let mut signs = Vec::with_capacity(permutation.len());
    let mut low_overlap = Vec::new();
    let mut kept = Vec::with_capacity(permutation.len());
    for (n, &j) in permutation.iter().enumerate() {
        let ov = overlaps[(n, j)];
        kept.push(ov.abs());
        if ov.abs() < opts.min_overlap {
            low_overlap.push(n);
        }
        signs.push(if ov < 0.0 { -1.0 } else { 1.0 });
    }
    Tracking {
        permutation,
        signs,
        overlaps: kept,
        low_overlap,
        ties,
    }
}

/// `χ_{n,m}` from the fixed-basis matrix elements `V` and energies:
/// `V/Δ` where the pair is non-degenerate, `None` otherwise.
pub fn transition_amplitudes(
    energies: &[f64],
    v: &DMatrix<f64>,
    degeneracy: f64,
) -> Vec<Vec<Option<f64>>> {
    let thr = degeneracy * spectral_span(energies);
    let n = energies.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return Some(0.0);
                    }
                    let d = energies[i] - energies[j];
                    (d.abs() > thr).then(|| v[(i, j)] / d)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrackingEvent {
    /// Labels reordered relative to energy order.
    Reordered {
        lambda: f64,
        permutation: Vec<usize>,
    },
    LowOverlap {
        lambda: f64,
        level: usize,
    },
    Tie {
        lambda: f64,
        count: usize,
    },
    /// A level rotated too fast even at the finest spacing; the crossing is
    /// treated as diabatic.
    Unresolved {
        lambda: f64,
        spacing: f64,
    },
}

/// Energies and transition amplitudes of tracked levels on a λ grid.
#[derive(Debug, Clone)]
pub struct SpectralSweep {
    pub n_qubits: usize,
    pub n_levels: usize,
    pub lambdas: Vec<f64>,
    energies: Vec<f64>,
    chi: Vec<f64>,
    /// Nodes inserted to resolve narrow avoided crossings.
    pub refined: Vec<f64>,
    pub events: Vec<TrackingEvent>,
}

/// Tracked levels at the last accepted node.
struct Tracked {
    lambda: f64,
    vectors: DMatrix<f64>,
    energies: Vec<f64>,
    permutation: Vec<usize>,
}

struct Stitcher<'a> {
    sys: &'a ReducedSystem,
    opts: &'a SweepOptions,
    n_levels: usize,
    candidates: usize,
    out: SpectralSweep,
}

impl Stitcher<'_> {
    fn accept(&mut self, snap: &SpectralSnapshot, perm: Vec<usize>, signs: &[f64]) -> Tracked {
        let l = self.n_levels;
        let mut vectors = DMatrix::zeros(snap.vectors.nrows(), l);
        let mut energies = Vec::with_capacity(l);
        for (n, &p) in perm.iter().enumerate() {
            vectors.set_column(n, &(snap.vectors.column(p) * signs[n]));
            energies.push(snap.energies[p]);
        }
        self.out.lambdas.push(snap.lambda);
        self.out.energies.extend_from_slice(&energies);
        for n in 0..l {
            for m in 0..l {
                self.out
                    .chi
                    .push(signs[n] * signs[m] * snap.chi[(perm[n], perm[m])]);
            }
        }
        Tracked {
            lambda: snap.lambda,
            vectors,
            energies,
            permutation: perm,
        }
    }

    fn first(&mut self, snap: &SpectralSnapshot) -> Tracked {
        let l = self.n_levels;
        let mut v = snap.vectors.columns(0, l).into_owned();
        let before = v.clone();
        canonical_signs(&mut v);
        let signs: Vec<f64> = (0..l)
            .map(|j| {
                if v.column(j) == before.column(j) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        self.accept(snap, (0..l).collect(), &signs)
    }

    /// Track from `prev` to `snap`, bisecting the interval while any tracked
    /// level rotates by more than the refinement threshold.
    fn advance(&mut self, prev: Tracked, snap: &SpectralSnapshot) -> Result<Tracked> {
        let eig = Eigenpairs {
            values: snap.energies.clone(),
            vectors: snap.vectors.clone(),
        };
        let ov = self.sys.overlap(prev.lambda, snap.lambda);
        let t = track_levels(&prev.vectors, &prev.energies, &eig, ov.as_ref(), self.opts);
        let worst = t.overlaps.iter().fold(1.0f64, |m, o| m.min(o.abs()));
        let width = snap.lambda - prev.lambda;
        if worst < self.opts.refine_overlap && width > self.opts.min_spacing {
            let mid = prev.lambda + 0.5 * width;
            let h = self.opts.fd_step.min(0.5 * width * self.opts.fd_fraction);
            let mid_snap = snapshot_at(self.sys, mid, self.candidates, h, 0, self.opts)?;
            self.out.refined.push(mid);
            let p = self.advance(prev, &mid_snap)?;
            return self.advance(p, snap);
        }
        let lambda = snap.lambda;
        if worst < self.opts.refine_overlap {
            log::warn!(
                "crossing at λ = {lambda} unresolved at spacing {width:e}; passed diabatically"
            );
            self.out.events.push(TrackingEvent::Unresolved {
                lambda,
                spacing: width,
            });
        }
        let order_changed = {
            let rank = |perm: &[usize]| {
                let mut idx: Vec<usize> = (0..perm.len()).collect();
                idx.sort_by_key(|&i| perm[i]);
                idx
            };
            rank(&t.permutation) != rank(&prev.permutation)
        };
        if order_changed {
            log::debug!("level order changes at λ = {lambda}: {:?}", t.permutation);
            self.out.events.push(TrackingEvent::Reordered {
                lambda,
                permutation: t.permutation.clone(),
            });
        }
        for &l in &t.low_overlap {
            log::warn!("level {l} overlap below threshold at λ = {lambda}");
            self.out
                .events
                .push(TrackingEvent::LowOverlap { lambda, level: l });
        }
        if t.ties > 0 {
            log::info!("{} assignment ties resolved at λ = {lambda}", t.ties);
            self.out.events.push(TrackingEvent::Tie {
                lambda,
                count: t.ties,
            });
        }
        Ok(self.accept(snap, t.permutation, &t.signs))
    }
}

impl SpectralSweep {
    /// Diagonalize `sys` on `grid` and stitch the points together.
    pub fn compute(
        sys: &ReducedSystem,
        grid: &[f64],
        n_levels: usize,
        opts: &SweepOptions,
    ) -> Result<Self> {
        if grid.len() < 4 {
            return Err(Error::Config(
                "snapshot grid needs at least 4 points".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "snapshot grid must be strictly increasing".into(),
            ));
        }
        let dim = sys.dim();
        if n_levels == 0 || n_levels > dim {
            return Err(Error::TooManyLevels {
                requested: n_levels,
                dimension: dim,
            });
        }
        let candidates = (n_levels + opts.buffer).min(dim);
        let rows = grid.len();
        let mut st = Stitcher {
            sys,
            opts,
            n_levels,
            candidates,
            out: Self {
                n_qubits: sys.n_qubits(),
                n_levels,
                lambdas: Vec::with_capacity(rows),
                energies: Vec::with_capacity(rows * n_levels),
                chi: Vec::with_capacity(rows * n_levels * n_levels),
                refined: Vec::new(),
                events: Vec::new(),
            },
        };
        let mut prev: Option<Tracked> = None;

        const CHUNK: usize = 64;
        for chunk_start in (0..rows).step_by(CHUNK) {
            let idx: Vec<usize> = (chunk_start..(chunk_start + CHUNK).min(rows)).collect();
            let raw: Vec<Result<SpectralSnapshot>> = idx
                .par_iter()
                .map(|&i| {
                    let left = if i > 0 {
                        grid[i] - grid[i - 1]
                    } else {
                        f64::INFINITY
                    };
                    let right = if i + 1 < rows {
                        grid[i + 1] - grid[i]
                    } else {
                        f64::INFINITY
                    };
                    let h = opts.fd_step.min(left.min(right) * opts.fd_fraction);
                    let side = if i == 0 {
                        1
                    } else if i + 1 == rows {
                        -1
                    } else {
                        0
                    };
                    snapshot_at(sys, grid[i], candidates, h, side, opts)
                })
                .collect();
            for snap in raw {
                let snap = snap?;
                prev = Some(match prev.take() {
                    None => st.first(&snap),
                    Some(p) => st.advance(p, &snap)?,
                });
            }
        }
        Ok(st.out)
    }

    pub fn rows(&self) -> usize {
        self.lambdas.len()
    }

    pub fn energy(&self, row: usize, n: usize) -> f64 {
        self.energies[row * self.n_levels + n]
    }

    pub fn energies(&self, row: usize) -> &[f64] {
        &self.energies[row * self.n_levels..(row + 1) * self.n_levels]
    }

    pub fn gap(&self, row: usize, n: usize, m: usize) -> f64 {
        self.energy(row, n) - self.energy(row, m)
    }

    pub fn chi(&self, row: usize, n: usize, m: usize) -> f64 {
        let l = self.n_levels;
        self.chi[row * l * l + n * l + m]
    }

    pub fn chi_row(&self, row: usize) -> &[f64] {
        let l2 = self.n_levels * self.n_levels;
        &self.chi[row * l2..(row + 1) * l2]
    }

    /// Keep only the lowest `n_levels` tracked levels.
    pub fn truncated(&self, n_levels: usize) -> Self {
        let l = self.n_levels;
        let n_levels = n_levels.min(l);
        let mut energies = Vec::with_capacity(self.rows() * n_levels);
        let mut chi = Vec::with_capacity(self.rows() * n_levels * n_levels);
        for r in 0..self.rows() {
            energies.extend_from_slice(&self.energies(r)[..n_levels]);
            for n in 0..n_levels {
                for m in 0..n_levels {
                    chi.push(self.chi(r, n, m));
                }
            }
        }
        Self {
            n_qubits: self.n_qubits,
            n_levels,
            lambdas: self.lambdas.clone(),
            energies,
            chi,
            refined: self.refined.clone(),
            events: self.events.clone(),
        }
    }

    /// Columns `Δ_{n,0}` for `n = 0..L`, then `χ_{n,m}` row-major, on the λ grid.
    pub fn table(&self) -> Result<CubicTable> {
        let l = self.n_levels;
        let cols = l + l * l;
        let mut data = Vec::with_capacity(self.rows() * cols);
        for r in 0..self.rows() {
            let e0 = self.energy(r, 0);
            data.extend(self.energies(r).iter().map(|e| e - e0));
            data.extend_from_slice(self.chi_row(r));
        }
        CubicTable::new(self.lambdas.clone(), cols, data)
    }

    /// Largest `|Δ_{n,0}|` over the grid.
    pub fn max_gap(&self) -> f64 {
        (0..self.rows())
            .flat_map(|r| (0..self.n_levels).map(move |n| (r, n)))
            .map(|(r, n)| self.gap(r, n, 0).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `lambda,x,E_0..E_{L-1},Delta_10,chi_10`.
    pub fn to_csv(&self, exps: &ScalingExponents) -> String {
        let sf = size_factor(self.n_qubits, exps.nu);
        let mut s = String::from("lambda,x");
        for n in 0..self.n_levels {
            let _ = write!(s, ",E_{n}");
        }
        s.push_str(",Delta_10,chi_10\n");
        for r in 0..self.rows() {
            let lam = self.lambdas[r];
            let _ = write!(s, "{:?},{:?}", lam, sf * lam);
            for e in self.energies(r) {
                let _ = write!(s, ",{e:?}");
            }
            if self.n_levels > 1 {
                let _ = write!(s, ",{:?},{:?}", self.gap(r, 1, 0), self.chi(r, 1, 0));
            } else {
                s.push_str(",,");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path, exps: &ScalingExponents) -> Result<()> {
        std::fs::write(path, self.to_csv(exps)).map_err(|e| Error::io(path, e))
    }
}
