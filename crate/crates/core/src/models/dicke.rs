//! Resonant Dicke model `H = J_z + a†a + G J_x (a + a†)`, `G = (1+λ)/√N`.
//!
//! The adapted basis pairs `J_x` eigenstates `|m⟩_x = e^{-iπJ_y/2}|m⟩_z` with
//! Fock states displaced by `-mG`, which diagonalizes everything except
//! `J_z`. Parity maps `|m, k⟩ → (-1)^k |-m, k⟩`, so the even sector is
//! spanned by `(|m,k⟩ + (-1)^k |-m,k⟩)/√2` for `m ≥ 1` and by `|0,k⟩` with
//! even `k`. Keeping `k < M` gives dimension `M·N/2 + ⌈M/2⌉`.
//!
//! A plain `|m⟩_z ⊗ |n⟩` construction with a photon cap is kept as the
//! reference the adapted basis is checked against.

use nalgebra::DMatrix;

use super::fock::displaced_overlap;
use crate::error::{Error, Result};

pub fn coupling(n_qubits: usize, lambda: f64) -> f64 {
    (1.0 + lambda) / (n_qubits as f64).sqrt()
}

pub fn dimension(n_qubits: usize, truncation: usize) -> usize {
    truncation * (n_qubits / 2) + truncation.div_ceil(2)
}

fn check(n_qubits: usize, truncation: usize) -> Result<()> {
    if n_qubits < 2 || !n_qubits.is_multiple_of(2) {
        return Err(Error::Model(format!(
            "Dicke needs an even N ≥ 2, got {n_qubits}"
        )));
    }
    if truncation == 0 {
        return Err(Error::Model("Dicke truncation M must be at least 1".into()));
    }
    Ok(())
}

/// Even-parity adapted basis, states `(m, k)` ordered by `m` then `k`.
#[derive(Debug, Clone)]
pub struct DickeBasis {
    n_qubits: usize,
    truncation: usize,
    states: Vec<(usize, usize)>,
    /// first index of each `m` block
    offsets: Vec<usize>,
}

impl DickeBasis {
    pub fn new(n_qubits: usize, truncation: usize) -> Result<Self> {
        check(n_qubits, truncation)?;
        let j = n_qubits / 2;
        let mut states = Vec::with_capacity(dimension(n_qubits, truncation));
        let mut offsets = Vec::with_capacity(j + 1);
        for m in 0..=j {
            offsets.push(states.len());
            for k in 0..truncation {
                if m == 0 && k % 2 == 1 {
                    continue;
                }
                states.push((m, k));
            }
        }
        Ok(Self {
            n_qubits,
            truncation,
            states,
            offsets,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    fn index(&self, m: usize, k: usize) -> Option<usize> {
        if k >= self.truncation {
            return None;
        }
        if m == 0 {
            k.is_multiple_of(2).then_some(k / 2)
        } else {
            Some(self.offsets[m] + k)
        }
    }

    fn jj(&self) -> f64 {
        let j = self.n_qubits as f64 / 2.0;
        j * (j + 1.0)
    }

    pub fn hamiltonian(&self, lambda: f64) -> DMatrix<f64> {
        let g = coupling(self.n_qubits, lambda);
        let jj = self.jj();
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for (i, &(m, k)) in self.states.iter().enumerate() {
            let mf = m as f64;
            h[(i, i)] = k as f64 - g * g * mf * mf;
            if m == self.n_qubits / 2 {
                continue;
            }
            // ⟨m+1|J_z|m⟩ in the J_x eigenbasis
            let t = -0.5 * (jj - mf * (mf + 1.0)).sqrt();
            let t = if m == 0 {
                t * std::f64::consts::SQRT_2
            } else {
                t
            };
            for kp in 0..self.truncation {
                let j = self.index(m + 1, kp).expect("m ≥ 1 keeps every k");
                let v = t * displaced_overlap(kp, k, g);
                h[(j, i)] = v;
                h[(i, j)] = v;
            }
        }
        h
    }

    /// `∂H/∂λ = N^{-1/2} J_x (a + a†)` expressed in the basis at `λ`, with the
    /// basis held fixed.
    pub fn interaction(&self, lambda: f64) -> DMatrix<f64> {
        let g = coupling(self.n_qubits, lambda);
        let scale = 1.0 / (self.n_qubits as f64).sqrt();
        let dim = self.dim();
        let mut v = DMatrix::zeros(dim, dim);
        for (i, &(m, k)) in self.states.iter().enumerate() {
            if m == 0 {
                continue;
            }
            let mf = m as f64;
            v[(i, i)] = -2.0 * scale * mf * mf * g;
            if let Some(j) = self.index(m, k + 1) {
                let e = scale * mf * ((k + 1) as f64).sqrt();
                v[(i, j)] = e;
                v[(j, i)] = e;
            }
        }
        v
    }

    /// `O_{ij} = ⟨i(λ_a)|j(λ_b)⟩`; block diagonal in `m`.
    pub fn overlap(&self, lambda_a: f64, lambda_b: f64) -> DMatrix<f64> {
        let dg = coupling(self.n_qubits, lambda_a) - coupling(self.n_qubits, lambda_b);
        let dim = self.dim();
        let mut o = DMatrix::zeros(dim, dim);
        for (i, &(m, kp)) in self.states.iter().enumerate() {
            if m == 0 {
                o[(i, i)] = 1.0;
                continue;
            }
            let base = self.offsets[m];
            for k in 0..self.truncation {
                o[(i, base + k)] = displaced_overlap(kp, k, m as f64 * dg);
            }
        }
        o
    }
}

pub fn build_dicke(n_qubits: usize, lambda: f64, truncation: usize) -> Result<DMatrix<f64>> {
    Ok(DickeBasis::new(n_qubits, truncation)?.hamiltonian(lambda))
}

/// Even-parity sector of `|m⟩_z ⊗ |n⟩` with `n ≤ cap`.
#[derive(Debug, Clone)]
pub struct PlainFockDicke {
    n_qubits: usize,
    cap: usize,
    /// `(m_z + J, n)`
    states: Vec<(usize, usize)>,
}

impl PlainFockDicke {
    pub fn new(n_qubits: usize, cap: usize) -> Result<Self> {
        check(n_qubits, 1)?;
        let j = n_qubits / 2;
        let mut states = Vec::new();
        for mz in 0..=2 * j {
            for n in 0..=cap {
                // parity exp(iπ(n + m_z + J)); m_z + J is the shifted index
                if (n + mz) % 2 == 0 {
                    states.push((mz, n));
                }
            }
        }
        Ok(Self {
            n_qubits,
            cap,
            states,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    fn index(&self, mz: usize, n: usize) -> Option<usize> {
        self.states.binary_search(&(mz, n)).ok()
    }

    /// `J_z + a†a` and `J_x (a + a†)`, so that `H = H_0 + G·X`.
    pub fn parts(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let top = self.n_qubits;
        let j = self.n_qubits as f64 / 2.0;
        let jj = j * (j + 1.0);
        let dim = self.dim();
        let mut h0 = DMatrix::zeros(dim, dim);
        let mut x = DMatrix::zeros(dim, dim);
        for (i, &(mz, n)) in self.states.iter().enumerate() {
            let m = mz as f64 - j;
            h0[(i, i)] = m + n as f64;
            if mz < top {
                let jp = 0.5 * (jj - m * (m + 1.0)).sqrt();
                if let Some(t) = self.index(mz + 1, n + 1) {
                    let e = jp * ((n + 1) as f64).sqrt();
                    x[(t, i)] += e;
                    x[(i, t)] += e;
                }
                if n > 0 {
                    if let Some(t) = self.index(mz + 1, n - 1) {
                        let e = jp * (n as f64).sqrt();
                        x[(t, i)] += e;
                        x[(i, t)] += e;
                    }
                }
            }
        }
        (h0, x)
    }

    pub fn hamiltonian(&self, lambda: f64) -> DMatrix<f64> {
        let (h0, x) = self.parts();
        h0 + x * coupling(self.n_qubits, lambda)
    }

    pub fn interaction(&self) -> DMatrix<f64> {
        let (_, x) = self.parts();
        x / (self.n_qubits as f64).sqrt()
    }
}
