//! Transverse-field Ising ring.
//!
//! After Jordan-Wigner and Fourier transforms the even-parity sector splits
//! into `N/2` independent two-level problems
//! `H_k = σ_z + (1-λ)(cos k σ_z + sin k σ_x)`, `k = π(2n+1)/N`.
//! The equivalent spin ring is `H = -½ Σ_i [σ_z^i + (1-λ) σ_x^i σ_x^{i+1}]`
//! restricted to even parity; it is provided for direct small-`N` checks.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Momenta `π(2n+1)/N`, `n = 0..N/2`.
pub fn momenta(n_qubits: usize) -> Vec<f64> {
    (0..n_qubits / 2)
        .map(|n| PI * (2 * n + 1) as f64 / n_qubits as f64)
        .collect()
}

/// The momentum whose block carries the smallest gap, `π(N-1)/N`.
pub fn critical_momentum(n_qubits: usize) -> f64 {
    PI * (n_qubits - 1) as f64 / n_qubits as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfimBlock {
    pub k: f64,
    pub matrix: [[f64; 2]; 2],
}

impl TfimBlock {
    pub fn trace(&self) -> f64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    /// Block eigenvalues `∓ε_k`, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let e = self.matrix[0][0].hypot(self.matrix[0][1]);
        [-e, e]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                self.matrix[0][0],
                self.matrix[0][1],
                self.matrix[1][0],
                self.matrix[1][1],
            ],
        )
    }
}

fn check_momentum(n_qubits: usize, k: f64) -> Result<()> {
    let n = k * n_qubits as f64 / PI;
    let idx = ((n - 1.0) / 2.0).round();
    let on_grid =
        idx >= 0.0 && (idx as usize) < n_qubits / 2 && (n - (2.0 * idx + 1.0)).abs() < 1e-9;
    if on_grid {
        Ok(())
    } else {
        Err(Error::OffGridMomentum { k, n_qubits })
    }
}

pub fn build_tfim_block(n_qubits: usize, k: f64, lambda: f64) -> Result<TfimBlock> {
    check_momentum(n_qubits, k)?;
    let g = 1.0 - lambda;
    let a = 1.0 + g * k.cos();
    let b = g * k.sin();
    Ok(TfimBlock {
        k,
        matrix: [[a, b], [b, -a]],
    })
}

/// `∂H_k/∂λ = -(cos k σ_z + sin k σ_x)`.
pub fn tfim_block_interaction(k: f64) -> [[f64; 2]; 2] {
    let (s, c) = k.sin_cos();
    [[-c, -s], [-s, c]]
}

/// Closed-form gap between the two lowest even-parity levels.
pub fn tfim_gap_exact(n_qubits: usize, lambda: f64) -> f64 {
    2.0 * gap_denominator(n_qubits, lambda).sqrt()
}

/// Closed-form `|χ_{1,0}|` between the two lowest even-parity levels.
pub fn tfim_chi_exact(n_qubits: usize, lambda: f64) -> f64 {
    let s = (PI / n_qubits as f64).sin();
    0.5 * s / gap_denominator(n_qubits, lambda)
}

fn gap_denominator(n_qubits: usize, lambda: f64) -> f64 {
    let (s, c) = (PI / n_qubits as f64).sin_cos();
    (lambda + c - 1.0).powi(2) + s * s
}

/// Even-parity sector of the spin ring, in the computational basis.
///
/// States are bit strings with an even number of flipped (down) spins; the
/// index list maps reduced indices to bit patterns.
#[derive(Debug, Clone)]
pub struct SpinRing {
    pub n_qubits: usize,
    pub states: Vec<u32>,
    lookup: Vec<u32>,
}

impl SpinRing {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if !(2..=24).contains(&n_qubits) || !n_qubits.is_multiple_of(2) {
            return Err(Error::Model(format!(
                "spin ring needs an even N in 2..=24, got {n_qubits}"
            )));
        }
        let full = 1u32 << n_qubits;
        let states: Vec<u32> = (0..full).filter(|s| s.count_ones() % 2 == 0).collect();
        let mut lookup = vec![u32::MAX; full as usize];
        for (i, &s) in states.iter().enumerate() {
            lookup[s as usize] = i as u32;
        }
        Ok(Self {
            n_qubits,
            states,
            lookup,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// `-½ Σ σ_z` diagonal and the bond term `-½ Σ σ_x σ_x` as separate parts.
    fn parts(&self) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.n_qubits;
        let dim = self.dim();
        let mut field = vec![0.0; dim];
        let mut bonds = DMatrix::zeros(dim, dim);
        for (i, &s) in self.states.iter().enumerate() {
            // bit set = spin down
            let down = s.count_ones() as f64;
            field[i] = -0.5 * (n as f64 - 2.0 * down);
            for site in 0..n {
                let next = (site + 1) % n;
                let flipped = s ^ (1 << site) ^ (1 << next);
                let j = self.lookup[flipped as usize] as usize;
                bonds[(j, i)] += -0.5;
            }
        }
        (field, bonds)
    }

    pub fn hamiltonian(&self, lambda: f64) -> DMatrix<f64> {
        let (field, bonds) = self.parts();
        let mut h = bonds * (1.0 - lambda);
        for (i, f) in field.iter().enumerate() {
            h[(i, i)] += f;
        }
        h
    }

    /// `∂H/∂λ = ½ Σ σ_x σ_x`.
    pub fn interaction(&self) -> DMatrix<f64> {
        let (_, bonds) = self.parts();
        -bonds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lowest_dense;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn block_examples() {
        let b = build_tfim_block(4, FRAC_PI_4, 1.0).unwrap();
        assert_eq!(b.matrix, [[1.0, 0.0], [0.0, -1.0]]);

        let b = build_tfim_block(2, FRAC_PI_2, 0.0).unwrap();
        assert!(close(b.matrix[0][0], 1.0, 1e-15));
        assert!(close(b.matrix[0][1], 1.0, 1e-15));
        assert!(close(b.matrix[1][1], -1.0, 1e-15));

        let b = build_tfim_block(4, FRAC_PI_4, -1.0).unwrap();
        assert!(close(b.matrix[0][0], 1.0 + SQRT_2, 1e-14));
        assert!(close(b.matrix[0][1], SQRT_2, 1e-14));
        assert!(close(b.matrix[1][1], -1.0 - SQRT_2, 1e-14));
        assert_eq!(b.trace(), 0.0);
    }

    #[test]
    fn off_grid_momentum_is_rejected() {
        assert!(build_tfim_block(4, FRAC_PI_2, 0.0).is_err());
        assert!(build_tfim_block(4, 5.0 * FRAC_PI_4, 0.0).is_err());
        assert!(build_tfim_block(4, 3.0 * FRAC_PI_4, 0.0).is_ok());
    }

    #[test]
    fn gap_examples() {
        assert!(close(tfim_gap_exact(4, 0.0), 1.530734, 1e-6));
        assert!(close(tfim_gap_exact(4, 0.0), 4.0 * (PI / 8.0).sin(), 1e-14));
        let lmin = 1.0 - FRAC_PI_4.cos();
        assert!(close(tfim_gap_exact(4, lmin), SQRT_2, 1e-14));
        assert!(close(tfim_gap_exact(1_000_000, 0.5), 1.0, 1e-5));
    }

    #[test]
    fn chi_examples() {
        let lmin = 1.0 - FRAC_PI_4.cos();
        assert!(close(
            tfim_chi_exact(4, lmin),
            1.0 / (2.0 * FRAC_PI_4.sin()),
            1e-14
        ));
        assert!(close(tfim_chi_exact(4, 0.0), 0.603553, 1e-6));
        assert!(close(tfim_chi_exact(2, 10.0), 0.5 / 82.0, 1e-15));
    }

    /// Brute-force oracle: eigenvector derivative of the critical block by
    /// central differences of the dense 2×2 eigenvectors.
    #[test]
    fn chi_matches_eigenvector_derivative() {
        for &(n, lam) in &[(2usize, 10.0), (4, 0.0), (16, 0.1), (80, -0.3)] {
            let k = critical_momentum(n);
            let vecs = |l: f64| {
                let b = build_tfim_block(n, k, l).unwrap();
                lowest_dense(&b.to_dense(), 2).unwrap().vectors
            };
            let h = 1e-5;
            let v0 = vecs(lam);
            let mut vp = vecs(lam + h);
            let mut vm = vecs(lam - h);
            for c in 0..2 {
                if vp.column(c).dot(&v0.column(c)) < 0.0 {
                    vp.column_mut(c).neg_mut();
                }
                if vm.column(c).dot(&v0.column(c)) < 0.0 {
                    vm.column_mut(c).neg_mut();
                }
            }
            let d = (vp.column(0) - vm.column(0)) / (2.0 * h);
            let chi = -v0.column(1).dot(&d);
            let exact = tfim_chi_exact(n, lam);
            assert!(
                (chi.abs() - exact).abs() < 1e-7 * exact.max(1.0),
                "n={n} {chi} {exact}"
            );
        }
    }

    #[test]
    fn critical_block_carries_the_gap() {
        for &n in &[4usize, 16, 80] {
            for &lam in &[-1.0, -0.2, 0.0, 0.05, 1.0] {
                let b = build_tfim_block(n, critical_momentum(n), lam).unwrap();
                let [lo, hi] = b.eigenvalues();
                assert!(close(hi - lo, tfim_gap_exact(n, lam), 1e-12));
            }
        }
    }

    #[test]
    fn ring_spectrum_matches_blocks() {
        for &n in &[4usize, 6, 8] {
            let ring = SpinRing::new(n).unwrap();
            for &lam in &[-1.0, -0.3, 0.0, 0.4, 1.0] {
                let h = ring.hamiltonian(lam);
                assert!(crate::linalg::asymmetry(&h) < 1e-14);
                let e = lowest_dense(&h, 2).unwrap().values;
                let e0: f64 = momenta(n)
                    .iter()
                    .map(|&k| build_tfim_block(n, k, lam).unwrap().eigenvalues()[0])
                    .sum();
                assert!(close(e[0], e0, 1e-10), "n={n} λ={lam}: {} vs {e0}", e[0]);
                assert!(close(e[1] - e[0], tfim_gap_exact(n, lam), 1e-10));
            }
        }
    }
}
