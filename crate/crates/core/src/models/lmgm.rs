//! Lipkin-Meshkov-Glick model in the even-parity `J = N/2` sector.
//!
//! With all-to-all bonds `-(λ+1)/N Σ_{i<j} σ_x^i σ_x^j` and field `-Σ σ_z`,
//! the Hamiltonian is `-2J_z - (2(λ+1)/N) J_x² + (λ+1)/2`; the critical point
//! sits at `λ = 0`. In the basis `m = J, J-2, …` it is tridiagonal.

use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;

pub type BandedHamiltonian = SymTridiagonal;

/// `m` values of the reduced basis, descending from `J = N/2`.
pub fn basis_m(n_qubits: usize) -> Vec<i64> {
    let j = (n_qubits / 2) as i64;
    (0..=n_qubits / 2).map(|i| j - 2 * i as i64).collect()
}

pub fn dimension(n_qubits: usize) -> usize {
    n_qubits / 2 + 1
}

fn check(n_qubits: usize) -> Result<()> {
    if n_qubits < 2 || !n_qubits.is_multiple_of(2) {
        return Err(Error::Model(format!(
            "LMGM needs an even N ≥ 2, got {n_qubits}"
        )));
    }
    Ok(())
}

/// `J_x²` in the reduced basis: diagonal and the `m ↔ m-2` band.
fn jx2(n_qubits: usize) -> (Vec<f64>, Vec<f64>) {
    let j = n_qubits as f64 / 2.0;
    let jj = j * (j + 1.0);
    let ms = basis_m(n_qubits);
    let diag = ms.iter().map(|&m| 0.5 * (jj - (m * m) as f64)).collect();
    let off = ms[..ms.len() - 1]
        .iter()
        .map(|&m| {
            let m = m as f64;
            0.25 * ((jj - m * (m - 1.0)) * (jj - (m - 1.0) * (m - 2.0))).sqrt()
        })
        .collect();
    (diag, off)
}

pub fn build_lmgm(n_qubits: usize, lambda: f64) -> Result<BandedHamiltonian> {
    check(n_qubits)?;
    let g = 2.0 * (lambda + 1.0) / n_qubits as f64;
    let shift = 0.5 * (lambda + 1.0);
    let (d2, o2) = jx2(n_qubits);
    let diag = basis_m(n_qubits)
        .iter()
        .zip(d2)
        .map(|(&m, x)| -2.0 * m as f64 - g * x + shift)
        .collect();
    let off = o2.into_iter().map(|x| -g * x).collect();
    Ok(SymTridiagonal::new(diag, off))
}

/// `∂H/∂λ = -(2/N) J_x² + ½`.
pub fn lmgm_interaction(n_qubits: usize) -> Result<BandedHamiltonian> {
    check(n_qubits)?;
    let c = 2.0 / n_qubits as f64;
    let (d2, o2) = jx2(n_qubits);
    Ok(SymTridiagonal::new(
        d2.into_iter().map(|x| -c * x + 0.5).collect(),
        o2.into_iter().map(|x| -c * x).collect(),
    ))
}
