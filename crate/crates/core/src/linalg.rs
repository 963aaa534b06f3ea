//! Real symmetric eigensolvers for the reduced Hamiltonians.
//!
//! The LMGM matrix is tridiagonal; its lowest levels come from Sturm-sequence
//! bisection followed by inverse iteration, which is `O(d)` per level and
//! keeps sizes of several thousand states cheap. Everything else goes through
//! a dense symmetric QR solve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Lowest eigenpairs, energies ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric tridiagonal matrix: `diag[i]` and `off[i]` coupling `i ↔ i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length");
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.off.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `sigma`.
    fn sturm_count(&self, sigma: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - sigma;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let e = self.off[i - 1];
            q = self.diag[i] - sigma - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Lowest `k` eigenpairs.
    pub fn lowest(&self, k: usize) -> Result<Eigenpairs> {
        let n = self.dim();
        if k > n {
            return Err(Error::TooManyLevels {
                requested: k,
                dimension: n,
            });
        }
        if n == 1 {
            return Ok(Eigenpairs {
                values: vec![self.diag[0]],
                vectors: DMatrix::from_element(1, 1, 1.0),
            });
        }
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(f64::MIN_POSITIVE);
        let max_off = self.off.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let pivmin = f64::MIN_POSITIVE.max(max_off * max_off * f64::EPSILON * f64::EPSILON);
        let tol = 4.0 * f64::EPSILON * scale;

        let mut values = Vec::with_capacity(k);
        let mut lower_bound = glo - tol;
        for i in 0..k {
            let mut lo = lower_bound;
            let mut hi = ghi + tol;
            for _ in 0..200 {
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.sturm_count(mid, pivmin) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let value = 0.5 * (lo + hi);
            values.push(value);
            lower_bound = lo;
        }

        let mut vectors = DMatrix::zeros(n, k);
        let cluster_gap = 1e-7 * scale;
        for i in 0..k {
            // Vectors of nearby eigenvalues are kept orthogonal explicitly.
            let mut cluster_start = i;
            while cluster_start > 0 && values[i] - values[cluster_start - 1] < cluster_gap {
                cluster_start -= 1;
            }
            let v = self.inverse_iteration(values[i], scale, i, &vectors, cluster_start..i)?;
            vectors.set_column(i, &v);
        }
        Ok(Eigenpairs { values, vectors })
    }

    fn inverse_iteration(
        &self,
        value: f64,
        scale: f64,
        seed: usize,
        done: &DMatrix<f64>,
        cluster: std::ops::Range<usize>,
    ) -> Result<DVector<f64>> {
        let n = self.dim();
        let lu = TridiagonalLu::factor(self, value, f64::EPSILON * scale);
        // Deterministic, generic start vector.
        let mut x = DVector::from_fn(n, |j, _| {
            1.0 + 0.5 * (((j * 7919 + seed * 104729) % 1013) as f64 / 1013.0)
        });
        for _ in 0..4 {
            lu.solve_in_place(x.as_mut_slice());
            for c in cluster.clone() {
                let proj = done.column(c).dot(&x);
                x.axpy(-proj, &done.column(c), 1.0);
            }
            let norm = x.norm();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::Eigensolver {
                    lambda: f64::NAN,
                    reason: format!("inverse iteration broke down for eigenvalue {value}"),
                });
            }
            x /= norm;
        }
        Ok(x)
    }
}

/// Gaussian elimination with partial pivoting for `T - σI`.
struct TridiagonalLu {
    /// Upper factor: main diagonal, first and second super-diagonals.
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    /// Multipliers and whether rows `i`, `i+1` were swapped.
    l: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &SymTridiagonal, sigma: f64, tiny: f64) -> Self {
        let n = t.dim();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - sigma).collect();
        let mut du: Vec<f64> = t.off.clone();
        let dl: Vec<f64> = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                let piv = if d[i].abs() < tiny { tiny } else { d[i] };
                d[i] = piv;
                let f = dl[i] / piv;
                l[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                // swap rows i and i+1
                let f = d[i] / dl[i];
                swapped[i] = true;
                l[i] = f;
                d[i] = dl[i];
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
            }
        }
        if d[n - 1].abs() < tiny {
            d[n - 1] = tiny;
        }
        Self {
            u0: d,
            u1: du,
            u2: du2,
            l,
            swapped,
        }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.u0.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
                b[i + 1] -= self.l[i] * b[i];
            } else {
                b[i + 1] -= self.l[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * b[i + 2];
            }
            b[i] = acc / self.u0[i];
        }
    }
}

/// Lowest `k` eigenpairs of a dense real symmetric matrix.
pub fn lowest_dense(m: &DMatrix<f64>, k: usize) -> Result<Eigenpairs> {
    let n = m.nrows();
    if k > n {
        return Err(Error::TooManyLevels {
            requested: k,
            dimension: n,
        });
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver {
            lambda: f64::NAN,
            reason: "non-finite eigenvalue from dense solver".into(),
        });
    }
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigenpairs { values, vectors })
}

/// Largest absolute deviation from symmetry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
