//! Dense symmetric matrices and a cyclic Jacobi eigensolver.
//!
//! The matrices here stay small (n up to a few thousand), so Jacobi rotations
//! are accurate and fast enough. Tolerance: the off-diagonal Frobenius norm
//! must fall below `1e-12` times the Frobenius norm of the input, with a cap
//! of 100 sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix. Only one triangle is stored; `get`/`set` mirror
/// automatically, so `a[i][j] == a[j][i]` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    /// Row-major upper triangle (including diagonal), n*(n+1)/2 entries.
    tri: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, tri: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tri[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.tri[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.tri[k] += v;
    }

    /// `self += w * v v^T`.
    pub fn add_scaled_outer(&mut self, v: &[f64], w: f64) {
        assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            for j in i..self.n {
                self.add(i, j, w * v[i] * v[j]);
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.tri {
            *v *= c;
        }
    }

    /// `self - other`, entrywise.
    #[must_use]
    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        let tri = self.tri.iter().zip(&other.tri).map(|(a, b)| a - b).collect();
        SymMatrix { n: self.n, tri }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                s += v * v;
            }
        }
        s.sqrt()
    }

    /// `A v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Eigendecomposition of a symmetric matrix.
pub struct EigenDecomposition {
    /// Eigenvalues, sorted ascending.
    pub values: Vec<f64>,
    /// `columns[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Full eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenDecomposition> {
    if a.tri.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let n = a.n;
    let mut m = a.to_dense();
    // v starts as the identity and accumulates the rotations.
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let fro = a.frobenius();
    let tol = JACOBI_TOL * fro;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[i][j] * m[i][j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p][p];
                let aqq = m[q][q];
                let tau = (aqq - app) / (2.0 * apq);
                // Smaller-magnitude root for a stable rotation angle.
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());

    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    Ok(EigenDecomposition { values, vectors })
}
