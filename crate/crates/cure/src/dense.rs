//! Dense symmetric linear algebra for the test oracle: Cholesky solve with an
//! explicit pivot threshold and a cyclic Jacobi eigensolver.

use crate::error::{Error, Result};

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.n)) {
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        }
        y
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact (bitwise) symmetry check.
    pub fn is_bitwise_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j).to_bits() != self.get(j, i).to_bits() {
                    return false;
                }
            }
        }
        true
    }
}

/// Solve A x = b for symmetric positive definite A by Cholesky factorization.
///
/// Fails with a singular-system error when a pivot drops below
/// `1e-14 * max|A_ij|`.
pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n();
    assert_eq!(b.len(), n);
    let threshold = 1e-14 * a.max_abs();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum < threshold {
                    return Err(Error::SingularMatrix {
                        pivot: sum,
                        threshold,
                    });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // forward: L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // backward: L^T x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Ok(x)
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
pub fn jacobi_eigenvalues(a: &DenseMatrix, tol: f64, max_sweeps: usize) -> Vec<f64> {
    let n = a.n();
    let mut d = a.data.clone();
    if n == 1 {
        return d;
    }
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(d[i * n + j].abs());
            }
        }
        let scale = (0..n).fold(0.0f64, |m, i| m.max(d[i * n + i].abs())).max(1.0);
        if off <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = d[p * n + q];
                if apq.abs() <= tol * scale * 1e-3 {
                    continue;
                }
                let app = d[p * n + p];
                let aqq = d[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    if i != p && i != q {
                        let dip = d[i * n + p];
                        let diq = d[i * n + q];
                        d[i * n + p] = c * dip - s * diq;
                        d[p * n + i] = d[i * n + p];
                        d[i * n + q] = s * dip + c * diq;
                        d[q * n + i] = d[i * n + q];
                    }
                }
                d[p * n + p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                d[q * n + q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                d[p * n + q] = 0.0;
                d[q * n + p] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| d[i * n + i]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

/// Smallest eigenvalue of a symmetric matrix (Jacobi, default tolerances).
pub fn min_eigenvalue(a: &DenseMatrix) -> f64 {
    jacobi_eigenvalues(a, 1e-12, 100)[0]
}
