//! Dense Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Desk-scale only: matrices here are at most 1024×1024 (ten qubits), where
//! Jacobi's simplicity and unconditional stability beat anything fancier.
//! Returns A = V·diag(λ)·V† with real eigenvalues and unitary V.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EigenError {
    #[error("jacobi sweep limit reached without convergence")]
    NonConvergence,
}

pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Row-major unitary V whose columns are the eigenvectors: component
    /// `i` of eigenvector `j` is `vectors[i * dim + j]`.
    pub vectors: Vec<Complex64>,
    pub dim: usize,
}

const MAX_SWEEPS: usize = 64;

/// Diagonalize a Hermitian matrix given in row-major order. The caller is
/// responsible for Hermiticity; the strictly lower triangle is ignored in
/// the off-norm but rotations use the stored values as-is.
pub fn hermitian_eigen(matrix: &[Complex64], dim: usize) -> Result<HermitianEigen, EigenError> {
    assert_eq!(matrix.len(), dim * dim, "matrix must be square");
    let mut a = matrix.to_vec();
    let mut v = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        v[i * dim + i] = Complex64::new(1.0, 0.0);
    }
    if dim <= 1 {
        return Ok(HermitianEigen {
            values: a.iter().map(|z| z.re).collect(),
            vectors: v,
            dim,
        });
    }

    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-15 * scale;

    for _sweep in 0..=MAX_SWEEPS {
        let off: f64 = off_norm(&a, dim);
        if off <= tol {
            return Ok(HermitianEigen {
                values: (0..dim).map(|i| a[i * dim + i].re).collect(),
                vectors: v,
                dim,
            });
        }
        for p in 0..dim - 1 {
            for q in p + 1..dim {
                let beta = a[p * dim + q];
                let b = beta.norm();
                if b <= tol / (dim as f64) {
                    continue;
                }
                let phi = beta.im.atan2(beta.re);
                let alpha = a[p * dim + p].re;
                let gamma = a[q * dim + q].re;
                let theta = 0.5 * (2.0 * b).atan2(alpha - gamma);
                let (s, c) = theta.sin_cos();
                let e_pos = Complex64::from_polar(1.0, phi);
                let e_neg = e_pos.conj();

                // Columns: A ← A·J with J mixing columns p and q.
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp + s * e_neg * akq;
                    a[k * dim + q] = -s * e_pos * akp + c * akq;
                }
                // Rows: A ← J†·A.
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk + s * e_pos * aqk;
                    a[q * dim + k] = -s * e_neg * apk + c * aqk;
                }
                // Accumulate V ← V·J.
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp + s * e_neg * vkq;
                    v[k * dim + q] = -s * e_pos * vkp + c * vkq;
                }
            }
        }
    }
    Err(EigenError::NonConvergence)
}

fn off_norm(a: &[Complex64], dim: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                sum += a[i * dim + j].norm_sqr();
            }
        }
    }
    sum.sqrt()
}
