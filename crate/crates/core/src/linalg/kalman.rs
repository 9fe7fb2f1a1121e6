//! Orthogonal controllability decomposition.

use alloc::vec::Vec;

use super::{krylov_chain, orthonormal_complement, Matrix};

/// `P A Pᵀ = [[A1, A2], [0, A3]]`, `P B = [[B1], [0]]` with `P` orthogonal and
/// its first `k` rows spanning the controllable subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanForm {
    pub p: Matrix,
    pub a1: Matrix,
    pub a2: Matrix,
    pub a3: Matrix,
    pub b1: Matrix,
    pub k: usize,
    /// Largest entry of the lower-left block of `P A Pᵀ` before it was zeroed.
    pub lower_left_residual: f64,
    /// Largest entry of the lower block of `P B` before it was zeroed.
    pub lower_b_residual: f64,
}

impl KalmanForm {
    /// Orthonormal basis of the controllable subspace (columns, `n × k`).
    pub fn controllable_basis(&self) -> Matrix {
        self.p.block(0, 0, self.k, self.p.cols()).transpose()
    }

    /// Orthonormal basis of the uncontrollable complement (`n × (n − k)`).
    pub fn uncontrollable_basis(&self) -> Matrix {
        let n = self.p.cols();
        self.p.block(self.k, 0, n - self.k, n).transpose()
    }

    /// Reassembles `P A Pᵀ` from the blocks.
    pub fn block_form(&self) -> Matrix {
        let n = self.p.cols();
        let k = self.k;
        let mut m = Matrix::zeros(n, n);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = self.a1[(i, j)];
            }
            for j in k..n {
                m[(i, j)] = self.a2[(i, j - k)];
            }
        }
        for i in k..n {
            for j in k..n {
                m[(i, j)] = self.a3[(i - k, j - k)];
            }
        }
        m
    }
}

/// Splits the state space into the controllable subspace
/// `span{B, AB, …, Aⁿ⁻¹B}` and its orthogonal complement.
pub fn kalman_decompose(a: &Matrix, b: &Matrix, tol: f64) -> KalmanForm {
    let n = a.rows();
    let chain = krylov_chain(a, b, tol);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for h in &chain {
        cols.extend(h.columns());
    }
    let k = cols.len();
    let basis = Matrix::from_columns(n, &cols);
    let comp = orthonormal_complement(&basis);
    let p = Matrix::hstack(&[&basis, &comp]).transpose();
    let pap = p.matmul(a).matmul(&p.transpose());
    let pb = p.matmul(b);
    let lower_left_residual = pap.block(k, 0, n - k, k).max_abs();
    let lower_b_residual = pb.block(k, 0, n - k, b.cols()).max_abs();
    KalmanForm {
        a1: pap.block(0, 0, k, k),
        a2: pap.block(0, k, k, n - k),
        a3: pap.block(k, k, n - k, n - k),
        b1: pb.block(0, 0, k, b.cols()),
        p,
        k,
        lower_left_residual,
        lower_b_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controllable_pair_is_trivial() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let b = Matrix::from_rows(&[&[0.0], &[1.0]]);
        let f = kalman_decompose(&a, &b, 1e-10);
        assert_eq!(f.k, 2);
        assert_eq!(f.a3.rows(), 0);
    }

    #[test]
    fn diagonal_with_one_input() {
        let a = Matrix::diag(&[1.0, 2.0]);
        let b = Matrix::from_rows(&[&[1.0], &[0.0]]);
        let f = kalman_decompose(&a, &b, 1e-10);
        assert_eq!(f.k, 1);
        assert!((f.a1[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((f.a3[(0, 0)] - 2.0).abs() < 1e-15);
        assert!(f.lower_left_residual < 1e-15);
    }
}
