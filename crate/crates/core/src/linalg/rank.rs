//! Column-pivoted Gram–Schmidt: numerical rank, orthonormal bases and
//! complements, and the block Krylov chain of a pair `(A, B)`.

use alloc::vec::Vec;

use super::{axpy, dot, norm, Matrix};

/// Orthonormal description of the column span of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpace {
    pub rank: usize,
    /// `rows × rank`, orthonormal columns spanning the range.
    pub basis: Matrix,
    /// `rows × (rows − rank)`, orthonormal columns spanning the orthogonal
    /// complement of the range.
    pub complement: Matrix,
}

impl ColumnSpace {
    /// Orthogonal projector onto the range.
    pub fn projector(&self) -> Matrix {
        self.basis.matmul(&self.basis.transpose())
    }
}

/// Rank of the column span: the number of pivoted orthogonalization steps
/// whose residual exceeds `tol` times the largest column norm.
pub fn numerical_rank(cols: &Matrix, tol: f64) -> ColumnSpace {
    let n = cols.rows();
    let scale = cols.columns().iter().map(|c| norm(c)).fold(0.0, f64::max);
    let basis = if scale == 0.0 { Vec::new() } else { extend_basis(&[], cols.columns(), tol * scale) };
    let basis = Matrix::from_columns(n, &basis);
    let complement = orthonormal_complement(&basis);
    ColumnSpace { rank: basis.cols(), basis, complement }
}

/// Orthonormal basis of the complement of the span of `basis`, whose
/// columns are assumed orthonormal.
pub fn orthonormal_complement(basis: &Matrix) -> Matrix {
    let n = basis.rows();
    let existing = basis.columns();
    let mut candidates = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = alloc::vec![0.0; n];
        e[i] = 1.0;
        candidates.push(e);
    }
    let mut found = Vec::new();
    let mut all = existing.clone();
    for _ in existing.len()..n {
        // pick the unit vector with the largest residual each time
        let mut best: Option<(f64, Vec<f64>)> = None;
        for c in &candidates {
            let r = orthogonalize(c, &all);
            let rn = norm(&r);
            if best.as_ref().is_none_or(|b| rn > b.0) {
                best = Some((rn, r));
            }
        }
        let Some((rn, r)) = best else { break };
        if rn <= 1e-8 {
            break;
        }
        let v: Vec<f64> = r.iter().map(|x| x / rn).collect();
        all.push(v.clone());
        found.push(v);
    }
    Matrix::from_columns(n, &found)
}

/// Block Krylov chain `H_0, H_1, …, H_{n−1}`: `H_0` is an orthonormal basis
/// of `span B`, and `H_j` is an orthonormal basis of the part of
/// `span{B, …, AʲB}` orthogonal to `span{B, …, Aʲ⁻¹B}`.
///
/// Columns whose residual falls below `tol · max(‖A‖_F, ‖B‖_F)` are treated
/// as dependent. Levels past the controllable subspace come back empty
/// (`n × 0`).
pub fn krylov_chain(a: &Matrix, b: &Matrix, tol: f64) -> Vec<Matrix> {
    let n = a.rows();
    let bscale = b.columns().iter().map(|c| norm(c)).fold(0.0, f64::max);
    let threshold = tol * a.norm_fro().max(bscale).max(f64::MIN_POSITIVE);
    let mut chain = Vec::with_capacity(n);
    let mut all: Vec<Vec<f64>> = Vec::new();
    let h0 = if bscale == 0.0 { Vec::new() } else { extend_basis(&all, b.columns(), tol * bscale) };
    all.extend(h0.iter().cloned());
    let mut prev = h0.clone();
    chain.push(Matrix::from_columns(n, &h0));
    for _ in 1..n {
        let images: Vec<Vec<f64>> = prev.iter().map(|h| a.mul_vec(h)).collect();
        let next = extend_basis(&all, images, threshold);
        all.extend(next.iter().cloned());
        chain.push(Matrix::from_columns(n, &next));
        prev = next;
    }
    chain
}

/// Gram–Schmidt with reorthogonalization and column pivoting. Returns new
/// orthonormal vectors extending `existing` that span `candidates` modulo
/// `existing`, keeping only residuals above `threshold`.
fn extend_basis(existing: &[Vec<f64>], mut candidates: Vec<Vec<f64>>, threshold: f64) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = existing.to_vec();
    for c in candidates.iter_mut() {
        *c = orthogonalize(c, &all);
    }
    let mut out = Vec::new();
    while !candidates.is_empty() {
        let (idx, best) = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (i, norm(c)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= threshold {
            break;
        }
        let c = candidates.swap_remove(idx);
        let v: Vec<f64> = orthogonalize(&c, &all);
        let vn = norm(&v);
        if vn <= threshold {
            continue;
        }
        let v: Vec<f64> = v.iter().map(|x| x / vn).collect();
        for r in candidates.iter_mut() {
            let p = dot(&v, r);
            axpy(-p, &v, r);
        }
        all.push(v.clone());
        out.push(v);
    }
    out
}

/// Removes the components along the orthonormal `basis`, twice.
fn orthogonalize(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let p = dot(q, &r);
            axpy(-p, q, &mut r);
        }
    }
    r
}
