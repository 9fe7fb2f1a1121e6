use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};

/// Solves `A X = B` by LU factorization with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::Dimension(alloc::format!(
            "lu_solve: A is {}x{}, B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let nrhs = b.cols();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= f64::EPSILON * scale * 1e-3 {
            return Err(Error::Numeric(alloc::format!("singular matrix at pivot {k}")));
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            for j in 0..nrhs {
                let t = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = t;
            }
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            if f == 0.0 {
                continue;
            }
            lu[(i, k)] = f;
            for j in k + 1..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            for j in 0..nrhs {
                x[(i, j)] -= f * x[(k, j)];
            }
        }
    }
    for j in 0..nrhs {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for c in i + 1..n {
                s -= lu[(i, c)] * x[(c, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn lu_solve_vec(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let rhs = Matrix::new(b.len(), 1, b.to_vec())?;
    Ok(lu_solve(a, &rhs)?.into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoting_system() {
        let a = Matrix::from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let x = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let got = lu_solve_vec(&a, &b).unwrap();
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_an_error() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(lu_solve_vec(&a, &[1.0, 1.0]), Err(Error::Numeric(_))));
    }
}
