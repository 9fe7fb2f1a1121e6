//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degrees 3 through 13, Higham's selection thresholds).

use super::{lu_solve, Matrix};
use crate::error::{Error, Result};
use crate::math;

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which each approximant meets double precision.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068e0;
const THETA13: f64 = 5.371920351148152e0;

/// Returns `e^{M t}`.
pub fn mat_exp(m: &Matrix, t: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension(alloc::format!(
            "mat_exp needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !t.is_finite() {
        return Err(Error::Domain(alloc::format!("mat_exp time {t} is not finite")));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let a = m.scaled(t);
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    if norm <= THETA3 {
        return pade_low(&a, &PADE3);
    }
    if norm <= THETA5 {
        return pade_low(&a, &PADE5);
    }
    if norm <= THETA7 {
        return pade_low(&a, &PADE7);
    }
    if norm <= THETA9 {
        return pade_low(&a, &PADE9);
    }
    let s = math::ceil(math::log2(norm / THETA13)).max(0.0) as i32;
    let a = a.scaled(math::pow(2.0, -(s as f64)));
    let mut r = pade13(&a)?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let n = a.rows();
    let a2 = a.matmul(a);
    let mut even = Matrix::identity(n).scaled(b[0]);
    let mut odd = Matrix::identity(n).scaled(b[1]);
    let mut power = Matrix::identity(n);
    let mut k = 2;
    while k < b.len() {
        power = power.matmul(&a2);
        even = even.add(&power.scaled(b[k]));
        if k + 1 < b.len() {
            odd = odd.add(&power.scaled(b[k + 1]));
        }
        k += 2;
    }
    let u = a.matmul(&odd);
    finish(&u, &even)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let b = &PADE13;
    let id = Matrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let inner_u = a6.scaled(b[13]).add(&a4.scaled(b[11])).add(&a2.scaled(b[9]));
    let u = a.matmul(
        &a6.matmul(&inner_u)
            .add(&a6.scaled(b[7]))
            .add(&a4.scaled(b[5]))
            .add(&a2.scaled(b[3]))
            .add(&id.scaled(b[1])),
    );
    let inner_v = a6.scaled(b[12]).add(&a4.scaled(b[10])).add(&a2.scaled(b[8]));
    let v = a6
        .matmul(&inner_v)
        .add(&a6.scaled(b[6]))
        .add(&a4.scaled(b[4]))
        .add(&a2.scaled(b[2]))
        .add(&id.scaled(b[0]));
    finish(&u, &v)
}

/// `(V − U)⁻¹ (V + U)`.
fn finish(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    lu_solve(&v.sub(u), &v.add(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        a.sub(b).max_abs() <= tol * b.max_abs().max(1.0)
    }

    #[test]
    fn zero_time_is_identity() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(mat_exp(&m, 0.0).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn rotation_generator() {
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        for &t in &[0.01, 0.3, 1.0, 2.5, 7.0, 31.0] {
            let (s, c) = (math::sin(t), math::cos(t));
            let expect = Matrix::from_rows(&[&[c, s], &[-s, c]]);
            assert!(close(&mat_exp(&m, t).unwrap(), &expect, 1e-13), "t = {t}");
        }
    }

    #[test]
    fn nilpotent_series_terminates() {
        let m = Matrix::from_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        let t = 3.0;
        let expect = Matrix::from_rows(&[&[1.0, t, t * t / 2.0], &[0.0, 1.0, t], &[0.0, 0.0, 1.0]]);
        assert!(close(&mat_exp(&m, t).unwrap(), &expect, 1e-14));
    }

    #[test]
    fn diagonal_entries() {
        let m = Matrix::diag(&[-1.0, 0.5, -20.0]);
        let e = mat_exp(&m, 2.0).unwrap();
        for (i, l) in [-1.0f64, 0.5, -20.0].iter().enumerate() {
            let x = libm::exp(l * 2.0);
            assert!((e[(i, i)] - x).abs() <= 1e-13 * x.max(1e-300), "{i}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(mat_exp(&Matrix::zeros(2, 3), 1.0), Err(Error::Dimension(_))));
        assert!(matches!(mat_exp(&Matrix::identity(2), f64::INFINITY), Err(Error::Domain(_))));
    }
}
