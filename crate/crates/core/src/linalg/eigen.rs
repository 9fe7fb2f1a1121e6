//! Eigenvalues of a real square matrix: Householder reduction to upper
//! Hessenberg form, Francis double-shift QR, then one round of inverse
//! iteration per eigenvalue to certify the residual.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::Matrix;
use crate::error::{Error, Result};
use crate::math;

/// Eigenvalues with multiplicity, and the residual `‖Mv − λv‖ / ‖M‖` of the
/// refined eigenvector that accompanies each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

const MAX_SWEEPS: usize = 60;

pub fn eigenvalues(m: &Matrix) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::Dimension(alloc::format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Spectrum { eigenvalues: Vec::new(), residuals: Vec::new() });
    }
    let mut h = m.clone();
    hessenberg(&mut h);
    let raw = hqr(&mut h)?;
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    let residuals = raw.iter().map(|l| inverse_iteration_residual(m, *l) / scale).collect();
    Ok(Spectrum { eigenvalues: raw, residuals })
}

/// In-place orthogonal reduction to upper Hessenberg form.
fn hessenberg(h: &mut Matrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    for m in 1..n - 1 {
        let scale: f64 = (m..n).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..n).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = math::sqrt(hh);
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let f = (m..n).rev().map(|i| ort[i] * h[(i, j)]).sum::<f64>() / hh;
            for i in m..n {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..n {
            let f = (m..n).rev().map(|j| ort[j] * h[(i, j)]).sum::<f64>() / hh;
            for j in m..n {
                h[(i, j)] -= f * ort[j];
            }
        }
        h[(m, m - 1)] = scale * g;
        for i in m + 1..n {
            h[(i, m - 1)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn hqr(h: &mut Matrix) -> Result<Vec<Complex64>> {
    let n = h.rows() as isize;
    // 1-based view keeps the classic index arithmetic readable.
    let idx = |i: isize, j: isize| ((i - 1) as usize, (j - 1) as usize);
    let mut wr = vec![0.0; n as usize + 1];
    let mut wi = vec![0.0; n as usize + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i - 1).max(1)..=n {
            anorm += h[idx(i, j)].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = h[idx(l - 1, l - 1)].abs() + h[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[idx(l, l - 1)].abs() + s == s {
                    h[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = h[idx(nn, nn)];
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = h[idx(nn - 1, nn - 1)];
            let mut w = h[idx(nn, nn - 1)] * h[idx(nn - 1, nn)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = math::sqrt(q.abs());
                x += t;
                if q >= 0.0 {
                    z = p + if p >= 0.0 { z } else { -z };
                    wr[(nn - 1) as usize] = x + z;
                    wr[nn as usize] = x + z;
                    if z != 0.0 {
                        wr[nn as usize] = x - w / z;
                    }
                    wi[(nn - 1) as usize] = 0.0;
                    wi[nn as usize] = 0.0;
                } else {
                    wr[(nn - 1) as usize] = x + p;
                    wr[nn as usize] = x + p;
                    wi[(nn - 1) as usize] = -z;
                    wi[nn as usize] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_SWEEPS {
                return Err(Error::Numeric(alloc::format!(
                    "QR iteration did not converge after {MAX_SWEEPS} sweeps (active block {l}..{nn}, subdiagonal {:e})",
                    h[idx(nn, nn - 1)]
                )));
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    h[idx(i, i)] -= x;
                }
                let s = h[idx(nn, nn - 1)].abs() + h[idx(nn - 1, nn - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = h[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[idx(m + 1, m)] + h[idx(m, m + 1)];
                q = h[idx(m + 1, m + 1)] - z - rr - ss;
                r = h[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (h[idx(m - 1, m - 1)].abs() + z.abs() + h[idx(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                h[idx(i, i - 2)] = 0.0;
                if i != m + 2 {
                    h[idx(i, i - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k <= nn - 1 {
                if k != m {
                    p = h[idx(k, k - 1)];
                    q = h[idx(k + 1, k - 1)];
                    r = 0.0;
                    if k != nn - 1 {
                        r = h[idx(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let mag = math::sqrt(p * p + q * q + r * r);
                let s = if p >= 0.0 { mag } else { -mag };
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            h[idx(k, k - 1)] = -h[idx(k, k - 1)];
                        }
                    } else {
                        h[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = h[idx(k, j)] + q * h[idx(k + 1, j)];
                        if k != nn - 1 {
                            pp += r * h[idx(k + 2, j)];
                            h[idx(k + 2, j)] -= pp * z;
                        }
                        h[idx(k + 1, j)] -= pp * y;
                        h[idx(k, j)] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * h[idx(i, k)] + y * h[idx(i, k + 1)];
                        if k != nn - 1 {
                            pp += z * h[idx(i, k + 2)];
                            h[idx(i, k + 2)] -= pp * r;
                        }
                        h[idx(i, k + 1)] -= pp * q;
                        h[idx(i, k)] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n as usize).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Runs a few steps of inverse iteration at shift `lambda` and returns the
/// residual `‖Mv − λv‖` of the resulting unit vector.
fn inverse_iteration_residual(m: &Matrix, lambda: Complex64) -> f64 {
    let n = m.rows();
    let scale = m.norm_fro().max(1.0);
    let mut shifted: Vec<Complex64> = m.as_slice().iter().map(|v| Complex64::new(*v, 0.0)).collect();
    for i in 0..n {
        shifted[i * n + i] -= lambda;
    }
    let lu = match complex_lu(shifted, n, f64::EPSILON * scale) {
        Some(lu) => lu,
        None => return f64::INFINITY,
    };
    // deterministic start that is unlikely to be orthogonal to the eigenvector
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64)).collect();
    normalize(&mut v);
    for _ in 0..3 {
        v = complex_solve(&lu, n, &v);
        if !normalize(&mut v) {
            return f64::INFINITY;
        }
    }
    let mut res = 0.0;
    for i in 0..n {
        let mut acc = -lambda * v[i];
        for j in 0..n {
            acc += m[(i, j)] * v[j];
        }
        res += acc.norm_sqr();
    }
    math::sqrt(res)
}

struct ComplexLu {
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

fn complex_lu(mut a: Vec<Complex64>, n: usize, floor: f64) -> Option<ComplexLu> {
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].norm();
        for i in k + 1..n {
            let v = a[i * n + k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !best.is_finite() {
            return None;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        if a[k * n + k].norm() < floor {
            // exactly singular shift: nudge the pivot, inverse iteration still converges
            a[k * n + k] = Complex64::new(floor, 0.0);
        }
        let piv = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            a[i * n + k] = f;
            for j in k + 1..n {
                let akj = a[k * n + j];
                a[i * n + j] -= f * akj;
            }
        }
    }
    Some(ComplexLu { lu: a, perm })
}

fn complex_solve(f: &ComplexLu, n: usize, b: &[Complex64]) -> Vec<Complex64> {
    let mut x: Vec<Complex64> = f.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            let l = f.lu[i * n + j];
            let xj = x[j];
            x[i] -= l * xj;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let u = f.lu[i * n + j];
            let xj = x[j];
            x[i] -= u * xj;
        }
        x[i] /= f.lu[i * n + i];
    }
    x
}

fn normalize(v: &mut [Complex64]) -> bool {
    let s = math::sqrt(v.iter().map(|c| c.norm_sqr()).sum::<f64>());
    if s == 0.0 || !s.is_finite() {
        return false;
    }
    for c in v.iter_mut() {
        *c /= s;
    }
    true
}
