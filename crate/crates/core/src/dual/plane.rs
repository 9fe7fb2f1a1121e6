//! Minimization of a convex, positively homogeneous `h` over the affine
//! plane `⟨y, z⟩ = −1`: damped Newton on the tangential gradient with a
//! finite-difference Hessian.

use alloc::vec;
use alloc::vec::Vec;

use super::sphere::Objective;
use crate::linalg::{dot, lu_solve_vec, norm, orthonormal_complement, Matrix};

#[derive(Debug, Clone)]
pub(crate) struct PlaneMinimum {
    /// Minimizer, on the plane.
    pub z: Vec<f64>,
    /// `h(z)`.
    pub value: f64,
    /// Norm of the tangential gradient at `z`, relative to `‖∇h(z)‖`.
    pub residual: f64,
}

const MAX_ITERS: usize = 200;

/// `y` must be nonzero. `warm` is rescaled onto the plane when it has a
/// negative pairing with `y`.
pub(crate) fn minimize<O: Objective>(obj: &O, y: &[f64], warm: Option<&[f64]>) -> PlaneMinimum {
    let k = y.len();
    let yy = dot(y, y);
    let z0: Vec<f64> = y.iter().map(|v| -v / yy).collect();
    if k == 1 {
        let (value, _) = obj.eval(&z0);
        return PlaneMinimum { z: z0, value, residual: 0.0 };
    }
    let yn = norm(y);
    let unit: Vec<f64> = y.iter().map(|v| v / yn).collect();
    let v = orthonormal_complement(&Matrix::from_columns(k, &[unit]));
    let d = v.cols();
    let lift = |c: &[f64]| -> Vec<f64> {
        let mut z = z0.clone();
        for (j, cj) in c.iter().enumerate() {
            for i in 0..k {
                z[i] += cj * v[(i, j)];
            }
        }
        z
    };
    let tangential = |g: &[f64]| -> Vec<f64> { v.tr_mul_vec(g) };
    let mut c = vec![0.0; d];
    if let Some(w) = warm {
        let p = dot(y, w);
        if p < 0.0 && p.is_finite() {
            let z: Vec<f64> = w.iter().map(|x| -x / p).collect();
            let diff: Vec<f64> = z.iter().zip(&z0).map(|(a, b)| a - b).collect();
            c = v.tr_mul_vec(&diff);
        }
    }
    let mut z = lift(&c);
    let (mut f, g) = obj.eval(&z);
    let mut r = tangential(&g);
    let mut gscale = norm(&g).max(f64::MIN_POSITIVE);
    let mut last_step = f64::INFINITY;
    let mut mu = 0.0;
    let mut stalls = 0;
    let mut it = 0;
    while it < MAX_ITERS {
        it += 1;
        let rn = norm(&r);
        if rn <= 1e-14 * gscale {
            break;
        }
        let zn = norm(&z);
        let eps = (0.5 * last_step).clamp(1e-9 * zn, 1e-3 * zn);
        let mut h = Matrix::zeros(d, d);
        for j in 0..d {
            let mut cp = c.clone();
            let mut cm = c.clone();
            cp[j] += eps;
            cm[j] -= eps;
            let rp = tangential(&obj.eval(&lift(&cp)).1);
            let rm = tangential(&obj.eval(&lift(&cm)).1);
            for i in 0..d {
                h[(i, j)] = (rp[i] - rm[i]) / (2.0 * eps);
            }
        }
        let hs = h.add(&h.transpose()).scaled(0.5);
        let diag_scale = (0..d).map(|i| hs[(i, i)].abs()).fold(0.0, f64::max).max(rn / zn.max(1e-300));
        let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = hs.clone();
            for i in 0..d {
                damped[(i, i)] += mu * diag_scale;
            }
            let step = match lu_solve_vec(&damped, &neg_r) {
                Ok(p) if dot(&p, &neg_r) > 0.0 => p,
                _ => {
                    mu = if mu == 0.0 { 1e-8 } else { mu * 10.0 };
                    continue;
                }
            };
            let mut t = 1.0;
            for _ in 0..30 {
                let ct: Vec<f64> = c.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                let zt = lift(&ct);
                let (ft, gt) = obj.eval(&zt);
                let rt = tangential(&gt);
                let decrease = ft <= f + 1e-4 * t * dot(&r, &step);
                let flat = ft <= f + 1e-15 * f.abs() && norm(&rt) < rn;
                if decrease || flat {
                    last_step = t * norm(&step);
                    c = ct;
                    z = zt;
                    f = ft;
                    gscale = norm(&gt).max(f64::MIN_POSITIVE);
                    r = rt;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                mu *= 0.1;
                if mu < 1e-14 {
                    mu = 0.0;
                }
                break;
            }
            mu = if mu == 0.0 { 1e-8 } else { mu * 10.0 };
        }
        if !accepted {
            break;
        }
        if last_step <= 1e-15 * norm(&z) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    let residual = norm(&r) / gscale;
    PlaneMinimum { z, value: f, residual }
}
