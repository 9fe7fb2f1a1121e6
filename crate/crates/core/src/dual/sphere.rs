//! Multistart descent on the unit sphere for a function with a gradient.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{axpy, dot, norm, normalized, orthonormal_complement, Matrix};
use crate::math;

/// Anything that returns a value and gradient at a point.
pub(crate) trait Objective {
    fn dim(&self) -> usize;
    fn eval(&self, z: &[f64]) -> (f64, Vec<f64>);
    fn value(&self, z: &[f64]) -> f64 {
        self.eval(z).0
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SphereResult {
    pub value: f64,
    pub point: Vec<f64>,
    /// Polished end points of the most promising restarts.
    pub finalists: Vec<(f64, Vec<f64>)>,
}

const SCREEN_ITERS: usize = 40;
const FULL_ITERS: usize = 600;
const FINALISTS: usize = 4;

/// Minimizes `obj` over the unit sphere from `warm` starts, the signed axes
/// and seeded random directions (at least `restarts` starts in all).
pub(crate) fn minimize<O: Objective>(obj: &O, restarts: usize, seed: u64, warm: &[Vec<f64>]) -> SphereResult {
    let k = obj.dim();
    let mut starts: Vec<Vec<f64>> = warm.iter().filter_map(|w| normalized(w)).collect();
    for i in 0..k {
        for sgn in [1.0, -1.0] {
            let mut e = alloc::vec![0.0; k];
            e[i] = sgn;
            starts.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut guard = 0;
    while starts.len() < restarts && guard < 100 * restarts {
        guard += 1;
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Some(v) = normalized(&v) {
            starts.push(v);
        }
    }
    let mut screened: Vec<(f64, Vec<f64>, f64)> = starts
        .into_iter()
        .map(|z| {
            let (v, z, step) = descend(obj, z, 0.2, SCREEN_ITERS);
            (v, z, step)
        })
        .collect();
    // stable order keeps ties on the lowest restart index
    screened.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    let mut finalists: Vec<(f64, Vec<f64>)> = screened
        .into_iter()
        .take(FINALISTS)
        .map(|(_, z, step)| {
            let (_, z, _) = descend(obj, z, step.max(1e-3), FULL_ITERS);
            polish(obj, z)
        })
        .collect();
    finalists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    let (value, point) = finalists.first().cloned().unwrap_or((f64::NAN, Vec::new()));
    SphereResult { value, point, finalists }
}

/// Geodesic descent with an adaptive angle and Armijo acceptance.
fn descend<O: Objective>(obj: &O, mut z: Vec<f64>, mut angle: f64, iters: usize) -> (f64, Vec<f64>, f64) {
    let (mut f, mut g) = obj.eval(&z);
    for _ in 0..iters {
        let mut rg = g.clone();
        axpy(-dot(&g, &z), &z, &mut rg);
        let gn = norm(&rg);
        if gn <= 1e-15 * (1.0 + f.abs()) {
            break;
        }
        let d: Vec<f64> = rg.iter().map(|v| -v / gn).collect();
        let mut accepted = false;
        while angle > 1e-15 {
            let (c, s) = (math::cos(angle), math::sin(angle));
            let trial: Vec<f64> = z.iter().zip(&d).map(|(a, b)| c * a + s * b).collect();
            let trial = normalized(&trial).unwrap_or(trial);
            let (ft, gt) = obj.eval(&trial);
            if ft <= f - 1e-4 * angle * gn {
                z = trial;
                f = ft;
                g = gt;
                angle = (angle * 2.0).min(1.0);
                accepted = true;
                break;
            }
            angle *= 0.25;
        }
        if !accepted {
            break;
        }
    }
    (f, z, angle)
}

/// Compass search on the tangent plane with a shrinking radius.
fn polish<O: Objective>(obj: &O, mut z: Vec<f64>) -> (f64, Vec<f64>) {
    let k = z.len();
    let mut f = obj.value(&z);
    if k < 2 {
        return (f, z);
    }
    let mut radius = 1e-4;
    let mut iters = 0;
    while radius > 1e-14 && iters < 2000 {
        iters += 1;
        let basis = orthonormal_complement(&Matrix::from_columns(k, core::slice::from_ref(&z)));
        let mut improved = false;
        for dir in basis.columns() {
            for sgn in [1.0, -1.0] {
                let mut t = z.clone();
                axpy(sgn * radius, &dir, &mut t);
                let t = normalized(&t).unwrap_or(t);
                let ft = obj.value(&t);
                if ft < f {
                    f = ft;
                    z = t;
                    improved = true;
                }
            }
        }
        if !improved {
            radius *= 0.5;
        }
    }
    (f, z)
}

/// Largest angle between two finalists whose values are within `value_tol`
/// of the best one.
pub(crate) fn spread_of_minimizers(result: &SphereResult, value_tol: f64) -> f64 {
    let near: Vec<&Vec<f64>> = result
        .finalists
        .iter()
        .filter(|(v, _)| *v <= result.value + value_tol)
        .map(|(_, z)| z)
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..near.len() {
        for j in i + 1..near.len() {
            let c = dot(near[i], near[j]).clamp(-1.0, 1.0);
            worst = worst.max(libm::acos(c));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic(Matrix);

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.0.rows()
        }
        fn eval(&self, z: &[f64]) -> (f64, Vec<f64>) {
            let az = self.0.mul_vec(z);
            (dot(z, &az), az.iter().map(|v| 2.0 * v).collect())
        }
    }

    #[test]
    fn smallest_eigenvalue_of_a_diagonal() {
        let q = Quadratic(Matrix::diag(&[3.0, -1.0, 2.0]));
        let r = minimize(&q, 8, 1, &[]);
        assert!((r.value + 1.0).abs() < 1e-12);
        assert!((r.point[1].abs() - 1.0).abs() < 1e-6);
    }
}
