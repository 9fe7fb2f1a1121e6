//! Gauss–Legendre rules, Legendre expansions on a panel, and a plain
//! adaptive integrator for scalar functions.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Gauss–Legendre rule on `[-1, 1]` together with the matrix that maps
/// nodal values to Legendre coefficients of the interpolating polynomial.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Row `j` holds `(2j+1)/2 · w_i P_j(x_i)`, so `coeff_j = Σ_i row_j[i] f(x_i)`.
    projection: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = math::cos(math::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_pair(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_pair(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let mut projection = vec![0.0; n * n];
        let mut p = vec![0.0; n];
        for (i, &x) in nodes.iter().enumerate() {
            legendre_values(x, &mut p);
            for j in 0..n {
                projection[j * n + i] = (2 * j + 1) as f64 / 2.0 * weights[i] * p[j];
            }
        }
        Self { nodes, weights, projection }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node `i` mapped to `[a, b]`.
    #[inline]
    pub fn node_on(&self, i: usize, a: f64, b: f64) -> f64 {
        0.5 * (a + b) + 0.5 * (b - a) * self.nodes[i]
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mut s = 0.0;
        for i in 0..self.len() {
            s += self.weights[i] * f(self.node_on(i, a, b));
        }
        s * half
    }

    /// Legendre coefficient `j` of the polynomial through the nodal values.
    pub fn coefficient(&self, j: usize, values: &[f64]) -> f64 {
        let n = self.len();
        self.projection[j * n..(j + 1) * n].iter().zip(values).map(|(r, v)| r * v).sum()
    }

    /// Entry `(j, i)` of the values-to-coefficients map.
    #[inline]
    pub fn coefficient_weight(&self, j: usize, i: usize) -> f64 {
        self.projection[j * self.len() + i]
    }

    /// All Legendre coefficients of the interpolant.
    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|j| self.coefficient(j, values)).collect()
    }

    /// Size of the two highest Legendre coefficients; small values mean the
    /// nodal data is resolved by the rule.
    pub fn tail(&self, values: &[f64]) -> f64 {
        let n = self.len();
        if n < 3 {
            return 0.0;
        }
        self.coefficient(n - 1, values).abs() + self.coefficient(n - 2, values).abs()
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fills `out[j] = P_j(x)`.
pub fn legendre_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for j in 1..out.len().saturating_sub(1) {
        out[j + 1] = ((2 * j + 1) as f64 * x * out[j] - j as f64 * out[j - 1]) / (j + 1) as f64;
    }
}

/// Fills `p[j] = P_j(x)` and `d[j] = P_j'(x)`.
pub fn legendre_values_and_slopes(x: f64, p: &mut [f64], d: &mut [f64]) {
    legendre_values(x, p);
    if d.is_empty() {
        return;
    }
    d[0] = 0.0;
    if d.len() > 1 {
        d[1] = 1.0;
    }
    for j in 1..d.len().saturating_sub(1) {
        d[j + 1] = d[j - 1] + (2 * j + 1) as f64 * p[j];
    }
}

/// Adaptive Gauss–Legendre integration of a scalar function: a panel is
/// accepted when the rule on it agrees with the rule on its two halves.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(rule: &GaussLegendre, mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: FnMut(f64) -> f64>(rule: &GaussLegendre, f: &mut F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = rule.integrate(&mut *f, a, m);
        let right = rule.integrate(&mut *f, m, b);
        if (left + right - whole).abs() <= tol || depth >= 48 {
            return left + right;
        }
        rec(rule, f, a, m, left, 0.5 * tol, depth + 1) + rec(rule, f, m, b, right, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = rule.integrate(&mut f, a, b);
    rec(rule, &mut f, a, b, whole, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(16);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let v = rule.integrate(|x| x.powi(30), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn coefficients_reproduce_legendre_polynomials() {
        let rule = GaussLegendre::new(16);
        let mut p = vec![0.0; 16];
        let vals: Vec<f64> = rule
            .nodes
            .iter()
            .map(|&x| {
                legendre_values(x, &mut p);
                p[5] - 2.0 * p[15]
            })
            .collect();
        let c = rule.coefficients(&vals);
        assert!((c[5] - 1.0).abs() < 1e-13 && (c[15] + 2.0).abs() < 1e-13);
        assert!(c[3].abs() < 1e-13);
    }

    #[test]
    fn slopes_match_finite_differences() {
        let (mut p, mut d) = (vec![0.0; 8], vec![0.0; 8]);
        let (mut pp, mut pm) = (vec![0.0; 8], vec![0.0; 8]);
        let x = 0.3;
        legendre_values_and_slopes(x, &mut p, &mut d);
        legendre_values(x + 1e-6, &mut pp);
        legendre_values(x - 1e-6, &mut pm);
        for j in 0..8 {
            assert!((d[j] - (pp[j] - pm[j]) / 2e-6).abs() < 1e-7);
        }
    }

    #[test]
    fn adaptive_handles_a_kink() {
        let rule = GaussLegendre::new(16);
        let v = integrate_adaptive(&rule, |x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-13);
        assert!((v - (0.045 + 0.245)).abs() < 1e-12);
    }
}
