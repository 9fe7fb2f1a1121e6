//! Quadrature of `h(z) = ∫₀ᵀ ‖W(σ) z‖ dσ` with `W(σ) = Bᵀ e^{Gσ}`.
//!
//! `W` is tabulated once per horizon at 16-point Gauss–Legendre nodes on
//! equal panels short enough that `W` is resolved to rounding on each of
//! them. A panel whose values of `‖W z‖` are not resolved (a zero or near
//! zero of `W z` sits inside) is handled by splitting at the interior
//! minimum, using the Legendre expansion of `W` on that panel. Node values
//! alone miss a sign change between an end point and its nearest node, so
//! `W` is also kept at the panel ends and any reversal of `W z` between
//! neighbouring samples marks the panel as unresolved.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::{mat_exp, norm, Matrix};
use crate::quadrature::{legendre_values, legendre_values_and_slopes, GaussLegendre};

const NODES: usize = 16;
const MAX_DEPTH: u32 = 60;
const RESYNC: usize = 16;

struct Panel {
    a: f64,
    b: f64,
    /// `W` at the nodes, node-major, each `m × k` row-major.
    w: Vec<f64>,
    /// Legendre coefficient matrices of `W` on the panel, same layout.
    c: Vec<f64>,
    /// `W(a)` then `W(b)`.
    ends: Vec<f64>,
}

pub(crate) struct Kernel {
    rule: GaussLegendre,
    m: usize,
    k: usize,
    panels: Vec<Panel>,
    /// Sup-norm threshold on the Legendre tail of `‖W z‖` for a resolved panel.
    tail_tol: f64,
}

impl Kernel {
    /// Tabulates `Bᵀ e^{Gσ}` on `[0, horizon]`; `bt` is `m × k`, `g` is `k × k`.
    pub(crate) fn new(g: &Matrix, bt: &Matrix, horizon: f64, quad_tol: f64) -> Result<Self> {
        let rule = GaussLegendre::new(NODES);
        let (m, k) = (bt.rows(), bt.cols());
        let rho = g.norm_fro();
        let mut count = if rho * horizon <= 1.0 { 1 } else { libm::ceil(rho * horizon) as usize };
        count = count.clamp(1, 200_000);
        let h = horizon / count as f64;
        let step = mat_exp(g, h)?;
        let local: Vec<Matrix> = (0..NODES)
            .map(|i| mat_exp(g, rule.node_on(i, 0.0, h)))
            .collect::<Result<_>>()?;
        let mut panels = Vec::with_capacity(count);
        let mut head = bt.clone();
        for p in 0..count {
            if p > 0 {
                head = if p % RESYNC == 0 { bt.matmul(&mat_exp(g, p as f64 * h)?) } else { head.matmul(&step) };
            }
            let mut w = Vec::with_capacity(NODES * m * k);
            for e in &local {
                w.extend_from_slice(head.matmul(e).as_slice());
            }
            let mut c = vec![0.0; NODES * m * k];
            for j in 0..NODES {
                for i in 0..NODES {
                    let r = rule.coefficient_weight(j, i);
                    let src = &w[i * m * k..(i + 1) * m * k];
                    for (dst, v) in c[j * m * k..(j + 1) * m * k].iter_mut().zip(src) {
                        *dst += r * v;
                    }
                }
            }
            let a = p as f64 * h;
            let b = if p + 1 == count { horizon } else { (p + 1) as f64 * h };
            let tail_end = if p + 1 == count { head.matmul(&mat_exp(g, b - a)?) } else { head.matmul(&step) };
            let mut ends = Vec::with_capacity(2 * m * k);
            ends.extend_from_slice(head.as_slice());
            ends.extend_from_slice(tail_end.as_slice());
            panels.push(Panel { a, b, w, c, ends });
        }
        Ok(Self { rule, m, k, panels, tail_tol: quad_tol / horizon.max(1.0) })
    }

    /// `h(z)` and its gradient.
    pub(crate) fn eval(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let (m, k) = (self.m, self.k);
        let mk = m * k;
        let mut value = 0.0;
        let mut grad = vec![0.0; k];
        let mut s = vec![0.0; NODES * m];
        let mut nrm = [0.0; NODES];
        let mut ends = vec![0.0; 2 * m];
        for p in &self.panels {
            for i in 0..NODES {
                let wi = &p.w[i * mk..(i + 1) * mk];
                for r in 0..m {
                    s[i * m + r] = wi[r * k..(r + 1) * k].iter().zip(z).map(|(a, b)| a * b).sum();
                }
                nrm[i] = norm(&s[i * m..(i + 1) * m]);
            }
            for e in 0..2 {
                let we = &p.ends[e * mk..(e + 1) * mk];
                for r in 0..m {
                    ends[e * m + r] = we[r * k..(r + 1) * k].iter().zip(z).map(|(a, b)| a * b).sum();
                }
            }
            let scale = nrm.iter().fold(0.0f64, |a, b| a.max(*b));
            let half = 0.5 * (p.b - p.a);
            let smooth = !reverses(m, &s, &ends[..m], &ends[m..], scale);
            if smooth && self.rule.tail(&nrm) <= self.tail_tol.max(64.0 * f64::EPSILON * scale) {
                for i in 0..NODES {
                    if nrm[i] == 0.0 {
                        continue;
                    }
                    let wgt = half * self.rule.weights[i];
                    value += wgt * nrm[i];
                    let wi = &p.w[i * mk..(i + 1) * mk];
                    for r in 0..m {
                        let u = wgt * s[i * m + r] / nrm[i];
                        for (g, a) in grad.iter_mut().zip(&wi[r * k..(r + 1) * k]) {
                            *g += u * a;
                        }
                    }
                }
            } else {
                let (v, g) = self.eval_unresolved(p, z, scale);
                value += half * v;
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += half * b;
                }
            }
        }
        (value, grad)
    }

    /// Integral over the reference interval and gradient for a panel whose
    /// integrand has a kink or a sharp dip.
    fn eval_unresolved(&self, p: &Panel, z: &[f64], scale: f64) -> (f64, Vec<f64>) {
        let (m, k) = (self.m, self.k);
        let mk = m * k;
        // coefficients of s(x) = Σ_j P_j(x) coeff_j
        let mut coeff = vec![0.0; NODES * m];
        for j in 0..NODES {
            let cj = &p.c[j * mk..(j + 1) * mk];
            for r in 0..m {
                coeff[j * m + r] = cj[r * k..(r + 1) * k].iter().zip(z).map(|(a, b)| a * b).sum();
            }
        }
        let poly = Poly { m, coeff: &coeff };
        let mut acc = Accumulator { value: 0.0, moments: vec![0.0; NODES * m] };
        let tol = self.tail_tol.max(64.0 * f64::EPSILON * scale);
        self.integrate(&poly, -1.0, 1.0, tol, 0, &mut acc);
        let mut grad = vec![0.0; k];
        for j in 0..NODES {
            let cj = &p.c[j * mk..(j + 1) * mk];
            for r in 0..m {
                let mo = acc.moments[j * m + r];
                if mo == 0.0 {
                    continue;
                }
                for (g, a) in grad.iter_mut().zip(&cj[r * k..(r + 1) * k]) {
                    *g += mo * a;
                }
            }
        }
        (acc.value, grad)
    }

    fn integrate(&self, poly: &Poly<'_>, lo: f64, hi: f64, tol: f64, depth: u32, acc: &mut Accumulator) {
        let m = poly.m;
        let mut xs = [0.0; NODES];
        let mut vals = vec![0.0; NODES * m];
        let mut nrm = [0.0; NODES];
        let mut pj = [0.0; NODES];
        for i in 0..NODES {
            xs[i] = self.rule.node_on(i, lo, hi);
            poly.eval(xs[i], &mut vals[i * m..(i + 1) * m], &mut pj);
            nrm[i] = norm(&vals[i * m..(i + 1) * m]);
        }
        let mut lo_val = vec![0.0; m];
        let mut hi_val = vec![0.0; m];
        poly.eval(lo, &mut lo_val, &mut pj);
        poly.eval(hi, &mut hi_val, &mut pj);
        let scale = nrm.iter().fold(0.0f64, |a, b| a.max(*b));
        let resolved = !reverses(m, &vals, &lo_val, &hi_val, scale) && self.rule.tail(&nrm) <= tol;
        if resolved || depth >= MAX_DEPTH || hi - lo <= 4.0 * f64::EPSILON {
            let half = 0.5 * (hi - lo);
            for i in 0..NODES {
                if nrm[i] == 0.0 {
                    continue;
                }
                let wgt = half * self.rule.weights[i];
                acc.value += wgt * nrm[i];
                legendre_values(xs[i], &mut pj);
                for j in 0..NODES {
                    let f = wgt * pj[j] / nrm[i];
                    for r in 0..m {
                        acc.moments[j * m + r] += f * vals[i * m + r];
                    }
                }
            }
            return;
        }
        let split = poly.interior_minimum(&xs, &nrm, lo, hi).unwrap_or(0.5 * (lo + hi));
        self.integrate(poly, lo, split, tol, depth + 1, acc);
        self.integrate(poly, split, hi, tol, depth + 1, acc);
    }
}

/// True when `W z` turns by more than a right angle between neighbouring
/// samples `lo, nodes…, hi`. End values below `1e−8 · scale` are skipped:
/// a kink that close to the end changes the integral by a negligible amount.
fn reverses(m: usize, nodes: &[f64], lo: &[f64], hi: &[f64], scale: f64) -> bool {
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let floor = 1e-8 * scale;
    let first = &nodes[..m];
    let last = &nodes[(NODES - 1) * m..NODES * m];
    if norm(lo) > floor && dot(lo, first) < 0.0 || norm(hi) > floor && dot(hi, last) < 0.0 {
        return true;
    }
    (0..NODES - 1).any(|i| dot(&nodes[i * m..(i + 1) * m], &nodes[(i + 1) * m..(i + 2) * m]) < 0.0)
}

struct Accumulator {
    value: f64,
    /// `Σ w P_j(x) u(x)` per Legendre index `j`, each an `m`-vector.
    moments: Vec<f64>,
}

/// Vector polynomial in the Legendre basis on `[-1, 1]`.
struct Poly<'a> {
    m: usize,
    coeff: &'a [f64],
}

impl Poly<'_> {
    fn eval(&self, x: f64, out: &mut [f64], pj: &mut [f64; NODES]) {
        legendre_values(x, pj);
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..NODES {
            for r in 0..self.m {
                out[r] += pj[j] * self.coeff[j * self.m + r];
            }
        }
    }

    /// `⟨s(x), s'(x)⟩`, half the derivative of `‖s‖²`.
    fn slope(&self, x: f64) -> f64 {
        let mut p = [0.0; NODES];
        let mut d = [0.0; NODES];
        legendre_values_and_slopes(x, &mut p, &mut d);
        let mut acc = 0.0;
        for r in 0..self.m {
            let (mut v, mut dv) = (0.0, 0.0);
            for j in 0..NODES {
                v += p[j] * self.coeff[j * self.m + r];
                dv += d[j] * self.coeff[j * self.m + r];
            }
            acc += v * dv;
        }
        acc
    }

    /// Location of a local minimum of `‖s‖` strictly inside `(lo, hi)`,
    /// bracketed by the sampled values and refined by bisection on the slope.
    fn interior_minimum(&self, xs: &[f64; NODES], nrm: &[f64; NODES], lo: f64, hi: f64) -> Option<f64> {
        let i = (0..NODES).fold(0, |b, i| if nrm[i] < nrm[b] { i } else { b });
        let mut a = if i == 0 { lo } else { xs[i - 1] };
        let mut b = if i + 1 == NODES { hi } else { xs[i + 1] };
        if self.slope(a) >= 0.0 || self.slope(b) <= 0.0 {
            return None;
        }
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.slope(mid) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let x = 0.5 * (a + b);
        let margin = 1e-9 * (hi - lo);
        if x - lo <= margin || hi - x <= margin {
            None
        } else {
            Some(x)
        }
    }
}
