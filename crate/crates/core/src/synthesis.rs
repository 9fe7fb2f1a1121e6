//! Closed-form optimal control from the multiplier, and the analysis of its
//! switching structure.
//!
//! With `s(t) = Bᵀ e^{Aᵀ(T*−t)} z*`, the optimal control is `s/‖s‖` away
//! from the nodal set and its left limit on it. Near a nodal point `t̂`,
//! `s(t̂+τ) = a_k τ^k + O(τ^{k+1})`, so the control jumps to its antipode
//! exactly when the order `k` is odd.

use alloc::format;
use alloc::vec::Vec;

use crate::dual::Problem;
use crate::error::{Error, Result};
use crate::linalg::{dot, mat_exp, norm, normalized, numerical_rank, Matrix};
use crate::solver::DualCertificate;

/// Evaluator of `s(t) = Bᵀ e^{Aᵀ(T*−t)} z*`.
#[derive(Debug, Clone)]
pub struct SwitchingMap {
    bt: Matrix,
    at: Matrix,
    z_star: Vec<f64>,
    t_star: f64,
}

impl SwitchingMap {
    pub fn new(problem: &Problem, cert: &DualCertificate) -> Self {
        Self {
            bt: problem.system.b.transpose(),
            at: problem.system.a.transpose(),
            z_star: cert.z_star.clone(),
            t_star: cert.t_star,
        }
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    /// `e^{Aᵀ(T*−t)} z*`, the multiplier carried back to time `t`.
    pub fn adjoint(&self, t: f64) -> Vec<f64> {
        match mat_exp(&self.at, self.t_star - t) {
            Ok(e) => e.mul_vec(&self.z_star),
            Err(_) => alloc::vec![f64::NAN; self.z_star.len()],
        }
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        self.bt.mul_vec(&self.adjoint(t))
    }

    /// `⟨s(t), s'(t)⟩` from the adjoint `v(t)`, using `s' = −BᵀAᵀv`.
    fn slope(&self, t: f64) -> f64 {
        let v = self.adjoint(t);
        let s = self.bt.mul_vec(&v);
        let ds = self.bt.mul_vec(&self.at.mul_vec(&v));
        -dot(&s, &ds)
    }

    /// `Bᵀ (Aᵀ)^j v` for `j = 0, …, count−1`.
    fn derivatives(&self, v: &[f64], count: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut w = v.to_vec();
        for _ in 0..count {
            out.push(self.bt.mul_vec(&w));
            w = self.at.mul_vec(&w);
        }
        out
    }

    /// `‖s‖` at `samples + 1` equally spaced times on `[0, T*]`, by
    /// propagation from `T*` backwards with periodic resynchronization.
    fn scan(&self, samples: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let dt = self.t_star / samples as f64;
        let step = mat_exp(&self.at, dt)?;
        let mut times = alloc::vec![0.0; samples + 1];
        let mut norms = alloc::vec![0.0; samples + 1];
        let mut v = self.z_star.clone();
        for idx in (0..=samples).rev() {
            let back = samples - idx;
            if back > 0 {
                v = if back % 512 == 0 { mat_exp(&self.at, back as f64 * dt)?.mul_vec(&self.z_star) } else { step.mul_vec(&v) };
            }
            times[idx] = idx as f64 * dt;
            norms[idx] = norm(&self.bt.mul_vec(&v));
        }
        Ok((times, norms))
    }
}

/// A zero of the switching map inside `(0, T*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalPoint {
    pub t: f64,
    /// `‖s(t̂)‖`.
    pub residual: f64,
    /// Order of the first nonvanishing derivative.
    pub order: usize,
    /// `a_k / ‖a_k‖`: the right limit of the control.
    pub right_limit: Vec<f64>,
    /// `(−1)^k a_k / ‖a_k‖`: the left limit, which is also the value.
    pub left_limit: Vec<f64>,
    /// Odd order: the control jumps here.
    pub is_switch: bool,
}

/// Bang-bang optimal control built from a certificate.
#[derive(Debug, Clone)]
pub struct OptimalControl {
    pub certificate: DualCertificate,
    pub map: SwitchingMap,
    pub nodal_points: Vec<NodalPoint>,
    /// Local minima of `‖s‖` below a tenth of its maximum, nodal or not.
    /// The control turns quickly near them.
    pub dips: Vec<f64>,
    /// `max ‖s‖` over the scan.
    pub max_switching_norm: f64,
    pub order_tol: f64,
}

impl OptimalControl {
    pub fn t_star(&self) -> f64 {
        self.certificate.t_star
    }

    /// `u*(t)`: left-continuous, unit norm on `(0, T*]`, zero after `T*`.
    pub fn control_at(&self, t: f64) -> Vec<f64> {
        let m = self.map.bt.rows();
        if t > self.t_star() {
            return alloc::vec![0.0; m];
        }
        if let Some(p) = self.nodal_points.iter().find(|p| p.t == t) {
            return p.left_limit.clone();
        }
        let s = self.map.value(t);
        let sn = norm(&s);
        if sn > self.order_tol * self.max_switching_norm * 1e-6 {
            return s.iter().map(|v| v / sn).collect();
        }
        // an unlisted zero, typically t = T*: fall back to the local expansion
        match local_expansion(&self.map, t, self.order_tol) {
            Some((k, a)) => a.iter().map(|v| if k % 2 == 1 { -v } else { *v }).collect(),
            None => alloc::vec![0.0; m],
        }
    }

    pub fn switching_map(&self, t: f64) -> Vec<f64> {
        self.map.value(t)
    }

    /// Switch times.
    pub fn switch_times(&self) -> Vec<f64> {
        self.nodal_points.iter().filter(|p| p.is_switch).map(|p| p.t).collect()
    }
}

/// `s(t) = Bᵀ e^{Aᵀ(T*−t)} z*` for a certificate.
pub fn switching_map(problem: &Problem, cert: &DualCertificate, t: f64) -> Vec<f64> {
    SwitchingMap::new(problem, cert).value(t)
}

/// Smallest `k` with `‖Bᵀ(Aᵀ)^k v‖` above `order_tol · ‖v‖ ‖B‖ ‖A‖^k`,
/// `v = e^{Aᵀ(T*−t)}z*`, and `a_k = Bᵀ(−Aᵀ)^k v / k!`.
fn expansion(map: &SwitchingMap, t: f64, order_tol: f64) -> Option<(usize, Vec<f64>)> {
    let v = map.adjoint(t);
    let derivs = map.derivatives(&v, map.at.rows());
    let an = map.at.norm_fro();
    let mut scale = norm(&v) * map.bt.norm_fro();
    let mut factorial = 1.0;
    for (k, d) in derivs.iter().enumerate() {
        if k > 0 {
            factorial *= k as f64;
        }
        if norm(d) > order_tol * scale {
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            return Some((k, d.iter().map(|x| sign * x / factorial).collect()));
        }
        scale *= an;
    }
    None
}

fn local_expansion(map: &SwitchingMap, t: f64, order_tol: f64) -> Option<(usize, Vec<f64>)> {
    let (k, a) = expansion(map, t, order_tol)?;
    normalized(&a).map(|u| (k, u))
}

/// Jump order `k(t̂)` and the leading coefficient `a_k` of
/// `s(t̂+τ) = a_k τ^k + O(τ^{k+1})`.
pub fn jump_order(problem: &Problem, cert: &DualCertificate, t_hat: f64) -> Result<(usize, Vec<f64>)> {
    let map = SwitchingMap::new(problem, cert);
    expansion(&map, t_hat, problem.tolerances.order_tol).ok_or_else(|| vanishing(problem, t_hat))
}

fn vanishing(problem: &Problem, t: f64) -> Error {
    Error::Inconsistency(format!(
        "all derivatives of the switching map through order {} vanish at t = {t}",
        problem.system.n().saturating_sub(1)
    ))
}

/// Times in `(0, T*)` where the switching map vanishes.
pub fn nodal_set(problem: &Problem, cert: &DualCertificate) -> Result<Vec<f64>> {
    Ok(synthesize(problem, cert)?.nodal_points.iter().map(|p| p.t).collect())
}

/// Builds the optimal control and locates its nodal set.
pub fn synthesize(problem: &Problem, cert: &DualCertificate) -> Result<OptimalControl> {
    let tol = &problem.tolerances;
    let map = SwitchingMap::new(problem, cert);
    let t_star = cert.t_star;
    let facts = &problem.system.facts;
    let windows = if facts.d_a.is_finite() { libm::ceil(t_star / facts.d_a).max(1.0) } else { 1.0 };
    let samples = (1e4 * windows).clamp(1e4, 2e6) as usize;
    let (times, norms) = map.scan(samples)?;
    let max_norm = norms.iter().fold(0.0f64, |a, b| a.max(*b));
    if !(max_norm > 0.0) {
        return Err(Error::Inconsistency("switching map vanishes identically on (0, T*)".into()));
    }
    let mut candidates: Vec<f64> = Vec::new();
    for i in 1..samples {
        if norms[i] <= norms[i - 1] && norms[i] <= norms[i + 1] && norms[i] <= 0.1 * max_norm {
            candidates.push(polish_minimum(&map, times[i - 1], times[i], times[i + 1]));
        }
    }
    let mut nodal: Vec<NodalPoint> = Vec::new();
    let dips: Vec<f64> = candidates.iter().copied().filter(|t| *t > 0.0 && *t < t_star).collect();
    for t in candidates {
        if t <= 1e-9 * t_star || t >= t_star * (1.0 - 1e-9) {
            continue;
        }
        if nodal.last().is_some_and(|p: &NodalPoint| (t - p.t).abs() <= 1e-9 * t_star) {
            continue;
        }
        let s = map.value(t);
        let residual = norm(&s);
        if residual > tol.zero_tol * max_norm {
            continue;
        }
        let Some((order, right)) = local_expansion(&map, t, tol.order_tol) else {
            return Err(vanishing(problem, t));
        };
        if order == 0 {
            continue;
        }
        let left: Vec<f64> = right.iter().map(|v| if order % 2 == 1 { -v } else { *v }).collect();
        nodal.push(NodalPoint { t, residual, order, right_limit: right, left_limit: left, is_switch: order % 2 == 1 });
    }
    nodal.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(core::cmp::Ordering::Equal));
    let times: Vec<f64> = nodal.iter().map(|p| p.t).collect();
    let bound = facts.q_ab.saturating_sub(1);
    let (count, start) = max_window_count(&times, facts.d_a);
    if count > bound {
        return Err(Error::Inconsistency(format!(
            "{count} nodal points in a window of length d_A = {} starting at t = {start}, more than q_AB - 1 = {bound}",
            facts.d_a
        )));
    }
    Ok(OptimalControl {
        certificate: cert.clone(),
        map,
        nodal_points: nodal,
        dips,
        max_switching_norm: max_norm,
        order_tol: tol.order_tol,
    })
}

/// Bisection on `⟨s, s'⟩` between neighbouring samples; falls back to the
/// sample itself when the slope does not change sign.
fn polish_minimum(map: &SwitchingMap, left: f64, mid: f64, right: f64) -> f64 {
    let (mut a, mut b) = (left, right);
    if !(map.slope(a) < 0.0 && map.slope(b) > 0.0) {
        return mid;
    }
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if c <= a || c >= b {
            break;
        }
        if map.slope(c) < 0.0 {
            a = c;
        } else {
            b = c;
        }
    }
    let sa = norm(&map.value(a));
    let sb = norm(&map.value(b));
    if sa <= sb {
        a
    } else {
        b
    }
}

/// Largest number of sorted times inside an open window of length `d`, and
/// where the worst window starts.
pub fn max_window_count(times: &[f64], d: f64) -> (usize, f64) {
    let mut best = (0, 0.0);
    for i in 0..times.len() {
        let limit = if d.is_finite() { times[i] + d * (1.0 - 1e-9) } else { f64::INFINITY };
        let c = times[i..].iter().take_while(|t| **t < limit).count();
        if c > best.0 {
            best = (c, times[i]);
        }
    }
    best
}

/// Behavior classes of an optimal control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorClass {
    /// Constant on `(0, T*)`.
    A1,
    /// Continuous, never locally constant.
    A2,
    /// Step function with two antipodal values.
    A3,
    /// Discontinuous, never locally constant.
    A4,
}

impl BehaviorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorClass::A1 => "A1",
            BehaviorClass::A2 => "A2",
            BehaviorClass::A3 => "A3",
            BehaviorClass::A4 => "A4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A1" => Some(BehaviorClass::A1),
            "A2" => Some(BehaviorClass::A2),
            "A3" => Some(BehaviorClass::A3),
            "A4" => Some(BehaviorClass::A4),
            _ => None,
        }
    }
}

/// A switching direction and how well it fits `Bᵀ(Aᵀ)^{2j−1} H_{2j−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionReport {
    pub direction: Vec<f64>,
    /// Best `j`, or 0 when no level is available.
    pub j: usize,
    pub residual: f64,
}

/// Switching structure of an optimal control.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchAnalysis {
    pub nodal_points: Vec<NodalPoint>,
    pub switch_set: Vec<f64>,
    pub directions: Vec<DirectionReport>,
    pub behavior: BehaviorClass,
    /// Distance of the deciding statistic from `const_tol`.
    pub class_margin: f64,
    /// Some nodal point has even order, so the switch set is a proper subset.
    pub proper_subset: bool,
    /// Most switch points in an open window of length `d_A`.
    pub max_switches_in_window: usize,
    /// Result of the at-most-two-directions check when `rank B = 1`, or when
    /// `rank B = n − 1` and the pair is controllable.
    pub two_direction_check: Option<bool>,
}

/// Classifies and describes the switching structure.
pub fn analyze(problem: &Problem, control: &OptimalControl) -> Result<SwitchAnalysis> {
    let tol = &problem.tolerances;
    let facts = &problem.system.facts;
    let n = problem.system.n();
    let switch_set = control.switch_times();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for p in control.nodal_points.iter().filter(|p| p.is_switch) {
        if !dirs.iter().any(|d| libm::acos(dot(d, &p.left_limit).clamp(-1.0, 1.0)) <= 1e-6) {
            dirs.push(p.left_limit.clone());
        }
    }
    let images = direction_images(problem, tol.rank_tol);
    let directions: Vec<DirectionReport> = dirs.iter().map(|d| inclusion(d, &images)).collect();
    let (behavior, class_margin) = classify(control, !switch_set.is_empty(), tol.const_tol);
    let (max_switches_in_window, _) = max_window_count(&switch_set, facts.d_a);
    let rank_b = facts.h.first().map_or(0, |h| h.cols());
    let two_direction_check = if rank_b == 1 || (n >= 2 && rank_b == n - 1 && facts.controllability_rank == n) {
        Some(directions.len() <= 2)
    } else {
        None
    };
    Ok(SwitchAnalysis {
        proper_subset: switch_set.len() < control.nodal_points.len(),
        nodal_points: control.nodal_points.clone(),
        switch_set,
        directions,
        behavior,
        class_margin,
        max_switches_in_window,
        two_direction_check,
    })
}

/// Orthonormal bases of `Bᵀ(Aᵀ)^{2j−1} H_{2j−1}` for `j = 1, …, ⌊n/2⌋`.
fn direction_images(problem: &Problem, rank_tol: f64) -> Vec<(usize, Matrix)> {
    let sys = &problem.system;
    let n = sys.n();
    let bt = sys.b.transpose();
    let at = sys.a.transpose();
    let mut out = Vec::new();
    for j in 1..=n / 2 {
        let level = 2 * j - 1;
        let Some(h) = sys.facts.h.get(level) else { continue };
        if h.cols() == 0 {
            continue;
        }
        let image = bt.matmul(&at.powi(level as u32)).matmul(h);
        let space = numerical_rank(&image, rank_tol);
        if space.rank > 0 {
            out.push((j, space.basis));
        }
    }
    out
}

fn inclusion(d: &[f64], images: &[(usize, Matrix)]) -> DirectionReport {
    let mut best = DirectionReport { direction: d.to_vec(), j: 0, residual: f64::INFINITY };
    for (j, basis) in images {
        let coeffs = basis.tr_mul_vec(d);
        let proj = basis.mul_vec(&coeffs);
        let residual = match normalized(&proj) {
            Some(p) => norm(&crate::linalg::sub_vec(d, &p)),
            None => norm(d) + 1.0,
        };
        if residual < best.residual {
            best.residual = residual;
            best.j = *j;
        }
    }
    best
}

/// Sample-based classification: constancy decides between A1 and A2 when
/// there are no switches, two-valuedness between A3 and A4 otherwise.
fn classify(control: &OptimalControl, has_switches: bool, const_tol: f64) -> (BehaviorClass, f64) {
    let t_star = control.t_star();
    let samples: Vec<Vec<f64>> = (0..1000).map(|i| control.control_at((i as f64 + 0.5) * t_star / 1000.0)).collect();
    if !has_switches {
        let mut dev: f64 = 0.0;
        for i in 0..samples.len() {
            for j in i + 1..samples.len() {
                dev = dev.max(norm(&crate::linalg::sub_vec(&samples[i], &samples[j])));
            }
        }
        let class = if dev <= const_tol { BehaviorClass::A1 } else { BehaviorClass::A2 };
        (class, (dev - const_tol).abs())
    } else {
        let v = &samples[0];
        let dev = samples
            .iter()
            .map(|u| {
                let minus = norm(&crate::linalg::sub_vec(u, v));
                let plus = norm(&crate::linalg::add_vec(u, v));
                minus.min(plus)
            })
            .fold(0.0f64, f64::max);
        let class = if dev <= const_tol { BehaviorClass::A3 } else { BehaviorClass::A4 };
        (class, (dev - const_tol).abs())
    }
}
