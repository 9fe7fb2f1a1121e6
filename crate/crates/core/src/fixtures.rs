//! The worked examples: system data, initial states and expected outcomes.
//!
//! `a4` and `proper_subset` build their initial state from a prescribed
//! multiplier by quadrature, so they carry a forward multiplier `ẑ` with
//! `⟨x₀, ẑ⟩ = −1` and the horizon `T̄` that the construction aims at.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::dual::{Problem, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{dot, krylov_chain, mat_exp, norm, Matrix};
use crate::math::{self, PI};
use crate::quadrature::GaussLegendre;
use crate::synthesis::BehaviorClass;

/// Fixture names accepted by [`by_name`].
pub const NAMES: [&str; 5] = ["a1", "a2", "a3", "a4", "proper-subset"];

/// Default `ξ` for `a4`.
pub const A4_DEFAULT_XI: f64 = 0.08;

/// Time of the even-order nodal point in `proper-subset`.
pub const PROPER_SUBSET_T_HAT: f64 = 1.5;

/// How the switch set of a fixture is predicted.
#[derive(Debug, Clone, PartialEq)]
pub enum SwitchRule {
    Empty,
    /// `{nπ} ∩ (0, T*)`.
    MultiplesOfPi,
    /// `{T* + θ − nπ : nπ ∈ (θ, T* + θ)}` with `θ = arctan(z₂/z₁)` taken from
    /// the multiplier components `coords`.
    RotationPhase { coords: (usize, usize) },
    /// No prediction.
    Unspecified,
}

impl SwitchRule {
    /// Predicted switch times given the computed `T*` and multiplier.
    pub fn predict(&self, t_star: f64, z_star: &[f64]) -> Option<Vec<f64>> {
        match self {
            SwitchRule::Empty => Some(Vec::new()),
            SwitchRule::MultiplesOfPi => {
                let mut out = Vec::new();
                let mut k = 1.0;
                while k * PI < t_star {
                    out.push(k * PI);
                    k += 1.0;
                }
                Some(out)
            }
            SwitchRule::RotationPhase { coords } => {
                let (z1, z2) = (z_star[coords.0], z_star[coords.1]);
                let theta = if z1 == 0.0 { math::sign(z2) * PI / 2.0 } else { libm::atan(z2 / z1) };
                let mut out = Vec::new();
                let mut k = 0.0;
                while k * PI < t_star + theta {
                    if k * PI > theta {
                        out.push(t_star + theta - k * PI);
                    }
                    k += 1.0;
                }
                out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
                Some(out)
            }
            SwitchRule::Unspecified => None,
        }
    }
}

/// Outcomes a fixture is expected to reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub t_star: Option<f64>,
    /// Relative tolerance on `t_star`.
    pub t_star_rel_tol: f64,
    /// Strict lower bound on `T*`.
    pub t_star_above: Option<f64>,
    pub class: Option<BehaviorClass>,
    pub switches: SwitchRule,
    /// Nodal points of even order that must not be switches.
    pub even_nodal_points: Vec<f64>,
}

/// A worked example.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub a: Matrix,
    pub b: Matrix,
    pub x0: Vec<f64>,
    /// Forward multiplier `ẑ` used in the construction of `x0`, if any.
    pub multiplier: Option<Vec<f64>>,
    pub expected: Expected,
}

impl Fixture {
    pub fn problem(&self, tolerances: Tolerances) -> Result<Problem> {
        let p = Problem::new(self.a.clone(), self.b.clone(), self.x0.clone(), tolerances)?.with_label(self.name.clone());
        Ok(match &self.multiplier {
            Some(z) => p.with_multiplier_hint(z.clone()),
            None => p,
        })
    }
}

pub fn by_name(name: &str, xi: Option<f64>) -> Result<Fixture> {
    match name {
        "a1" => Ok(a1()),
        "a2" => Ok(a2()),
        "a3" => Ok(a3()),
        "a4" => a4(xi.unwrap_or(A4_DEFAULT_XI)),
        "proper-subset" => proper_subset(),
        _ => Err(Error::Domain(format!("unknown example '{name}', expected one of {}", NAMES.join(", ")))),
    }
}

fn expected(t_star: Option<f64>, class: BehaviorClass, switches: SwitchRule) -> Expected {
    Expected { t_star, t_star_rel_tol: 2e-7, t_star_above: None, class: Some(class), switches, even_nodal_points: Vec::new() }
}

/// `A = 0`, `B = I₂`, `x₀ = (3, 4)`: `T* = 5`, constant control.
pub fn a1() -> Fixture {
    Fixture {
        name: "a1".into(),
        a: Matrix::zeros(2, 2),
        b: Matrix::identity(2),
        x0: vec![3.0, 4.0],
        multiplier: None,
        expected: expected(Some(5.0), BehaviorClass::A1, SwitchRule::Empty),
    }
}

/// Rotation with full control, `x₀ = (3, 4)`: `T* = 5`, rotating control.
pub fn a2() -> Fixture {
    Fixture {
        name: "a2".into(),
        a: rotation(1.0),
        b: Matrix::identity(2),
        x0: vec![3.0, 4.0],
        multiplier: None,
        expected: expected(Some(5.0), BehaviorClass::A2, SwitchRule::Empty),
    }
}

/// A decaying mode next to a rotation driven through one input.
pub fn a3() -> Fixture {
    let a = Matrix::from_rows(&[&[-1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, -1.0, 0.0]]);
    let b = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]);
    let mut e = expected(None, BehaviorClass::A3, SwitchRule::RotationPhase { coords: (1, 2) });
    e.t_star_above = Some(2.0 * PI);
    Fixture { name: "a3".into(), a, b, x0: vec![0.0, 0.0, 7.0], multiplier: None, expected: e }
}

/// `∫₀^{4π} |sin t| √(4cos²t + 1) dt`, the admissibility bound on `ξ` for `a4`.
pub fn a4_xi_bound_integral() -> f64 {
    let rule = GaussLegendre::new(16);
    (0..4).map(|k| piece_integral(&rule, |t| a4_speed(t), k as f64 * PI, (k + 1) as f64 * PI, 64)).sum()
}

fn a4_speed(t: f64) -> f64 {
    let (s, c) = (libm::sin(t), libm::cos(t));
    s.abs() * libm::sqrt(4.0 * c * c + 1.0)
}

/// Two rotations at frequencies 1 and 2, each driven through one input,
/// steered along the multiplier `ẑ = (ξ, 0, ξ, 0)`.
pub fn a4(xi: f64) -> Result<Fixture> {
    let bound = a4_xi_bound_integral();
    if !xi.is_finite() || xi == 0.0 || xi.abs() * bound >= 1.0 {
        return Err(Error::Domain(format!(
            "xi = {xi} must be nonzero with |xi| * {bound:.12} < 1 (|xi| < {:.12})",
            1.0 / bound
        )));
    }
    let mut a = Matrix::zeros(4, 4);
    a[(0, 1)] = 1.0;
    a[(1, 0)] = -1.0;
    a[(2, 3)] = 2.0;
    a[(3, 2)] = -2.0;
    let b = Matrix::from_rows(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]);
    let z_hat = vec![xi, 0.0, xi, 0.0];
    let rule = GaussLegendre::new(16);
    let speed = |t: f64| xi.abs() * a4_speed(t);
    // accumulate whole half-periods, then bisect inside the last one
    let mut acc = 0.0;
    let mut k = 0.0;
    loop {
        let piece = piece_integral(&rule, speed, k * PI, (k + 1.0) * PI, 64);
        if acc + piece >= 1.0 {
            break;
        }
        acc += piece;
        k += 1.0;
    }
    let start = k * PI;
    let t_bar = bisect(start, start + PI, |t| acc + piece_integral(&rule, speed, start, t, 64) - 1.0);
    let mut breaks: Vec<f64> = (0..=k as usize).map(|j| j as f64 * PI).collect();
    breaks.push(t_bar);
    let x0 = steer_from(&a, &b, &z_hat, &breaks)?;
    let mut e = expected(Some(t_bar), BehaviorClass::A4, SwitchRule::MultiplesOfPi);
    e.t_star_rel_tol = 1e-5;
    e.t_star_above = Some(4.0 * PI);
    Ok(Fixture { name: "a4".into(), a, b, x0, multiplier: Some(z_hat), expected: e })
}

/// A single-input system whose switching map has a double zero at `t̂`: the
/// control touches zero there without switching.
pub fn proper_subset() -> Result<Fixture> {
    let a = Matrix::from_rows(&[
        &[-1.0, 0.0, 1.0, 1.0],
        &[0.0, -1.0, 0.0, 1.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, -1.0, 0.0],
    ]);
    let b = Matrix::from_rows(&[&[0.0], &[0.0], &[0.0], &[1.0]]);
    let chain = krylov_chain(&a, &b, 1e-10);
    let h2 = chain.get(2).filter(|h| h.cols() == 1).ok_or_else(|| Error::Numeric("H_2 is not one-dimensional".into()))?;
    let e_hat = h2.column(0);
    let t_hat = PROPER_SUBSET_T_HAT;
    let f_hat = mat_exp(&a.transpose(), t_hat)?.mul_vec(&e_hat);
    let bt = b.transpose();
    let s = |t: f64| -> f64 {
        match mat_exp(&a.transpose(), -t) {
            Ok(e) => dot(bt.row(0), &e.mul_vec(&f_hat)),
            Err(_) => f64::NAN,
        }
    };
    let rule = GaussLegendre::new(16);
    let before = abs_integral(&rule, s, 0.0, t_hat);
    let xi = 0.5 / before;
    // extend the horizon until ξ ∫ |s| reaches 1
    let step = 0.5;
    let (mut lo, mut acc) = (t_hat, xi * before);
    loop {
        let piece = xi * abs_integral(&rule, s, lo, lo + step);
        if acc + piece >= 1.0 {
            break;
        }
        acc += piece;
        lo += step;
        if lo > 1e3 {
            return Err(Error::Numeric("could not reach the unit support level".into()));
        }
    }
    let t_bar = bisect(lo, lo + step, |t| acc + xi * abs_integral(&rule, s, lo, t) - 1.0);
    let z_hat: Vec<f64> = f_hat.iter().map(|v| xi * v).collect();
    let mut breaks = vec![0.0];
    breaks.extend(sign_changes(s, 0.0, t_bar));
    breaks.push(t_bar);
    let x0 = steer_from(&a, &b, &z_hat, &breaks)?;
    let e = Expected {
        t_star: Some(t_bar),
        t_star_rel_tol: 1e-5,
        t_star_above: None,
        class: None,
        switches: SwitchRule::Unspecified,
        even_nodal_points: vec![t_hat],
    };
    Ok(Fixture { name: "proper-subset".into(), a, b, x0, multiplier: Some(z_hat), expected: e })
}

/// `[[0, ω], [−ω, 0]]`.
pub fn rotation(omega: f64) -> Matrix {
    Matrix::from_rows(&[&[0.0, omega], &[-omega, 0.0]])
}

/// `x₀ = −∫₀^{T̄} e^{−At} B ū(t) dt` with `ū = s/‖s‖`, `s(t) = Bᵀe^{−Aᵀt}ẑ`,
/// integrated piecewise between the given breakpoints.
fn steer_from(a: &Matrix, b: &Matrix, z_hat: &[f64], breaks: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    let rule = GaussLegendre::new(16);
    let bt = b.transpose();
    let mut x0 = vec![0.0; n];
    for w in breaks.windows(2) {
        let panels = 64;
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let (lo, hi) = (w[0] + p as f64 * h, w[0] + (p + 1) as f64 * h);
            for i in 0..rule.len() {
                let t = rule.node_on(i, lo, hi);
                let back = mat_exp(a, -t)?;
                let s = bt.mul_vec(&back.transpose().mul_vec(z_hat));
                let sn = norm(&s);
                if sn == 0.0 {
                    continue;
                }
                let u: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let f = back.mul_vec(&b.mul_vec(&u));
                let wgt = rule.weights[i] * 0.5 * (hi - lo);
                for (x, fi) in x0.iter_mut().zip(&f) {
                    *x -= wgt * fi;
                }
            }
        }
    }
    Ok(x0)
}

/// Composite Gauss–Legendre integral of a smooth function.
fn piece_integral<F: Fn(f64) -> f64>(rule: &GaussLegendre, f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|p| rule.integrate(&f, a + p as f64 * h, a + (p + 1) as f64 * h)).sum()
}

/// `∫ₐᵇ |f|` for a smooth scalar `f`, split at its sign changes.
fn abs_integral<F: Fn(f64) -> f64 + Copy>(rule: &GaussLegendre, f: F, a: f64, b: f64) -> f64 {
    let mut pts = vec![a];
    pts.extend(sign_changes(f, a, b));
    pts.push(b);
    pts.windows(2).map(|w| piece_integral(rule, f, w[0], w[1], 16).abs()).sum()
}

fn sign_changes<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Vec<f64> {
    let samples = 400;
    let h = (b - a) / samples as f64;
    let mut out = Vec::new();
    let mut prev = f(a);
    for i in 1..=samples {
        let t = a + i as f64 * h;
        let cur = f(t);
        if prev * cur < 0.0 {
            out.push(bisect(t - h, t, |x| -math::sign(prev) * f(x)));
        }
        prev = cur;
    }
    out
}

/// Root of an increasing-through-zero `g` on `[lo, hi]` (`g(lo) < 0 ≤ g(hi)`).
fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, g: F) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
