//! Independent checks of a solution: forward simulation, the suboptimality
//! probe and a ledger of structural checks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dual::Problem;
use crate::error::Result;
use crate::linalg::{add_vec, mat_exp, norm, sub_vec, Matrix};
use crate::quadrature::GaussLegendre;
use crate::solver::{self, DualCertificate};
use crate::structure::StructureFacts;
use crate::synthesis::{self, BehaviorClass, OptimalControl, SwitchAnalysis};

/// A control law for simulation.
pub trait ControlLaw {
    fn dim(&self) -> usize;
    fn value(&self, t: f64) -> Vec<f64>;
    /// Times where the law may be discontinuous or nonsmooth.
    fn breakpoints(&self) -> Vec<f64>;
}

impl ControlLaw for OptimalControl {
    fn dim(&self) -> usize {
        self.map.value(0.0).len()
    }

    fn value(&self, t: f64) -> Vec<f64> {
        self.control_at(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.nodal_points.iter().map(|p| p.t).chain(self.dips.iter().copied()).collect();
        b.push(self.t_star());
        b
    }
}

/// A control given by a closure, with its breakpoints.
pub struct FnControl<F: Fn(f64) -> Vec<f64>> {
    pub m: usize,
    pub f: F,
    pub breaks: Vec<f64>,
}

impl<F: Fn(f64) -> Vec<f64>> ControlLaw for FnControl<F> {
    fn dim(&self) -> usize {
        self.m
    }

    fn value(&self, t: f64) -> Vec<f64> {
        (self.f)(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `‖x(T)‖`.
    pub terminal_error: f64,
}

/// Variation of constants on each segment between breakpoints. Each segment
/// starts with `panels_per_segment` Gauss–Legendre panels, and a panel is
/// bisected until the Legendre tail of its integrand is negligible.
pub fn simulate<C: ControlLaw + ?Sized>(problem: &Problem, control: &C, t_end: f64, panels_per_segment: usize) -> Result<Trajectory> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(crate::Error::Domain(format!("simulation horizon {t_end} must be positive and finite")));
    }
    let panels = panels_per_segment.max(1);
    let mut breaks = vec![0.0];
    let mut inner: Vec<f64> = control.breakpoints().into_iter().filter(|t| *t > 0.0 && *t < t_end).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    inner.dedup();
    breaks.extend(inner);
    breaks.push(t_end);
    let stepper = Stepper { a: &problem.system.a, b: &problem.system.b, rule: GaussLegendre::new(16), tol: 1e-11 };
    let mut x = problem.x0.clone();
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    for w in breaks.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        if h <= 0.0 {
            continue;
        }
        for p in 0..panels {
            let lo = w[0] + p as f64 * h;
            let hi = if p + 1 == panels { w[1] } else { lo + h };
            x = stepper.advance(control, &x, lo, hi, 0)?;
            times.push(hi);
            states.push(x.clone());
        }
    }
    Ok(Trajectory { times, states, terminal_error: norm(&x) })
}

struct Stepper<'a> {
    a: &'a Matrix,
    b: &'a Matrix,
    rule: GaussLegendre,
    /// Accepted Legendre tail relative to the integrand size.
    tol: f64,
}

impl Stepper<'_> {
    /// `x(hi)` from `x(lo)`.
    fn advance<C: ControlLaw + ?Sized>(&self, control: &C, x: &[f64], lo: f64, hi: f64, depth: u32) -> Result<Vec<f64>> {
        let h = hi - lo;
        let n = x.len();
        let nodes = self.rule.len();
        let mut f = vec![0.0; nodes * n];
        for i in 0..nodes {
            let sigma = self.rule.node_on(i, 0.0, h);
            let v = mat_exp(self.a, h - sigma)?.mul_vec(&self.b.mul_vec(&control.value(lo + sigma)));
            f[i * n..(i + 1) * n].copy_from_slice(&v);
        }
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let tail = (0..n)
            .map(|r| {
                let comp: Vec<f64> = (0..nodes).map(|i| f[i * n + r]).collect();
                self.rule.tail(&comp)
            })
            .fold(0.0, f64::max);
        if depth < 30 && tail > self.tol * scale && h > 1e-12 * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            let xm = self.advance(control, x, lo, mid, depth + 1)?;
            return self.advance(control, &xm, mid, hi, depth + 1);
        }
        let mut next = mat_exp(self.a, h)?.mul_vec(x);
        for i in 0..nodes {
            let wgt = 0.5 * h * self.rule.weights[i];
            for (xn, fi) in next.iter_mut().zip(&f[i * n..(i + 1) * n]) {
                *xn += wgt * fi;
            }
        }
        Ok(next)
    }
}

/// States at the given increasing times, starting from `x0` at time 0. The
/// control must be smooth between consecutive times.
pub fn states_at<C: ControlLaw + ?Sized>(problem: &Problem, control: &C, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let a = &problem.system.a;
    let b = &problem.system.b;
    let rule = GaussLegendre::new(16);
    let mut x = problem.x0.clone();
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let h = t - prev;
        if h < 0.0 {
            return Err(crate::Error::Domain(format!("times must increase, got {t} after {prev}")));
        }
        if h > 0.0 {
            let mut next = mat_exp(a, h)?.mul_vec(&x);
            for i in 0..rule.len() {
                let sigma = rule.node_on(i, 0.0, h);
                let f = mat_exp(a, h - sigma)?.mul_vec(&b.mul_vec(&control.value(prev + sigma)));
                let wgt = 0.5 * h * rule.weights[i];
                for (xn, fi) in next.iter_mut().zip(&f) {
                    *xn += wgt * fi;
                }
            }
            x = next;
        }
        out.push(x.clone());
        prev = t;
    }
    Ok(out)
}

/// `φ(T*(1 − δ))` in final-time coordinates. When the plane minimizer
/// already lies below the guard band its value is returned instead of the
/// full minimum, since it bounds `φ` from above.
pub fn suboptimality_margin(problem: &Problem, cert: &DualCertificate, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(crate::Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let t = cert.t_star * (1.0 - delta);
    let witness = solver::terminal_witness(problem, t, Some(&cert.z_star))?;
    if witness < -solver::guard(problem) {
        return Ok(witness);
    }
    solver::terminal_margin(problem, t, Some(&cert.z_star))
}

/// True when `φ(T*(1 − δ))` is below minus the guard band, so no admissible
/// control reaches the origin by `T*(1 − δ)`.
pub fn suboptimality_probe(problem: &Problem, cert: &DualCertificate, delta: f64) -> Result<bool> {
    Ok(suboptimality_margin(problem, cert, delta)? < -solver::guard(problem))
}

/// One line of the ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// A failed check, keyed by a hash of the problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub problem_hash: String,
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub structure: StructureFacts,
    pub control: OptimalControl,
    pub analysis: SwitchAnalysis,
    /// `x(T*)` from simulation.
    pub terminal_state: Vec<f64>,
    /// `‖x(T*)‖`.
    pub terminal_error: f64,
    pub bang_bang_residual: f64,
    pub jump_symmetry_residual: f64,
    pub window_bound_ok: bool,
    /// Start of the window with the most switches, and their number.
    pub worst_window: (f64, usize),
    pub max_principle_residual: f64,
    pub suboptimality_delta: f64,
    pub suboptimality_margin: f64,
    pub suboptimality_ok: bool,
    pub behavior_class: BehaviorClass,
    pub checks: Vec<Check>,
    pub discrepancies: Vec<Discrepancy>,
}

impl Report {
    pub fn certificate(&self) -> &DualCertificate {
        &self.control.certificate
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const TERMINAL_TOL: f64 = 1e-5;
pub const BANG_BANG_TOL: f64 = 1e-9;
pub const JUMP_TOL: f64 = 1e-6;
pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;
pub const INCLUSION_TOL: f64 = 1e-6;
pub const SIMULATION_TOL: f64 = 1e-10;
pub const SUBOPTIMALITY_DELTA: f64 = 0.02;

/// Solves, synthesizes, simulates and runs every check.
pub fn full_report(problem: &Problem) -> Result<Report> {
    let cert = solver::solve(problem)?;
    let control = synthesis::synthesize(problem, &cert)?;
    let analysis = synthesis::analyze(problem, &control)?;
    report_for(problem, control, analysis)
}

/// Runs the checks on an already synthesized control.
pub fn report_for(problem: &Problem, control: OptimalControl, analysis: SwitchAnalysis) -> Result<Report> {
    let facts = problem.system.facts.clone();
    let t_star = control.t_star();
    let x0n = norm(&problem.x0);
    let mut checks = Vec::new();
    let mut push = |name: &str, residual: f64, tolerance: f64, detail: String| {
        checks.push(Check { name: name.to_string(), passed: residual <= tolerance, residual, tolerance, detail });
    };

    let panels = 8;
    let traj = simulate(problem, &control, t_star, panels)?;
    let fine = simulate(problem, &control, t_star, 2 * panels)?;
    let terminal_state = traj.states.last().cloned().unwrap_or_default();
    let terminal_error = traj.terminal_error;
    push("terminal_error", terminal_error / x0n, TERMINAL_TOL, "relative to |x0|".into());
    let drift = norm(&sub_vec(&terminal_state, fine.states.last().map_or(&terminal_state, |v| v))) / x0n;
    push("simulation_consistency", drift, SIMULATION_TOL, "relative change of x(T*) when panels are halved".into());

    let mut rng = ChaCha8Rng::seed_from_u64(problem.tolerances.seed);
    let random_times: Vec<f64> = (0..1000).map(|_| t_star * (1.0 - rng.random::<f64>())).collect();
    let bang_bang_residual = random_times.iter().map(|t| (norm(&control.control_at(*t)) - 1.0).abs()).fold(0.0, f64::max);
    push("bang_bang", bang_bang_residual, BANG_BANG_TOL, "max | |u(t)| - 1 | over 1000 random t in (0, T*]".into());

    let scale = t_star.max(1.0);
    let ladder: Vec<f64> = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9].iter().map(|e| e * scale).collect();
    let mut jump_symmetry_residual: f64 = 0.0;
    let mut parity_residual: f64 = 0.0;
    let mut left_continuity: f64 = 0.0;
    for p in &control.nodal_points {
        let sides = |combine: fn(&[f64], &[f64]) -> Vec<f64>| {
            ladder
                .iter()
                .map(|e| norm(&combine(&control.control_at(p.t - e), &control.control_at(p.t + e))))
                .fold(f64::INFINITY, f64::min)
        };
        if p.is_switch {
            jump_symmetry_residual = jump_symmetry_residual.max(sides(add_vec));
        } else {
            parity_residual = parity_residual.max(sides(sub_vec));
        }
        let at = control.control_at(p.t);
        let lc = ladder.iter().map(|e| norm(&sub_vec(&at, &control.control_at(p.t - e)))).fold(f64::INFINITY, f64::min);
        left_continuity = left_continuity.max(lc);
    }
    push("jump_symmetry", jump_symmetry_residual, JUMP_TOL, "max over switches of |u(t-e) + u(t+e)|".into());
    push("even_order_continuity", parity_residual, JUMP_TOL, "max over even-order nodal points of |u(t-e) - u(t+e)|".into());
    push("left_continuity", left_continuity, JUMP_TOL, "max over nodal points of |u(t) - u(t-e)|".into());

    let bound = facts.q_ab.saturating_sub(1);
    let (count, start) = synthesis::max_window_count(&analysis.switch_set, facts.d_a);
    let window_bound_ok = count <= bound;
    push(
        "window_bound",
        count as f64,
        bound as f64,
        format!("{count} switches in the window starting at {start}; q_AB - 1 = {bound}"),
    );

    let samples: Vec<(f64, Vec<f64>)> = (0..1000)
        .map(|i| {
            let t = (i as f64 + 0.5) * t_star / 1000.0;
            (t, control.control_at(t))
        })
        .chain(random_times.iter().map(|t| (*t, control.control_at(*t))))
        .collect();
    let max_principle_residual = solver::max_principle_residual(problem, &control.certificate, &samples)?;
    push("max_principle", max_principle_residual, MAX_PRINCIPLE_TOL, "max of |s| - <u, s> over samples".into());

    let delta = SUBOPTIMALITY_DELTA;
    let suboptimality_margin = suboptimality_margin(problem, &control.certificate, delta)?;
    let guard = solver::guard(problem);
    let suboptimality_ok = suboptimality_margin < -guard;
    checks.push(Check {
        name: "suboptimality".into(),
        passed: suboptimality_ok,
        residual: suboptimality_margin,
        tolerance: -guard,
        detail: format!("phi(T*(1 - {delta})) must be below -guard"),
    });

    let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) * t_star / 1000.0).collect();
    let zero = control.order_tol * control.max_switching_norm;
    let vanishing = grid.iter().filter(|t| norm(&control.switching_map(**t)) <= zero).count();
    checks.push(Check {
        name: "switching_map_nonvanishing".into(),
        passed: vanishing <= 10,
        residual: vanishing as f64 / 1000.0,
        tolerance: 0.01,
        detail: "fraction of uniform samples where the switching map vanishes".into(),
    });

    if !analysis.directions.is_empty() {
        let worst = analysis.directions.iter().map(|d| d.residual).fold(0.0, f64::max);
        checks.push(Check {
            name: "direction_inclusion".into(),
            passed: worst <= INCLUSION_TOL,
            residual: worst,
            tolerance: INCLUSION_TOL,
            detail: format!("{} directions", analysis.directions.len()),
        });
    }
    if let Some(ok) = analysis.two_direction_check {
        checks.push(Check {
            name: "two_directions".into(),
            passed: ok,
            residual: analysis.directions.len() as f64,
            tolerance: 2.0,
            detail: "at most two switching directions".into(),
        });
    }
    if !analysis.switch_set.is_empty() {
        let values: Vec<Vec<f64>> = grid.iter().map(|t| control.control_at(*t)).collect();
        let (locally_constant, spread) = two_valued(&values, problem.tolerances.const_tol);
        checks.push(Check {
            name: "two_valued".into(),
            passed: !locally_constant || spread <= problem.tolerances.const_tol,
            residual: if locally_constant { spread } else { 0.0 },
            tolerance: problem.tolerances.const_tol,
            detail: if locally_constant {
                "constant on a subinterval, so every sample must be one of two antipodal values".into()
            } else {
                "never locally constant".into()
            },
        });
    }

    let hash = problem_hash(problem);
    let discrepancies = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| Discrepancy { problem_hash: hash.clone(), check: c.name.clone(), residual: c.residual, tolerance: c.tolerance })
        .collect();
    Ok(Report {
        structure: facts,
        behavior_class: analysis.behavior,
        control,
        analysis,
        terminal_state,
        terminal_error,
        bang_bang_residual,
        jump_symmetry_residual,
        window_bound_ok,
        worst_window: (start, count),
        max_principle_residual,
        suboptimality_delta: delta,
        suboptimality_margin,
        suboptimality_ok,
        checks,
        discrepancies,
    })
}

/// Looks for a run of samples spanning at least a hundredth of the horizon on
/// which the control is constant. Returns whether one exists and, if so, the
/// largest distance of any sample from `±v` with `v` the value on that run.
fn two_valued(values: &[Vec<f64>], const_tol: f64) -> (bool, f64) {
    let run = (values.len() / 100).max(2);
    for start in 0..values.len().saturating_sub(run - 1) {
        let v = &values[start];
        if values[start..start + run].iter().all(|u| norm(&sub_vec(u, v)) <= const_tol) {
            let spread = values.iter().map(|u| norm(&sub_vec(u, v)).min(norm(&add_vec(u, v)))).fold(0.0, f64::max);
            return (true, spread);
        }
    }
    (false, 0.0)
}

/// FNV-1a over the bit patterns of `A`, `B` and `x0`, as 16 hex digits.
pub fn problem_hash(problem: &Problem) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let sys = &problem.system;
    let dims = [sys.n() as u64, sys.m() as u64];
    let words = dims
        .iter()
        .copied()
        .chain(sys.a.as_slice().iter().chain(sys.b.as_slice()).chain(&problem.x0).map(|v| v.to_bits()));
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}
