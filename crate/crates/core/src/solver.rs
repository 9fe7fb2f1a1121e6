//! Optimal time by bracketing the dual feasibility margin, and extraction of
//! the maximum-principle multiplier.
//!
//! Feasibility of a horizon `T` is decided through
//! `G(T) = min { ∫₀ᵀ ‖B₁ᵀe^{A₁ᵀσ}z‖ dσ : ⟨e^{A₁T}x̃₀, z⟩ = −1 }`, a convex
//! problem: `φ(T) ≥ 0` exactly when `G(T) ≥ 1`. `G` is nondecreasing with
//! `G'(T) = ‖B₁ᵀ z_T‖`, so the bracket is shrunk by safeguarded Newton steps.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dual::{self, plane_probe, sphere, Functional, PlaneProbe, Problem, Reduced};
use crate::error::{Error, Result};
use crate::linalg::{dot, mat_exp, norm, normalized};

/// Optimal time and multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub t_star: f64,
    /// Unit multiplier in the controllable subspace; the switching map is
    /// `t ↦ Bᵀ e^{Aᵀ(T*−t)} z*`.
    pub z_star: Vec<f64>,
    /// `e^{AᵀT*} z*`.
    pub z_hat_star: Vec<f64>,
    /// Support gap at `(T*, ẑ*/‖ẑ*‖)`; zero up to tolerance.
    pub phi_at_t_star: f64,
    /// Final bracket: infeasible at the left end, feasible at the right end.
    pub bracket: (f64, f64),
    /// Size of the multiplier candidate outside the controllable subspace
    /// before projection.
    pub projection_residual: f64,
    /// Relative tangential gradient left by the dual solve at `T*`.
    pub dual_residual: f64,
    /// Restarts of the sphere search at `T*` ended at distinct minimizers.
    pub multiplier_nonunique: bool,
    /// Largest angle between such minimizers.
    pub minimizer_spread: f64,
    /// The problem's multiplier hint attained the dual optimum and was used.
    pub hint_used: bool,
    /// `(T, G(T))` for every horizon probed.
    pub probes: Vec<(f64, f64)>,
}

impl DualCertificate {
    /// The probe log as text, for diagnostics.
    pub fn probe_log(&self) -> String {
        let mut s = String::new();
        for (t, g) in &self.probes {
            s.push_str(&format!("T={t:.12e} G={g:.12e}; "));
        }
        s
    }
}

/// Width of the band around `G = 1` treated as feasible.
pub(crate) fn guard(problem: &Problem) -> f64 {
    10.0 * (problem.tolerances.quad_tol + 1e-12)
}

pub fn solve(problem: &Problem) -> Result<DualCertificate> {
    let red = problem.reduced()?;
    let tol = &problem.tolerances;
    let guard = guard(problem);
    let mut probes: Vec<(f64, f64)> = Vec::new();
    let mut run = |t: f64, warm: Option<&[f64]>| -> Result<PlaneProbe> {
        let p = plane_probe(&red, t, warm)?;
        probes.push((t, p.g));
        Ok(p)
    };

    // bracket by doubling
    let mut lo: Option<PlaneProbe> = None;
    let mut t = 1.0f64.min(tol.horizon_cap);
    let mut hi = loop {
        let warm = lo.as_ref().map(|p| p.z.clone());
        let p = run(t, warm.as_deref())?;
        if p.g >= 1.0 - guard {
            break p;
        }
        if t >= tol.horizon_cap {
            return Err(Error::Inadmissible(format!(
                "no feasible horizon up to the cap {}: N(T_cap, x0) = {:.6e} > 1",
                tol.horizon_cap,
                1.0 / p.g
            )));
        }
        lo = Some(p);
        t = (2.0 * t).min(tol.horizon_cap);
    };

    let mut lo_t = lo.as_ref().map_or(0.0, |p| p.t);
    let mut last = hi.clone();
    let mut root: Option<PlaneProbe> = None;
    // residual of the probe before `last`; Newton is kept while it contracts
    let mut prev_residual = f64::INFINITY;
    for _ in 0..200 {
        let newton = if last.slope > 0.0 { last.t + (1.0 - last.g) / last.slope } else { f64::NAN };
        let inside = newton > lo_t && newton < hi.t;
        let residual = (1.0 - last.g).abs();
        let t_next = if inside && residual < 0.25 * prev_residual { newton } else { 0.5 * (lo_t + hi.t) };
        prev_residual = residual;
        let p = run(t_next, Some(&last.z))?;
        if (1.0 - p.g).abs() <= 4.0 * f64::EPSILON || (p.slope > 0.0 && ((1.0 - p.g) / p.slope).abs() <= 1e-14 * p.t) {
            root = Some(p.clone());
        }
        if p.g >= 1.0 - guard {
            hi = p.clone();
        } else {
            lo_t = p.t;
        }
        last = p;
        if root.is_some() || hi.t - lo_t <= 1e-3 * tol.time_tol * hi.t {
            break;
        }
    }
    let at_star = match root {
        Some(p) => p,
        None => hi.clone(),
    };
    let t_star = at_star.t;
    // final bracket around the estimate
    let half = 0.25 * tol.time_tol * t_star;
    let mut bracket = (lo_t.max(0.0), hi.t);
    if t_star - half > bracket.0 && t_star + half < bracket.1 || bracket.1 - bracket.0 > tol.time_tol * bracket.1 {
        let left = run(t_star - half, Some(&at_star.z))?;
        let right = run(t_star + half, Some(&at_star.z))?;
        if left.g < 1.0 - guard && right.g >= 1.0 - guard {
            bracket = (left.t, right.t);
        } else if right.g >= 1.0 - guard {
            bracket.1 = bracket.1.min(right.t);
        }
    }
    if bracket.1 - bracket.0 > tol.time_tol * bracket.1 * 1.0001 {
        return Err(Error::Numeric(format!(
            "bisection bracket [{}, {}] did not shrink to the time tolerance; probes: {}",
            bracket.0,
            bracket.1,
            probes.iter().map(|(t, g)| format!("({t:.6e}, {g:.6e})")).collect::<Vec<_>>().join(" ")
        )));
    }

    // multiplier
    let y = red.free_response(t_star)?;
    let mut z_red = at_star.z.clone();
    let mut projection_residual = 0.0;
    let mut hint_used = false;
    if let Some(hint) = &problem.multiplier_hint {
        if let Some((z, residual)) = validate_hint(problem, &red, hint, t_star, &y, at_star.g)? {
            z_red = z;
            projection_residual = residual;
            hint_used = true;
        }
    }
    let (nonunique, spread) = multiplier_spread(problem, &red, t_star, &y, &z_red)?;

    let z_full = normalized(&red.lift(&z_red)).ok_or_else(|| Error::Numeric("multiplier vanished".into()))?;
    let z_hat = mat_exp(&problem.system.a.transpose(), t_star)?.mul_vec(&z_full);
    let z_hat_unit = normalized(&z_hat).ok_or_else(|| Error::Numeric("forward multiplier vanished".into()))?;
    let phi_at_t_star = dual::support_gap(problem, t_star, &z_hat_unit)?.gap;

    Ok(DualCertificate {
        t_star,
        z_star: z_full,
        z_hat_star: z_hat,
        phi_at_t_star,
        bracket,
        projection_residual,
        dual_residual: at_star.residual,
        multiplier_nonunique: nonunique,
        minimizer_spread: spread,
        hint_used,
        probes,
    })
}

/// Maps a forward multiplier hint to the final-time plane and keeps it when
/// its support integral matches the dual optimum `g`. The part of the hint
/// outside the controllable subspace is invisible to the switching map; it is
/// dropped and its relative size returned.
fn validate_hint(
    problem: &Problem,
    red: &Reduced,
    hint: &[f64],
    t_star: f64,
    y: &[f64],
    g: f64,
) -> Result<Option<(Vec<f64>, f64)>> {
    if hint.len() != problem.system.n() || norm(hint) == 0.0 {
        return Ok(None);
    }
    let restricted = red.restrict(hint);
    let off = norm(&crate::linalg::sub_vec(hint, &red.lift(&restricted))) / norm(hint);
    let back = mat_exp(&red.a1.transpose(), -t_star)?.mul_vec(&restricted);
    let pairing = dot(y, &back);
    if !(pairing < 0.0) {
        return Ok(None);
    }
    let z: Vec<f64> = back.iter().map(|v| -v / pairing).collect();
    let kernel = red.backward_kernel(t_star)?;
    let h = kernel.eval(&z).0;
    if (h - g).abs() <= 1e-8 * g.max(1.0) {
        Ok(Some((z, off)))
    } else {
        Ok(None)
    }
}

/// Runs the multistart sphere search at `T*` and reports whether distinct
/// restarts reached the minimum.
fn multiplier_spread(problem: &Problem, red: &Reduced, t_star: f64, y: &[f64], z: &[f64]) -> Result<(bool, f64)> {
    if red.k() < 2 {
        return Ok((false, 0.0));
    }
    let kernel = red.backward_kernel(t_star)?;
    let obj = Functional { kernel: &kernel, linear: y };
    let warm: Vec<Vec<f64>> = normalized(z).into_iter().collect();
    let tol = &problem.tolerances;
    let res = sphere::minimize(&obj, tol.sphere_restarts, tol.seed, &warm);
    let spread = sphere::spread_of_minimizers(&res, 1e-6);
    Ok((spread > 1e-3, spread))
}

/// `max_t ( ‖s(t)‖ − ⟨u(t), s(t)⟩ )` over samples `(t, u(t))`, where `s` is
/// the switching map of the certificate.
pub fn max_principle_residual(problem: &Problem, cert: &DualCertificate, samples: &[(f64, Vec<f64>)]) -> Result<f64> {
    let at = problem.system.a.transpose();
    let mut worst: f64 = 0.0;
    for (t, u) in samples {
        let s = problem.system.b.tr_mul_vec(&mat_exp(&at, cert.t_star - t)?.mul_vec(&cert.z_star));
        worst = worst.max(norm(&s) - dot(u, &s));
    }
    Ok(worst.max(0.0))
}

/// Value of the final-time functional at the normalized plane minimizer for
/// horizon `t`. It bounds `φ(T)` from above, so a negative value already
/// proves that `t` is too short.
pub fn terminal_witness(problem: &Problem, t: f64, warm: Option<&[f64]>) -> Result<f64> {
    let red = problem.reduced()?;
    let y = red.free_response(t)?;
    let kernel = red.backward_kernel(t)?;
    let obj = Functional { kernel: &kernel, linear: &y };
    let warm = warm.map(|w| red.restrict(w));
    let p = plane_probe(&red, t, warm.as_deref())?;
    let z = normalized(&p.z).ok_or_else(|| Error::Numeric("plane minimizer vanished".into()))?;
    Ok(sphere::Objective::value(&obj, &z))
}

/// `φ(T)` evaluated in final-time coordinates and warm-started from a full
/// final-time multiplier; negative values
/// certify that `T` is too short. Cheaper and better scaled than
/// [`dual::feasibility_margin`], with the same sign.
pub fn terminal_margin(problem: &Problem, t: f64, warm: Option<&[f64]>) -> Result<f64> {
    let red = problem.reduced()?;
    let y = red.free_response(t)?;
    let kernel = red.backward_kernel(t)?;
    let obj = Functional { kernel: &kernel, linear: &y };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let warm = warm.map(|w| red.restrict(w));
    if let Ok(p) = plane_probe(&red, t, warm.as_deref()) {
        if let Some(v) = normalized(&p.z) {
            starts.push(v);
        }
    }
    if let Some(v) = normalized(&y) {
        starts.push(v.iter().map(|x| -x).collect());
    }
    let tol = &problem.tolerances;
    Ok(sphere::minimize(&obj, tol.sphere_restarts, tol.seed, &starts).value)
}

