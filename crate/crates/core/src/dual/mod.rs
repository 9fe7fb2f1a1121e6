//! Dual description of reachability.
//!
//! The origin is reachable from `x₀` by time `T` exactly when
//! `∫₀ᵀ ‖Bᵀe^{−Aᵀs}z‖ ds + ⟨x₀, z⟩ ≥ 0` for every `z`. Everything here works
//! in the coordinates of the controllable subspace given by the Kalman form.

mod kernel;
pub(crate) mod plane;
pub(crate) mod sphere;

use alloc::string::String;
use alloc::vec::Vec;

pub(crate) use kernel::Kernel;
use sphere::Objective;

use crate::error::{Error, Result};
use crate::linalg::{dot, kalman_decompose, mat_exp, norm, normalized, KalmanForm, Matrix};
use crate::structure::StructureFacts;

/// Numerical knobs shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative threshold for numerical rank decisions.
    pub rank_tol: f64,
    /// Relative width of the final bracket on `T*`.
    pub time_tol: f64,
    /// Nodal threshold, relative to the largest switching-map norm.
    pub zero_tol: f64,
    /// Absolute quadrature target for the support integral.
    pub quad_tol: f64,
    pub sphere_restarts: usize,
    /// An eigenvalue with `|Im λ| ≤ imag_tol · max(1, ‖A‖)` counts as real.
    pub imag_tol: f64,
    /// Threshold for a vanishing derivative in the jump-order test.
    pub order_tol: f64,
    /// Constancy threshold for the behavior classification.
    pub const_tol: f64,
    /// Largest horizon tried before giving up on admissibility.
    pub horizon_cap: f64,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            time_tol: 1e-8,
            zero_tol: 1e-9,
            quad_tol: 1e-12,
            sphere_restarts: 32,
            imag_tol: 1e-9,
            order_tol: 1e-8,
            const_tol: 1e-6,
            horizon_cap: 1e3,
            seed: 0x5eed,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("rank_tol", self.rank_tol),
            ("time_tol", self.time_tol),
            ("zero_tol", self.zero_tol),
            ("quad_tol", self.quad_tol),
            ("imag_tol", self.imag_tol),
            ("order_tol", self.order_tol),
            ("const_tol", self.const_tol),
            ("horizon_cap", self.horizon_cap),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(alloc::format!("tolerance {name} = {v} must be positive and finite")));
            }
        }
        if self.sphere_restarts == 0 {
            return Err(Error::Domain("sphere_restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// The pair `(A, B)` with its structural facts and Kalman form.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub facts: StructureFacts,
    pub kalman: KalmanForm,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Matrix, tol: &Tolerances) -> Result<Self> {
        if !a.is_square() || a.rows() == 0 {
            return Err(Error::Dimension(alloc::format!("A must be square and nonempty, got {}x{}", a.rows(), a.cols())));
        }
        if b.rows() != a.rows() || b.cols() == 0 {
            return Err(Error::Dimension(alloc::format!(
                "B must be {}xm with m >= 1, got {}x{}",
                a.rows(),
                b.rows(),
                b.cols()
            )));
        }
        if b.max_abs() == 0.0 {
            return Err(Error::Domain("B is zero".into()));
        }
        let facts = StructureFacts::compute(&a, &b, tol.rank_tol, tol.imag_tol)?;
        let kalman = kalman_decompose(&a, &b, tol.rank_tol);
        Ok(Self { a, b, facts, kalman })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }
}

/// A system, an initial state `x₀ ≠ 0` and tolerances.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: LinearSystem,
    pub x0: Vec<f64>,
    pub tolerances: Tolerances,
    /// Optional candidate for the forward multiplier `ẑ*`; used in place of
    /// the computed one when it attains the same dual optimum.
    pub multiplier_hint: Option<Vec<f64>>,
    pub label: Option<String>,
}

impl Problem {
    pub fn new(a: Matrix, b: Matrix, x0: Vec<f64>, tolerances: Tolerances) -> Result<Self> {
        tolerances.validate()?;
        let system = LinearSystem::new(a, b, &tolerances)?;
        if x0.len() != system.n() {
            return Err(Error::Dimension(alloc::format!("x0 has {} entries, expected {}", x0.len(), system.n())));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("x0 has a non-finite entry".into()));
        }
        if norm(&x0) == 0.0 {
            return Err(Error::Domain("x0 must be nonzero".into()));
        }
        Ok(Self { system, x0, tolerances, multiplier_hint: None, label: None })
    }

    pub fn with_multiplier_hint(mut self, hint: Vec<f64>) -> Self {
        self.multiplier_hint = Some(hint);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Size of the component of `x₀` outside the controllable subspace.
    pub fn uncontrollable_component(&self) -> f64 {
        let q = self.system.kalman.uncontrollable_basis();
        norm(&q.tr_mul_vec(&self.x0))
    }

    pub(crate) fn reduced(&self) -> Result<Reduced> {
        let x_norm = norm(&self.x0);
        let off = self.uncontrollable_component();
        if off > 1e2 * self.tolerances.rank_tol.max(1e-14) * x_norm {
            return Err(Error::Infeasible(alloc::format!(
                "x0 has a component of size {off:e} outside the controllable subspace"
            )));
        }
        let kf = &self.system.kalman;
        let basis = kf.controllable_basis();
        Ok(Reduced {
            a1: kf.a1.clone(),
            b1t: kf.b1.transpose(),
            x0: basis.tr_mul_vec(&self.x0),
            basis,
            quad_tol: self.tolerances.quad_tol,
        })
    }
}

/// The problem restricted to the controllable subspace.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub a1: Matrix,
    pub b1t: Matrix,
    pub x0: Vec<f64>,
    /// `n × k` orthonormal basis of the controllable subspace.
    pub basis: Matrix,
    pub quad_tol: f64,
}

impl Reduced {
    pub fn k(&self) -> usize {
        self.x0.len()
    }

    /// Kernel of `z ↦ ∫₀ᵀ ‖B₁ᵀ e^{−A₁ᵀs} z‖ ds`.
    pub fn forward_kernel(&self, t: f64) -> Result<Kernel> {
        Kernel::new(&self.a1.transpose().scaled(-1.0), &self.b1t, t, self.quad_tol)
    }

    /// Kernel of `z ↦ ∫₀ᵀ ‖B₁ᵀ e^{A₁ᵀσ} z‖ dσ`, the same integral written
    /// for the final-time multiplier `z = e^{−A₁ᵀT} ẑ`.
    pub fn backward_kernel(&self, t: f64) -> Result<Kernel> {
        Kernel::new(&self.a1.transpose(), &self.b1t, t, self.quad_tol)
    }

    /// `e^{A₁T} x̃₀`.
    pub fn free_response(&self, t: f64) -> Result<Vec<f64>> {
        Ok(mat_exp(&self.a1, t)?.mul_vec(&self.x0))
    }

    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        self.basis.mul_vec(z)
    }

    pub fn restrict(&self, z: &[f64]) -> Vec<f64> {
        self.basis.tr_mul_vec(z)
    }
}

/// `h(z) + ⟨linear, z⟩` for a tabulated kernel.
pub(crate) struct Functional<'a> {
    pub kernel: &'a Kernel,
    pub linear: &'a [f64],
}

impl Objective for Functional<'_> {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn eval(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let (v, mut g) = self.kernel.eval(z);
        for (gi, li) in g.iter_mut().zip(self.linear) {
            *gi += li;
        }
        (v + dot(self.linear, z), g)
    }
}

/// The bare support integral `h(z)`.
pub(crate) struct Support<'a>(pub &'a Kernel, pub usize);

impl Objective for Support<'_> {
    fn dim(&self) -> usize {
        self.1
    }
    fn eval(&self, z: &[f64]) -> (f64, Vec<f64>) {
        self.0.eval(z)
    }
}

/// Value of the support gap at one multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportEvaluation {
    pub t: f64,
    pub z: Vec<f64>,
    /// `∫₀ᵀ ‖Bᵀ e^{−Aᵀs} z‖ ds`.
    pub integral: f64,
    /// `integral + ⟨x₀, z⟩`.
    pub gap: f64,
}

/// `∫₀ᵀ ‖Bᵀ e^{−Aᵀs} z‖ ds` for any `z` (not normalized).
pub fn support_integral(system: &LinearSystem, t: f64, z: &[f64], quad_tol: f64) -> Result<f64> {
    check_horizon(t)?;
    if z.len() != system.n() {
        return Err(Error::Dimension(alloc::format!("z has {} entries, expected {}", z.len(), system.n())));
    }
    let kf = &system.kalman;
    let basis = kf.controllable_basis();
    let kernel = Kernel::new(&kf.a1.transpose().scaled(-1.0), &kf.b1.transpose(), t, quad_tol)?;
    Ok(kernel.eval(&basis.tr_mul_vec(z)).0)
}

/// `∫₀ᵀ ‖Bᵀ e^{−Aᵀs} z‖ ds + ⟨x₀, z⟩`.
pub fn support_gap(problem: &Problem, t: f64, z: &[f64]) -> Result<SupportEvaluation> {
    let integral = support_integral(&problem.system, t, z, problem.tolerances.quad_tol)?;
    Ok(SupportEvaluation { t, z: z.to_vec(), integral, gap: integral + dot(&problem.x0, z) })
}

/// Minimum of the support gap over unit multipliers in the controllable
/// subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub phi: f64,
    pub z: Vec<f64>,
    /// Largest angle between restarts that ended within `1e−6` of the minimum.
    pub minimizer_spread: f64,
}

/// `φ(T)`: negative exactly when the origin cannot be reached by time `T`.
pub fn feasibility_margin(problem: &Problem, t: f64) -> Result<Margin> {
    check_horizon(t)?;
    let red = problem.reduced()?;
    let kernel = red.forward_kernel(t)?;
    let obj = Functional { kernel: &kernel, linear: &red.x0 };
    let warm: Vec<Vec<f64>> = normalized(&red.x0).map(|v| v.iter().map(|x| -x).collect()).into_iter().collect();
    let tol = &problem.tolerances;
    let res = sphere::minimize(&obj, tol.sphere_restarts, tol.seed, &warm);
    let spread = sphere::spread_of_minimizers(&res, 1e-6);
    Ok(Margin { phi: res.value, z: red.lift(&res.point), minimizer_spread: spread })
}

/// `N(T, x₀)`: the least `L^∞` bound on a control steering `x₀` to the
/// origin at time `T`.
pub fn min_norm(problem: &Problem, t: f64) -> Result<f64> {
    check_horizon(t)?;
    let red = problem.reduced()?;
    Ok(1.0 / plane_probe(&red, t, None)?.g)
}

/// Minimum of the support integral on the plane `⟨e^{A₁T}x̃₀, z⟩ = −1`.
#[derive(Debug, Clone)]
pub(crate) struct PlaneProbe {
    pub t: f64,
    /// `G(T) = 1 / N(T)`; the horizon is feasible iff `G(T) ≥ 1`.
    pub g: f64,
    /// Final-time multiplier in reduced coordinates, on the plane.
    pub z: Vec<f64>,
    /// `dG/dT = ‖B₁ᵀ z‖`.
    pub slope: f64,
    pub residual: f64,
}

pub(crate) fn plane_probe(red: &Reduced, t: f64, warm: Option<&[f64]>) -> Result<PlaneProbe> {
    let y = red.free_response(t)?;
    let yn = norm(&y);
    if yn == 0.0 || !yn.is_finite() {
        return Err(Error::Numeric(alloc::format!("free response at T = {t} has norm {yn}")));
    }
    let unit: Vec<f64> = y.iter().map(|v| v / yn).collect();
    let kernel = red.backward_kernel(t)?;
    let obj = Support(&kernel, red.k());
    let warm_scaled: Option<Vec<f64>> = warm.map(|w| w.to_vec());
    let sol = plane::minimize(&obj, &unit, warm_scaled.as_deref());
    if !(sol.value > 0.0) {
        return Err(Error::Numeric(alloc::format!("support integral vanishes on the dual plane at T = {t}")));
    }
    let z: Vec<f64> = sol.z.iter().map(|v| v / yn).collect();
    let slope = norm(&red.b1t.mul_vec(&z));
    Ok(PlaneProbe { t, g: sol.value / yn, z, slope, residual: sol.residual })
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(alloc::format!("horizon T = {t} must be positive and finite")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1_problem() -> Problem {
        Problem::new(Matrix::zeros(2, 2), Matrix::identity(2), alloc::vec![3.0, 4.0], Tolerances::default()).unwrap()
    }

    #[test]
    fn margin_signs_around_the_optimal_time() {
        let p = a1_problem();
        assert!(feasibility_margin(&p, 5.0).unwrap().phi.abs() < 1e-9);
        assert!(feasibility_margin(&p, 6.0).unwrap().phi > 0.5);
        assert!(feasibility_margin(&p, 4.0).unwrap().phi <= -1.0 + 1e-9);
    }

    #[test]
    fn min_norm_closed_form() {
        let p = a1_problem();
        assert!((min_norm(&p, 10.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((min_norm(&p, 5.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_is_homogeneous() {
        let p = a1_problem();
        let z = [0.3, -0.2];
        let g1 = support_gap(&p, 2.0, &z).unwrap().gap;
        let g2 = support_gap(&p, 2.0, &[0.9, -0.6]).unwrap().gap;
        assert!((3.0 * g1 - g2).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_horizon() {
        assert!(matches!(support_gap(&a1_problem(), 0.0, &[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn uncontrollable_initial_state_is_infeasible() {
        let a = Matrix::diag(&[-1.0, -2.0]);
        let b = Matrix::from_rows(&[&[1.0], &[0.0]]);
        let p = Problem::new(a, b, alloc::vec![0.0, 1.0], Tolerances::default()).unwrap();
        assert!(matches!(feasibility_margin(&p, 1.0), Err(Error::Infeasible(_))));
    }
}
