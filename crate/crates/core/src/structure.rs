//! Structural constants of a pair `(A, B)`: the spectral window `d_A`, the
//! single-input Krylov bound `q_AB`, its multi-input companion `q̃_AB`, the
//! characteristic-polynomial constant `c_A`, and the new-direction spaces.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{eigenvalues, krylov_chain, Matrix, Spectrum};
use crate::math;

/// Snapshot of the structural facts of a pair `(A, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFacts {
    pub n: usize,
    pub m: usize,
    /// `min π/|Im λ|`; `f64::INFINITY` for a real spectrum.
    pub d_a: f64,
    pub q_ab: usize,
    pub q_tilde_ab: usize,
    pub c_a: f64,
    pub controllability_rank: usize,
    /// Every eigenvalue has real part at most the spectral tolerance.
    pub stabilizable_spectrum: bool,
    pub spectrum: Spectrum,
    /// `H_0, …, H_{n−1}` as orthonormal column bases (`H_0` spans `B`).
    pub h: Vec<Matrix>,
}

impl StructureFacts {
    pub fn compute(a: &Matrix, b: &Matrix, rank_tol: f64, imag_tol: f64) -> Result<Self> {
        let spectrum = eigenvalues(a)?;
        let spectral_tol = imag_tol * a.norm_fro().max(1.0);
        let h = krylov_chain(a, b, rank_tol);
        let controllability_rank = h.iter().map(|m| m.cols()).sum();
        Ok(Self {
            n: a.rows(),
            m: b.cols(),
            d_a: gap_of(&spectrum, spectral_tol),
            q_ab: q_ab(a, b, rank_tol),
            q_tilde_ab: q_tilde_from_chain(&h),
            c_a: c_a_of(&spectrum),
            controllability_rank,
            stabilizable_spectrum: spectrum.eigenvalues.iter().all(|l| l.re <= spectral_tol),
            spectrum,
            h,
        })
    }

    /// Controllable with no eigenvalue in the open right half-plane: every
    /// initial state then has an admissible control.
    pub fn admissible_for_all_x0(&self) -> bool {
        self.controllability_rank == self.n && self.stabilizable_spectrum
    }
}

/// `min π/|Im λ|` over the spectrum; eigenvalues with
/// `|Im λ| ≤ imag_tol · max(1, ‖A‖_F)` count as real.
pub fn spectral_gap(a: &Matrix, imag_tol: f64) -> Result<f64> {
    let spectrum = eigenvalues(a)?;
    Ok(gap_of(&spectrum, imag_tol * a.norm_fro().max(1.0)))
}

fn gap_of(spectrum: &Spectrum, tol: f64) -> f64 {
    spectrum
        .eigenvalues
        .iter()
        .filter(|l| l.im.abs() > tol)
        .map(|l| math::PI / l.im.abs())
        .fold(f64::INFINITY, f64::min)
}

/// Largest Krylov dimension `dim span{b, Ab, …, Aⁿ⁻¹b}` over the columns `b`.
pub fn q_ab(a: &Matrix, b: &Matrix, tol: f64) -> usize {
    let n = a.rows();
    (0..b.cols())
        .map(|j| {
            let col = Matrix::from_columns(n, &[b.column(j)]);
            krylov_chain(a, &col, tol).iter().map(|m| m.cols()).sum::<usize>()
        })
        .max()
        .unwrap_or(0)
}

/// Smallest `j ≥ 1` with `rank(B, …, Aʲ⁻¹B)` equal to the controllability rank.
pub fn q_tilde_ab(a: &Matrix, b: &Matrix, tol: f64) -> usize {
    q_tilde_from_chain(&krylov_chain(a, b, tol))
}

fn q_tilde_from_chain(h: &[Matrix]) -> usize {
    let last = h.iter().rposition(|m| m.cols() > 0).unwrap_or(0);
    last + 1
}

/// `max |c_i|` over the coefficients of `det(λI − A) = λⁿ + c₁λⁿ⁻¹ + … + c_n`.
pub fn c_a_constant(a: &Matrix) -> Result<f64> {
    Ok(c_a_of(&eigenvalues(a)?))
}

fn c_a_of(spectrum: &Spectrum) -> f64 {
    let coeffs = characteristic_coefficients(&spectrum.eigenvalues);
    coeffs.iter().skip(1).fold(0.0, |m, c| m.max(c.abs()))
}

/// Coefficients `[1, c₁, …, c_n]` of `∏ (λ − λ_i)`, real parts only.
pub fn characteristic_coefficients(roots: &[Complex64]) -> Vec<f64> {
    let mut c: Vec<Complex64> = alloc::vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = alloc::vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    c.iter().map(|v| v.re).collect()
}

/// The spaces `H_1, …, H_{n−1}` (orthonormal bases; empty past the
/// controllable subspace).
pub fn new_direction_spaces(a: &Matrix, b: &Matrix, tol: f64) -> Vec<Matrix> {
    krylov_chain(a, b, tol).into_iter().skip(1).collect()
}

/// Controllable and no eigenvalue with positive real part.
pub fn admissibility_for_all_x0(a: &Matrix, b: &Matrix, rank_tol: f64, imag_tol: f64) -> Result<bool> {
    Ok(StructureFacts::compute(a, b, rank_tol, imag_tol)?.admissible_for_all_x0())
}
