//! Randomized property suite over marginally stable controllable systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use timeopt_core::linalg::{krylov_chain, normalized};
use timeopt_core::verify::full_report;
use timeopt_core::{Matrix, Problem, Tolerances};

use crate::report_file::{DiscrepancyBlock, ReportFile};

/// Rank threshold used to accept a random pair as controllable.
const CONTROLLABILITY_MARGIN: f64 = 1e-3;

/// Per-trial seed derived from the suite seed.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut x = seed ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-distributed orthogonal matrix from Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        if let Some(u) = normalized(&v) {
            cols.push(u);
        }
    }
    Matrix::from_columns(n, &cols)
}

/// Block diagonal of decaying or neutral scalars and damped or undamped
/// rotations, conjugated by a random orthogonal matrix. Every eigenvalue has
/// nonpositive real part by construction.
pub fn random_marginal_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut d = Matrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        if n - i >= 2 && rng.random_bool(0.5) {
            let alpha = if rng.random_bool(0.5) { 0.0 } else { -rng.random_range(0.05..1.0) };
            let omega = rng.random_range(0.5..2.5);
            d[(i, i)] = alpha;
            d[(i + 1, i + 1)] = alpha;
            d[(i, i + 1)] = omega;
            d[(i + 1, i)] = -omega;
            i += 2;
        } else {
            d[(i, i)] = if rng.random_bool(0.3) { 0.0 } else { -rng.random_range(0.1..2.0) };
            i += 1;
        }
    }
    let q = random_orthogonal(n, rng);
    q.matmul(&d).matmul(&q.transpose())
}

/// A random admissible problem with `1 ≤ n ≤ n_max`.
pub fn random_problem(seed: u64, n_max: usize, tolerances: Tolerances) -> timeopt_core::Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=n_max.max(1));
    let m = rng.random_range(1..=n);
    loop {
        let a = random_marginal_matrix(n, &mut rng);
        for _ in 0..20 {
            let data: Vec<f64> = (0..n * m).map(|_| gaussian(&mut rng)).collect();
            let b = Matrix::new(n, m, data)?;
            let reach: usize = krylov_chain(&a, &b, CONTROLLABILITY_MARGIN).iter().map(|h| h.cols()).sum();
            if reach < n {
                continue;
            }
            let dir: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
            let Some(dir) = normalized(&dir) else { continue };
            let r = rng.random_range(0.5..3.0);
            let x0: Vec<f64> = dir.iter().map(|v| r * v).collect();
            return Ok(Problem::new(a, b, x0, tolerances)?.with_label(format!("trial seed {seed:#x}")));
        }
    }
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub t_star: Option<f64>,
    pub switches: Option<usize>,
    pub behavior_class: Option<String>,
    pub passed: bool,
    /// Names of failed checks, or the error message.
    pub failures: Vec<String>,
    pub discrepancies: Vec<DiscrepancyBlock>,
    #[serde(skip)]
    pub report: Option<ReportFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckTally {
    pub name: String,
    pub passed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub trials: usize,
    pub n_max: usize,
    pub passed: usize,
    pub checks: Vec<CheckTally>,
    pub outcomes: Vec<TrialOutcome>,
}

pub fn run_trial(seed: u64, trial: usize, n_max: usize, tolerances: Tolerances) -> TrialOutcome {
    let tseed = trial_seed(seed, trial);
    let start = std::time::Instant::now();
    let problem = match random_problem(tseed, n_max, tolerances) {
        Ok(p) => p,
        Err(e) => return failed(trial, tseed, 0, 0, e.to_string()),
    };
    let (n, m) = (problem.system.n(), problem.system.m());
    match full_report(&problem) {
        Ok(report) => {
            let file = ReportFile::new(&problem, &report, start.elapsed().as_secs_f64());
            TrialOutcome {
                trial,
                seed: tseed,
                n,
                m,
                t_star: Some(file.certificate.t_star),
                switches: Some(file.analysis.switch_set.len()),
                behavior_class: Some(file.analysis.behavior_class.clone()),
                passed: file.verification.all_passed,
                failures: file.verification.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect(),
                discrepancies: file.verification.discrepancies.clone(),
                report: Some(file),
            }
        }
        Err(e) => failed(trial, tseed, n, m, e.to_string()),
    }
}

fn failed(trial: usize, seed: u64, n: usize, m: usize, msg: String) -> TrialOutcome {
    TrialOutcome {
        trial,
        seed,
        n,
        m,
        t_star: None,
        switches: None,
        behavior_class: None,
        passed: false,
        failures: vec![msg],
        discrepancies: Vec::new(),
        report: None,
    }
}

/// Runs `trials` trials in parallel; outcomes are ordered by trial index.
pub fn run(seed: u64, trials: usize, n_max: usize, tolerances: Tolerances) -> Summary {
    let outcomes: Vec<TrialOutcome> =
        (0..trials).into_par_iter().map(|i| run_trial(seed, i, n_max, tolerances)).collect();
    let mut checks: Vec<CheckTally> = Vec::new();
    for o in &outcomes {
        let Some(r) = &o.report else { continue };
        for c in &r.verification.checks {
            match checks.iter_mut().find(|t| t.name == c.name) {
                Some(t) => {
                    t.total += 1;
                    t.passed += c.passed as usize;
                }
                None => checks.push(CheckTally { name: c.name.clone(), passed: c.passed as usize, total: 1 }),
            }
        }
    }
    Summary { seed, trials, n_max, passed: outcomes.iter().filter(|o| o.passed).count(), checks, outcomes }
}
