//! The versioned JSON report written by `solve` and `propsuite`.

use serde::{Deserialize, Serialize};
use timeopt_core::fixtures::Expected;
use timeopt_core::verify::{self, Report};
use timeopt_core::Problem;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Infinite values are written as `null` and read back as `+∞`.
mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub label: Option<String>,
    pub problem_hash: String,
    pub structure: StructureBlock,
    pub certificate: CertificateBlock,
    pub analysis: AnalysisBlock,
    pub verification: VerificationBlock,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expectations: Vec<Expectation>,
    pub timing: TimingBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureBlock {
    pub n: usize,
    pub m: usize,
    /// `null` for a real spectrum.
    #[serde(with = "unbounded")]
    pub d_a: f64,
    pub q_ab: usize,
    pub q_tilde_ab: usize,
    pub c_a: f64,
    pub controllability_rank: usize,
    pub stabilizable_spectrum: bool,
    /// `(re, im)` pairs.
    pub spectrum: Vec<(f64, f64)>,
    /// `dim H_j` for `j = 0, …, n − 1`.
    pub new_direction_dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateBlock {
    pub t_star: f64,
    pub z_star: Vec<f64>,
    pub z_hat_star: Vec<f64>,
    pub phi_at_t_star: f64,
    pub bracket: (f64, f64),
    pub projection_residual: f64,
    pub dual_residual: f64,
    pub multiplier_nonunique: bool,
    pub minimizer_spread: f64,
    pub hint_used: bool,
    /// `(T, G(T))` per probe.
    pub probes: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalBlock {
    pub t: f64,
    pub order: usize,
    pub residual: f64,
    pub is_switch: bool,
    pub left_limit: Vec<f64>,
    pub right_limit: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionBlock {
    pub direction: Vec<f64>,
    pub j: usize,
    #[serde(with = "unbounded")]
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBlock {
    pub nodal_set: Vec<NodalBlock>,
    pub switch_set: Vec<f64>,
    pub directions: Vec<DirectionBlock>,
    pub behavior_class: String,
    pub class_margin: f64,
    pub proper_subset: bool,
    pub max_switches_in_window: usize,
    /// Switch bound per `d_A` window from `q_AB`.
    pub window_bound_q_ab: usize,
    /// The same bound from `q̃_AB`.
    pub window_bound_q_tilde_ab: usize,
    pub two_direction_check: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckBlock {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyBlock {
    pub problem_hash: String,
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationBlock {
    pub terminal_state: Vec<f64>,
    pub terminal_error: f64,
    pub relative_terminal_error: f64,
    pub bang_bang_residual: f64,
    pub jump_symmetry_residual: f64,
    pub window_bound_ok: bool,
    pub worst_window_start: f64,
    pub worst_window_count: usize,
    pub max_principle_residual: f64,
    pub suboptimality_delta: f64,
    pub suboptimality_margin: f64,
    pub suboptimality_ok: bool,
    pub all_passed: bool,
    pub checks: Vec<CheckBlock>,
    pub discrepancies: Vec<DiscrepancyBlock>,
}

/// Outcome of comparing a report against a fixture's expected block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingBlock {
    pub total_seconds: f64,
}

impl ReportFile {
    pub fn new(problem: &Problem, report: &Report, seconds: f64) -> Self {
        let facts = &report.structure;
        let cert = report.certificate();
        let an = &report.analysis;
        let x0n = problem.x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        ReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            label: problem.label.clone(),
            problem_hash: verify::problem_hash(problem),
            structure: StructureBlock {
                n: facts.n,
                m: facts.m,
                d_a: facts.d_a,
                q_ab: facts.q_ab,
                q_tilde_ab: facts.q_tilde_ab,
                c_a: facts.c_a,
                controllability_rank: facts.controllability_rank,
                stabilizable_spectrum: facts.stabilizable_spectrum,
                spectrum: facts.spectrum.eigenvalues.iter().map(|l| (l.re, l.im)).collect(),
                new_direction_dims: facts.h.iter().map(|h| h.cols()).collect(),
            },
            certificate: CertificateBlock {
                t_star: cert.t_star,
                z_star: cert.z_star.clone(),
                z_hat_star: cert.z_hat_star.clone(),
                phi_at_t_star: cert.phi_at_t_star,
                bracket: cert.bracket,
                projection_residual: cert.projection_residual,
                dual_residual: cert.dual_residual,
                multiplier_nonunique: cert.multiplier_nonunique,
                minimizer_spread: cert.minimizer_spread,
                hint_used: cert.hint_used,
                probes: cert.probes.clone(),
            },
            analysis: AnalysisBlock {
                nodal_set: an
                    .nodal_points
                    .iter()
                    .map(|p| NodalBlock {
                        t: p.t,
                        order: p.order,
                        residual: p.residual,
                        is_switch: p.is_switch,
                        left_limit: p.left_limit.clone(),
                        right_limit: p.right_limit.clone(),
                    })
                    .collect(),
                switch_set: an.switch_set.clone(),
                directions: an
                    .directions
                    .iter()
                    .map(|d| DirectionBlock { direction: d.direction.clone(), j: d.j, residual: d.residual })
                    .collect(),
                behavior_class: an.behavior.as_str().to_string(),
                class_margin: an.class_margin,
                proper_subset: an.proper_subset,
                max_switches_in_window: an.max_switches_in_window,
                window_bound_q_ab: facts.q_ab.saturating_sub(1),
                window_bound_q_tilde_ab: facts.q_tilde_ab.saturating_sub(1),
                two_direction_check: an.two_direction_check,
            },
            verification: VerificationBlock {
                terminal_state: report.terminal_state.clone(),
                terminal_error: report.terminal_error,
                relative_terminal_error: report.terminal_error / x0n,
                bang_bang_residual: report.bang_bang_residual,
                jump_symmetry_residual: report.jump_symmetry_residual,
                window_bound_ok: report.window_bound_ok,
                worst_window_start: report.worst_window.0,
                worst_window_count: report.worst_window.1,
                max_principle_residual: report.max_principle_residual,
                suboptimality_delta: report.suboptimality_delta,
                suboptimality_margin: report.suboptimality_margin,
                suboptimality_ok: report.suboptimality_ok,
                all_passed: report.all_passed(),
                checks: report
                    .checks
                    .iter()
                    .map(|c| CheckBlock {
                        name: c.name.clone(),
                        passed: c.passed,
                        residual: c.residual,
                        tolerance: c.tolerance,
                        detail: c.detail.clone(),
                    })
                    .collect(),
                discrepancies: report
                    .discrepancies
                    .iter()
                    .map(|d| DiscrepancyBlock {
                        problem_hash: d.problem_hash.clone(),
                        check: d.check.clone(),
                        residual: d.residual,
                        tolerance: d.tolerance,
                    })
                    .collect(),
            },
            expectations: Vec::new(),
            timing: TimingBlock { total_seconds: seconds },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Compares against an expected block and records the outcomes.
    pub fn check_expected(&mut self, expected: &Expected) {
        let cert = &self.certificate;
        let mut out = Vec::new();
        if let Some(t) = expected.t_star {
            let err = (cert.t_star - t).abs() / t;
            out.push(Expectation {
                name: "t_star".into(),
                passed: err <= expected.t_star_rel_tol,
                detail: format!("T* = {}, expected {t}, relative error {err:e} (tolerance {:e})", cert.t_star, expected.t_star_rel_tol),
            });
        }
        if let Some(lo) = expected.t_star_above {
            out.push(Expectation {
                name: "t_star_above".into(),
                passed: cert.t_star > lo,
                detail: format!("T* = {} must exceed {lo}", cert.t_star),
            });
        }
        if let Some(c) = expected.class {
            out.push(Expectation {
                name: "behavior_class".into(),
                passed: self.analysis.behavior_class == c.as_str(),
                detail: format!("class {}, expected {}", self.analysis.behavior_class, c.as_str()),
            });
        }
        if let Some(pred) = expected.switches.predict(cert.t_star, &cert.z_star) {
            let got = &self.analysis.switch_set;
            let worst = if pred.len() == got.len() {
                pred.iter().zip(got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            out.push(Expectation {
                name: "switch_set".into(),
                passed: worst <= 1e-4,
                detail: format!("{} switches, predicted {}; largest deviation {worst:e}", got.len(), pred.len()),
            });
        }
        for t in &expected.even_nodal_points {
            let hit = self.analysis.nodal_set.iter().find(|p| (p.t - t).abs() <= 1e-4);
            let passed = hit.is_some_and(|p| p.order % 2 == 0 && !p.is_switch) && self.analysis.proper_subset;
            out.push(Expectation {
                name: "even_nodal_point".into(),
                passed,
                detail: match hit {
                    Some(p) => format!("nodal point {} of order {}, switch {}", p.t, p.order, p.is_switch),
                    None => format!("no nodal point near {t}"),
                },
            });
        }
        self.expectations = out;
    }

    pub fn expectations_passed(&self) -> bool {
        self.expectations.iter().all(|e| e.passed)
    }
}
