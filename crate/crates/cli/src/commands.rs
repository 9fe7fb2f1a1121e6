//! The three subcommands, separated from argument parsing so tests can call
//! them directly.

use std::path::{Path, PathBuf};
use std::time::Instant;

use timeopt_core::fixtures;
use timeopt_core::synthesis::{analyze, synthesize};
use timeopt_core::verify::report_for;
use timeopt_core::{solver, Tolerances};

use crate::problem_file::{ProblemFile, ToleranceOverrides};
use crate::propsuite::{self, Summary};
use crate::report_file::ReportFile;
use crate::trajectory::{plot_csv, trajectory_csv};
use crate::{CliError, InputError};

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub out: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub overrides: ToleranceOverrides,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Parses, solves and verifies a problem file. The report is returned (and
/// written when `out` is set) even if checks fail; failures then surface as
/// an inconsistency error from [`solve_exit`].
pub fn solve(input: &Path, opts: &SolveOptions) -> Result<ReportFile, CliError> {
    let text = read(input)?;
    solve_text(&text, opts)
}

pub fn solve_text(text: &str, opts: &SolveOptions) -> Result<ReportFile, CliError> {
    let file = ProblemFile::parse(text)?;
    let start = Instant::now();
    let problem = file.problem(&opts.overrides)?;
    problem.tolerances.validate().map_err(CliError::from)?;
    let cert = solver::solve(&problem)?;
    let control = synthesize(&problem, &cert)?;
    let analysis = analyze(&problem, &control)?;
    let report = report_for(&problem, control.clone(), analysis)?;
    let mut out = ReportFile::new(&problem, &report, start.elapsed().as_secs_f64());
    if let Some(e) = &file.expected {
        out.check_expected(&e.to_expected()?);
    }
    if let Some(p) = &opts.out {
        write(p, &out.to_json())?;
    }
    if let Some(p) = &opts.trajectory {
        write(p, &trajectory_csv(&problem, &control)?)?;
    }
    if let Some(p) = &opts.plot_data {
        write(p, &plot_csv(&problem, &control))?;
    }
    Ok(out)
}

/// Discrepancy records for failed checks and expectations, one JSON object
/// per line, or `None` when everything passed.
pub fn failures(report: &ReportFile) -> Option<String> {
    if report.verification.all_passed && report.expectations_passed() {
        return None;
    }
    let mut lines = Vec::new();
    for d in &report.verification.discrepancies {
        lines.push(serde_json::to_string(d).expect("discrepancies serialize"));
    }
    for e in report.expectations.iter().filter(|e| !e.passed) {
        lines.push(
            serde_json::json!({
                "problem_hash": report.problem_hash,
                "expectation": e.name,
                "detail": e.detail,
            })
            .to_string(),
        );
    }
    Some(lines.join("\n"))
}

/// Emits an example as a problem file.
pub fn examples(name: &str, xi: Option<f64>) -> Result<ProblemFile, CliError> {
    if name != "a4" && xi.is_some() {
        return Err(InputError::Other(format!("--xi only applies to a4, not '{name}'")).into());
    }
    let f = fixtures::by_name(name, xi).map_err(|e| match e {
        timeopt_core::Error::Domain(m) => CliError::Input(InputError::Other(m)),
        other => other.into(),
    })?;
    Ok(ProblemFile::from_fixture(&f))
}

#[derive(Debug, Clone)]
pub struct PropsuiteOptions {
    pub seed: u64,
    pub trials: usize,
    pub n_max: usize,
    pub out: Option<PathBuf>,
    pub overrides: ToleranceOverrides,
}

/// Runs the suite and writes `summary.json` plus one report per trial into
/// `out` when given.
pub fn propsuite(opts: &PropsuiteOptions) -> Result<Summary, CliError> {
    if opts.trials == 0 {
        return Err(InputError::Other("--trials must be at least 1".into()).into());
    }
    if opts.n_max == 0 || opts.n_max > 12 {
        return Err(InputError::Other(format!("--nmax must lie in 1..=12, got {}", opts.n_max)).into());
    }
    let tol = opts.overrides.apply(Tolerances::default());
    tol.validate()?;
    let summary = propsuite::run(opts.seed, opts.trials, opts.n_max, tol);
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        write(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
        for o in &summary.outcomes {
            if let Some(r) = &o.report {
                write(&dir.join(format!("trial-{:04}.json", o.trial)), &r.to_json())?;
            }
        }
    }
    Ok(summary)
}

/// One line per trial plus per-check pass counts.
pub fn summary_text(s: &Summary) -> String {
    let mut out = String::new();
    for o in &s.outcomes {
        let status = if o.passed { "pass" } else { "FAIL" };
        let t = o.t_star.map_or("-".to_string(), |t| format!("{t:.9}"));
        out.push_str(&format!(
            "trial {:>4} seed {:016x} n={} m={} T*={} switches={} class={} {status}",
            o.trial,
            o.seed,
            o.n,
            o.m,
            t,
            o.switches.map_or("-".to_string(), |k| k.to_string()),
            o.behavior_class.as_deref().unwrap_or("-"),
        ));
        if !o.failures.is_empty() {
            out.push_str(&format!(" [{}]", o.failures.join("; ")));
        }
        out.push('\n');
    }
    for c in &s.checks {
        out.push_str(&format!("check {:<28} {}/{}\n", c.name, c.passed, c.total));
    }
    out.push_str(&format!("passed {}/{} trials\n", s.passed, s.trials));
    out
}
