//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timeopt::propsuite;
use timeopt_core::dual::{feasibility_margin, min_norm};
use timeopt_core::fixtures;
use timeopt_core::linalg::{norm, Matrix};
use timeopt_core::structure::StructureFacts;
use timeopt_core::synthesis::BehaviorClass;
use timeopt_core::verify::{self, Report};
use timeopt_core::{Problem, Tolerances};

struct Outcome {
    passed: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: String) {
        self.passed &= ok;
        self.notes.push(if ok { note } else { format!("FAILED {note}") });
    }
}

fn report(p: &Problem) -> Result<Report, String> {
    verify::full_report(p).map_err(|e| e.to_string())
}

fn problem(name: &str) -> Problem {
    fixtures::by_name(name, None).unwrap().problem(Tolerances::default()).unwrap()
}

fn runtime(out: &mut Outcome, start: Instant, limit: f64) {
    let s = start.elapsed().as_secs_f64();
    out.check(s < limit, format!("runtime {s:.2}s < {limit}s"));
}

fn no_switches(out: &mut Outcome, r: &Report) {
    out.check(r.analysis.switch_set.is_empty(), format!("{} switches", r.analysis.switch_set.len()));
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let p = problem("a1");
    let r = match report(&p) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let t = r.certificate().t_star;
    out.check((t - 5.0).abs() <= 1e-6, format!("T* = {t:.12}"));
    let worst = (1..=1000)
        .map(|i| {
            let u = r.control.control_at(t * i as f64 / 1000.0);
            (u[0] + 0.6).abs().max((u[1] + 0.8).abs())
        })
        .fold(0.0, f64::max);
    out.check(worst <= 1e-6, format!("max |u - (-0.6, -0.8)| = {worst:.2e}"));
    out.check(r.analysis.behavior == BehaviorClass::A1, format!("class {}", r.analysis.behavior.as_str()));
    no_switches(&mut out, &r);
    runtime(&mut out, start, 5.0);
    out
}

/// `e^{Mt}` by scaling and squaring a degree-20 Taylor polynomial.
fn taylor_exp(m: &Matrix, t: f64) -> Matrix {
    let a = m.scaled(t);
    let mut s = 0;
    let mut norm1 = a.norm_one();
    while norm1 > 0.25 {
        norm1 *= 0.5;
        s += 1;
    }
    let a = a.scaled(0.5f64.powi(s));
    let n = m.rows();
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..=20 {
        term = term.matmul(&a).scaled(1.0 / k as f64);
        sum = sum.add(&term);
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let f = fixtures::a2();
    let p = problem("a2");
    let r = match report(&p) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let t = r.certificate().t_star;
    out.check((t - 5.0).abs() <= 1e-6, format!("T* = {t:.12}"));
    let worst = (1..=1000)
        .map(|i| {
            let s = t * i as f64 / 1000.0;
            let expect = taylor_exp(&f.a, s).mul_vec(&f.x0);
            let u = r.control.control_at(s);
            norm(&[u[0] + expect[0] / 5.0, u[1] + expect[1] / 5.0])
        })
        .fold(0.0, f64::max);
    out.check(worst <= 1e-5, format!("max |u + e^(At)x0/5| = {worst:.2e}"));
    out.check(r.analysis.behavior == BehaviorClass::A2, format!("class {}", r.analysis.behavior.as_str()));
    no_switches(&mut out, &r);
    runtime(&mut out, start, 10.0);
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let f = fixtures::a3();
    let x0 = &f.x0;
    out.check(x0[1] * x0[1] + x0[2] * x0[2] >= 4.0 * PI * PI, format!("x0 = {x0:?}"));
    let p = f.problem(Tolerances::default()).unwrap();
    let r = match report(&p) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let cert = r.certificate();
    out.check(r.analysis.behavior == BehaviorClass::A3, format!("class {}", r.analysis.behavior.as_str()));
    out.check(cert.t_star >= 2.0 * PI, format!("T* = {:.9} >= 2 pi", cert.t_star));
    // the second input sees ‖z‖ sin(T* + θ − t) with tan θ = z₂/z₁
    let (z1, z2) = (cert.z_star[1], cert.z_star[2]);
    let theta = (z2 / z1).atan();
    let mut predicted: Vec<f64> =
        (-2..20).map(|n| cert.t_star + theta - n as f64 * PI).filter(|&t| t > 0.0 && t < cert.t_star).collect();
    predicted.sort_by(f64::total_cmp);
    let got = &r.analysis.switch_set;
    let same_count = got.len() == predicted.len() && !got.is_empty();
    let dev = got.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.check(same_count && dev <= 1e-4, format!("{} switches vs {} predicted, max deviation {dev:.2e}", got.len(), predicted.len()));
    let dir_dev = r
        .analysis
        .directions
        .iter()
        .map(|d| d.direction[0].abs().max((d.direction[1].abs() - 1.0).abs()))
        .fold(0.0, f64::max);
    out.check(!r.analysis.directions.is_empty() && dir_dev <= 1e-6, format!("directions within {dir_dev:.2e} of +-(0,1)"));
    runtime(&mut out, start, 30.0);
    out
}

/// Antiderivative of `sin t √(4cos²t + 1)` in `u = cos t`, up to sign.
fn g(u: f64) -> f64 {
    u * (4.0 * u * u + 1.0).sqrt() / 2.0 + (2.0 * u).asinh() / 4.0
}

/// `∫₀^τ |sin t| √(4cos²t + 1) dt` in closed form.
fn speed_integral(tau: f64) -> f64 {
    let k = (tau / PI).floor();
    let r = tau - k * PI;
    k * 2.0 * g(1.0) + g(1.0) - g(r.cos())
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let xi = fixtures::A4_DEFAULT_XI;
    out.check(xi.abs() * speed_integral(4.0 * PI) < 1.0, format!("|xi| * I(4 pi) = {:.6} < 1", xi.abs() * speed_integral(4.0 * PI)));
    let f = fixtures::a4(xi).unwrap();
    let z_hat = [xi, 0.0, xi, 0.0];
    let pairing: f64 = f.x0.iter().zip(&z_hat).map(|(a, b)| a * b).sum();
    out.check((pairing + 1.0).abs() <= 1e-8, format!("<x0, z> = {pairing:.12}"));
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if xi.abs() * speed_integral(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_bar = 0.5 * (lo + hi);
    let p = f.problem(Tolerances::default()).unwrap();
    let r = match report(&p) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let t = r.certificate().t_star;
    out.check((t - t_bar).abs() <= 1e-5 * t_bar, format!("T* = {t:.10}, oracle {t_bar:.10}"));
    out.check(t > 4.0 * PI, "T* > 4 pi".into());
    let expect: Vec<f64> = (1..10).map(|n| n as f64 * PI).filter(|&s| s < t).collect();
    let got = &r.analysis.switch_set;
    let dev = got.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.check(got.len() == expect.len() && dev <= 1e-4, format!("{} switches at n pi, max deviation {dev:.2e}", got.len()));
    out.check(r.analysis.behavior == BehaviorClass::A4, format!("class {}", r.analysis.behavior.as_str()));
    runtime(&mut out, start, 60.0);
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let p = problem("proper-subset");
    let r = match report(&p) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let t_hat = fixtures::PROPER_SUBSET_T_HAT;
    match r.analysis.nodal_points.iter().find(|q| (q.t - t_hat).abs() <= 1e-4) {
        Some(q) => {
            out.check(q.order == 2, format!("nodal point {:.9} of order {}", q.t, q.order));
            out.check(!r.analysis.switch_set.iter().any(|s| (s - q.t).abs() <= 1e-4), "not a switch".into());
        }
        None => out.check(false, format!("no nodal point near {t_hat}")),
    }
    out.check(r.analysis.proper_subset, "switch set flagged as a proper subset of the nodal set".into());
    runtime(&mut out, start, 60.0);
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let stated = [
        ("terminal_error", verify::TERMINAL_TOL, 1e-5),
        ("bang_bang", verify::BANG_BANG_TOL, 1e-9),
        ("jump_symmetry", verify::JUMP_TOL, 1e-6),
        ("max_principle", verify::MAX_PRINCIPLE_TOL, 1e-8),
    ];
    for (name, used, want) in stated {
        out.check(used <= want, format!("{name} tolerance {used:e}"));
    }
    out.check(verify::SUBOPTIMALITY_DELTA == 0.02, format!("delta = {}", verify::SUBOPTIMALITY_DELTA));
    let summary = propsuite::run(1, 100, 4, Tolerances::default());
    let required = ["terminal_error", "bang_bang", "jump_symmetry", "window_bound", "max_principle", "suboptimality"];
    for name in required {
        let tally = summary.checks.iter().find(|c| c.name == name);
        let (passed, total) = tally.map_or((0, 0), |c| (c.passed, c.total));
        out.check(total == 100 && passed == 100, format!("{name} {passed}/{total}"));
    }
    let failures: Vec<String> =
        summary.outcomes.iter().filter(|o| !o.passed).map(|o| format!("trial {} {:?}", o.trial, o.failures)).collect();
    out.check(summary.passed == 100, format!("{}/100 trials passed {}", summary.passed, failures.join(" ")));
    runtime(&mut out, start, 900.0);
    out
}

/// Points spread evenly over the unit sphere in `ℝⁿ`, `n ≤ 3`.
fn sphere_grid(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count).map(|i| 2.0 * PI * i as f64 / count as f64).map(|a| vec![a.cos(), a.sin()]).collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - y * y).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), y, r * a.sin()]
                })
                .collect()
        }
    }
}

/// `∫₀ᵀ ‖Bᵀ e^{−Aᵀs} z‖ ds + ⟨x₀, z⟩` by composite Simpson on a fixed table.
struct Gap {
    w: Vec<Matrix>,
    weights: Vec<f64>,
    x0: Vec<f64>,
}

impl Gap {
    fn new(p: &Problem, t: f64, panels: usize) -> Self {
        let h = t / panels as f64;
        let at = p.system.a.transpose().scaled(-1.0);
        let bt = p.system.b.transpose();
        let step = taylor_exp(&at, 0.5 * h);
        let mut e = Matrix::identity(at.rows());
        let mut w = Vec::with_capacity(2 * panels + 1);
        let mut weights = Vec::with_capacity(2 * panels + 1);
        for i in 0..=2 * panels {
            if i > 0 {
                e = if i % 64 == 0 { taylor_exp(&at, 0.5 * h * i as f64) } else { e.matmul(&step) };
            }
            w.push(bt.matmul(&e));
            let c = if i == 0 || i == 2 * panels { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            weights.push(c * h / 6.0);
        }
        Self { w, weights, x0: p.x0.clone() }
    }

    fn value(&self, z: &[f64]) -> f64 {
        let integral: f64 = self.w.iter().zip(&self.weights).map(|(w, c)| c * norm(&w.mul_vec(z))).sum();
        integral + self.x0.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Grid minimum followed by a compass search from the best grid points.
fn brute_force_margin(p: &Problem, t: f64) -> f64 {
    let n = p.system.n();
    let gap = Gap::new(p, t, 2000);
    let mut scored: Vec<(f64, Vec<f64>)> = sphere_grid(n, 10_000).into_iter().map(|z| (gap.value(&z), z)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored[0].0;
    if n == 1 {
        return best;
    }
    for (mut f, mut z) in scored.into_iter().take(3) {
        let mut radius = 0.05;
        while radius > 1e-9 {
            let mut improved = false;
            for i in 0..n {
                for sgn in [1.0, -1.0] {
                    let mut trial = z.clone();
                    trial[i] += sgn * radius;
                    let len = norm(&trial);
                    trial.iter_mut().for_each(|v| *v /= len);
                    let ft = gap.value(&trial);
                    if ft < f {
                        (f, z, improved) = (ft, trial, true);
                    }
                }
            }
            if !improved {
                radius *= 0.5;
            }
        }
        best = best.min(f);
    }
    best
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for trial in 0..20 {
        let p = match propsuite::random_problem(propsuite::trial_seed(77, trial), 3, Tolerances::default()) {
            Ok(p) => p,
            Err(e) => return failed(e.to_string()),
        };
        let t = rng.random_range(0.2..1.5);
        let phi = match feasibility_margin(&p, t) {
            Ok(m) => m.phi,
            Err(e) => return failed(e.to_string()),
        };
        let brute = brute_force_margin(&p, t);
        let dev = (phi - brute).abs();
        if dev > worst {
            worst = dev;
            detail = format!("trial {trial} n={} T={t:.3} phi={phi:.8} grid={brute:.8}", p.system.n());
        }
    }
    out.check(worst <= 1e-4, format!("20 problems, max |phi - grid| = {worst:.2e} ({detail})"));
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = Problem::new(Matrix::zeros(n, n), Matrix::identity(n), x0.clone(), Tolerances::default()).unwrap();
        for _ in 0..5 {
            let t = rng.random_range(0.1..20.0);
            match min_norm(&p, t) {
                Ok(v) => worst = worst.max((v - norm(&x0) / t).abs()),
                Err(e) => return failed(e.to_string()),
            }
        }
    }
    out.check(worst <= 1e-8, format!("min_norm vs |x0|/T: max deviation {worst:.2e}"));
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let facts = |a: &Matrix, b: &Matrix| StructureFacts::compute(a, b, 1e-10, 1e-9).unwrap();
    let a2 = fixtures::a2();
    let d = facts(&a2.a, &a2.b).d_a;
    out.check((d - PI).abs() <= 1e-9, format!("d_A(A2) = {d:.12}"));
    let a4 = fixtures::a4(fixtures::A4_DEFAULT_XI).unwrap();
    let d = facts(&a4.a, &a4.b).d_a;
    out.check((d - PI / 2.0).abs() <= 1e-9, format!("d_A(A4) = {d:.12}"));
    let q: Vec<usize> = (1..=5).map(|n| facts(&Matrix::zeros(n, n), &Matrix::identity(n)).q_ab).collect();
    out.check(q.iter().all(|&v| v == 1), format!("q_AB(0, I_n) for n = 1..5: {q:?}"));
    let ps = fixtures::proper_subset().unwrap();
    let h2 = facts(&ps.a, &ps.b).h[2].cols();
    out.check(h2 == 1, format!("dim H_2 = {h2}"));
    out
}

fn failed(msg: String) -> Outcome {
    Outcome { passed: false, notes: vec![format!("FAILED {msg}")] }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("constant direction example", criterion_1),
        ("rotating control example", criterion_2),
        ("antipodal switching example", criterion_3),
        ("two-frequency example", criterion_4),
        ("even-order nodal point example", criterion_5),
        ("property suite, 100 trials, n <= 4", criterion_6),
        ("oracle cross-checks", criterion_7),
        ("structural constants", criterion_8),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        all &= o.passed;
        println!("criterion {} {}: {} [{}]", i + 1, if o.passed { "PASS" } else { "FAIL" }, name, o.notes.join("; "));
    }
    if !all {
        std::process::exit(1);
    }
}
