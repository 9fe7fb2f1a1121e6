use std::f64::consts::PI;

use timeopt_core::dual::{self, support_integral};
use timeopt_core::fixtures::{self, Fixture};
use timeopt_core::linalg::{dot, mat_exp, norm, Matrix};
use timeopt_core::synthesis::{self, BehaviorClass};
use timeopt_core::verify::{self, FnControl};
use timeopt_core::{solver, Error, Problem, Tolerances};

fn problem(f: &Fixture) -> Problem {
    f.problem(Tolerances::default()).unwrap()
}

fn full_input(n: usize, x0: Vec<f64>) -> Problem {
    Problem::new(Matrix::zeros(n, n), Matrix::identity(n), x0, Tolerances::default()).unwrap()
}

#[test]
fn constant_direction_example() {
    let p = problem(&fixtures::a1());
    let cert = solver::solve(&p).unwrap();
    assert!((cert.t_star - 5.0).abs() < 1e-6, "{}", cert.t_star);
    assert!(cert.bracket.0 <= cert.t_star && cert.t_star <= cert.bracket.1);
    assert!(cert.phi_at_t_star.abs() < 1e-8);

    let control = synthesis::synthesize(&p, &cert).unwrap();
    assert!(control.nodal_points.is_empty());
    for i in 1..=1000 {
        let t = cert.t_star * i as f64 / 1000.0;
        let u = control.control_at(t);
        assert!((u[0] + 0.6).abs() < 1e-6 && (u[1] + 0.8).abs() < 1e-6, "u({t}) = {u:?}");
        let s = control.switching_map(t);
        assert!((s[0] - cert.z_star[0]).abs() < 1e-12 && (s[1] - cert.z_star[1]).abs() < 1e-12);
    }
    assert_eq!(control.control_at(cert.t_star + 1.0), vec![0.0, 0.0]);

    let traj = verify::simulate(&p, &control, cert.t_star, 8).unwrap();
    assert!(traj.terminal_error <= 1e-8 * 5.0, "{}", traj.terminal_error);
    assert!(verify::suboptimality_probe(&p, &cert, 0.01).unwrap());

    let analysis = synthesis::analyze(&p, &control).unwrap();
    assert_eq!(analysis.behavior, BehaviorClass::A1);
    assert!(analysis.switch_set.is_empty());
}

#[test]
fn max_principle_residual_extremes() {
    let p = problem(&fixtures::a2());
    let cert = solver::solve(&p).unwrap();
    let times: Vec<f64> = (0..200).map(|i| cert.t_star * (i as f64 + 0.5) / 200.0).collect();
    let s: Vec<Vec<f64>> = times.iter().map(|&t| synthesis::switching_map(&p, &cert, t)).collect();
    let aligned: Vec<(f64, Vec<f64>)> = times.iter().zip(&s).map(|(&t, s)| (t, s.iter().map(|v| v / norm(s)).collect())).collect();
    let opposed: Vec<(f64, Vec<f64>)> = aligned.iter().map(|(t, u)| (*t, u.iter().map(|v| -v).collect())).collect();
    assert!(solver::max_principle_residual(&p, &cert, &aligned).unwrap() < 1e-14);
    let worst = s.iter().map(|v| norm(v)).fold(0.0, f64::max);
    assert!((solver::max_principle_residual(&p, &cert, &opposed).unwrap() - 2.0 * worst).abs() < 1e-12);
}

#[test]
fn rotating_control_example() {
    let f = fixtures::a2();
    let p = problem(&f);
    let cert = solver::solve(&p).unwrap();
    assert!((cert.t_star - 5.0).abs() < 1e-6);
    let control = synthesis::synthesize(&p, &cert).unwrap();
    for i in 1..=1000 {
        let t = cert.t_star * i as f64 / 1000.0;
        let expect: Vec<f64> = mat_exp(&f.a, t).unwrap().mul_vec(&f.x0).iter().map(|v| -v / 5.0).collect();
        let u = control.control_at(t);
        assert!(norm(&[u[0] - expect[0], u[1] - expect[1]]) < 1e-5, "u({t}) = {u:?}, expected {expect:?}");
    }
    let samples: Vec<(f64, Vec<f64>)> = (0..500).map(|i| cert.t_star * (i as f64 + 0.5) / 500.0).map(|t| (t, control.control_at(t))).collect();
    assert!(solver::max_principle_residual(&p, &cert, &samples).unwrap() <= 1e-8);
    assert!(verify::suboptimality_probe(&p, &cert, 0.1).unwrap());
    assert_eq!(synthesis::analyze(&p, &control).unwrap().behavior, BehaviorClass::A2);
}

#[test]
fn antipodal_switching_example() {
    let f = fixtures::a3();
    let p = problem(&f);
    let report = verify::full_report(&p).unwrap();
    assert!(report.all_passed(), "{:?}", report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    let cert = report.certificate();
    assert!(cert.t_star > 2.0 * PI);
    let analysis = &report.analysis;
    assert_eq!(analysis.behavior, BehaviorClass::A3);
    let predicted = f.expected.switches.predict(cert.t_star, &cert.z_star).unwrap();
    assert!(!predicted.is_empty());
    assert_eq!(predicted.len(), analysis.switch_set.len());
    for (got, want) in analysis.switch_set.iter().zip(&predicted) {
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
    }
    assert!(analysis.nodal_points.iter().all(|p| p.order == 1 && p.is_switch));
    for d in &analysis.directions {
        assert!(d.direction[0].abs() < 1e-6 && (d.direction[1].abs() - 1.0).abs() < 1e-6, "{:?}", d.direction);
    }
}

#[test]
fn two_frequency_fixture_construction() {
    let f = fixtures::a4(fixtures::A4_DEFAULT_XI).unwrap();
    let z = f.multiplier.clone().unwrap();
    assert!((dot(&f.x0, &z) + 1.0).abs() < 1e-8);
    let t_bar = f.expected.t_star.unwrap();
    assert!(t_bar > 4.0 * PI);

    // support integral of the unit multiplier at T̄ is 1/‖ẑ‖ by homogeneity
    let p = problem(&f);
    let zn = norm(&z);
    let unit: Vec<f64> = z.iter().map(|v| v / zn).collect();
    let integral = support_integral(&p.system, t_bar, &unit, 1e-12).unwrap();
    assert!((integral * zn - 1.0).abs() < 1e-9, "{integral}");

    // steering with ū = s/‖s‖, s(t) = −ξ(sin t, sin 2t), lands on the origin
    let xi = fixtures::A4_DEFAULT_XI;
    let law = FnControl {
        m: 2,
        f: |t: f64| {
            let s = [-xi * t.sin(), -xi * (2.0 * t).sin()];
            let n = norm(&s);
            if n == 0.0 { vec![0.0, 0.0] } else { vec![s[0] / n, s[1] / n] }
        },
        breaks: (1..5).map(|k| k as f64 * PI).collect(),
    };
    let traj = verify::simulate(&p, &law, t_bar, 8).unwrap();
    assert!(traj.terminal_error <= 1e-6 * norm(&f.x0), "{}", traj.terminal_error);

    assert!(fixtures::a4(0.09).is_err());
    assert!(fixtures::a4(0.0).is_err());
}

#[test]
fn two_frequency_switching() {
    let f = fixtures::a4(fixtures::A4_DEFAULT_XI).unwrap();
    let p = problem(&f);
    let cert = solver::solve(&p).unwrap();
    let t_bar = f.expected.t_star.unwrap();
    assert!((cert.t_star - t_bar).abs() <= 1e-5 * t_bar);
    // the switching map is a multiple of (sin t, sin 2t)
    let s = synthesis::switching_map(&p, &cert, 1.0);
    let c = s[0] / 1f64.sin();
    for t in [0.4f64, 2.0, 3.5, 7.1, 12.0] {
        let s = synthesis::switching_map(&p, &cert, t);
        assert!((s[0] - c * t.sin()).abs() < 1e-8 && (s[1] - c * (2.0 * t).sin()).abs() < 1e-8, "t = {t}");
    }
    let (k, _) = synthesis::jump_order(&p, &cert, PI).unwrap();
    assert_eq!(k, 1);
    let nodal = synthesis::nodal_set(&p, &cert).unwrap();
    let expect: Vec<f64> = (1..5).map(|k| k as f64 * PI).filter(|t| *t < cert.t_star).collect();
    assert_eq!(nodal.len(), expect.len());
    for (got, want) in nodal.iter().zip(&expect) {
        assert!((got - want).abs() < 1e-4);
    }
}

#[test]
fn even_order_nodal_point_is_not_a_switch() {
    let f = fixtures::proper_subset().unwrap();
    let z = f.multiplier.clone().unwrap();
    assert!((dot(&f.x0, &z) + 1.0).abs() < 1e-8);
    let p = problem(&f);
    let report = verify::full_report(&p).unwrap();
    assert!(report.all_passed(), "{:?}", report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    let t_hat = fixtures::PROPER_SUBSET_T_HAT;
    let point = report.analysis.nodal_points.iter().find(|q| (q.t - t_hat).abs() < 1e-4).expect("t̂ is nodal");
    assert_eq!(point.order, 2);
    assert!(!point.is_switch);
    assert!(report.analysis.proper_subset);
    assert!(!report.analysis.switch_set.iter().any(|t| (t - t_hat).abs() < 1e-4));
    let (k, _) = synthesis::jump_order(&p, report.certificate(), point.t).unwrap();
    assert_eq!(k, 2);
}

#[test]
fn free_motion_matches_the_exponential() {
    let f = fixtures::a3();
    let p = problem(&f);
    let law = FnControl { m: 2, f: |_| vec![0.0, 0.0], breaks: vec![] };
    let t = 3.3;
    let traj = verify::simulate(&p, &law, t, 4).unwrap();
    let expect = mat_exp(&f.a, t).unwrap().mul_vec(&f.x0);
    let last = traj.states.last().unwrap();
    for (a, b) in last.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-13);
    }
    assert!(verify::simulate(&p, &law, 0.0, 4).is_err());
}

#[test]
fn margin_around_the_optimal_time() {
    let p = full_input(2, vec![3.0, 4.0]);
    assert!(dual::feasibility_margin(&p, 5.0).unwrap().phi.abs() < 1e-9);
    assert!(dual::feasibility_margin(&p, 6.0).unwrap().phi > 0.0);
    assert!(dual::feasibility_margin(&p, 4.0).unwrap().phi <= -1.0 + 1e-9);
    let unit = [0.6, 0.8];
    assert!((support_integral(&p.system, 2.5, &unit, 1e-12).unwrap() - 2.5).abs() < 1e-12);
}

#[test]
fn margin_is_nondecreasing_in_the_horizon() {
    let p = problem(&fixtures::a3());
    let mut prev = f64::NEG_INFINITY;
    for i in 1..=12 {
        let phi = dual::feasibility_margin(&p, 0.75 * i as f64).unwrap().phi;
        assert!(phi >= prev - 1e-9, "phi({}) = {phi} < {prev}", 0.75 * i as f64);
        prev = phi;
    }
}

#[test]
fn minimum_norm_closed_form() {
    let p = full_input(2, vec![3.0, 4.0]);
    assert!((dual::min_norm(&p, 10.0).unwrap() - 0.5).abs() < 1e-8);
    assert!((dual::min_norm(&p, 5.0).unwrap() - 1.0).abs() < 1e-8);
    let doubled = full_input(2, vec![6.0, 8.0]);
    assert!((dual::min_norm(&doubled, 10.0).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn optimal_time_scales_with_the_initial_state() {
    let x0 = vec![1.0, -2.0, 0.5];
    let base = solver::solve(&full_input(3, x0.clone())).unwrap().t_star;
    assert!((base - norm(&x0)).abs() < 1e-6);
    for lambda in [0.5, 3.0, 40.0] {
        let scaled: Vec<f64> = x0.iter().map(|v| lambda * v).collect();
        let t = solver::solve(&full_input(3, scaled)).unwrap().t_star;
        assert!((t - lambda * base).abs() < 1e-6 * lambda.max(1.0), "lambda = {lambda}: {t}");
    }
}

#[test]
fn scalar_systems_never_switch() {
    let p = Problem::new(Matrix::from_rows(&[&[-0.5]]), Matrix::from_rows(&[&[2.0]]), vec![1.5], Tolerances::default()).unwrap();
    let report = verify::full_report(&p).unwrap();
    assert!(report.all_passed());
    assert!(report.analysis.switch_set.is_empty());
}

#[test]
fn unreachable_initial_states() {
    // second coordinate is not driven at all
    let p = Problem::new(Matrix::zeros(2, 2), Matrix::from_rows(&[&[1.0], &[0.0]]), vec![1.0, 1.0], Tolerances::default()).unwrap();
    assert!(matches!(solver::solve(&p), Err(Error::Infeasible(_))));
    // exponential growth outruns a bounded control
    let tol = Tolerances { horizon_cap: 50.0, ..Tolerances::default() };
    let p = Problem::new(Matrix::from_rows(&[&[1.0]]), Matrix::from_rows(&[&[1.0]]), vec![2.0], tol).unwrap();
    assert!(matches!(solver::solve(&p), Err(Error::Inadmissible(_))));
}
