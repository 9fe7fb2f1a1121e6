//! Sampled trajectories and switching-map data as CSV.

use std::fmt::Write;

use timeopt_core::verify::states_at;
use timeopt_core::{OptimalControl, Problem};

pub const BASE_SAMPLES: usize = 2000;
pub const NODAL_SAMPLES: usize = 50;

/// `BASE_SAMPLES` uniform times on `[0, T*]` plus `NODAL_SAMPLES`
/// geometrically spaced times on each side of every nodal point, and the
/// nodal points themselves.
pub fn sample_grid(control: &OptimalControl) -> Vec<f64> {
    let t_star = control.t_star();
    let mut grid: Vec<f64> = (0..BASE_SAMPLES).map(|i| t_star * i as f64 / (BASE_SAMPLES - 1) as f64).collect();
    let (widest, narrowest) = (1e-2 * t_star, 1e-9 * t_star);
    let ratio = (narrowest / widest).powf(1.0 / (NODAL_SAMPLES - 1) as f64);
    for p in &control.nodal_points {
        grid.push(p.t);
        let mut e = widest;
        for _ in 0..NODAL_SAMPLES {
            for t in [p.t - e, p.t + e] {
                if t > 0.0 && t < t_star {
                    grid.push(t);
                }
            }
            e *= ratio;
        }
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    grid
}

/// Rows `t,x1..xn,u1..um` with a single header.
pub fn trajectory_csv(problem: &Problem, control: &OptimalControl) -> timeopt_core::Result<String> {
    let times = sample_grid(control);
    let states = states_at(problem, control, &times)?;
    let (n, m) = (problem.system.n(), problem.system.m());
    let mut out = String::from("t");
    (1..=n).for_each(|i| write!(out, ",x{i}").unwrap());
    (1..=m).for_each(|i| write!(out, ",u{i}").unwrap());
    out.push('\n');
    for (t, x) in times.iter().zip(&states) {
        let u = if *t > 0.0 { control.control_at(*t) } else { control.control_at(f64::MIN_POSITIVE) };
        write!(out, "{t}").unwrap();
        for v in x.iter().chain(&u) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Rows `t,norm_s,s1..sm` of the switching map on the same grid.
pub fn plot_csv(problem: &Problem, control: &OptimalControl) -> String {
    let m = problem.system.m();
    let mut out = String::from("t,norm_s");
    (1..=m).for_each(|i| write!(out, ",s{i}").unwrap());
    out.push('\n');
    for t in sample_grid(control) {
        let s = control.switching_map(t);
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        write!(out, "{t},{norm}").unwrap();
        for v in &s {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
