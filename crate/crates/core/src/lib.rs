//! Time-optimal control of linear systems `x' = Ax + Bu` under the unit-ball
//! constraint `‖u(t)‖ ≤ 1`.
//!
//! The crate computes the optimal time `T*` by bisection on the dual
//! feasibility margin, extracts the maximum-principle multiplier, builds the
//! bang-bang optimal control in closed form and analyzes its switching
//! structure: nodal set, jump orders, switching points and directions, and the
//! four-way behavior classification. Everything is `no_std` (with `alloc`);
//! file formats and the command line live in the `timeopt` crate.
//!
//! The usual entry point is [`verify::full_report`], or [`solver::solve`]
//! followed by [`synthesis::analyze`] when only the control is needed.

#![no_std]

extern crate alloc;

pub mod dual;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub(crate) mod math;
pub mod quadrature;
pub mod solver;
pub mod structure;
pub mod synthesis;
pub mod verify;

pub use dual::{LinearSystem, Problem, Tolerances};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use solver::DualCertificate;
pub use synthesis::{BehaviorClass, OptimalControl, SwitchAnalysis};
pub use verify::Report;
