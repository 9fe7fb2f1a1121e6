//! Floating-point functions that `core` does not provide.

pub use libm::{ceil, cos, log2, pow, sin, sqrt};

pub const PI: f64 = core::f64::consts::PI;

#[inline]
pub fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}
