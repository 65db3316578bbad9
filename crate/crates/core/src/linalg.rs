//! Small dense complex helpers shared by the constructors and the spectral code.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest entry modulus of `a`.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `‖M†M − I‖_max`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let gram = m.adjoint() * m;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Wraps an angle into (−π, π].
pub fn wrap_phase(alpha: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = alpha.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}
