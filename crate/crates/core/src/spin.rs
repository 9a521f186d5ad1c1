//! Spin-1/2 algebra for the singlet pair: y-axis coil rotations, the
//! relative coil angle, and the spin state of particle B conditional on
//! particle A's outcome.

use num_complex::Complex64;

/// A spin-1/2 state in the z basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spinor2 {
    pub up: Complex64,
    pub down: Complex64,
}

impl Spinor2 {
    pub fn new(up: Complex64, down: Complex64) -> Self {
        Spinor2 { up, down }
    }

    pub fn from_reals(up: f64, down: f64) -> Self {
        Spinor2 {
            up: Complex64::new(up, 0.0),
            down: Complex64::new(down, 0.0),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }
}

/// Rotation about the y axis by `angle`, real-valued in the z basis.
///
/// Maps `|+>` to `cos(angle/2)|+> - sin(angle/2)|->` and
/// `|->` to `cos(angle/2)|-> + sin(angle/2)|+>`.
#[derive(Clone, Copy, Debug)]
pub struct SpinRotation {
    // Row-major 2x2 matrix acting on (up, down).
    m: [[f64; 2]; 2],
}

pub fn rotation_y(angle: f64) -> SpinRotation {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    SpinRotation {
        m: [[c, s], [-s, c]],
    }
}

impl SpinRotation {
    pub fn apply(&self, v: &Spinor2) -> Spinor2 {
        Spinor2 {
            up: self.m[0][0] * v.up + self.m[0][1] * v.down,
            down: self.m[1][0] * v.up + self.m[1][1] * v.down,
        }
    }

    /// Matrix product `self * other` (apply `other` first).
    pub fn compose(&self, other: &SpinRotation) -> SpinRotation {
        let a = &self.m;
        let b = &other.m;
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        SpinRotation { m }
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.m
    }

    /// Max abs deviation of `self^T self` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.m;
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let dot = m[0][i] * m[0][j] + m[1][i] * m[1][j];
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// The only angle the post-coil singlet dynamics depends on. Not
/// range-reduced; callers see exactly `beta - alpha`.
pub fn relative_angle(alpha: f64, beta: f64) -> f64 {
    beta - alpha
}

/// Spin amplitudes (c_plus, c_minus) of particle B once particle A's
/// outcome `s_a` is settled: `(sin(g/2), cos(g/2))` after A lands spin-up,
/// `(-cos(g/2), sin(g/2))` after spin-down. Always unit-normalized.
pub fn conditional_coefficients(gamma: f64, s_a: i8) -> (f64, f64) {
    assert!(s_a == 1 || s_a == -1, "s_a must be +1 or -1, got {s_a}");
    let c = (gamma / 2.0).cos();
    let s = (gamma / 2.0).sin();
    if s_a == 1 {
        (s, c)
    } else {
        (-c, s)
    }
}
