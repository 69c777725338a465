//! Small fixed-size linear algebra on the plane.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Point = [f64; 2];

/// Real 2×2 matrix, stored row-major. Serializes as `[a, b, c, d]` for
/// `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Matrix2 {
    pub m: [[f64; 2]; 2],
}

impl From<[f64; 4]> for Matrix2 {
    fn from(v: [f64; 4]) -> Self {
        Matrix2::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Matrix2> for [f64; 4] {
    fn from(m: Matrix2) -> Self {
        [m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]]
    }
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2 { m: [[1.0, 0.0], [0.0, 1.0]] };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Matrix2 { m: [[a, b], [c, d]] }
    }

    pub const fn diag(a: f64, d: f64) -> Self {
        Matrix2::new(a, 0.0, 0.0, d)
    }

    /// Counter-clockwise rotation `R_θ = [[cos θ, −sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    /// Reflection `[[cos θ, sin θ], [sin θ, −cos θ]]` (an element of O⁻₂).
    pub fn reflection(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Matrix2::new(c, s, s, -c)
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Self {
        Matrix2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn frobenius(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// True when `|det| ≤ 1e-12 · ‖M‖²_F`, i.e. numerically singular.
    pub fn is_singular(&self) -> bool {
        let scale = self.frobenius().powi(2);
        !(self.det().abs() > 1e-12 * scale) || !self.det().is_finite()
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if self.is_singular() {
            return Err(Error::NonInvertible { det });
        }
        Ok(Matrix2::new(
            self.m[1][1] / det,
            -self.m[0][1] / det,
            -self.m[1][0] / det,
            self.m[0][0] / det,
        ))
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn mul(&self, o: &Matrix2) -> Matrix2 {
        let a = &self.m;
        let b = &o.m;
        Matrix2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    /// Singular value decomposition `M = U·diag(s₁, s₂)·Vᵀ` with
    /// `s₁ ≥ s₂ ≥ 0` and orthogonal `U`, `V`.
    pub fn svd(&self) -> (Matrix2, [f64; 2], Matrix2) {
        let mtm = self.transpose().mul(self);
        let (lambda, angle) = sym_eigen(mtm.m[0][0], mtm.m[0][1], mtm.m[1][1]);
        let s1 = lambda[0].max(0.0).sqrt();
        let s2 = lambda[1].max(0.0).sqrt();
        let v1 = [angle.cos(), angle.sin()];
        let v2 = [-v1[1], v1[0]];
        let v = Matrix2::new(v1[0], v2[0], v1[1], v2[1]);
        let u1 = if s1 > 0.0 {
            let w = self.mul_vec(v1);
            [w[0] / s1, w[1] / s1]
        } else {
            [1.0, 0.0]
        };
        let u2 = if s2 > 1e-300 {
            let w = self.mul_vec(v2);
            [w[0] / s2, w[1] / s2]
        } else {
            [-u1[1], u1[0]]
        };
        let u = Matrix2::new(u1[0], u2[0], u1[1], u2[1]);
        (u, [s1, s2], v)
    }
}

/// Eigen-decomposition of the symmetric matrix `[[p, q], [q, r]]`.
///
/// Returns `([λ₁, λ₂], θ)` with `λ₁ ≥ λ₂` and `(cos θ, sin θ)` a unit
/// eigenvector of `λ₁`, `θ ∈ (−π/2, π/2]`.
pub fn sym_eigen(p: f64, q: f64, r: f64) -> ([f64; 2], f64) {
    let mean = 0.5 * (p + r);
    let half_diff = 0.5 * (p - r);
    let radius = half_diff.hypot(q);
    let theta = wrap_axial(0.5 * (2.0 * q).atan2(p - r));
    ([mean + radius, mean - radius], theta)
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

pub fn normalize(v: Vec2) -> Option<Vec2> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| [v[0] / n, v[1] / n])
}

pub fn unit(theta: f64) -> Vec2 {
    [theta.cos(), theta.sin()]
}

/// Representative of an axial angle in `(−π/2, π/2]`.
pub fn wrap_axial(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Distance between two axial angles (orientations modulo π), in `[0, π/2]`.
pub fn axial_distance(a: f64, b: f64) -> f64 {
    wrap_axial(a - b).abs()
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
