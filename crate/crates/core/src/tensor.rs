//! Intrinsic structure tensor `J = ∫_{S¹} Θ Θᵀ S(Θ) dΘ`, its orientation and
//! coherency, and the transport of orientations by linear maps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axial_distance, normalize, sym_eigen, Matrix2, Vec2};
use crate::quadrature::integrate_periodic;
use crate::spectral::AnisotropySpec;

/// Relative eigenvalue gap under which a tensor counts as isotropic.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Default node budget for [`structure_tensor_quadrature`].
pub const DEFAULT_QUADRATURE_NODES: usize = 4096;

/// Symmetric non-negative 2×2 matrix `[[j11, j12], [j12, j22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureTensor {
    pub j11: f64,
    pub j12: f64,
    pub j22: f64,
}

impl StructureTensor {
    pub const fn new(j11: f64, j12: f64, j22: f64) -> Self {
        StructureTensor { j11, j12, j22 }
    }

    pub fn trace(&self) -> f64 {
        self.j11 + self.j22
    }

    pub fn det(&self) -> f64 {
        self.j11 * self.j22 - self.j12 * self.j12
    }

    /// `[λ₁, λ₂]` with `λ₁ ≥ λ₂`.
    pub fn eigenvalues(&self) -> [f64; 2] {
        sym_eigen(self.j11, self.j12, self.j22).0
    }

    pub fn scaled(&self, c: f64) -> Self {
        StructureTensor::new(c * self.j11, c * self.j12, c * self.j22)
    }

    pub fn add(&self, o: &StructureTensor) -> Self {
        StructureTensor::new(self.j11 + o.j11, self.j12 + o.j12, self.j22 + o.j22)
    }

    pub fn is_psd(&self, eps: f64) -> bool {
        self.j11 >= -eps && self.j22 >= -eps && self.det() >= -eps
    }

    pub fn as_matrix(&self) -> Matrix2 {
        Matrix2::new(self.j11, self.j12, self.j12, self.j22)
    }

    /// `M J Mᵀ`.
    pub fn congruent(&self, m: &Matrix2) -> Self {
        let r = m.mul(&self.as_matrix()).mul(&m.transpose());
        StructureTensor::new(r.m[0][0], 0.5 * (r.m[0][1] + r.m[1][0]), r.m[1][1])
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, o: &StructureTensor) -> f64 {
        (self.j11 - o.j11)
            .abs()
            .max((self.j12 - o.j12).abs())
            .max((self.j22 - o.j22).abs())
    }
}

/// Orientation read off a structure tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationResult {
    /// Unit eigenvector of the largest eigenvalue, `(1, 0)` when degenerate.
    pub direction: Vec2,
    /// Axial angle of `direction`, in `(−π/2, π/2]`.
    pub angle: f64,
    /// `|λ₁ − λ₂| / (λ₁ + λ₂)`.
    pub coherency: f64,
    pub degenerate: bool,
}

/// `J` by composite Gauss–Legendre quadrature over `[0, 2π)`, with the
/// integration range split at every discontinuity of `S`.
pub fn structure_tensor_quadrature(spec: &AnisotropySpec, nodes: usize) -> Result<StructureTensor> {
    if nodes < 64 {
        return Err(Error::param(format!("quadrature needs at least 64 nodes, got {nodes}")));
    }
    let breaks = spec.breakpoints();
    let [a, b, c] = integrate_periodic(
        |t| {
            let s = spec.eval(t);
            let (sn, cs) = t.sin_cos();
            [cs * cs * s, cs * sn * s, sn * sn * s]
        },
        0.0,
        2.0 * PI,
        &breaks,
        nodes,
    );
    Ok(StructureTensor::new(a, b, c))
}

/// `∫_{S¹} S(Θ) dΘ` with the same quadrature as the tensor.
pub fn anisotropy_mass(spec: &AnisotropySpec, nodes: usize) -> f64 {
    integrate_periodic(|t| [spec.eval(t)], 0.0, 2.0 * PI, &spec.breakpoints(), nodes)[0]
}

/// Structure tensor of the standard FBF (`S ≡ 1/(2π)`).
pub fn fbf_tensor_closed() -> StructureTensor {
    StructureTensor::new(0.5, 0.0, 0.5)
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

/// Structure tensor of the elementary field (AFBF) with axis `alpha0` and
/// half-width `delta`: `½ I + ½ sinc(2δ) [[cos 2α₀, sin 2α₀], [sin 2α₀, −cos 2α₀]]`.
pub fn afbf_tensor_closed(alpha0: f64, delta: f64) -> Result<StructureTensor> {
    if !(delta > 0.0) {
        return Err(Error::param(format!("cone half-width {delta} must be positive")));
    }
    let k = 0.5 * sinc(2.0 * delta);
    let (s2, c2) = (2.0 * alpha0).sin_cos();
    Ok(StructureTensor::new(0.5 + k * c2, k * s2, 0.5 - k * c2))
}

/// Rank-one limit of [`afbf_tensor_closed`] as `δ → 0`.
pub fn afbf_tensor_dirac_limit(alpha0: f64) -> StructureTensor {
    let (s, c) = alpha0.sin_cos();
    StructureTensor::new(c * c, c * s, s * s)
}

/// Structure tensor of the sum of two elementary fields sharing `delta`.
/// The cones must be disjoint: `δ` below half the axial gap between the axes.
pub fn sum_afbf_tensor_closed(alpha0: f64, alpha1: f64, delta: f64) -> Result<StructureTensor> {
    let gap = axial_distance(alpha0, alpha1);
    if !(delta > 0.0) {
        return Err(Error::param(format!("cone half-width {delta} must be positive")));
    }
    if delta >= 0.5 * gap {
        return Err(Error::OverlappingCones { delta, gap });
    }
    let k = 0.5 * sinc(2.0 * delta);
    let c = (2.0 * alpha0).cos() + (2.0 * alpha1).cos();
    let s = (2.0 * alpha0).sin() + (2.0 * alpha1).sin();
    Ok(StructureTensor::new(1.0 + k * c, k * s, 1.0 - k * c))
}

/// Closed-form `J` when one is known: isotropic and cone specs, sums of
/// those, and orthogonal transforms of any of them (`J_L = L J Lᵀ`).
pub fn closed_form_tensor(spec: &AnisotropySpec) -> Option<StructureTensor> {
    match spec {
        AnisotropySpec::Isotropic { level } => Some(StructureTensor::new(PI * level, 0.0, PI * level)),
        AnisotropySpec::Cone { alpha0, delta, level } => {
            let mass = level.map_or(1.0, |l| 2.0 * delta * l);
            afbf_tensor_closed(*alpha0, *delta).ok().map(|t| t.scaled(mass))
        }
        AnisotropySpec::Sum { left, right } => {
            Some(closed_form_tensor(left)?.add(&closed_form_tensor(right)?))
        }
        AnisotropySpec::LinearlyTransformed { base, matrix, .. } => {
            let gram = matrix.transpose().mul(matrix);
            let orthogonal = (gram.m[0][0] - 1.0).abs() < 1e-12
                && (gram.m[1][1] - 1.0).abs() < 1e-12
                && gram.m[0][1].abs() < 1e-12;
            if orthogonal {
                Some(closed_form_tensor(base)?.congruent(matrix))
            } else {
                None
            }
        }
        AnisotropySpec::Custom(_) => None,
    }
}

/// Orientation and coherency of `j`.
///
/// The tensor is `degenerate` when `|λ₁ − λ₂| ≤ tol · (λ₁ + λ₂)`; its
/// direction is then reported as `(1, 0)`.
pub fn orientation_of(j: &StructureTensor, tol: f64) -> Result<OrientationResult> {
    let trace = j.trace();
    if !(trace > 0.0) {
        return Err(Error::ZeroTensor { trace });
    }
    let ([l1, l2], angle) = sym_eigen(j.j11, j.j12, j.j22);
    let coherency = ((l1 - l2) / (l1 + l2)).clamp(0.0, 1.0);
    if l1 - l2 <= tol * (l1 + l2) {
        return Ok(OrientationResult { direction: [1.0, 0.0], angle: 0.0, coherency, degenerate: true });
    }
    Ok(OrientationResult { direction: [angle.cos(), angle.sin()], angle, coherency, degenerate: false })
}

/// Orientation of `X(L⁻¹x)` given the orientation `n` of `X`:
/// `(L⁻¹)ᵀ n / ‖(L⁻¹)ᵀ n‖`.
pub fn deformed_orientation(n: Vec2, l: &Matrix2) -> Result<Vec2> {
    let inv_t = l.inverse()?.transpose();
    normalize(inv_t.mul_vec(n)).ok_or_else(|| Error::param("orientation vector must be non-zero"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Hurst;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn sinc_closed(t: f64) -> f64 {
        t.sin() / t
    }

    #[test]
    fn isotropic_quadrature() {
        let j = structure_tensor_quadrature(&AnisotropySpec::isotropic(), 256).unwrap();
        assert!(j.max_abs_diff(&fbf_tensor_closed()) < 1e-14, "{j:?}");
    }

    #[test]
    fn cone_quadrature_matches_frozen_values() {
        let j = structure_tensor_quadrature(&AnisotropySpec::cone(0.0, 0.3).unwrap(), 4096).unwrap();
        let k = 0.5 * sinc_closed(0.6);
        assert!((j.j11 - (0.5 + k)).abs() < 1e-12);
        assert!((j.j11 - 0.970_535_394_5).abs() < 1e-8);
        assert!((j.j22 - 0.029_464_605_5).abs() < 1e-8);
        assert!(j.j12.abs() < 1e-14);
        let j = structure_tensor_quadrature(&AnisotropySpec::cone(FRAC_PI_4, 0.3).unwrap(), 4096).unwrap();
        assert!((j.j12 - 0.470_535_394_5).abs() < 1e-8);
    }

    #[test]
    fn too_few_nodes() {
        assert!(structure_tensor_quadrature(&AnisotropySpec::isotropic(), 32).is_err());
    }

    #[test]
    fn afbf_closed_examples() {
        let j = afbf_tensor_closed(0.0, 0.3).unwrap();
        assert!((j.j11 - 0.970_535_394_5).abs() < 1e-8 && (j.j22 - 0.029_464_605_5).abs() < 1e-8);
        let j = afbf_tensor_closed(1.234, PI).unwrap();
        assert!(j.max_abs_diff(&StructureTensor::new(0.5, 0.0, 0.5)) < 1e-15);
        let o = orientation_of(&j, DEFAULT_DEGENERACY_TOL).unwrap();
        assert!(o.coherency < 1e-15 && o.degenerate);
        let l = afbf_tensor_dirac_limit(FRAC_PI_3);
        assert!(l.max_abs_diff(&afbf_tensor_closed(FRAC_PI_3, 1e-9).unwrap()) < 1e-15);
        assert!(l.det().abs() < 1e-16);
        assert!(afbf_tensor_closed(0.0, 0.0).is_err());
    }

    #[test]
    fn sum_closed_examples() {
        let j = sum_afbf_tensor_closed(FRAC_PI_6, FRAC_PI_3, 0.05).unwrap();
        let o = orientation_of(&j, DEFAULT_DEGENERACY_TOL).unwrap();
        assert!((o.angle - FRAC_PI_4).abs() < 1e-12);
        let j = sum_afbf_tensor_closed(0.0, FRAC_PI_2, 0.2).unwrap();
        assert!(j.max_abs_diff(&StructureTensor::new(1.0, 0.0, 1.0)) < 1e-15);
        assert!(orientation_of(&j, DEFAULT_DEGENERACY_TOL).unwrap().coherency < 1e-15);
        assert!(matches!(
            sum_afbf_tensor_closed(0.0, 0.3, 0.2),
            Err(Error::OverlappingCones { .. })
        ));
    }

    #[test]
    fn sum_with_obtuse_gap_uses_absolute_cosine() {
        // Axes 2.2 rad apart: the coherency is sinc(2δ)·|cos(α₀ − α₁)|.
        let (a0, a1, d) = (-1.1, 1.1, 0.1);
        let j = sum_afbf_tensor_closed(a0, a1, d).unwrap();
        let o = orientation_of(&j, DEFAULT_DEGENERACY_TOL).unwrap();
        let expected = sinc_closed(2.0 * d) * (a0 - a1).cos().abs();
        assert!((o.coherency - expected).abs() < 1e-12);
        assert!((o.angle.abs() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn orientation_examples() {
        let o = orientation_of(&StructureTensor::new(2.0, 0.0, 1.0), DEFAULT_DEGENERACY_TOL).unwrap();
        assert_eq!(o.direction, [1.0, 0.0]);
        assert!((o.coherency - 1.0 / 3.0).abs() < 1e-15);
        let o = orientation_of(&afbf_tensor_closed(FRAC_PI_3, 0.3).unwrap(), DEFAULT_DEGENERACY_TOL).unwrap();
        assert!((o.direction[0] - 0.5).abs() < 1e-12 && (o.direction[1] - 0.866_025_403_784_438_6).abs() < 1e-12);
        let o = orientation_of(&StructureTensor::new(0.5, 0.0, 0.5), DEFAULT_DEGENERACY_TOL).unwrap();
        assert!(o.degenerate && o.coherency == 0.0);
        assert!(matches!(
            orientation_of(&StructureTensor::new(0.0, 0.0, 0.0), 1e-9),
            Err(Error::ZeroTensor { .. })
        ));
    }

    #[test]
    fn orientation_scale_invariance() {
        let j = StructureTensor::new(0.7, 0.2, 0.3);
        let base = orientation_of(&j, DEFAULT_DEGENERACY_TOL).unwrap();
        for c in [1e-6, 1.0, 1e6] {
            let o = orientation_of(&j.scaled(c), DEFAULT_DEGENERACY_TOL).unwrap();
            assert!((o.angle - base.angle).abs() < 1e-14);
            assert!((o.coherency - base.coherency).abs() < 1e-14);
        }
    }

    #[test]
    fn deformed_orientation_examples() {
        let a0: f64 = 0.4;
        let t0 = 0.7;
        let n = deformed_orientation([a0.cos(), a0.sin()], &Matrix2::rotation(t0)).unwrap();
        assert!((n[0] - (a0 + t0).cos()).abs() < 1e-15 && (n[1] - (a0 + t0).sin()).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        let n = deformed_orientation([s, s], &Matrix2::diag(2.0, 1.0)).unwrap();
        assert!((n[0] - 0.447_213_6).abs() < 1e-7 && (n[1] - 0.894_427_2).abs() < 1e-7);
        let n = deformed_orientation([s, s], &Matrix2::IDENTITY).unwrap();
        assert!((n[0] - s).abs() < 1e-15 && (n[1] - s).abs() < 1e-15);
        assert!(deformed_orientation([1.0, 0.0], &Matrix2::new(1.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn trace_is_mass() {
        let spec = AnisotropySpec::linearly_transformed(
            AnisotropySpec::cone(0.3, 0.2).unwrap(),
            Hurst::new(0.3).unwrap(),
            Matrix2::new(1.2, 0.4, -0.3, 0.8),
        )
        .unwrap();
        let j = structure_tensor_quadrature(&spec, 4096).unwrap();
        // Midpoint rule on a fine grid as an independent reference.
        let m = 2_000_000;
        let h = 2.0 * PI / m as f64;
        let mass: f64 = (0..m).map(|i| spec.eval((i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((j.trace() - mass).abs() < 1e-5 * mass, "{} vs {}", j.trace(), mass);
        assert!((anisotropy_mass(&spec, 4096) - j.trace()).abs() < 1e-12);
    }
}
