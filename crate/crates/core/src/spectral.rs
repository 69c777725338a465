//! Anisotropy functions and spectral densities of self-similar Gaussian
//! fields with stationary increments.
//!
//! A field of this class has spectral density
//! `f(ξ) = ‖ξ‖^{−2H−2} · S(ξ/‖ξ‖)`, where the anisotropy function `S` lives
//! on the unit circle. Real fields have an even `S`; every built-in family is
//! even by construction.
//!
//! Cone normalization: a cone of half-width `δ` around `α₀` carries the total
//! mass `level · 2δ` (one for the default `level = 1/(2δ)`), shared equally by
//! the cone and its antipode. Each lobe therefore evaluates to `level / 2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axial_distance, circular_distance, norm, unit, wrap_axial, Matrix2, Vec2};

/// Self-similarity index, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Hurst(value))
        } else {
            Err(Error::param(format!("Hurst exponent {value} is outside (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Hurst {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Hurst::new(v)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

/// Anisotropy function given by a user callback on the angle of `Θ`.
///
/// The callback must be non-negative, even (`S(θ) = S(θ + π)`) and pure.
/// `breakpoints` lists the angles in `[0, 2π)` where it jumps, so that
/// quadrature can split there.
#[derive(Clone)]
pub struct CustomAnisotropy {
    pub eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for CustomAnisotropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomAnisotropy")
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl PartialEq for CustomAnisotropy {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.eval, &other.eval) && self.breakpoints == other.breakpoints
    }
}

/// Symbolic anisotropy function `S` on the unit circle.
///
/// JSON form: `{"kind": "isotropic" | "cone" | "sum" | "linear", ...}`; see
/// `docs/schema.md`. Build values through the constructors, or pass
/// deserialized ones through [`AnisotropySpec::validated`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnisotropySpec {
    Isotropic {
        #[serde(default = "default_isotropic_level")]
        level: f64,
    },
    Cone {
        alpha0: f64,
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<f64>,
    },
    Sum {
        left: Box<AnisotropySpec>,
        right: Box<AnisotropySpec>,
    },
    #[serde(rename = "linear")]
    LinearlyTransformed {
        base: Box<AnisotropySpec>,
        hurst: Hurst,
        matrix: Matrix2,
    },
    #[serde(skip)]
    Custom(CustomAnisotropy),
}

fn default_isotropic_level() -> f64 {
    1.0 / (2.0 * PI)
}

impl AnisotropySpec {
    /// `S ≡ 1/(2π)`, the anisotropy function of the standard FBF.
    pub fn isotropic() -> Self {
        AnisotropySpec::Isotropic { level: default_isotropic_level() }
    }

    pub fn isotropic_with_level(level: f64) -> Result<Self> {
        AnisotropySpec::Isotropic { level }.validated()
    }

    /// Elementary cone of half-width `delta` around `alpha0` with the default
    /// level `1/(2δ)`.
    pub fn cone(alpha0: f64, delta: f64) -> Result<Self> {
        AnisotropySpec::Cone { alpha0, delta, level: None }.validated()
    }

    pub fn cone_with_level(alpha0: f64, delta: f64, level: f64) -> Result<Self> {
        AnisotropySpec::Cone { alpha0, delta, level: Some(level) }.validated()
    }

    /// Pointwise sum. Overlapping cone supports are accepted with a warning.
    pub fn sum(left: AnisotropySpec, right: AnisotropySpec) -> Result<Self> {
        AnisotropySpec::Sum { left: Box::new(left), right: Box::new(right) }.validated()
    }

    /// Anisotropy function of `X(L⁻¹x)` when `base` is that of the
    /// `H`-self-similar field `X`.
    pub fn linearly_transformed(base: AnisotropySpec, hurst: Hurst, matrix: Matrix2) -> Result<Self> {
        AnisotropySpec::LinearlyTransformed { base: Box::new(base), hurst, matrix }.validated()
    }

    pub fn custom(eval: impl Fn(f64) -> f64 + Send + Sync + 'static, breakpoints: Vec<f64>) -> Self {
        AnisotropySpec::Custom(CustomAnisotropy {
            eval: Arc::new(eval),
            breakpoints: breakpoints.into_iter().map(|b| b.rem_euclid(2.0 * PI)).collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: AnisotropySpec = serde_json::from_str(text)?;
        spec.validated()
    }

    /// Checks invariants and normalizes cone axes into `(−π/2, π/2]`.
    pub fn validated(self) -> Result<Self> {
        match self {
            AnisotropySpec::Isotropic { level } => {
                check_level(level)?;
                Ok(AnisotropySpec::Isotropic { level })
            }
            AnisotropySpec::Cone { alpha0, delta, level } => {
                if !alpha0.is_finite() {
                    return Err(Error::param("cone axis must be finite"));
                }
                if !(delta > 0.0 && delta <= PI) {
                    return Err(Error::param(format!("cone half-width {delta} is outside (0, π]")));
                }
                if let Some(l) = level {
                    check_level(l)?;
                }
                Ok(AnisotropySpec::Cone { alpha0: wrap_axial(alpha0), delta, level })
            }
            AnisotropySpec::Sum { left, right } => {
                let left = left.validated()?;
                let right = right.validated()?;
                if let (Some((a0, d0)), Some((a1, d1))) = (left.cone_params(), right.cone_params()) {
                    let gap = axial_distance(a0, a1);
                    if d0 + d1 >= gap {
                        log::warn!(
                            "sum of cones with overlapping supports (axes {a0:.4}, {a1:.4}, half-widths {d0:.4}, {d1:.4})"
                        );
                    }
                }
                Ok(AnisotropySpec::Sum { left: Box::new(left), right: Box::new(right) })
            }
            AnisotropySpec::LinearlyTransformed { base, hurst, matrix } => {
                matrix.inverse()?;
                Ok(AnisotropySpec::LinearlyTransformed { base: Box::new(base.validated()?), hurst, matrix })
            }
            custom @ AnisotropySpec::Custom(_) => Ok(custom),
        }
    }

    fn cone_params(&self) -> Option<(f64, f64)> {
        match self {
            AnisotropySpec::Cone { alpha0, delta, .. } => Some((*alpha0, *delta)),
            _ => None,
        }
    }

    /// `S(cos θ, sin θ)`. Assumes a validated spec.
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            AnisotropySpec::Isotropic { level } => *level,
            AnisotropySpec::Cone { alpha0, delta, level } => {
                let lobe = 0.5 * level.unwrap_or(0.5 / delta);
                let hits = [*alpha0, alpha0 + PI]
                    .iter()
                    .filter(|&&axis| circular_distance(theta, axis) <= *delta)
                    .count();
                lobe * hits as f64
            }
            AnisotropySpec::Sum { left, right } => left.eval(theta) + right.eval(theta),
            AnisotropySpec::LinearlyTransformed { base, hurst, matrix } => {
                let v = matrix.transpose().mul_vec(unit(theta));
                let r = norm(v);
                matrix.det().abs() * r.powf(-2.0 * hurst.value() - 2.0) * base.eval(v[1].atan2(v[0]))
            }
            AnisotropySpec::Custom(c) => (c.eval)(theta),
        }
    }

    /// Angles in `[0, 2π)`, sorted, where `S` may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        for b in out.iter_mut() {
            *b = b.rem_euclid(2.0 * PI);
            if *b >= 2.0 * PI {
                *b = 0.0;
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            AnisotropySpec::Isotropic { .. } => {}
            AnisotropySpec::Cone { alpha0, delta, .. } => {
                if *delta < PI {
                    for axis in [*alpha0, alpha0 + PI] {
                        out.push(axis - delta);
                        out.push(axis + delta);
                    }
                }
            }
            AnisotropySpec::Sum { left, right } => {
                left.collect_breakpoints(out);
                right.collect_breakpoints(out);
            }
            AnisotropySpec::LinearlyTransformed { base, matrix, .. } => {
                // Θ with arg(LᵀΘ) = β lies along L⁻ᵀ u(β).
                let inv_t = match matrix.inverse() {
                    Ok(inv) => inv.transpose(),
                    Err(_) => return,
                };
                let mut inner = Vec::new();
                base.collect_breakpoints(&mut inner);
                out.extend(inner.into_iter().map(|beta| {
                    let w = inv_t.mul_vec(unit(beta));
                    w[1].atan2(w[0])
                }));
            }
            AnisotropySpec::Custom(c) => out.extend_from_slice(&c.breakpoints),
        }
    }

    fn check_invertible(&self) -> Result<()> {
        match self {
            AnisotropySpec::Sum { left, right } => {
                left.check_invertible()?;
                right.check_invertible()
            }
            AnisotropySpec::LinearlyTransformed { base, matrix, .. } => {
                matrix.inverse()?;
                base.check_invertible()
            }
            _ => Ok(()),
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if level.is_finite() && level >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("anisotropy level {level} must be finite and non-negative")))
    }
}

/// `S(cos θ, sin θ)`, checking the angle and any linear maps involved.
pub fn eval_anisotropy(spec: &AnisotropySpec, theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::param("angle must be finite"));
    }
    spec.check_invertible()?;
    Ok(spec.eval(theta))
}

/// `f(ξ) = ‖ξ‖^{−2H−2} S(ξ/‖ξ‖)`.
pub fn eval_spectral_density(spec: &AnisotropySpec, hurst: Hurst, xi: Vec2) -> Result<f64> {
    let r = norm(xi);
    if r == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if !r.is_finite() {
        return Err(Error::param("frequency must be finite"));
    }
    spec.check_invertible()?;
    Ok(spectral_density_unchecked(spec, hurst, xi))
}

pub(crate) fn spectral_density_unchecked(spec: &AnisotropySpec, hurst: Hurst, xi: Vec2) -> f64 {
    let r = norm(xi);
    r.powf(-2.0 * hurst.value() - 2.0) * spec.eval(xi[1].atan2(xi[0]))
}
