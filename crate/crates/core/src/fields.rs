//! Field families, their tangent fields and local orientations, and the
//! deformations used to warp elementary fields.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{dot, normalize, unit, wrap_axial, Matrix2, Point, Vec2};
use crate::spectral::{AnisotropySpec, Hurst};
use crate::tensor::{
    afbf_tensor_closed, closed_form_tensor, orientation_of, structure_tensor_quadrature, OrientationResult,
    StructureTensor, DEFAULT_DEGENERACY_TOL, DEFAULT_QUADRATURE_NODES,
};

/// Step of the central differences used when no analytic gradient is known.
pub const FD_STEP: f64 = 1e-6;

/// Built-in symbolic scalar fields, `c + a₁x₁ + a₂x₂ + q₁₁x₁² + q₁₂x₁x₂ + q₂₂x₂²`
/// in its three flavours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldExpr {
    Constant {
        value: f64,
    },
    Affine {
        c: f64,
        a1: f64,
        a2: f64,
    },
    Quadratic {
        c: f64,
        a1: f64,
        a2: f64,
        #[serde(default)]
        q11: f64,
        #[serde(default)]
        q12: f64,
        #[serde(default)]
        q22: f64,
    },
}

impl FieldExpr {
    fn coefficients(&self) -> [f64; 6] {
        match *self {
            FieldExpr::Constant { value } => [value, 0.0, 0.0, 0.0, 0.0, 0.0],
            FieldExpr::Affine { c, a1, a2 } => [c, a1, a2, 0.0, 0.0, 0.0],
            FieldExpr::Quadratic { c, a1, a2, q11, q12, q22 } => [c, a1, a2, q11, q12, q22],
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        let [c, a1, a2, q11, q12, q22] = self.coefficients();
        c + a1 * x[0] + a2 * x[1] + q11 * x[0] * x[0] + q12 * x[0] * x[1] + q22 * x[1] * x[1]
    }

    pub fn gradient(&self, x: Point) -> Vec2 {
        let [_, a1, a2, q11, q12, q22] = self.coefficients();
        [a1 + 2.0 * q11 * x[0] + q12 * x[1], a2 + q12 * x[0] + 2.0 * q22 * x[1]]
    }
}

type EvalFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Point) -> Vec2 + Send + Sync>;

/// Scalar function of the plane, either symbolic or a user callback.
///
/// Callbacks must be pure: they are called concurrently from synthesis.
#[derive(Clone)]
pub struct ScalarField {
    expr: Option<FieldExpr>,
    eval: Option<EvalFn>,
    grad: Option<GradFn>,
}

impl ScalarField {
    pub fn from_expr(expr: FieldExpr) -> Self {
        ScalarField { expr: Some(expr), eval: None, grad: None }
    }

    pub fn constant(value: f64) -> Self {
        Self::from_expr(FieldExpr::Constant { value })
    }

    /// `c + a1·x₁ + a2·x₂`.
    pub fn affine(c: f64, a1: f64, a2: f64) -> Self {
        Self::from_expr(FieldExpr::Affine { c, a1, a2 })
    }

    pub fn quadratic(c: f64, a1: f64, a2: f64, q11: f64, q12: f64, q22: f64) -> Self {
        Self::from_expr(FieldExpr::Quadratic { c, a1, a2, q11, q12, q22 })
    }

    /// Callback without analytic gradient; gradients fall back to central
    /// differences with step [`FD_STEP`].
    pub fn from_fn(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField { expr: None, eval: Some(Arc::new(f)), grad: None }
    }

    pub fn from_fn_with_gradient(
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
        g: impl Fn(Point) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        ScalarField { expr: None, eval: Some(Arc::new(f)), grad: Some(Arc::new(g)) }
    }

    pub fn expr(&self) -> Option<&FieldExpr> {
        self.expr.as_ref()
    }

    pub fn eval(&self, x: Point) -> f64 {
        match (&self.expr, &self.eval) {
            (Some(e), _) => e.eval(x),
            (None, Some(f)) => f(x),
            (None, None) => unreachable!("scalar field without evaluator"),
        }
    }

    pub fn gradient(&self, x: Point) -> Vec2 {
        if let Some(e) = &self.expr {
            return e.gradient(x);
        }
        if let Some(g) = &self.grad {
            return g(x);
        }
        let h = FD_STEP;
        [
            (self.eval([x[0] + h, x[1]]) - self.eval([x[0] - h, x[1]])) / (2.0 * h),
            (self.eval([x[0], x[1] + h]) - self.eval([x[0], x[1] - h])) / (2.0 * h),
        ]
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.expr {
            Some(e) => write!(f, "ScalarField({e:?})"),
            None => f.write_str("ScalarField(<callback>)"),
        }
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        match (&self.expr, &other.expr) {
            (Some(a), Some(b)) => a == b,
            (None, None) => match (&self.eval, &other.eval) {
                (Some(a), Some(b)) => Arc::ptr_eq(a, b),
                _ => false,
            },
            _ => false,
        }
    }
}

impl Serialize for ScalarField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.expr {
            Some(e) => e.serialize(s),
            None => Err(serde::ser::Error::custom("callback scalar fields cannot be serialized")),
        }
    }
}

impl<'de> Deserialize<'de> for ScalarField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FieldExpr::deserialize(d).map(ScalarField::from_expr)
    }
}

type MapFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
type JacFn = Arc<dyn Fn(Point) -> Matrix2 + Send + Sync>;

/// Smooth map of the plane with its Jacobian.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Deformation {
    /// `Φ(x) = R_{−α(x)} x`.
    LocalRotation { alpha: ScalarField },
    /// Conformal map whose orientation field is the harmonic `α(x) = a x₁ + b x₂ + c`.
    AffineConformal { a: f64, b: f64, c: f64 },
    #[serde(skip)]
    UserSupplied { map: MapFn, jacobian: JacFn },
}

impl fmt::Debug for Deformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deformation::LocalRotation { alpha } => f.debug_struct("LocalRotation").field("alpha", alpha).finish(),
            Deformation::AffineConformal { a, b, c } => {
                f.debug_struct("AffineConformal").field("a", a).field("b", b).field("c", c).finish()
            }
            Deformation::UserSupplied { .. } => f.write_str("UserSupplied"),
        }
    }
}

impl PartialEq for Deformation {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Deformation::LocalRotation { alpha: a }, Deformation::LocalRotation { alpha: b }) => a == b,
            (
                Deformation::AffineConformal { a, b, c },
                Deformation::AffineConformal { a: a2, b: b2, c: c2 },
            ) => a == a2 && b == b2 && c == c2,
            (Deformation::UserSupplied { map: m1, .. }, Deformation::UserSupplied { map: m2, .. }) => {
                Arc::ptr_eq(m1, m2)
            }
            _ => false,
        }
    }
}

/// `x ↦ R_{−α(x)} x`. Its Jacobian is singular where `∇α(x) ∧ x = −1`.
pub fn local_rotation_deformation(alpha: ScalarField) -> Deformation {
    Deformation::LocalRotation { alpha }
}

/// Conformal deformation for the orientation field `α(x) = a x₁ + b x₂ + c`.
///
/// `a = b = 0` has no conformal primitive; use [`Deformation::global_rotation`]
/// with angle `c` instead.
pub fn affine_conformal_deformation(a: f64, b: f64, c: f64) -> Result<Deformation> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::param("conformal coefficients must be finite"));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::DegenerateConformal { c });
    }
    Ok(Deformation::AffineConformal { a, b, c })
}

impl Deformation {
    pub fn identity() -> Self {
        Deformation::global_rotation(0.0)
    }

    /// `x ↦ R_{−c} x`.
    pub fn global_rotation(c: f64) -> Self {
        Deformation::LocalRotation { alpha: ScalarField::constant(c) }
    }

    pub fn user_supplied(
        map: impl Fn(Point) -> Point + Send + Sync + 'static,
        jacobian: impl Fn(Point) -> Matrix2 + Send + Sync + 'static,
    ) -> Self {
        Deformation::UserSupplied { map: Arc::new(map), jacobian: Arc::new(jacobian) }
    }

    pub fn map(&self, x: Point) -> Point {
        match self {
            Deformation::LocalRotation { alpha } => {
                let (s, c) = alpha.eval(x).sin_cos();
                [c * x[0] + s * x[1], -s * x[0] + c * x[1]]
            }
            Deformation::AffineConformal { a, b, c } => {
                let al = a * x[0] + b * x[1] + c;
                let (s, co) = al.sin_cos();
                let k = (a * x[1] - b * x[0]).exp() / (a * a + b * b);
                [k * (a * s - b * co), k * (a * co + b * s)]
            }
            Deformation::UserSupplied { map, .. } => map(x),
        }
    }

    pub fn jacobian(&self, x: Point) -> Matrix2 {
        match self {
            Deformation::LocalRotation { alpha } => {
                let (s, c) = alpha.eval(x).sin_cos();
                let [g1, g2] = alpha.gradient(x);
                let p1 = c * x[0] + s * x[1];
                let p2 = -s * x[0] + c * x[1];
                Matrix2::new(c + g1 * p2, s + g2 * p2, -s - g1 * p1, c - g2 * p1)
            }
            Deformation::AffineConformal { a, b, c } => {
                let (s, co) = (a * x[0] + b * x[1] + c).sin_cos();
                let k = (a * x[1] - b * x[0]).exp();
                Matrix2::new(k * co, k * s, -k * s, k * co)
            }
            Deformation::UserSupplied { jacobian, .. } => jacobian(x),
        }
    }

    /// Jacobian at `x`, or `SingularJacobian` where `Φ` is not a local
    /// diffeomorphism.
    pub fn regular_jacobian(&self, x: Point) -> Result<Matrix2> {
        let j = self.jacobian(x);
        if !j.det().is_finite() || j.is_singular() {
            return Err(Error::SingularJacobian { point: x, det: j.det() });
        }
        Ok(j)
    }

    /// Prescribed orientation angle when the map encodes one (`α(x)`).
    pub fn orientation_field(&self, x: Point) -> Option<f64> {
        match self {
            Deformation::LocalRotation { alpha } => Some(alpha.eval(x)),
            Deformation::AffineConformal { a, b, c } => Some(a * x[0] + b * x[1] + c),
            Deformation::UserSupplied { .. } => None,
        }
    }
}

/// Elementary field: anisotropic fractional Brownian field with a cone of
/// half-width `delta` around `alpha0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Afbf {
    pub hurst: Hurst,
    pub alpha0: f64,
    pub delta: f64,
}

impl Afbf {
    pub fn new(hurst: f64, alpha0: f64, delta: f64) -> Result<Self> {
        let a = Afbf { hurst: Hurst::new(hurst)?, alpha0, delta };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= PI) || !self.alpha0.is_finite() {
            return Err(Error::param(format!(
                "AFBF needs finite alpha0 and delta in (0, π], got ({}, {})",
                self.alpha0, self.delta
            )));
        }
        Ok(())
    }

    pub fn anisotropy(&self) -> AnisotropySpec {
        AnisotropySpec::Cone { alpha0: wrap_axial(self.alpha0), delta: self.delta, level: None }
    }

    /// Unit vector along the cone axis.
    pub fn orientation(&self) -> Vec2 {
        unit(wrap_axial(self.alpha0))
    }
}

/// Field model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldModel {
    Fbf {
        hurst: Hurst,
    },
    Afbf(Afbf),
    SumAfbf {
        hurst: Hurst,
        alpha0: f64,
        alpha1: f64,
        delta: f64,
    },
    LinearDeformed {
        base: Box<FieldModel>,
        matrix: Matrix2,
    },
    /// Any self-similar field given by its anisotropy function.
    SelfSimilar {
        hurst: Hurst,
        anisotropy: AnisotropySpec,
    },
    Mbf {
        h: ScalarField,
    },
    Gafbf {
        h: ScalarField,
        alpha: ScalarField,
        delta: f64,
    },
    Wafbf {
        phi: Deformation,
        base: Afbf,
    },
}

impl FieldModel {
    pub fn fbf(hurst: f64) -> Result<Self> {
        Ok(FieldModel::Fbf { hurst: Hurst::new(hurst)? })
    }

    pub fn afbf(hurst: f64, alpha0: f64, delta: f64) -> Result<Self> {
        Ok(FieldModel::Afbf(Afbf::new(hurst, alpha0, delta)?))
    }

    pub fn sum_afbf(hurst: f64, alpha0: f64, alpha1: f64, delta: f64) -> Result<Self> {
        let m = FieldModel::SumAfbf { hurst: Hurst::new(hurst)?, alpha0, alpha1, delta };
        m.validate()?;
        Ok(m)
    }

    pub fn linear_deformed(base: FieldModel, matrix: Matrix2) -> Result<Self> {
        let m = FieldModel::LinearDeformed { base: Box::new(base), matrix };
        m.validate()?;
        Ok(m)
    }

    pub fn self_similar(hurst: f64, anisotropy: AnisotropySpec) -> Result<Self> {
        let m = FieldModel::SelfSimilar { hurst: Hurst::new(hurst)?, anisotropy };
        m.validate()?;
        Ok(m)
    }

    pub fn mbf(h: ScalarField) -> Self {
        FieldModel::Mbf { h }
    }

    pub fn gafbf(h: ScalarField, alpha: ScalarField, delta: f64) -> Result<Self> {
        let m = FieldModel::Gafbf { h, alpha, delta };
        m.validate()?;
        Ok(m)
    }

    pub fn wafbf(phi: Deformation, base: Afbf) -> Result<Self> {
        base.validate()?;
        Ok(FieldModel::Wafbf { phi, base })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: FieldModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    /// Checks the parameters that can be checked without a grid.
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldModel::Fbf { .. } | FieldModel::Mbf { .. } => Ok(()),
            FieldModel::Afbf(a) => a.validate(),
            FieldModel::SumAfbf { hurst, alpha0, alpha1, delta } => {
                Afbf { hurst: *hurst, alpha0: *alpha0, delta: *delta }.validate()?;
                let gap = crate::linalg::axial_distance(*alpha0, *alpha1);
                if *delta >= 0.5 * gap {
                    return Err(Error::OverlappingCones { delta: *delta, gap });
                }
                Ok(())
            }
            FieldModel::LinearDeformed { base, matrix } => {
                if !base.is_self_similar() {
                    return Err(Error::UnsupportedModel("linear deformations need a self-similar base".into()));
                }
                base.validate()?;
                matrix.inverse().map(|_| ())
            }
            FieldModel::SelfSimilar { anisotropy, .. } => anisotropy.clone().validated().map(|_| ()),
            FieldModel::Gafbf { delta, .. } => {
                if !(*delta > 0.0 && *delta <= PI) {
                    return Err(Error::param(format!("GAFBF delta {delta} must lie in (0, π]")));
                }
                Ok(())
            }
            FieldModel::Wafbf { base, .. } => base.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldModel::Fbf { .. } => "fbf",
            FieldModel::Afbf(_) => "afbf",
            FieldModel::SumAfbf { .. } => "sum_afbf",
            FieldModel::LinearDeformed { .. } => "linear_deformed",
            FieldModel::SelfSimilar { .. } => "self_similar",
            FieldModel::Mbf { .. } => "mbf",
            FieldModel::Gafbf { .. } => "gafbf",
            FieldModel::Wafbf { .. } => "wafbf",
        }
    }

    pub fn is_self_similar(&self) -> bool {
        matches!(
            self,
            FieldModel::Fbf { .. }
                | FieldModel::Afbf(_)
                | FieldModel::SumAfbf { .. }
                | FieldModel::LinearDeformed { .. }
                | FieldModel::SelfSimilar { .. }
        )
    }

    /// Hurst index of a self-similar model.
    pub fn hurst(&self) -> Option<Hurst> {
        match self {
            FieldModel::Fbf { hurst } | FieldModel::SumAfbf { hurst, .. } | FieldModel::SelfSimilar { hurst, .. } => {
                Some(*hurst)
            }
            FieldModel::Afbf(a) => Some(a.hurst),
            FieldModel::LinearDeformed { base, .. } => base.hurst(),
            _ => None,
        }
    }

    /// Anisotropy function of a self-similar model.
    pub fn anisotropy(&self) -> Option<AnisotropySpec> {
        Some(match self {
            FieldModel::Fbf { .. } => AnisotropySpec::isotropic(),
            FieldModel::Afbf(a) => a.anisotropy(),
            FieldModel::SumAfbf { alpha0, alpha1, delta, .. } => AnisotropySpec::Sum {
                left: Box::new(AnisotropySpec::Cone { alpha0: wrap_axial(*alpha0), delta: *delta, level: None }),
                right: Box::new(AnisotropySpec::Cone { alpha0: wrap_axial(*alpha1), delta: *delta, level: None }),
            },
            FieldModel::LinearDeformed { base, matrix } => AnisotropySpec::LinearlyTransformed {
                base: Box::new(base.anisotropy()?),
                hurst: base.hurst()?,
                matrix: *matrix,
            },
            FieldModel::SelfSimilar { anisotropy, .. } => anisotropy.clone(),
            _ => return None,
        })
    }

    /// Self-similar field with stationary increments obtained by zooming at `x0`.
    pub fn tangent_field(&self, x0: Point) -> Result<FieldModel> {
        match self {
            FieldModel::Mbf { h } => FieldModel::fbf(h.eval(x0)),
            FieldModel::Gafbf { h, alpha, delta } => FieldModel::afbf(h.eval(x0), wrap_axial(alpha.eval(x0)), *delta),
            FieldModel::Wafbf { phi, base } => {
                let l = phi.regular_jacobian(x0)?.inverse()?;
                Ok(FieldModel::LinearDeformed { base: Box::new(FieldModel::Afbf(*base)), matrix: l })
            }
            m => Ok(m.clone()),
        }
    }

    /// Structure tensor of the tangent field at `x0`, in closed form when one
    /// is known and by quadrature otherwise.
    pub fn local_structure_tensor(&self, x0: Point) -> Result<StructureTensor> {
        let spec = self
            .tangent_field(x0)?
            .anisotropy()
            .expect("tangent fields are self-similar");
        match closed_form_tensor(&spec) {
            Some(j) => Ok(j),
            None => structure_tensor_quadrature(&spec, DEFAULT_QUADRATURE_NODES),
        }
    }

    /// Local orientation at `x0`.
    ///
    /// GAFBF reports `α(x₀)` directly and WAFBF transports the base axis by
    /// `DΦ(x₀)ᵀ`; the coherency still comes from the tangent structure tensor.
    pub fn local_orientation(&self, x0: Point) -> Result<OrientationResult> {
        match self {
            FieldModel::Gafbf { alpha, delta, .. } => {
                let j = afbf_tensor_closed(alpha.eval(x0), *delta)?;
                let angle = wrap_axial(alpha.eval(x0));
                let coherency = orientation_of(&j, DEFAULT_DEGENERACY_TOL)?.coherency;
                Ok(OrientationResult { direction: unit(angle), angle, coherency, degenerate: false })
            }
            FieldModel::Wafbf { phi, base } => {
                let d = phi.regular_jacobian(x0)?;
                let n = normalize(d.transpose().mul_vec(base.orientation()))
                    .ok_or(Error::SingularJacobian { point: x0, det: d.det() })?;
                let angle = wrap_axial(n[1].atan2(n[0]));
                let j = self.local_structure_tensor(x0)?;
                let coherency = orientation_of(&j, DEFAULT_DEGENERACY_TOL)?.coherency;
                Ok(OrientationResult { direction: unit(angle), angle, coherency, degenerate: false })
            }
            _ => orientation_of(&self.local_structure_tensor(x0)?, DEFAULT_DEGENERACY_TOL),
        }
    }
}

/// `u(α) + ⟨u(α)^⊥, x₀⟩ ∇α(x₀)`, normalized: the local orientation of a
/// rotation-warped elementary field with axis 0.
pub fn rotation_warp_orientation(alpha: &ScalarField, x0: Point) -> Option<Vec2> {
    let a = alpha.eval(x0);
    let u = unit(a);
    let perp = [-u[1], u[0]];
    let g = alpha.gradient(x0);
    let k = dot(perp, x0);
    normalize([u[0] + k * g[0], u[1] + k * g[1]])
}
