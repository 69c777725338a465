//! Synthesis and orientation analysis of anisotropic Gaussian random fields.
//!
//! The crate is organised around the life cycle of an oriented texture:
//!
//! * [`spectral`] describes self-similar fields through their anisotropy
//!   function `S` and spectral density `f(ξ) = ‖ξ‖^{-2H-2} S(ξ/‖ξ‖)`.
//! * [`tensor`] integrates `S` into the intrinsic structure tensor `J` and
//!   extracts orientation and coherency, both by quadrature and in closed form.
//! * [`fields`] holds the field families (FBF, AFBF, sums, linear deformations,
//!   MBF, GAFBF, WAFBF), their tangent fields and local orientations.
//! * [`synth`] draws raster realizations from spectral noise.
//! * [`monogenic`] analyses rasters with the Riesz transform and isotropic
//!   wavelet frames and recovers orientation, coherency and Hurst exponents.
//!
//! Coordinates: a raster value at row `r`, column `c` sits at
//! `x = (x₁, x₂) = (origin₁ + c·h, origin₂ + r·h)`, so `x₁` runs along columns
//! and `x₂` along rows. Frequencies follow the same convention.

pub mod error;
pub mod fields;
pub mod linalg;
pub mod monogenic;
pub mod quadrature;
pub mod raster;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod tensor;

mod fft;

pub use error::{Error, Result};
pub use fields::{Afbf, Deformation, FieldModel, ScalarField};
pub use linalg::{Matrix2, Point, Vec2};
pub use monogenic::{OrientationField, RadialProfile, WaveletPyramid};
pub use raster::{FieldRealization, Grid, Raster};
pub use spectral::{AnisotropySpec, Hurst};
pub use tensor::{OrientationResult, StructureTensor};
