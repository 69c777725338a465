//! Riesz transform, monogenic signal and isotropic wavelet analysis.
//!
//! Scale `i ≥ 0` filters with `φ(2^i ‖ω‖)`, `ω` in radians per pixel, so
//! scale 0 is the finest band (touching `π`) and each step halves the band.
//! In the usual `L²`-normalized frame notation scale `i` is frame index
//! `j = −i`, and the Riesz coefficient covariance of an `H`-self-similar
//! field obeys `Σ_j ∝ 2^{−2j(H+1)}`. The maps computed here are not
//! normalized, so `trace Σ̂_i ∝ 2^{2iH}`; [`frame_trace`] converts.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{angular_freq, fft2_real, ifft2_real};
use crate::linalg::wrap_axial;
use crate::raster::{write_angle_ppm, write_channels, Raster, Sidecar};
use crate::tensor::{orientation_of, OrientationResult, StructureTensor, DEFAULT_DEGENERACY_TOL};

/// Relative threshold below which orientations are masked.
pub const MASK_EPS: f64 = 1e-12;

/// Radial profile `φ` of an isotropic tight wavelet frame, supported on
/// `(π/4, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialProfile {
    #[default]
    Simoncelli,
    Meyer,
}

fn meyer_taper(t: f64) -> f64 {
    t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
}

impl RadialProfile {
    pub fn eval(&self, lambda: f64) -> f64 {
        if !(lambda > PI / 4.0 && lambda <= PI) {
            return 0.0;
        }
        let t = (2.0 * lambda / PI).log2();
        match self {
            RadialProfile::Simoncelli => (FRAC_PI_2 * t).cos(),
            RadialProfile::Meyer => {
                if t >= 0.0 {
                    (FRAC_PI_2 * meyer_taper(t)).cos()
                } else {
                    (FRAC_PI_2 * meyer_taper(1.0 + t)).sin()
                }
            }
        }
    }

    /// Number of derivatives vanishing at `λ = 0`. Both profiles are zero on
    /// a neighbourhood of the origin, so every order vanishes (`None`).
    pub fn vanishing_order(&self) -> Option<u32> {
        None
    }

    /// `Σ_{j ∈ Z} φ(2^j λ)²`.
    pub fn partition_sum(&self, lambda: f64) -> f64 {
        let mut s = 0.0;
        for j in -64..=64 {
            let v = self.eval(lambda * 2f64.powi(j));
            s += v * v;
        }
        s
    }

    pub fn name(&self) -> &'static str {
        match self {
            RadialProfile::Simoncelli => "simoncelli",
            RadialProfile::Meyer => "meyer",
        }
    }
}

impl std::str::FromStr for RadialProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simoncelli" => Ok(RadialProfile::Simoncelli),
            "meyer" => Ok(RadialProfile::Meyer),
            _ => Err(Error::param(format!("unknown radial profile '{s}' (simoncelli, meyer)"))),
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::param(format!("analysis needs rasters of side ≥ 8, got {n}")));
    }
    Ok(())
}

/// Riesz multipliers `j ω/‖ω‖` applied to a spectrum, returned as the two
/// real maps. Taking real parts drops the unpaired Nyquist lines.
fn riesz_of_spectrum(spec: &[Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s1 = vec![Complex64::new(0.0, 0.0); n * n];
    let mut s2 = vec![Complex64::new(0.0, 0.0); n * n];
    for k2 in 0..n {
        let w2 = angular_freq(k2, n);
        for k1 in 0..n {
            let w1 = angular_freq(k1, n);
            let r = w1.hypot(w2);
            if r == 0.0 {
                continue;
            }
            let z = spec[k2 * n + k1] * Complex64::i();
            s1[k2 * n + k1] = z * (w1 / r);
            s2[k2 * n + k1] = z * (w2 / r);
        }
    }
    (ifft2_real(s1, n), ifft2_real(s2, n))
}

/// `(R₁f, R₂f)`.
pub fn riesz_transform(image: &Raster) -> Result<(Raster, Raster)> {
    let n = image.n();
    check_size(n)?;
    let spec = fft2_real(image.data(), n);
    let (a, b) = riesz_of_spectrum(&spec, n);
    Ok((Raster::from_vec(n, a)?, Raster::from_vec(n, b)?))
}

/// Amplitude, scalar phase and axial orientation of the monogenic signal.
#[derive(Debug, Clone)]
pub struct MonogenicSignal {
    pub amplitude: Raster,
    pub phase: Raster,
    pub orientation: Raster,
    /// False where `‖Rf‖` is too small for an orientation.
    pub mask: Vec<bool>,
}

pub fn monogenic_components(image: &Raster) -> Result<MonogenicSignal> {
    let n = image.n();
    let (r1, r2) = riesz_transform(image)?;
    let eps = MASK_EPS * image.energy() / (n * n) as f64;
    let mut amplitude = Raster::zeros(n);
    let mut phase = Raster::zeros(n);
    let mut orientation = Raster::zeros(n);
    let mut mask = vec![false; n * n];
    for i in 0..n * n {
        let (f, a, b) = (image.data()[i], r1.data()[i], r2.data()[i]);
        let rn2 = a * a + b * b;
        amplitude.data_mut()[i] = (f * f + rn2).sqrt();
        phase.data_mut()[i] = rn2.sqrt().atan2(f);
        if rn2 > eps {
            mask[i] = true;
            orientation.data_mut()[i] = wrap_axial(b.atan2(a));
        }
    }
    Ok(MonogenicSignal { amplitude, phase, orientation, mask })
}

/// Isotropic and Riesz coefficient maps of one scale.
#[derive(Debug, Clone)]
pub struct PyramidLevel {
    pub scale: u32,
    pub c: Raster,
    pub r1: Raster,
    pub r2: Raster,
}

/// Undecimated isotropic wavelet analysis of a raster.
#[derive(Debug, Clone)]
pub struct WaveletPyramid {
    pub n: usize,
    pub profile: RadialProfile,
    pub levels: Vec<PyramidLevel>,
    /// `Σ f² / n²` of the analysed image.
    pub image_power: f64,
    /// `Σ_ω Σ_i φ(2^i ω)² |F(ω)|² / n²`.
    pub bandpassed_energy: f64,
}

/// Largest usable scale for side `n`.
pub fn max_scale(n: usize) -> u32 {
    n.trailing_zeros().saturating_sub(1)
}

pub fn wavelet_pyramid(image: &Raster, scales: &[u32], profile: RadialProfile) -> Result<WaveletPyramid> {
    let n = image.n();
    check_size(n)?;
    if !n.is_power_of_two() {
        return Err(Error::param(format!("analysis needs a power-of-two side, got {n}")));
    }
    for &s in scales {
        if s > max_scale(n) {
            return Err(Error::ScaleOutOfBand { scale: s, n });
        }
    }
    let spec = fft2_real(image.data(), n);
    let radius: Vec<f64> = (0..n * n)
        .map(|i| angular_freq(i % n, n).hypot(angular_freq(i / n, n)))
        .collect();
    let levels: Vec<(PyramidLevel, f64)> = scales
        .par_iter()
        .map(|&scale| {
            let k = 2f64.powi(scale as i32);
            let mut band = 0.0;
            let filtered: Vec<Complex64> = spec
                .iter()
                .zip(&radius)
                .map(|(z, r)| {
                    let p = profile.eval(k * r);
                    band += p * p * z.norm_sqr();
                    z * p
                })
                .collect();
            let (r1, r2) = riesz_of_spectrum(&filtered, n);
            let c = ifft2_real(filtered, n);
            let level = PyramidLevel {
                scale,
                c: Raster::from_vec(n, c).expect("square"),
                r1: Raster::from_vec(n, r1).expect("square"),
                r2: Raster::from_vec(n, r2).expect("square"),
            };
            (level, band / (n * n) as f64)
        })
        .collect();
    let bandpassed_energy = levels.iter().map(|l| l.1).sum();
    Ok(WaveletPyramid {
        n,
        profile,
        levels: levels.into_iter().map(|l| l.0).collect(),
        image_power: image.energy() / (n * n) as f64,
        bandpassed_energy,
    })
}

impl WaveletPyramid {
    pub fn level(&self, scale: u32) -> Result<&PyramidLevel> {
        self.levels.iter().find(|l| l.scale == scale).ok_or(Error::EmptyScale(scale))
    }

    /// `Σ_{i,k} c_{i,k}²`.
    pub fn energy(&self) -> f64 {
        self.levels.iter().map(|l| l.c.energy()).sum()
    }

    /// `Σ_{i,k} (c⁽¹⁾_{i,k})² + (c⁽²⁾_{i,k})²`.
    pub fn riesz_energy(&self) -> f64 {
        self.levels.iter().map(|l| l.r1.energy() + l.r2.energy()).sum()
    }
}

/// Spatial average of `[c⁽¹⁾; c⁽²⁾][c⁽¹⁾; c⁽²⁾]ᵀ` at one scale.
pub fn empirical_structure_tensor(pyr: &WaveletPyramid, scale: u32) -> Result<StructureTensor> {
    cropped_structure_tensor(pyr, scale, 1.0)
}

/// Average over the central square holding a fraction `crop` of each side.
///
/// Fields that are not periodic carry wrap-around edges into the circular
/// transforms; a crop keeps their axis-aligned energy out of the estimate.
pub fn cropped_structure_tensor(pyr: &WaveletPyramid, scale: u32, crop: f64) -> Result<StructureTensor> {
    if !(crop > 0.0 && crop <= 1.0) {
        return Err(Error::param(format!("crop fraction must lie in (0, 1], got {crop}")));
    }
    let l = pyr.level(scale)?;
    let n = pyr.n;
    let lo = (n as f64 * (1.0 - crop) / 2.0).floor() as usize;
    let hi = n - lo;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for r in lo..hi {
        for col in lo..hi {
            let (x, y) = (l.r1.get(r, col), l.r2.get(r, col));
            a += x * x;
            b += x * y;
            c += y * y;
        }
    }
    let m = ((hi - lo) * (hi - lo)) as f64;
    Ok(StructureTensor::new(a / m, b / m, c / m))
}

/// Orientation of [`empirical_structure_tensor`].
pub fn global_orientation(pyr: &WaveletPyramid, scale: u32) -> Result<OrientationResult> {
    orientation_of(&empirical_structure_tensor(pyr, scale)?, DEFAULT_DEGENERACY_TOL)
}

/// Orientation of [`cropped_structure_tensor`].
pub fn cropped_orientation(pyr: &WaveletPyramid, scale: u32, crop: f64) -> Result<OrientationResult> {
    orientation_of(&cropped_structure_tensor(pyr, scale, crop)?, DEFAULT_DEGENERACY_TOL)
}

/// Trace of the covariance at scale `i` in the normalized frame, `2^{2i}·trace`.
pub fn frame_trace(scale: u32, trace: f64) -> f64 {
    4f64.powi(scale as i32) * trace
}

/// Least-squares slope of `log₂ trace` against the frame index `j`, turned
/// into `Ĥ = −slope/2 − 1`.
pub fn hurst_regression(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientScales(points.len()));
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::param(format!("covariance trace {} at frame index {} is not positive", p.1, p.0 + 0.0)));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1.log2()).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.log2() - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientScales(1));
    }
    Ok(-0.5 * sxy / sxx - 1.0)
}

/// Hurst index from the scale law of the Riesz covariances.
pub fn estimate_hurst(pyr: &WaveletPyramid, scales: &[u32]) -> Result<f64> {
    let mut uniq: Vec<u32> = scales.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() < 2 {
        return Err(Error::InsufficientScales(uniq.len()));
    }
    let pts = uniq
        .iter()
        .map(|&s| Ok((-(s as f64), frame_trace(s, empirical_structure_tensor(pyr, s)?.trace()))))
        .collect::<Result<Vec<_>>>()?;
    hurst_regression(&pts)
}

/// Per-pixel orientation and coherency.
#[derive(Debug, Clone)]
pub struct OrientationField {
    pub n: usize,
    pub angle: Raster,
    pub coherency: Raster,
    /// True where the local tensor carries energy.
    pub mask: Vec<bool>,
}

fn gaussian_kernel(w: f64) -> Vec<f64> {
    let r = (3.0 * w).ceil() as i64;
    let k: Vec<f64> = (-r..=r).map(|d| (-0.5 * (d as f64 / w).powi(2)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Circular separable convolution.
fn smooth(src: &[f64], n: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let ni = n as i64;
    let mut rows = vec![0.0; n * n];
    rows.par_chunks_mut(n).enumerate().for_each(|(y, out)| {
        for (x, o) in out.iter_mut().enumerate() {
            *o = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * src[y * n + (x as i64 + k as i64 - r).rem_euclid(ni) as usize])
                .sum();
        }
    });
    let mut cols = vec![0.0; n * n];
    cols.par_chunks_mut(n).enumerate().for_each(|(y, out)| {
        for (x, o) in out.iter_mut().enumerate() {
            *o = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * rows[(y as i64 + k as i64 - r).rem_euclid(ni) as usize * n + x])
                .sum();
        }
    });
    cols
}

/// Gaussian-windowed (`σ = w` pixels, cut at `3w`, periodic) Riesz tensor
/// at every pixel.
pub fn windowed_orientation_field(pyr: &WaveletPyramid, scale: u32, w: f64) -> Result<OrientationField> {
    if !(w >= 2.0) {
        return Err(Error::param(format!("window radius {w} must be at least 2 pixels")));
    }
    let l = pyr.level(scale)?;
    let n = pyr.n;
    let (r1, r2) = (l.r1.data(), l.r2.data());
    let kernel = gaussian_kernel(w);
    let p: Vec<f64> = r1.iter().map(|v| v * v).collect();
    let q: Vec<f64> = r1.iter().zip(r2).map(|(a, b)| a * b).collect();
    let s: Vec<f64> = r2.iter().map(|v| v * v).collect();
    let (p, q, s) = (smooth(&p, n, &kernel), smooth(&q, n, &kernel), smooth(&s, n, &kernel));
    let eps = MASK_EPS * pyr.image_power;
    let mut angle = Raster::zeros(n);
    let mut coherency = Raster::zeros(n);
    let mut mask = vec![false; n * n];
    for i in 0..n * n {
        let t = StructureTensor::new(p[i], q[i], s[i]);
        if t.trace() <= eps {
            continue;
        }
        if let Ok(o) = orientation_of(&t, DEFAULT_DEGENERACY_TOL) {
            angle.data_mut()[i] = o.angle;
            coherency.data_mut()[i] = o.coherency;
            mask[i] = true;
        }
    }
    Ok(OrientationField { n, angle, coherency, mask })
}

/// Axial mean angle and circular standard deviation (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl OrientationField {
    fn in_crop(&self, r: usize, c: usize, crop: f64) -> bool {
        let lo = (self.n as f64 * (1.0 - crop) / 2.0).floor() as usize;
        let hi = self.n - lo;
        r >= lo && r < hi && c >= lo && c < hi
    }

    /// Pixels `(r, c)` that are valid and inside the central crop holding
    /// a fraction `crop` of each side.
    pub fn valid_pixels(&self, crop: f64) -> Vec<(usize, usize)> {
        (0..self.n * self.n)
            .map(|i| (i / self.n, i % self.n))
            .filter(|&(r, c)| self.mask[r * self.n + c] && self.in_crop(r, c, crop))
            .collect()
    }

    /// Statistics of doubled angles over the central crop.
    pub fn axial_stats(&self, crop: f64) -> AxialStats {
        let px = self.valid_pixels(crop);
        let (mut cs, mut sn) = (0.0, 0.0);
        for &(r, c) in &px {
            let a = 2.0 * self.angle.get(r, c);
            cs += a.cos();
            sn += a.sin();
        }
        let m = px.len().max(1) as f64;
        let resultant = (cs.hypot(sn) / m).clamp(1e-300, 1.0);
        AxialStats { mean: wrap_axial(0.5 * sn.atan2(cs)), std: 0.5 * (-2.0 * resultant.ln()).sqrt(), count: px.len() }
    }

    /// Stores angle and coherency as a two-channel raster.
    pub fn save(&self, stem: &std::path::Path) -> Result<()> {
        let mut angle = self.angle.clone();
        for (v, m) in angle.data_mut().iter_mut().zip(&self.mask) {
            if !m {
                *v = f64::NAN;
            }
        }
        write_channels(stem, &[&angle, &self.coherency], &Sidecar::new(self.n, None, &["angle", "coherency"]))
    }

    pub fn save_ppm(&self, path: &std::path::Path) -> Result<()> {
        write_angle_ppm(path, &self.angle, &self.coherency, &self.mask)
    }
}
