//! Raster synthesis by discretizing the harmonizable representation
//! `X(x) = ∫ (e^{j⟨x,ξ⟩} − 1) f(ξ)^{1/2} W(dξ)` on a frequency lattice.
//!
//! All methods share the lattice `ξ = (2π/P)·k`, `k ∈ {−(N/2−1), …, N/2−1}²`,
//! `k ≠ 0`, with `N = freq_n` and `P` the period of the synthesis domain, and
//! the per-bin noise of [`SpectralNoise`]. Only bins with `k₁ > 0`, or
//! `k₁ = 0, k₂ > 0`, draw noise; their mirrors get the conjugate, which makes
//! the field real.

use std::f64::consts::{PI, TAU};

use log::{debug, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::fields::{Afbf, Deformation, FieldModel, ScalarField};
use crate::linalg::Point;
use crate::raster::{FieldRealization, Grid, Raster};
use crate::rng::SpectralNoise;
use crate::spectral::{spectral_density_unchecked, AnisotropySpec, Hurst};

/// Default operation cap of the direct-sum synthesis (`n²·freq_n²`).
pub const DEFAULT_OP_CAP: u64 = 1 << 33;

/// Default frequency lattice of the direct-sum synthesis.
pub const DEFAULT_GAFBF_FREQ_N: usize = 64;

/// Default cap on the side of the base grid of warped fields.
pub const DEFAULT_MAX_BASE_N: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Bilinear,
    /// Keys cubic convolution, `a = −1/2`.
    Bicubic,
}

/// Knobs of every synthesis method. Unset values take method defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthOptions {
    /// Side of the frequency lattice. Defaults to the grid size for the FFT
    /// method and to [`DEFAULT_GAFBF_FREQ_N`] for the direct sum.
    pub freq_n: Option<usize>,
    /// The FFT method treats the field as periodic over `period_factor`
    /// times the domain side.
    pub period_factor: usize,
    pub op_cap: u64,
    /// Extra room around the warped domain, as a fraction of its bounding box.
    pub margin: f64,
    pub interpolation: Interpolation,
    /// Side of the base grid of warped fields; chosen automatically if unset.
    pub base_n: Option<usize>,
    pub max_base_n: usize,
    /// Explicit base grid of warped fields, overriding `margin` and `base_n`.
    pub base_grid: Option<Grid>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            freq_n: None,
            period_factor: 1,
            op_cap: DEFAULT_OP_CAP,
            margin: 0.1,
            interpolation: Interpolation::Bilinear,
            base_n: None,
            max_base_n: DEFAULT_MAX_BASE_N,
            base_grid: None,
        }
    }
}

/// Resolved parameters recorded with a realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SynthParams {
    Spectral { freq_n: usize, period_factor: usize },
    DirectSum { freq_n: usize },
    Warped { base_grid: Grid, freq_n: usize, margin: f64, interpolation: Interpolation },
}

/// Synthesizes any supported model with the matching method.
pub fn synthesize(model: &FieldModel, grid: &Grid, seed: u64, opts: &SynthOptions) -> Result<FieldRealization> {
    match model {
        FieldModel::Mbf { .. } | FieldModel::Gafbf { .. } => synthesize_gafbf_with(model, grid, seed, opts),
        FieldModel::Wafbf { phi, base } => synthesize_wafbf_with(phi, base, grid, seed, opts),
        _ => synthesize_ssi_with(model, grid, seed, opts),
    }
}

/// FFT synthesis of a self-similar model.
pub fn synthesize_ssi(model: &FieldModel, grid: &Grid, seed: u64, freq_n: usize) -> Result<FieldRealization> {
    let opts = SynthOptions { freq_n: Some(freq_n), ..SynthOptions::default() };
    synthesize_ssi_with(model, grid, seed, &opts)
}

pub fn synthesize_ssi_with(model: &FieldModel, grid: &Grid, seed: u64, opts: &SynthOptions) -> Result<FieldRealization> {
    grid.validate()?;
    model.validate()?;
    let (Some(hurst), Some(spec)) = (model.hurst(), model.anisotropy()) else {
        return Err(Error::UnsupportedModel(format!(
            "the FFT method needs a self-similar model, got {}",
            model.name()
        )));
    };
    let freq_n = opts.freq_n.unwrap_or(grid.n);
    let (values, residue) = spectral_raster(&spec, hurst, grid, seed, freq_n, opts.period_factor)?;
    Ok(FieldRealization {
        values,
        grid: *grid,
        model: model.clone(),
        seed,
        params: SynthParams::Spectral { freq_n, period_factor: opts.period_factor },
        max_imag_residue: residue,
    })
}

fn check_lattice(grid: &Grid, freq_n: usize) -> Result<()> {
    if freq_n < 4 || freq_n % 2 != 0 {
        return Err(Error::InvalidFrequencyGrid(format!("freq_n = {freq_n} must be even and ≥ 4")));
    }
    if freq_n < grid.n {
        return Err(Error::InvalidFrequencyGrid(format!(
            "freq_n = {freq_n} is smaller than the grid size {}",
            grid.n
        )));
    }
    Ok(())
}

fn lattice_half(freq_n: usize) -> impl Iterator<Item = (i64, i64)> {
    let h = (freq_n / 2) as i64 - 1;
    (-h..=h).flat_map(move |k2| (0..=h).map(move |k1| (k1, k2))).filter(|&(k1, k2)| k1 > 0 || (k1 == 0 && k2 > 0))
}

fn spectral_raster(
    spec: &AnisotropySpec,
    hurst: Hurst,
    grid: &Grid,
    seed: u64,
    freq_n: usize,
    period_factor: usize,
) -> Result<(Raster, f64)> {
    check_lattice(grid, freq_n)?;
    if period_factor == 0 {
        return Err(Error::InvalidFrequencyGrid("period_factor must be ≥ 1".into()));
    }
    let n = grid.n;
    let m = period_factor * n;
    let dxi = TAU / (m as f64 * grid.spacing());
    let noise = SpectralNoise::new(seed);
    let bins: Vec<(i64, i64)> = lattice_half(freq_n).collect();
    let coefs: Vec<(Complex64, Complex64)> = bins
        .par_iter()
        .map(|&(k1, k2)| {
            let xi = [k1 as f64 * dxi, k2 as f64 * dxi];
            let amp = spectral_density_unchecked(spec, hurst, xi).sqrt() * dxi;
            let c0 = noise.complex_normal(k1, k2) * amp;
            let phase = Complex64::from_polar(1.0, grid.origin[0] * xi[0] + grid.origin[1] * xi[1]);
            (c0 * phase, c0)
        })
        .collect();

    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    let mi = m as i64;
    let mut at_zero = 0.0;
    for (&(k1, k2), &(c, c0)) in bins.iter().zip(&coefs) {
        buf[(k2.rem_euclid(mi) * mi + k1.rem_euclid(mi)) as usize] += c;
        buf[((-k2).rem_euclid(mi) * mi + (-k1).rem_euclid(mi)) as usize] += c.conj();
        at_zero += 2.0 * c0.re;
    }
    fft2(&mut buf, m, true);

    let mut residue = 0.0f64;
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        for z in &buf[r * m..r * m + n] {
            residue = residue.max(z.im.abs());
            data.push(z.re);
        }
    }
    // Subtract X(0): exactly the sample at x = 0 when it is a node.
    let x0 = match grid.origin_node() {
        Some((r, c)) => data[r * n + c],
        None => at_zero,
    };
    for v in &mut data {
        *v -= x0;
    }
    debug!("spectral synthesis n={n} freq_n={freq_n} m={m} residue={residue:e}");
    Ok((Raster::from_vec(n, data)?, residue))
}

/// Direct-sum synthesis of GAFBF and MBF models: one shared noise draw and
/// a pixel-dependent amplitude `C(x, ξ) ‖ξ‖^{−h(x)−1}`.
pub fn synthesize_gafbf(model: &FieldModel, grid: &Grid, seed: u64, freq_n: usize) -> Result<FieldRealization> {
    let opts = SynthOptions { freq_n: Some(freq_n), ..SynthOptions::default() };
    synthesize_gafbf_with(model, grid, seed, &opts)
}

enum Amplitude<'a> {
    Isotropic,
    Cone { alpha: &'a ScalarField, delta: f64 },
}

pub fn synthesize_gafbf_with(model: &FieldModel, grid: &Grid, seed: u64, opts: &SynthOptions) -> Result<FieldRealization> {
    grid.validate()?;
    model.validate()?;
    let (h, amplitude) = match model {
        FieldModel::Mbf { h } => (h, Amplitude::Isotropic),
        FieldModel::Gafbf { h, alpha, delta } => (h, Amplitude::Cone { alpha, delta: *delta }),
        m => {
            return Err(Error::UnsupportedModel(format!(
                "the direct-sum method handles mbf and gafbf, got {}",
                m.name()
            )))
        }
    };
    let n = grid.n;
    let freq_n = opts.freq_n.unwrap_or(DEFAULT_GAFBF_FREQ_N);
    if freq_n < 4 || freq_n % 2 != 0 {
        return Err(Error::InvalidFrequencyGrid(format!("freq_n = {freq_n} must be even and ≥ 4")));
    }
    let needed = (n as u128).pow(2) * (freq_n as u128).pow(2);
    if needed > opts.op_cap as u128 {
        return Err(Error::BudgetExceeded { needed, cap: opts.op_cap as u128 });
    }

    let hv: Vec<f64> = (0..n * n).into_par_iter().map(|i| h.eval(grid.point(i / n, i % n))).collect();
    if let Some(bad) = hv.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::param(format!("Hurst function takes the value {bad} outside (0, 1) on the grid")));
    }

    let dxi = TAU / grid.side;
    let half = (freq_n / 2) as i64 - 1;
    let noise = SpectralNoise::new(seed);
    let bins: Vec<(i64, i64)> = lattice_half(freq_n).collect();
    // Per bin: column index, row index, ln‖ξ‖, arg ξ, angular half-width, W.
    let table: Vec<(usize, usize, f64, f64, f64, Complex64)> = bins
        .par_iter()
        .map(|&(k1, k2)| {
            let xi = [k1 as f64 * dxi, k2 as f64 * dxi];
            let r = xi[0].hypot(xi[1]);
            let hw = (0.5 * dxi / r).atan();
            (k1 as usize, (k2 + half) as usize, r.ln(), xi[1].atan2(xi[0]), hw, noise.complex_normal(k1, k2))
        })
        .collect();
    let k1_len = half as usize + 1;
    let k2_len = 2 * half as usize + 1;
    let e1: Vec<Vec<Complex64>> = (0..n)
        .map(|c| {
            let x1 = grid.point(0, c)[0];
            (0..k1_len).map(|k| Complex64::from_polar(1.0, x1 * k as f64 * dxi)).collect()
        })
        .collect();
    let e2: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            let x2 = grid.point(r, 0)[1];
            (0..k2_len).map(|k| Complex64::from_polar(1.0, x2 * (k as i64 - half) as f64 * dxi)).collect()
        })
        .collect();

    let iso = (1.0 / TAU).sqrt();
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|r| {
            let mut cache_h = f64::NAN;
            let mut radial = vec![0.0; table.len()];
            let (table, e1, e2, hv, amplitude) = (&table, &e1, &e2, &hv, &amplitude);
            (0..n).map(move |c| {
                let x = grid.point(r, c);
                let hx = hv[r * n + c];
                if hx != cache_h {
                    for (out, b) in radial.iter_mut().zip(table) {
                        *out = (-(hx + 1.0) * b.2).exp();
                    }
                    cache_h = hx;
                }
                let (alpha, lobe) = match amplitude {
                    Amplitude::Isotropic => (0.0, 0.0),
                    Amplitude::Cone { alpha, delta } => (alpha.eval(x), 1.0 / (4.0 * delta)),
                };
                let mut acc = 0.0;
                for (b, rad) in table.iter().zip(&radial) {
                    let amp = match amplitude {
                        Amplitude::Isotropic => iso,
                        Amplitude::Cone { delta, .. } => {
                            let frac = cone_cell_fraction(b.3, b.4, alpha, *delta);
                            if frac == 0.0 {
                                continue;
                            }
                            (lobe * frac).sqrt()
                        }
                    };
                    let k = e1[c][b.0] * e2[r][b.1] - 1.0;
                    acc += (k * b.5).re * amp * rad;
                }
                2.0 * dxi * acc
            })
        })
        .collect();

    Ok(FieldRealization {
        values: Raster::from_vec(n, data)?,
        grid: *grid,
        model: model.clone(),
        seed,
        params: SynthParams::DirectSum { freq_n },
        max_imag_residue: 0.0,
    })
}

/// Fraction of the angular cell `[θ − hw, θ + hw]` covered by the two cone
/// lobes around `α` and `α + π`, each lobe counted separately.
///
/// Averaging `C²` over the cell instead of sampling it at the bin centre
/// lets a bin fade in and out as `α(x)` moves; sampling at the centre makes
/// whole low-frequency bins switch on and off, which shows up as spurious
/// edges across the raster.
fn cone_cell_fraction(theta: f64, hw: f64, alpha: f64, delta: f64) -> f64 {
    let mut covered = 0.0;
    for axis in [alpha, alpha + PI] {
        let s = (axis - theta + PI).rem_euclid(TAU) - PI;
        for shift in [-TAU, 0.0, TAU] {
            let c = s + shift;
            covered += ((c + delta).min(hw) - (c - delta).max(-hw)).max(0.0);
        }
    }
    covered / (2.0 * hw)
}

/// Warped elementary field `X(Φ(x))`: the base field is synthesized on a
/// grid covering `Φ(domain)` and interpolated at the warped points.
pub fn synthesize_wafbf(
    phi: &Deformation,
    base: &Afbf,
    grid: &Grid,
    seed: u64,
    margin: f64,
    interpolation: Interpolation,
) -> Result<FieldRealization> {
    let opts = SynthOptions { margin, interpolation, ..SynthOptions::default() };
    synthesize_wafbf_with(phi, base, grid, seed, &opts)
}

pub fn synthesize_wafbf_with(
    phi: &Deformation,
    base: &Afbf,
    grid: &Grid,
    seed: u64,
    opts: &SynthOptions,
) -> Result<FieldRealization> {
    grid.validate()?;
    let model = FieldModel::wafbf(phi.clone(), *base)?;
    let n = grid.n;
    let pts: Vec<Point> = (0..n * n).into_par_iter().map(|i| phi.map(grid.point(i / n, i % n))).collect();
    if let Some(p) = pts.iter().find(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::param(format!("deformation is not finite on the grid ({p:?})")));
    }
    let base_grid = match opts.base_grid {
        Some(g) => {
            g.validate()?;
            g
        }
        None => auto_base_grid(phi, grid, &pts, opts)?,
    };
    let freq_n = opts.freq_n.unwrap_or(base_grid.n);
    let (values, residue) = spectral_raster(&base.anisotropy(), base.hurst, &base_grid, seed, freq_n, 1)?;

    let hb = base_grid.spacing();
    let nb = base_grid.n;
    let limit = (nb - 1) as f64;
    let out: Vec<f64> = pts
        .par_iter()
        .map(|p| {
            let u = (p[0] - base_grid.origin[0]) / hb;
            let v = (p[1] - base_grid.origin[1]) / hb;
            let tol = 1e-9;
            if !(u >= -tol && v >= -tol && u <= limit + tol && v <= limit + tol) {
                return Err(Error::DomainEscape { point: *p });
            }
            let (u, v) = (u.clamp(0.0, limit), v.clamp(0.0, limit));
            Ok(match opts.interpolation {
                Interpolation::Bilinear => bilinear(&values, u, v),
                Interpolation::Bicubic => bicubic(&values, u, v),
            })
        })
        .collect::<Result<_>>()?;

    Ok(FieldRealization {
        values: Raster::from_vec(n, out)?,
        grid: *grid,
        model,
        seed,
        params: SynthParams::Warped { base_grid, freq_n, margin: opts.margin, interpolation: opts.interpolation },
        max_imag_residue: residue,
    })
}

fn auto_base_grid(phi: &Deformation, grid: &Grid, pts: &[Point], opts: &SynthOptions) -> Result<Grid> {
    if !(opts.margin >= 0.0 && opts.margin.is_finite()) {
        return Err(Error::param(format!("margin {} must be non-negative", opts.margin)));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(grid.spacing());
    let side = extent * (1.0 + 2.0 * opts.margin);
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];

    let nb = match opts.base_n {
        Some(nb) => nb,
        None => {
            // Finest spacing of the warped pixel lattice.
            let h = grid.spacing();
            let n = grid.n;
            let finest = (0..n * n)
                .into_par_iter()
                .map(|i| {
                    let (_, s, _) = phi.jacobian(grid.point(i / n, i % n)).svd();
                    h * s[1]
                })
                .reduce(|| f64::INFINITY, f64::min);
            let wanted = if finest > 0.0 { (side / finest).ceil() as usize + 1 } else { usize::MAX };
            let nb = wanted.max(8).checked_next_power_of_two().unwrap_or(usize::MAX);
            if nb > opts.max_base_n {
                warn!("base grid capped at {} (finest spacing wants {nb})", opts.max_base_n);
            }
            nb.min(opts.max_base_n.max(8).next_power_of_two())
        }
    };
    // The last node sits on the far edge of the enlarged box.
    let hb = side / (nb - 1) as f64;
    let origin = [center[0] - 0.5 * side, center[1] - 0.5 * side];
    debug!("warped synthesis base grid n={nb} side={side} origin={origin:?}");
    Grid::new(nb, origin, hb * nb as f64)
}

fn bilinear(img: &Raster, u: f64, v: f64) -> f64 {
    let nb = img.n();
    let c = (u.floor() as usize).min(nb - 2);
    let r = (v.floor() as usize).min(nb - 2);
    let (fu, fv) = (u - c as f64, v - r as f64);
    let top = img.get(r, c) * (1.0 - fu) + img.get(r, c + 1) * fu;
    let bottom = img.get(r + 1, c) * (1.0 - fu) + img.get(r + 1, c + 1) * fu;
    top * (1.0 - fv) + bottom * fv
}

fn keys(t: f64) -> f64 {
    let a = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    } else {
        0.0
    }
}

fn bicubic(img: &Raster, u: f64, v: f64) -> f64 {
    let nb = img.n() as i64;
    let (c0, r0) = (u.floor() as i64, v.floor() as i64);
    let (fu, fv) = (u - c0 as f64, v - r0 as f64);
    let mut acc = 0.0;
    for dr in -1..=2i64 {
        let wr = keys(fv - dr as f64);
        let r = (r0 + dr).clamp(0, nb - 1) as usize;
        let mut row = 0.0;
        for dc in -1..=2i64 {
            let c = (c0 + dc).clamp(0, nb - 1) as usize;
            row += keys(fu - dc as f64) * img.get(r, c);
        }
        acc += wr * row;
    }
    acc
}
