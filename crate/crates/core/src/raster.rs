//! Sampling grids, square rasters and their on-disk format.
//!
//! A raster named `tex` is stored as `tex.f64` (little-endian `f64`,
//! row-major, channels one after another, no header) and `tex.json`, the
//! sidecar describing size, domain and provenance of the values.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::FieldModel;
use crate::linalg::Point;

/// Version written into every sidecar. Readers reject anything else.
pub const FORMAT_VERSION: u32 = 1;

/// `n × n` pixels covering the square `[o₁, o₁ + side) × [o₂, o₂ + side)`.
///
/// Pixel `(r, c)` samples the point `(o₁ + c·h, o₂ + r·h)` with `h = side / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: usize,
    pub origin: Point,
    pub side: f64,
}

impl Grid {
    /// Grid on `[x0, x1]²`.
    pub fn square(n: usize, x0: f64, x1: f64) -> Result<Self> {
        Grid::new(n, [x0, x0], x1 - x0)
    }

    /// Grid on `[0, 1]²`.
    pub fn unit(n: usize) -> Result<Self> {
        Grid::square(n, 0.0, 1.0)
    }

    pub fn new(n: usize, origin: Point, side: f64) -> Result<Self> {
        let g = Grid { n, origin, side };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(Error::param(format!("grid size {} must be a power of two ≥ 8", self.n)));
        }
        if !(self.side > 0.0 && self.side.is_finite()) || !self.origin.iter().all(|v| v.is_finite()) {
            return Err(Error::param(format!("grid domain must be finite with positive side, got {}", self.side)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn point(&self, r: usize, c: usize) -> Point {
        let h = self.spacing();
        [self.origin[0] + c as f64 * h, self.origin[1] + r as f64 * h]
    }

    /// Pixel `(r, c)` whose node is exactly `x = 0`, if there is one.
    pub fn origin_node(&self) -> Option<(usize, usize)> {
        let h = self.spacing();
        let idx = |o: f64| {
            let k = (-o / h).round();
            (k >= 0.0 && (k as usize) < self.n && o + k * h == 0.0).then_some(k as usize)
        };
        Some((idx(self.origin[1])?, idx(self.origin[0])?))
    }

    /// Pixel containing `x = 0`, if inside the domain.
    pub fn origin_pixel(&self) -> Option<(usize, usize)> {
        let h = self.spacing();
        let idx = |o: f64| {
            let k = (-o / h).floor();
            (k >= 0.0 && (k as usize) < self.n).then_some(k as usize)
        };
        Some((idx(self.origin[1])?, idx(self.origin[0])?))
    }
}

/// Square raster of `f64` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    n: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn zeros(n: usize) -> Self {
        Raster { n, data: vec![0.0; n * n] }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::param(format!("raster of side {n} needs {} values, got {}", n * n, data.len())));
        }
        Ok(Raster { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        Raster { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `Σ f²`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Circular shift by `(dr, dc)`: output `(r, c)` reads input `(r − dr, c − dc)`.
    pub fn roll(&self, dr: isize, dc: isize) -> Raster {
        let n = self.n as isize;
        Raster::from_fn(self.n, |r, c| {
            self.get((r as isize - dr).rem_euclid(n) as usize, (c as isize - dc).rem_euclid(n) as usize)
        })
    }

    /// Rotation by `quarter_turns · 90°` counter-clockwise in the `(x₁, x₂)`
    /// frame, about pixel `(0, 0)` with circular wrap: `g(R x) = f(x)`.
    pub fn rotate_quarter(&self, quarter_turns: i32) -> Raster {
        let n = self.n as isize;
        let w = |v: isize| v.rem_euclid(n) as usize;
        match quarter_turns.rem_euclid(4) {
            0 => self.clone(),
            // g(x₁, x₂) = f(x₂, −x₁)
            1 => Raster::from_fn(self.n, |r, c| self.get(w(-(c as isize)), r)),
            2 => Raster::from_fn(self.n, |r, c| self.get(w(-(r as isize)), w(-(c as isize)))),
            // g(x₁, x₂) = f(−x₂, x₁)
            _ => Raster::from_fn(self.n, |r, c| self.get(c, w(-(r as isize)))),
        }
    }

    pub fn max_abs_diff(&self, other: &Raster) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Sidecar metadata of a stored raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format_version: u32,
    pub n: usize,
    pub grid: Option<Grid>,
    pub channels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<serde_json::Value>,
}

impl Sidecar {
    pub fn new(n: usize, grid: Option<Grid>, channels: &[&str]) -> Self {
        Sidecar {
            format_version: FORMAT_VERSION,
            n,
            grid,
            channels: channels.iter().map(|s| s.to_string()).collect(),
            model: None,
            seed: None,
            synthesis: None,
        }
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.f64` and `<stem>.json`.
pub fn write_channels(stem: &Path, channels: &[&Raster], sidecar: &Sidecar) -> Result<()> {
    if channels.len() != sidecar.channels.len() || channels.iter().any(|c| c.n != sidecar.n) {
        return Err(Error::Format("channel list does not match the sidecar".into()));
    }
    let mut bytes = Vec::with_capacity(channels.len() * sidecar.n * sidecar.n * 8);
    for ch in channels {
        for v in &ch.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(with_ext(stem, "f64"), bytes)?;
    let mut f = fs::File::create(with_ext(stem, "json"))?;
    serde_json::to_writer_pretty(&mut f, sidecar)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Reads a raster stored by [`write_channels`].
pub fn read_channels(stem: &Path) -> Result<(Vec<Raster>, Sidecar)> {
    let text = fs::read_to_string(with_ext(stem, "json"))?;
    let sidecar: Sidecar =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("unreadable sidecar: {e}")))?;
    if sidecar.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "format version {} is not supported (expected {FORMAT_VERSION})",
            sidecar.format_version
        )));
    }
    let bytes = fs::read(with_ext(stem, "f64"))?;
    let per = sidecar.n * sidecar.n;
    if sidecar.channels.is_empty() || bytes.len() != 8 * per * sidecar.channels.len() {
        return Err(Error::Format(format!(
            "{} bytes do not hold {} channel(s) of {}²",
            bytes.len(),
            sidecar.channels.len(),
            sidecar.n
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    let rasters = values
        .chunks_exact(per)
        .map(|c| Raster { n: sidecar.n, data: c.to_vec() })
        .collect();
    Ok((rasters, sidecar))
}

/// Min-max normalized 8-bit binary PGM.
pub fn write_pgm(path: &Path, raster: &Raster) -> Result<()> {
    let (lo, hi) = raster.min_max();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n255\n", raster.n, raster.n).into_bytes();
    out.extend(raster.data.iter().map(|v| (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8));
    fs::write(path, out)?;
    Ok(())
}

/// Axial angle map as binary PPM: hue from the angle, brightness from the
/// coherency, black where `mask` is false.
pub fn write_angle_ppm(path: &Path, angle: &Raster, coherency: &Raster, mask: &[bool]) -> Result<()> {
    let n = angle.n;
    let mut out = format!("P6\n{n} {n}\n255\n").into_bytes();
    for i in 0..n * n {
        if !mask[i] {
            out.extend_from_slice(&[0, 0, 0]);
            continue;
        }
        let hue = ((angle.data[i] + std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).rem_euclid(1.0) * 6.0;
        let v = coherency.data[i].clamp(0.0, 1.0);
        let x = 1.0 - (hue % 2.0 - 1.0).abs();
        let (r, g, b) = match hue as u32 {
            0 => (1.0, x, 0.0),
            1 => (x, 1.0, 0.0),
            2 => (0.0, 1.0, x),
            3 => (0.0, x, 1.0),
            4 => (x, 0.0, 1.0),
            _ => (1.0, 0.0, x),
        };
        out.extend([r, g, b].map(|c: f64| (255.0 * c * v).round() as u8));
    }
    fs::write(path, out)?;
    Ok(())
}

/// A synthesized field with everything needed to reproduce it.
#[derive(Debug, Clone)]
pub struct FieldRealization {
    pub values: Raster,
    pub grid: Grid,
    pub model: FieldModel,
    pub seed: u64,
    pub params: crate::synth::SynthParams,
    /// Largest imaginary part discarded after the inverse transform.
    pub max_imag_residue: f64,
}

impl FieldRealization {
    pub fn sidecar(&self) -> Sidecar {
        let mut s = Sidecar::new(self.grid.n, Some(self.grid), &["value"]);
        s.model = serde_json::to_value(&self.model).ok();
        s.seed = Some(self.seed);
        s.synthesis = serde_json::to_value(&self.params).ok();
        s
    }

    /// Writes `<stem>.f64` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        write_channels(stem, &[&self.values], &self.sidecar())
    }

    pub fn origin_value(&self) -> Option<f64> {
        self.grid.origin_pixel().map(|(r, c)| self.values.get(r, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = Grid::unit(8).unwrap();
        assert_eq!(g.spacing(), 0.125);
        assert_eq!(g.point(2, 3), [0.375, 0.25]);
        assert_eq!(g.origin_node(), Some((0, 0)));
        let g = Grid::square(16, -1.0, 1.0).unwrap();
        assert_eq!(g.origin_node(), Some((8, 8)));
        let g = Grid::square(16, 0.3, 1.0).unwrap();
        assert_eq!(g.origin_node(), None);
        assert_eq!(g.origin_pixel(), None);
        assert!(Grid::unit(12).is_err());
        assert!(Grid::unit(4).is_err());
        assert!(Grid::square(8, 1.0, 0.0).is_err());
    }

    #[test]
    fn roundtrip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("r");
        let a = Raster::from_fn(8, |r, c| r as f64 - 0.5 * c as f64);
        let b = Raster::from_fn(8, |r, c| (r * c) as f64);
        let side = Sidecar::new(8, None, &["a", "b"]);
        write_channels(&stem, &[&a, &b], &side).unwrap();
        let (back, s) = read_channels(&stem).unwrap();
        assert_eq!(back, vec![a.clone(), b]);
        assert_eq!(s, side);
        let bytes = fs::read(dir.path().join("r.f64")).unwrap();
        assert_eq!(&bytes[8..16], &(-0.5f64).to_le_bytes());
        let mut bad = side.clone();
        bad.format_version = 99;
        write_channels(&stem, &[&a, &a], &bad).unwrap();
        assert!(matches!(read_channels(&stem), Err(Error::Format(_))));
        write_pgm(&dir.path().join("r.pgm"), &a).unwrap();
        let pgm = fs::read(dir.path().join("r.pgm")).unwrap();
        assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
        assert_eq!(pgm.len(), 11 + 64);
    }

    #[test]
    fn quarter_rotation_is_lattice_rotation() {
        let f = Raster::from_fn(8, |r, c| (r * 8 + c) as f64);
        let g = f.rotate_quarter(1);
        // x = (c, r) = (1, 0) goes to R x = (0, 1), i.e. pixel (1, 0).
        assert_eq!(g.get(1, 0), f.get(0, 1));
        assert_eq!(f.rotate_quarter(1).rotate_quarter(3), f);
        assert_eq!(f.rotate_quarter(2), f.rotate_quarter(1).rotate_quarter(1));
    }
}
