//! Self-checks runnable from the command line.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::time::Instant;

use anyhow::Result;
use orifield::fields::{affine_conformal_deformation, Afbf, FieldModel, ScalarField};
use orifield::linalg::{axial_distance, Matrix2};
use orifield::monogenic::{
    estimate_hurst, global_orientation, riesz_transform, wavelet_pyramid, windowed_orientation_field, RadialProfile,
};
use orifield::synth::{synthesize_gafbf, synthesize_ssi, synthesize_wafbf_with, SynthOptions};
use orifield::tensor::{
    afbf_tensor_closed, deformed_orientation, fbf_tensor_closed, orientation_of, structure_tensor_quadrature,
    sum_afbf_tensor_closed, StructureTensor, DEFAULT_DEGENERACY_TOL,
};
use orifield::{AnisotropySpec, Grid, Hurst, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::sig12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Closedform,
    Frame,
    Riesz,
    Montecarlo,
}

impl Suite {
    pub fn default_budget(self) -> f64 {
        match self {
            Suite::Closedform => 5.0,
            Suite::Frame | Suite::Riesz => 60.0,
            Suite::Montecarlo => 600.0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub passed: bool,
    pub elapsed_s: f64,
    pub budget_s: f64,
    pub checks: Vec<Check>,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    /// Passes when `value ≤ tolerance`.
    fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.0.push(Check { name: name.into(), value: sig12(value), tolerance, passed: value <= tolerance });
    }
}

pub fn run(suite: Suite, seed: u64, seeds: usize, n: usize, budget: Option<f64>) -> Result<Report> {
    let budget_s = budget.unwrap_or(suite.default_budget());
    let t = Instant::now();
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::Closedform => closed_form(&mut c, &mut rng)?,
        Suite::Frame => frame(&mut c, &mut rng)?,
        Suite::Riesz => riesz(&mut c, &mut rng)?,
        Suite::Montecarlo => monte_carlo(&mut c, seed, seeds, n)?,
    }
    let elapsed_s = t.elapsed().as_secs_f64();
    c.at_most("runtime_s", elapsed_s, budget_s);
    let passed = c.0.iter().all(|k| k.passed);
    Ok(Report { suite, passed, elapsed_s: sig12(elapsed_s), budget_s, checks: c.0 })
}

fn entry_diff(j: &StructureTensor, o: [f64; 3]) -> f64 {
    (j.j11 - o[0]).abs().max((j.j12 - o[1]).abs()).max((j.j22 - o[2]).abs())
}

fn closed_form(c: &mut Checks, rng: &mut ChaCha8Rng) -> Result<()> {
    let iso = structure_tensor_quadrature(&AnisotropySpec::isotropic(), 4096)?;
    let closed = fbf_tensor_closed();
    c.at_most("fbf_half_identity", entry_diff(&iso, [0.5, 0.0, 0.5]).max(entry_diff(&closed, [0.5, 0.0, 0.5])), 1e-14);

    let (mut tensor, mut coh) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let a: f64 = rng.random_range(-PI / 2.0..PI / 2.0);
        let d: f64 = rng.random_range(0.01..1.56);
        let k = 0.5 * (2.0 * d).sin() / (2.0 * d);
        let want = [0.5 + k * (2.0 * a).cos(), k * (2.0 * a).sin(), 0.5 - k * (2.0 * a).cos()];
        let q = structure_tensor_quadrature(&AnisotropySpec::cone(a, d)?, 4096)?;
        tensor = tensor.max(entry_diff(&q, want)).max(entry_diff(&afbf_tensor_closed(a, d)?, want));
        coh = coh.max((orientation_of(&q, DEFAULT_DEGENERACY_TOL)?.coherency - 2.0 * k).abs());
    }
    c.at_most("afbf_tensor", tensor, 1e-8);
    c.at_most("afbf_coherency", coh, 1e-10);

    let (mut angle, mut chi) = (0.0f64, 0.0f64);
    for d in [0.05, 0.1, 0.2] {
        let spec = AnisotropySpec::sum(AnisotropySpec::cone(FRAC_PI_6, d)?, AnisotropySpec::cone(FRAC_PI_3, d)?)?;
        for j in [structure_tensor_quadrature(&spec, 4096)?, sum_afbf_tensor_closed(FRAC_PI_6, FRAC_PI_3, d)?] {
            let o = orientation_of(&j, DEFAULT_DEGENERACY_TOL)?;
            angle = angle.max(axial_distance(o.angle, FRAC_PI_4));
            chi = chi.max((o.coherency - (2.0 * d).sin() / (2.0 * d) * (FRAC_PI_6 - FRAC_PI_3).cos()).abs());
        }
    }
    c.at_most("sum_half_angle", angle, 1e-10);
    c.at_most("sum_coherency", chi, 1e-10);

    let mut special = 0.0f64;
    for _ in 0..50 {
        let a: f64 = rng.random_range(-PI..PI);
        let t: f64 = rng.random_range(-PI..PI);
        let n = [a.cos(), a.sin()];
        let r = deformed_orientation(n, &Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos()))?;
        special = special.max((r[0] - (a + t).cos()).abs()).max((r[1] - (a + t).sin()).abs());
        let f = Matrix2::new((2.0 * t).cos(), (2.0 * t).sin(), (2.0 * t).sin(), -(2.0 * t).cos());
        let r = deformed_orientation(n, &f)?;
        special = special.max((r[0] - (2.0 * t - a).cos()).abs()).max((r[1] - (2.0 * t - a).sin()).abs());
        let (s1, s2): (f64, f64) = (rng.random_range(0.2..5.0), rng.random_range(0.2..5.0));
        let r = deformed_orientation(n, &Matrix2::new(s1, 0.0, 0.0, s2))?;
        let norm = (n[0] / s1).hypot(n[1] / s2);
        special = special.max((r[0] - n[0] / s1 / norm).abs()).max((r[1] - n[1] / s2 / norm).abs());
    }
    c.at_most("svd_special_cases", special, 1e-12);

    let delta = 0.02;
    let mut lin = 0.0f64;
    for _ in 0..20 {
        let rot = |t: f64| Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos());
        let s = Matrix2::new(rng.random_range(0.5..2.0), 0.0, 0.0, rng.random_range(0.5..2.0));
        let l = rot(rng.random_range(-PI..PI)).mul(&s).mul(&rot(rng.random_range(-PI..PI)));
        let a: f64 = rng.random_range(-PI / 2.0..PI / 2.0);
        let spec = AnisotropySpec::linearly_transformed(AnisotropySpec::cone(a, delta)?, Hurst::new(0.5)?, l)?;
        let o = orientation_of(&structure_tensor_quadrature(&spec, 4096)?, DEFAULT_DEGENERACY_TOL)?;
        let w = l.inverse()?.transpose().mul_vec([a.cos(), a.sin()]);
        lin = lin.max(axial_distance(o.angle, w[1].atan2(w[0])));
    }
    c.at_most("linear_map_orientation", lin, 5.0 * delta * delta);

    let phi = affine_conformal_deformation(2.0, -1.0, 0.0)?;
    let model = FieldModel::wafbf(phi.clone(), Afbf::new(0.5, 0.0, 0.3)?)?;
    let (mut jac, mut dir, mut pres) = (0.0f64, 0.0f64, 0.0f64);
    let h = 1e-6;
    for _ in 0..1000 {
        let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let j = phi.jacobian(x);
        for k in 0..2 {
            let (mut p, mut m) = (x, x);
            p[k] += h;
            m[k] -= h;
            let (fp, fm) = (phi.map(p), phi.map(m));
            for r in 0..2 {
                jac = jac.max(((fp[r] - fm[r]) / (2.0 * h) - j.m[r][k]).abs() / j.frobenius());
            }
        }
        let alpha = 2.0 * x[0] - x[1];
        dir = dir.max(axial_distance(j.m[0][1].atan2(j.m[0][0]), alpha));
        pres = pres.max(axial_distance(model.local_orientation(x)?.angle, alpha));
    }
    c.at_most("conformal_jacobian", jac, 1e-5);
    c.at_most("conformal_direction", dir, 1e-10);
    c.at_most("conformal_prescription", pres, 1e-10);
    Ok(())
}

fn noise(n: usize, rng: &mut ChaCha8Rng) -> Raster {
    Raster::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn frame(c: &mut Checks, rng: &mut ChaCha8Rng) -> Result<()> {
    for p in [RadialProfile::Simoncelli, RadialProfile::Meyer] {
        let mut worst = 0.0f64;
        for _ in 0..100_000 {
            let l: f64 = rng.random_range(1e-3..PI);
            let s: f64 = (-40..=40).map(|j| p.eval(l * 2f64.powi(j)).powi(2)).sum();
            worst = worst.max((s - 1.0).abs());
        }
        c.at_most(&format!("partition_of_unity_{}", p.name()), worst, 1e-12);
        let img = noise(256, rng);
        let scales: Vec<u32> = (0..8).collect();
        let pyr = wavelet_pyramid(&img, &scales, p)?;
        c.at_most(
            &format!("pyramid_energy_{}", p.name()),
            (pyr.energy() - pyr.bandpassed_energy).abs() / pyr.bandpassed_energy,
            1e-8,
        );
    }
    Ok(())
}

/// Random image with no energy at the zero frequency or on the Nyquist lines:
/// the sum of the band-pass maps of scales 1 and up.
fn band_limited(n: usize, rng: &mut ChaCha8Rng) -> Result<Raster> {
    let scales: Vec<u32> = (1..=7).collect();
    let pyr = wavelet_pyramid(&noise(n, rng), &scales, RadialProfile::Simoncelli)?;
    let mut out = Raster::zeros(n);
    for l in &pyr.levels {
        for (o, v) in out.data_mut().iter_mut().zip(l.c.data()) {
            *o += v;
        }
    }
    Ok(out)
}

fn riesz(c: &mut Checks, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut unit = 0.0f64;
    for _ in 0..20 {
        let f = band_limited(256, rng)?;
        let (a, b) = riesz_transform(&f)?;
        unit = unit.max((a.energy() + b.energy() - f.energy()).abs() / f.energy());
    }
    c.at_most("riesz_unitarity", unit, 1e-10);

    let mut steer = 0.0f64;
    let f = noise(64, rng);
    let (f1, f2) = riesz_transform(&f)?;
    for q in 1..4 {
        // g(x) = f(Rx) has Riesz pair R_θ·(Rf)(Rx) with θ a multiple of 90°.
        let (g1, g2) = riesz_transform(&f.rotate_quarter(q))?;
        let (r1, r2) = (f1.rotate_quarter(q), f2.rotate_quarter(q));
        let t = q as f64 * PI / 2.0;
        let (sn, cs) = (t.sin().round(), t.cos().round());
        for i in 0..64 * 64 {
            let (a, b) = (r1.data()[i], r2.data()[i]);
            steer = steer.max((g1.data()[i] - (cs * a - sn * b)).abs()).max((g2.data()[i] - (sn * a + cs * b)).abs());
        }
    }
    c.at_most("riesz_steerability", steer, 1e-10);
    Ok(())
}

fn monte_carlo(c: &mut Checks, seed0: u64, seeds: usize, n: usize) -> Result<()> {
    let grid = Grid::unit(n)?;
    let seeds: Vec<u64> = (0..seeds as u64).map(|s| seed0 + s).collect();
    let (mut angle, mut coh, mut scale, mut prof) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut hurst = 0.0f64;
    for a0 in [0.0, FRAC_PI_3] {
        let model = FieldModel::afbf(0.5, a0, 0.3)?;
        for &s in &seeds {
            let r = synthesize_ssi(&model, &grid, s, n)?;
            let mut prev: Vec<Option<f64>> = vec![None, None];
            for (pi, p) in [RadialProfile::Simoncelli, RadialProfile::Meyer].into_iter().enumerate() {
                let pyr = wavelet_pyramid(&r.values, &[0, 1, 2], p)?;
                hurst = hurst.max((estimate_hurst(&pyr, &[0, 1, 2])? - 0.5).abs());
                let mut last = None;
                for sc in 0..3 {
                    let o = global_orientation(&pyr, sc)?;
                    angle = angle.max(axial_distance(o.angle, a0).to_degrees());
                    coh = coh.max((o.coherency - 0.94).abs());
                    if let Some(l) = last {
                        scale = scale.max(axial_distance(o.angle, l).to_degrees());
                    }
                    last = Some(o.angle);
                    if sc == 1 {
                        prev[pi] = Some(o.angle);
                    }
                }
            }
            if let [Some(x), Some(y)] = prev[..] {
                prof = prof.max(axial_distance(x, y).to_degrees());
            }
        }
    }
    c.at_most("afbf_angle_deg", angle, 3.0);
    c.at_most("afbf_coherency_dev", coh, 0.06);
    c.at_most("scale_invariance_deg", scale, 2.0);
    c.at_most("profile_invariance_deg", prof, 2.0);
    c.at_most("hurst_dev", hurst, 0.1);

    let phi = affine_conformal_deformation(2.0, -1.0, 0.0)?;
    let base = Afbf::new(0.5, 0.0, 0.3)?;
    let mut warp = 0.0f64;
    for &s in &seeds {
        let r = synthesize_wafbf_with(&phi, &base, &grid, s, &SynthOptions::default())?;
        let f = windowed_orientation_field(&wavelet_pyramid(&r.values, &[1], RadialProfile::Simoncelli)?, 1, 8.0)?;
        let px = f.valid_pixels(0.5);
        let mae: f64 = px
            .iter()
            .map(|&(row, col)| {
                let x = grid.point(row, col);
                axial_distance(f.angle.get(row, col), 2.0 * x[0] - x[1])
            })
            .sum::<f64>()
            / px.len().max(1) as f64;
        warp = warp.max(mae.to_degrees());
    }
    c.at_most("conformal_mae_deg", warp, 10.0);

    let g256 = Grid::unit(256)?;
    let mut gafbf = 0.0f64;
    for a0 in [0.0, FRAC_PI_3] {
        let model = FieldModel::gafbf(ScalarField::constant(0.5), ScalarField::constant(a0), 0.3)?;
        for &s in &seeds {
            let r = synthesize_gafbf(&model, &g256, s, 64)?;
            let o = global_orientation(&wavelet_pyramid(&r.values, &[2], RadialProfile::Simoncelli)?, 2)?;
            gafbf = gafbf.max(axial_distance(o.angle, a0).to_degrees());
        }
    }
    c.at_most("gafbf_constant_angle_deg", gafbf, 3.0);
    Ok(())
}
