//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the report is always
//! printed. Exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};
use std::time::{Duration, Instant};

use num_complex::Complex64;
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
use rustfft::FftPlanner;

const NODES: usize = 4096;

/// Collects failed checks with a short reason each.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }
}

fn sinc(t: f64) -> f64 {
    t.sin() / t
}

/// Tensor of a cone with unit mass written out entry by entry.
fn cone_tensor_oracle(a0: f64, d: f64) -> [f64; 3] {
    let k = 0.5 * sinc(2.0 * d);
    [0.5 + k * (2.0 * a0).cos(), k * (2.0 * a0).sin(), 0.5 - k * (2.0 * a0).cos()]
}

fn max_diff(j: &StructureTensor, o: [f64; 3]) -> f64 {
    (j.j11 - o[0]).abs().max((j.j12 - o[1]).abs()).max((j.j22 - o[2]).abs())
}

fn closed_form_suite(c: &mut Checks) {
    let iso = structure_tensor_quadrature(&AnisotropySpec::isotropic(), NODES).unwrap();
    let e = max_diff(&iso, [0.5, 0.0, 0.5]);
    c.check(e <= 1e-14, || format!("FBF quadrature off by {e:e}"));
    c.check(fbf_tensor_closed() == StructureTensor::new(0.5, 0.0, 0.5), || "FBF closed form not 0.5·I".into());

    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut worst_coh = 0.0f64;
    for _ in 0..50 {
        let a0 = rng.random_range(-PI / 2.0..PI / 2.0);
        let d = rng.random_range(0.01..PI / 2.0 - 0.01);
        let q = structure_tensor_quadrature(&AnisotropySpec::cone(a0, d).unwrap(), NODES).unwrap();
        worst = worst.max(max_diff(&q, cone_tensor_oracle(a0, d)));
        let closed = afbf_tensor_closed(a0, d).unwrap();
        worst = worst.max(max_diff(&closed, cone_tensor_oracle(a0, d)));
        for t in [q, closed] {
            let o = orientation_of(&t, DEFAULT_DEGENERACY_TOL).unwrap();
            worst_coh = worst_coh.max((o.coherency - (2.0 * d).sin() / (2.0 * d)).abs());
        }
    }
    c.check(worst <= 1e-8, || format!("AFBF tensor error {worst:e}"));
    c.check(worst_coh <= 1e-10, || format!("AFBF coherency error {worst_coh:e}"));
    c.note(format!("afbf max err {worst:.1e}, coherency err {worst_coh:.1e}"));

    for d in [0.05, 0.2, 0.5] {
        let spec = AnisotropySpec::sum(AnisotropySpec::cone(FRAC_PI_6, d).unwrap(), AnisotropySpec::cone(FRAC_PI_3, d).unwrap())
            .unwrap();
        if 2.0 * d >= FRAC_PI_6 {
            continue;
        }
        for t in [structure_tensor_quadrature(&spec, NODES).unwrap(), sum_afbf_tensor_closed(FRAC_PI_6, FRAC_PI_3, d).unwrap()] {
            let o = orientation_of(&t, DEFAULT_DEGENERACY_TOL).unwrap();
            c.check((o.angle - PI / 4.0).abs() <= 1e-10, || format!("sum orientation {} for δ={d}", o.angle));
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a0 = rng.random_range(-PI / 2.0..PI / 2.0);
        let a1 = a0 + rng.random_range(0.2..PI / 2.0);
        let d = rng.random_range(0.01..0.1);
        let want = sinc(2.0 * d) * (a0 - a1).cos();
        let spec = AnisotropySpec::sum(AnisotropySpec::cone(a0, d).unwrap(), AnisotropySpec::cone(a1, d).unwrap()).unwrap();
        for t in [structure_tensor_quadrature(&spec, NODES).unwrap(), sum_afbf_tensor_closed(a0, a1, d).unwrap()] {
            let o = orientation_of(&t, DEFAULT_DEGENERACY_TOL).unwrap();
            worst = worst.max((o.coherency - want).abs());
            worst = worst.max(axial_distance(o.angle, 0.5 * (a0 + a1)));
        }
    }
    c.check(worst <= 1e-10, || format!("sum-of-AFBF coherency/angle error {worst:e}"));
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix2 {
    let t: f64 = rng.random_range(-PI..PI);
    let (s, co) = t.sin_cos();
    Matrix2::new(co, -s, s, co)
}

fn deformation_suite(c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a: f64 = rng.random_range(-PI..PI);
        let n = [a.cos(), a.sin()];
        // Rotation: (L⁻¹)ᵀ = L.
        let t: f64 = rng.random_range(-PI..PI);
        let got = deformed_orientation(n, &Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos())).unwrap();
        worst = worst.max((got[0] - (a + t).cos()).abs()).max((got[1] - (a + t).sin()).abs());
        // Reflection across the axis at angle t: n ↦ reflection of n.
        let refl = Matrix2::new((2.0 * t).cos(), (2.0 * t).sin(), (2.0 * t).sin(), -(2.0 * t).cos());
        let got = deformed_orientation(n, &refl).unwrap();
        worst = worst.max((got[0] - (2.0 * t - a).cos()).abs()).max((got[1] - (2.0 * t - a).sin()).abs());
        // Diagonal: componentwise division.
        let (s1, s2) = (rng.random_range(0.2..5.0), rng.random_range(0.2..5.0));
        let got = deformed_orientation(n, &Matrix2::new(s1, 0.0, 0.0, s2)).unwrap();
        let (v1, v2) = (n[0] / s1, n[1] / s2);
        let r = v1.hypot(v2);
        worst = worst.max((got[0] - v1 / r).abs()).max((got[1] - v2 / r).abs());
    }
    c.check(worst <= 1e-12, || format!("special-case deformed orientation error {worst:e}"));

    let delta = 0.02;
    let tol = 5.0 * delta * delta;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let u = random_rotation(&mut rng);
        let v = random_rotation(&mut rng);
        let s = Matrix2::new(rng.random_range(0.5..2.0), 0.0, 0.0, rng.random_range(0.5..2.0));
        let l = u.mul(&s).mul(&v.transpose());
        let a0 = rng.random_range(-PI / 2.0..PI / 2.0);
        let hurst = Hurst::new(rng.random_range(0.1..0.9)).unwrap();
        let spec = AnisotropySpec::linearly_transformed(AnisotropySpec::cone(a0, delta).unwrap(), hurst, l).unwrap();
        let q = orientation_of(&structure_tensor_quadrature(&spec, NODES).unwrap(), DEFAULT_DEGENERACY_TOL).unwrap();
        let inv = l.inverse().unwrap().transpose();
        let w = inv.mul_vec([a0.cos(), a0.sin()]);
        worst = worst.max(axial_distance(q.angle, w[1].atan2(w[0])));
    }
    c.note(format!("linear-map orientation err {worst:.2e} rad (tol {tol:.0e})"));
    c.check(worst <= tol, || format!("quadrature vs transported orientation {worst:e} > {tol:e}"));
}

fn random_zero_mean(n: usize, rng: &mut ChaCha8Rng, drop_nyquist: bool) -> Raster {
    let mut buf: Vec<Complex64> = (0..n * n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    fft2(&mut buf, n, &*fwd);
    for k2 in 0..n {
        for k1 in 0..n {
            if (k1 == 0 && k2 == 0) || (drop_nyquist && (k1 == n / 2 || k2 == n / 2)) {
                buf[k2 * n + k1] = Complex64::new(0.0, 0.0);
            }
        }
    }
    fft2(&mut buf, n, &*inv);
    Raster::from_vec(n, buf.iter().map(|z| z.re / (n * n) as f64).collect()).unwrap()
}

fn fft2(buf: &mut [Complex64], n: usize, plan: &dyn rustfft::Fft<f64>) {
    for row in buf.chunks_mut(n) {
        plan.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        plan.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
}

/// Energy the Riesz pair cannot carry: on the Nyquist column the first
/// channel's multiplier is not Hermitian-odd and its share `ω₁²/‖ω‖²` of each
/// bin is lost, likewise the second channel on the Nyquist row. Computed from
/// a direct DFT of those lines.
fn nyquist_line_deficit(img: &Raster) -> f64 {
    let n = img.n();
    let freq = |k: usize| {
        let k = if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
        2.0 * PI * k / n as f64
    };
    let mut e = 0.0;
    for k in 0..n {
        for (k1, k2, column) in [(n / 2, k, true), (k, n / 2, false)] {
            let mut z = Complex64::new(0.0, 0.0);
            for r in 0..n {
                for cc in 0..n {
                    let ph = -2.0 * PI * ((k1 * cc + k2 * r) % n) as f64 / n as f64;
                    z += img.get(r, cc) * Complex64::from_polar(1.0, ph);
                }
            }
            let (w1, w2) = (freq(k1), freq(k2));
            let share = if column { w1 * w1 } else { w2 * w2 } / (w1 * w1 + w2 * w2);
            e += share * z.norm_sqr();
        }
    }
    e / (n * n) as f64
}

fn frame_riesz_suite(c: &mut Checks) {
    for p in [RadialProfile::Simoncelli, RadialProfile::Meyer] {
        let mut worst = 0.0f64;
        for i in 1..=100_000 {
            let l = PI * i as f64 / 100_000.0;
            let s: f64 = (-60..=60).map(|j| p.eval(l * 2f64.powi(j)).powi(2)).sum();
            worst = worst.max((s - 1.0).abs());
        }
        c.check(worst <= 1e-12, || format!("{} partition of unity error {worst:e}", p.name()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let n = 256;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f = random_zero_mean(n, &mut rng, true);
        let (a, b) = riesz_transform(&f).unwrap();
        worst = worst.max(((a.energy() + b.energy()) - f.energy()).abs() / f.energy());
    }
    c.check(worst <= 1e-10, || format!("Riesz unitarity error {worst:e}"));
    c.note(format!("unitarity err {worst:.1e}"));
    // With Nyquist content the energy deficit is the lost Nyquist share.
    let f = random_zero_mean(32, &mut rng, false);
    let (a, b) = riesz_transform(&f).unwrap();
    let deficit = f.energy() - a.energy() - b.energy();
    let lines = nyquist_line_deficit(&f);
    c.check((deficit - lines).abs() <= 1e-10 * f.energy(), || format!("Nyquist deficit {deficit} vs {lines}"));

    let mut worst = 0.0f64;
    for _ in 0..4 {
        let f = random_zero_mean(64, &mut rng, false);
        let (f1, f2) = riesz_transform(&f).unwrap();
        for q in 1..4 {
            let (g1, g2) = riesz_transform(&f.rotate_quarter(q)).unwrap();
            let (r1, r2) = (f1.rotate_quarter(q), f2.rotate_quarter(q));
            let t = q as f64 * PI / 2.0;
            let (s, co) = (t.sin().round(), t.cos().round());
            for i in 0..64 * 64 {
                let want1 = co * r1.data()[i] - s * r2.data()[i];
                let want2 = s * r1.data()[i] + co * r2.data()[i];
                worst = worst.max((g1.data()[i] - want1).abs()).max((g2.data()[i] - want2).abs());
            }
        }
    }
    c.check(worst <= 1e-10, || format!("steerability error {worst:e}"));

    let f = random_zero_mean(n, &mut rng, false);
    let scales: Vec<u32> = (0..8).collect();
    for p in [RadialProfile::Simoncelli, RadialProfile::Meyer] {
        let pyr = wavelet_pyramid(&f, &scales, p).unwrap();
        let rel = (pyr.energy() - pyr.bandpassed_energy).abs() / pyr.bandpassed_energy;
        c.check(rel <= 1e-8, || format!("{} pyramid energy error {rel:e}", p.name()));
        let rel = (pyr.riesz_energy() - pyr.energy()).abs() / pyr.energy();
        c.check(rel <= 1e-8, || format!("{} Riesz channel energy error {rel:e}", p.name()));
    }
}

fn conformal_suite(c: &mut Checks) {
    let (a, b, cc) = (2.0, -1.0, 0.0);
    let phi = affine_conformal_deformation(a, b, cc).unwrap();
    let model = FieldModel::wafbf(phi.clone(), Afbf::new(0.5, 0.0, 0.3).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut jac, mut dir, mut ori) = (0.0f64, 0.0f64, 0.0f64);
    let h = 1e-6;
    for _ in 0..1000 {
        let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let j = phi.jacobian(x);
        let scale = j.frobenius();
        for k in 0..2 {
            let (mut p, mut m) = (x, x);
            p[k] += h;
            m[k] -= h;
            let (fp, fm) = (phi.map(p), phi.map(m));
            for r in 0..2 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                jac = jac.max((fd - j.m[r][k]).abs() / scale);
            }
        }
        let alpha = a * x[0] + b * x[1] + cc;
        // DΦᵀe₁ is the first row of the Jacobian; compare as an axis.
        let row = [j.m[0][0], j.m[0][1]];
        dir = dir.max(axial_distance(row[1].atan2(row[0]), alpha));
        ori = ori.max(axial_distance(model.local_orientation(x).unwrap().angle, alpha));
    }
    c.check(jac <= 1e-5, || format!("Jacobian vs differences {jac:e}"));
    c.check(dir <= 1e-10, || format!("DΦᵀe₁ direction error {dir:e}"));
    c.check(ori <= 1e-10, || format!("prescribed orientation error {ori:e}"));
}

fn deg(x: f64) -> f64 {
    x.to_degrees()
}

fn monte_carlo_suite(c: &mut Checks) {
    let grid = Grid::unit(512).unwrap();
    let seeds = 0..10u64;
    let mut worst = [0.0f64; 5];
    let mut hurst = (f64::INFINITY, f64::NEG_INFINITY);
    for a0 in [0.0, FRAC_PI_3] {
        let model = FieldModel::afbf(0.5, a0, 0.3).unwrap();
        for seed in seeds.clone() {
            let r = synthesize_ssi(&model, &grid, seed, 512).unwrap();
            let ps = wavelet_pyramid(&r.values, &[0, 1, 2], RadialProfile::Simoncelli).unwrap();
            let pm = wavelet_pyramid(&r.values, &[0, 1, 2], RadialProfile::Meyer).unwrap();
            let os: Vec<_> = (0..3).map(|s| global_orientation(&ps, s).unwrap()).collect();
            let om: Vec<_> = (0..3).map(|s| global_orientation(&pm, s).unwrap()).collect();
            for s in 0..3 {
                worst[0] = worst[0].max(deg(axial_distance(os[s].angle, a0)));
                worst[1] = worst[1].max((os[s].coherency - 0.94).abs()).max((om[s].coherency - 0.94).abs());
                worst[3] = worst[3].max(deg(axial_distance(os[s].angle, om[s].angle)));
                if s > 0 {
                    worst[2] = worst[2].max(deg(axial_distance(os[s].angle, os[s - 1].angle)));
                    worst[2] = worst[2].max(deg(axial_distance(om[s].angle, om[s - 1].angle)));
                }
            }
            for p in [&ps, &pm] {
                let h = estimate_hurst(p, &[0, 1, 2]).unwrap();
                hurst = (hurst.0.min(h), hurst.1.max(h));
            }
        }
    }
    c.check(worst[0] <= 3.0, || format!("AFBF angle error {:.2}°", worst[0]));
    c.check(worst[1] <= 0.06, || format!("AFBF coherency off by {:.3}", worst[1]));
    c.check(worst[2] <= 2.0, || format!("scale invariance {:.2}°", worst[2]));
    c.check(worst[3] <= 2.0, || format!("profile invariance {:.2}°", worst[3]));
    c.check(hurst.0 >= 0.4 && hurst.1 <= 0.6, || format!("Hurst range [{:.3}, {:.3}]", hurst.0, hurst.1));

    let phi = affine_conformal_deformation(2.0, -1.0, 0.0).unwrap();
    let base = Afbf::new(0.5, 0.0, 0.3).unwrap();
    for seed in seeds.clone() {
        let r = synthesize_wafbf_with(&phi, &base, &grid, seed, &SynthOptions::default()).unwrap();
        let pyr = wavelet_pyramid(&r.values, &[1], RadialProfile::Simoncelli).unwrap();
        let f = windowed_orientation_field(&pyr, 1, 8.0).unwrap();
        let px = f.valid_pixels(0.5);
        let err: f64 = px
            .iter()
            .map(|&(rr, cc)| {
                let x = grid.point(rr, cc);
                axial_distance(f.angle.get(rr, cc), 2.0 * x[0] - x[1])
            })
            .sum::<f64>()
            / px.len() as f64;
        worst[4] = worst[4].max(deg(err));
    }
    c.check(worst[4] <= 10.0, || format!("conformal WAFBF mean error {:.2}°", worst[4]));

    let g256 = Grid::unit(256).unwrap();
    let mut gafbf = 0.0f64;
    for a0 in [0.0, FRAC_PI_3] {
        let g = FieldModel::gafbf(ScalarField::constant(0.5), ScalarField::constant(a0), 0.3).unwrap();
        let afbf = FieldModel::afbf(0.5, a0, 0.3).unwrap();
        for seed in seeds.clone() {
            let rg = synthesize_gafbf(&g, &g256, seed, 64).unwrap();
            let og = global_orientation(&wavelet_pyramid(&rg.values, &[2], RadialProfile::Simoncelli).unwrap(), 2).unwrap();
            let ra = synthesize_ssi(&afbf, &grid, seed, 512).unwrap();
            let oa = global_orientation(&wavelet_pyramid(&ra.values, &[1], RadialProfile::Simoncelli).unwrap(), 1).unwrap();
            gafbf = gafbf.max(deg(axial_distance(og.angle, oa.angle)));
        }
    }
    c.check(gafbf <= 3.0, || format!("GAFBF vs AFBF orientation {gafbf:.2}°"));
    c.note(format!(
        "angle {:.2}°, coherency ±{:.3}, scale {:.2}°, profile {:.2}°, Ĥ∈[{:.3},{:.3}], warp {:.2}°, gafbf {:.2}°",
        worst[0], worst[1], worst[2], worst[3], hurst.0, hurst.1, worst[4], gafbf
    ));
}

fn determinism_suite(c: &mut Checks) {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let g = Grid::unit(128).unwrap();
            let a = synthesize_ssi(&FieldModel::afbf(0.5, 0.4, 0.3).unwrap(), &g, 17, 128).unwrap();
            let gm = FieldModel::gafbf(ScalarField::constant(0.6), ScalarField::affine(-1.5, 1.0, 0.0), 0.2).unwrap();
            let b = synthesize_gafbf(&gm, &Grid::unit(64).unwrap(), 17, 64).unwrap();
            let phi = affine_conformal_deformation(2.0, -1.0, 0.0).unwrap();
            let opts = SynthOptions { max_base_n: 512, ..SynthOptions::default() };
            let w = synthesize_wafbf_with(&phi, &Afbf::new(0.5, 0.0, 0.3).unwrap(), &g, 17, &opts).unwrap();
            [a.values, b.values, w.values]
                .iter()
                .flat_map(|r| r.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
                .collect::<Vec<u64>>()
        })
    };
    let reference = run(1);
    let again = run(1);
    c.check(reference == again, || "repeat run differs".into());
    for t in [2, 4, 8] {
        c.check(run(t) == reference, || format!("{t} threads differ from 1 thread"));
    }
}

fn main() {
    let criteria: [(u32, &str, fn(&mut Checks), u64); 6] = [
        (1, "closed-form tensors", closed_form_suite, 5),
        (2, "deformations", deformation_suite, 30),
        (3, "frame and Riesz", frame_riesz_suite, 60),
        (4, "conformal prescription", conformal_suite, 5),
        (5, "Monte-Carlo recovery", monte_carlo_suite, 600),
        (6, "determinism", determinism_suite, 600),
    ];
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        let mut checks = Checks::default();
        let t = Instant::now();
        run(&mut checks);
        let elapsed = t.elapsed();
        if elapsed > Duration::from_secs(budget) {
            checks.failures.push(format!("took {:.1}s, budget {budget}s", elapsed.as_secs_f64()));
        }
        let status = if checks.failures.is_empty() { "PASS" } else { "FAIL" };
        let mut detail = checks.notes.join("; ");
        if !checks.failures.is_empty() {
            detail = checks.failures.join("; ");
            failed += 1;
        }
        println!("criterion {id} ({name}): {status} [{:.2}s] {detail}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
