//! Square 2-D FFT on top of `rustfft`, and the angular frequency lattice.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// In-place unnormalized 2-D transform of an `n × n` row-major array.
/// `inverse` selects the `e^{+j…}` kernel.
pub(crate) fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    assert_eq!(data.len(), n * n);
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    data.par_chunks_mut(n).for_each(|row| plan.process(row));
    transpose(data, n);
    data.par_chunks_mut(n).for_each(|row| plan.process(row));
    transpose(data, n);
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

/// Forward transform of a real raster.
pub(crate) fn fft2_real(values: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, n, false);
    buf
}

/// Real part of the normalized inverse transform.
pub(crate) fn ifft2_real(mut spectrum: Vec<Complex64>, n: usize) -> Vec<f64> {
    fft2(&mut spectrum, n, true);
    let scale = 1.0 / (n * n) as f64;
    spectrum.into_iter().map(|z| z.re * scale).collect()
}

/// Angular frequency of DFT bin `k`, in radians per pixel, in `[−π, π)`.
pub(crate) fn angular_freq(k: usize, n: usize) -> f64 {
    let k = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * k / n as f64
}
