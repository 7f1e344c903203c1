use std::f64::consts::{E, PI};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Variance / power floor before taking logarithms.
pub const EPS: f64 = 1e-10;

/// Unbiased variance of one channel window.
fn unbiased_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Gaussian differential entropy `0.5 ln(2 pi e var)` of one window.
pub fn differential_entropy(x: &[f64]) -> f64 {
    assert!(x.len() >= 2, "differential entropy needs at least two samples");
    0.5 * (2.0 * PI * E * unbiased_variance(x).max(EPS)).ln()
}

/// Per-channel differential entropy of a band-filtered window.
pub fn de_feature(window: &[&[f64]]) -> Vec<f64> {
    window.iter().map(|x| differential_entropy(x)).collect()
}

/// Periodogram of a fixed window length, reusable across windows.
///
/// Power is one-sided and normalized so that summing every bin gives the
/// mean square of the window.
pub struct Periodogram {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Periodogram {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { len, fft: planner.plan_fft_forward(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn power(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len);
        let n = self.len;
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        let scale = 1.0 / (n as f64 * n as f64);
        (0..=n / 2)
            .map(|k| {
                let p = buf[k].norm_sqr() * scale;
                if k == 0 || 2 * k == n {
                    p
                } else {
                    2.0 * p
                }
            })
            .collect()
    }

    /// Power carried by bins with `low_hz <= f < high_hz`.
    pub fn band_power(&self, x: &[f64], fs: f64, low_hz: f64, high_hz: f64) -> f64 {
        let resolution = fs / self.len as f64;
        self.power(x)
            .iter()
            .enumerate()
            .filter(|&(k, _)| {
                let f = k as f64 * resolution;
                f >= low_hz && f < high_hz
            })
            .map(|(_, p)| p)
            .sum()
    }
}

/// Per-channel log band power of a band-filtered window, floored at
/// [`EPS`] before the logarithm.
pub fn psd_feature(window: &[&[f64]], fs: f64, band: [f64; 2]) -> Vec<f64> {
    let Some(first) = window.first() else { return Vec::new() };
    assert!(first.len() >= 2, "psd feature needs at least two samples");
    let pg = Periodogram::new(first.len());
    window.iter().map(|x| pg.band_power(x, fs, band[0], band[1]).max(EPS).ln()).collect()
}
