//! Butterworth bandpass design (bilinear transform, second-order sections)
//! and zero-phase forward-backward filtering.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::PreprocessError;

/// Prototype order of every bandpass used by the pipeline. The bandpass
/// itself has twice as many poles.
pub const BUTTER_ORDER: usize = 4;

/// One biquad, `b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + self.b[1] * z_inv + self.b[2] * z_inv * z_inv;
        let den = 1.0 + self.a[0] * z_inv + self.a[1] * z_inv * z_inv;
        num / den
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// State reached after an infinitely long unit step.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * g;
        let z1 = self.b[1] - self.a[0] * g + z2;
        [z1, z2]
    }
}

/// Cascade of biquads with a zero-phase application.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

fn check_band(low_hz: f64, high_hz: f64, fs: f64) -> Result<(), PreprocessError> {
    let nyquist = fs / 2.0;
    if !(fs > 0.0 && low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
        return Err(PreprocessError::InvalidBand { low_hz, high_hz, fs });
    }
    Ok(())
}

impl SosFilter {
    /// Butterworth bandpass of prototype order `order` (2·order poles).
    pub fn butter_bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<Self, PreprocessError> {
        check_band(low_hz, high_hz, fs)?;
        let fs2 = 2.0 * fs;
        let w_lo = fs2 * (PI * low_hz / fs).tan();
        let w_hi = fs2 * (PI * high_hz / fs).tan();
        let bw = w_hi - w_lo;
        let w0_sq = w_lo * w_hi;

        let mut poles = Vec::with_capacity(2 * order);
        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let proto = Complex64::from_polar(1.0, theta);
            let a = proto * (bw / 2.0);
            let d = (a * a - w0_sq).sqrt();
            for s in [a + d, a - d] {
                poles.push((fs2 + s) / (fs2 - s));
            }
        }

        // Upper-half-plane poles each give one conjugate pair; real poles are
        // paired with each other.
        let mut upper: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > 1e-12).collect();
        let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= 1e-12).map(|p| p.re).collect();
        upper.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        real.sort_by(f64::total_cmp);
        let mut sections: Vec<Biquad> =
            upper.iter().map(|p| Biquad { b: [1.0, 0.0, -1.0], a: [-2.0 * p.re, p.norm_sqr()] }).collect();
        for pair in real.chunks(2) {
            let (p, q) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
            sections.push(Biquad { b: [1.0, 0.0, -1.0], a: [-(p + q), p * q] });
        }

        // Unit gain at the digital image of the analog centre frequency.
        let center = 2.0 * (w0_sq.sqrt() / fs2).atan();
        let z_inv = Complex64::from_polar(1.0, -center);
        let h = sections.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv));
        let per_section = h.norm().recip().powf(1.0 / sections.len() as f64);
        for s in &mut sections {
            s.b.iter_mut().for_each(|b| *b *= per_section);
        }
        Ok(Self { sections })
    }

    /// Number of poles.
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64, fs: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / fs);
        self.sections.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Causal single pass, starting each section from its steady state for a
    /// constant input equal to `x[0]`.
    fn filter_steady(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        let mut level = first;
        for s in &self.sections {
            let [mut z1, mut z2] = s.step_state();
            z1 *= level;
            z2 *= level;
            level *= s.dc_gain();
            let [b0, b1, b2] = s.b;
            let [a1, a2] = s.a;
            for v in x.iter_mut() {
                let input = *v;
                let y = b0 * input + z1;
                z1 = b1 * input - a1 * y + z2;
                z2 = b2 * input - a2 * y;
                *v = y;
            }
        }
    }

    /// Minimum signal length accepted by [`Self::filtfilt`].
    pub fn min_len(&self) -> usize {
        3 * self.order()
    }

    /// Largest pole radius of the cascade.
    fn slowest_pole(&self) -> f64 {
        self.sections
            .iter()
            .map(|s| {
                let [a1, a2] = s.a;
                let disc = a1 * a1 - 4.0 * a2;
                if disc < 0.0 {
                    a2.sqrt()
                } else {
                    ((-a1).abs() + disc.sqrt()) / 2.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// Odd-extension length: long enough for the slowest mode to decay by
    /// 1e3, never shorter than `3 * (order + 1)`, capped at `n - 1`.
    fn pad_len(&self, n: usize) -> usize {
        let floor = 3 * (self.order() + 1);
        let r = self.slowest_pole();
        let settle = if r > 0.0 && r < 1.0 { (1e3f64.ln() / -r.ln()).ceil() as usize } else { floor };
        settle.max(floor).min(n - 1)
    }

    /// Zero-phase filtering: forward and backward passes over an odd
    /// extension of the signal.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>, PreprocessError> {
        let n = x.len();
        if n < self.min_len() || n < 2 {
            return Err(PreprocessError::SignalTooShort { len: n, min: self.min_len().max(2) });
        }
        let pad = self.pad_len(n);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        self.filter_steady(&mut ext);
        ext.reverse();
        self.filter_steady(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Zero-phase Butterworth bandpass applied to every channel.
pub fn bandpass_filter(
    signal: &[Vec<f64>],
    low_hz: f64,
    high_hz: f64,
    fs: f64,
) -> Result<Vec<Vec<f64>>, PreprocessError> {
    let filter = SosFilter::butter_bandpass(BUTTER_ORDER, low_hz, high_hz, fs)?;
    signal.iter().map(|row| filter.filtfilt(row)).collect()
}
