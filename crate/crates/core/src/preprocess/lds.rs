//! Linear dynamic system smoothing of feature sequences.
//!
//! Scalar random-walk state observed in noise: transition 1, observation 1,
//! observation noise `r` = series variance, process noise `q = 0.001 r`,
//! initial state the first observation with covariance `r`. A Kalman
//! forward pass is followed by a Rauch-Tung-Striebel backward pass.

/// Ratio of process to observation noise.
pub const PROCESS_NOISE_RATIO: f64 = 1e-3;

pub fn lds_smooth(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    if n < 2 {
        return series.to_vec();
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let r = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if !(r > 0.0) {
        return series.to_vec();
    }
    let q = PROCESS_NOISE_RATIO * r;

    let mut filtered = Vec::with_capacity(n);
    let mut filtered_cov = Vec::with_capacity(n);
    let mut predicted_cov = Vec::with_capacity(n);
    let (mut x, mut p) = (series[0], r);
    for (t, &y) in series.iter().enumerate() {
        if t > 0 {
            p += q;
        }
        predicted_cov.push(p);
        let gain = p / (p + r);
        x += gain * (y - x);
        p *= 1.0 - gain;
        filtered.push(x);
        filtered_cov.push(p);
    }

    let mut smoothed = filtered.clone();
    for t in (0..n - 1).rev() {
        let gain = filtered_cov[t] / predicted_cov[t + 1];
        smoothed[t] = filtered[t] + gain * (smoothed[t + 1] - filtered[t]);
    }
    smoothed
}

pub fn total_variation(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}
