/// Window placement inside a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentLayout {
    pub window: usize,
    pub step: usize,
    pub count: usize,
}

impl SegmentLayout {
    /// `floor((T - W) / S) + 1` windows of `W` samples every `S` samples,
    /// zero when the window does not fit.
    pub fn new(total: usize, window: usize, step: usize) -> Self {
        assert!(window > 0 && step > 0, "window and step must be positive");
        let count = if window > total { 0 } else { (total - window) / step + 1 };
        Self { window, step, count }
    }

    /// Window of `window_seconds` at `fs` with fractional overlap.
    pub fn from_seconds(total: usize, window_seconds: f64, overlap_fraction: f64, fs: f64) -> Self {
        let window = window_samples(window_seconds, fs);
        Self::new(total, window, step_samples(window, overlap_fraction))
    }

    pub fn start(&self, k: usize) -> usize {
        k * self.step
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        let s = self.start(k);
        s..s + self.window
    }
}

pub fn window_samples(window_seconds: f64, fs: f64) -> usize {
    (window_seconds * fs).round().max(1.0) as usize
}

pub fn step_samples(window: usize, overlap_fraction: f64) -> usize {
    ((window as f64 * (1.0 - overlap_fraction)).round() as usize).max(1)
}

/// Cuts every channel into windows; each returned sample is
/// `channels x window`. Remainder samples at the end are dropped.
pub fn segment_trial(signal: &[Vec<f64>], window_seconds: f64, overlap_fraction: f64, fs: f64) -> Vec<Vec<Vec<f64>>> {
    let total = signal.first().map_or(0, Vec::len);
    let layout = SegmentLayout::from_seconds(total, window_seconds, overlap_fraction, fs);
    if layout.count == 0 {
        log::warn!("window of {} samples does not fit a trial of {total}", layout.window);
    }
    (0..layout.count).map(|k| signal.iter().map(|row| row[layout.range(k)].to_vec()).collect()).collect()
}
