use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const MANIFEST_VERSION: u32 = 1;

/// `(session, subject, trial)` key. Ordering is ascending session, then
/// subject, then trial, which is the dataset iteration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrialKey {
    pub session: u32,
    pub subject: u32,
    pub trial: u32,
}

impl TrialKey {
    pub fn new(session: u32, subject: u32, trial: u32) -> Self {
        Self { session, subject, trial }
    }
}

impl fmt::Display for TrialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}/p{}/t{}", self.session, self.subject, self.trial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Discrete,
    Dimensional,
}

/// How labels are encoded.
///
/// Dimensional schemes carry rating axes (e.g. valence, arousal). Each axis
/// is binarized at `threshold` (rating >= threshold is "high"); with several
/// axes the class is the quadrant product, first axis most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub kind: LabelKind,
    pub class_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl LabelScheme {
    pub fn discrete<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            kind: LabelKind::Discrete,
            class_names: names.into_iter().map(Into::into).collect(),
            axes: Vec::new(),
            rating_range: None,
            threshold: None,
        }
    }

    /// Dimensional scheme on a 1..9 rating range binarized at 5.
    pub fn dimensional<S: Into<String>>(axes: impl IntoIterator<Item = S>) -> Self {
        let axes: Vec<String> = axes.into_iter().map(Into::into).collect();
        let n = axes.len();
        let mut class_names = Vec::with_capacity(1 << n);
        for code in 0..(1usize << n) {
            let name = axes
                .iter()
                .enumerate()
                .map(|(i, axis)| {
                    let high = code >> (n - 1 - i) & 1 == 1;
                    format!("{}{}", if high { "high_" } else { "low_" }, axis)
                })
                .collect::<Vec<_>>()
                .join("+");
            class_names.push(name);
        }
        Self { kind: LabelKind::Dimensional, class_names, axes, rating_range: Some([1.0, 9.0]), threshold: Some(5.0) }
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Class index for a rating vector under the quadrant rule.
    pub fn class_of_ratings(&self, ratings: &[f64]) -> Option<usize> {
        if self.kind != LabelKind::Dimensional || ratings.len() != self.axes.len() {
            return None;
        }
        let threshold = self.threshold?;
        Some(ratings.iter().fold(0usize, |code, &r| (code << 1) | usize::from(r >= threshold)))
    }

    /// Scheme-level problems, empty when consistent.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.class_names.len() < 2 {
            out.push(format!("label scheme needs at least 2 classes, has {}", self.class_names.len()));
        }
        if self.kind == LabelKind::Dimensional {
            if self.axes.is_empty() {
                out.push("dimensional scheme without rating axes".into());
            } else if self.class_names.len() != 1 << self.axes.len() {
                out.push(format!(
                    "dimensional scheme with {} axes must have {} classes, has {}",
                    self.axes.len(),
                    1 << self.axes.len(),
                    self.class_names.len()
                ));
            }
            match (self.rating_range, self.threshold) {
                (Some([lo, hi]), Some(t)) => {
                    if !(lo < hi) {
                        out.push(format!("rating range [{lo}, {hi}] is empty"));
                    }
                    if !(t > lo && t < hi) {
                        out.push(format!("threshold {t} outside rating range [{lo}, {hi}]"));
                    }
                }
                _ => out.push("dimensional scheme needs rating_range and threshold".into()),
            }
        }
        out
    }
}

/// Feature provenance for datasets produced by the preprocessing pipeline.
///
/// A feature trial tensor has `channels` rows and `n_segments * feature_dim`
/// columns; segment `k` occupies columns `k*d .. (k+1)*d` of every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub kind: String,
    pub bands: Vec<[f64; 2]>,
    pub window_seconds: f64,
    pub overlap_fraction: f64,
    pub smoothing: String,
    pub feature_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact_threshold: Option<f64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub session: u32,
    pub subject: u32,
    pub trial: u32,
    pub n_channels: usize,
    /// Time samples of the stored tensor (columns).
    pub n_times: usize,
    pub label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<Vec<f64>>,
    pub duration_s: f64,
    /// Number of segments for feature datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_segments: Option<usize>,
}

impl TrialRecord {
    pub fn key(&self) -> TrialKey {
        TrialKey::new(self.session, self.subject, self.trial)
    }

    /// Samples contributed by this trial: segments for feature datasets,
    /// one per trial otherwise.
    pub fn sample_count(&self) -> usize {
        self.n_segments.unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub dataset_name: String,
    pub n_sessions: u32,
    pub n_subjects: u32,
    pub trials_per_subject: u32,
    pub n_channels: usize,
    pub sampling_rate_hz: f64,
    pub label_scheme: LabelScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureInfo>,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Header,
    LabelScheme,
    IdOutOfRange,
    DuplicateKey,
    MissingRecord,
    ChannelMismatch,
    InvalidLabel,
    DurationMismatch,
    FeatureLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub record: Option<TrialKey>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.record {
            Some(key) => write!(f, "{:?} at {key}: {}", self.kind, self.message),
            None => write!(f, "{:?}: {}", self.kind, self.message),
        }
    }
}

impl Manifest {
    /// Records sorted into iteration order.
    pub fn sort_records(&mut self) {
        self.trials.sort_by_key(TrialRecord::key);
    }

    pub fn num_classes(&self) -> usize {
        self.label_scheme.num_classes()
    }

    /// Stable content hash (hex SHA-256 of the canonical JSON form).
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest serializes");
        crate::seed::sha256_hex(&json)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_manifest(self)
    }
}

fn header(kind: ViolationKind, message: String) -> Violation {
    Violation { kind, record: None, message }
}

/// Checks every manifest invariant and lists the violations.
pub fn validate_manifest(m: &Manifest) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.format_version != MANIFEST_VERSION {
        out.push(header(ViolationKind::Header, format!("unsupported format_version {}", m.format_version)));
    }
    for (name, v) in [
        ("n_sessions", m.n_sessions as usize),
        ("n_subjects", m.n_subjects as usize),
        ("trials_per_subject", m.trials_per_subject as usize),
        ("n_channels", m.n_channels),
    ] {
        if v == 0 {
            out.push(header(ViolationKind::Header, format!("{name} must be positive")));
        }
    }
    if !(m.sampling_rate_hz.is_finite() && m.sampling_rate_hz > 0.0) {
        out.push(header(ViolationKind::Header, format!("sampling_rate_hz {} must be positive", m.sampling_rate_hz)));
    }
    for p in m.label_scheme.problems() {
        out.push(header(ViolationKind::LabelScheme, p));
    }
    if let Some(f) = &m.features {
        if f.feature_dim == 0 {
            out.push(header(ViolationKind::FeatureLayout, "feature_dim must be positive".into()));
        }
    }

    let n_classes = m.label_scheme.num_classes();
    let mut seen = BTreeSet::new();
    for r in &m.trials {
        let key = r.key();
        let mut push = |kind, message: String| out.push(Violation { kind, record: Some(key), message });
        if r.session >= m.n_sessions || r.subject >= m.n_subjects || r.trial >= m.trials_per_subject {
            push(
                ViolationKind::IdOutOfRange,
                format!("ids must lie in [0,{})x[0,{})x[0,{})", m.n_sessions, m.n_subjects, m.trials_per_subject),
            );
        }
        if !seen.insert(key) {
            push(ViolationKind::DuplicateKey, "duplicate (session, subject, trial) key".into());
        }
        if r.n_channels != m.n_channels {
            push(
                ViolationKind::ChannelMismatch,
                format!("record has {} channels, manifest declares {}", r.n_channels, m.n_channels),
            );
        }
        if r.label >= n_classes {
            push(ViolationKind::InvalidLabel, format!("label {} not below class count {n_classes}", r.label));
        }
        if let Some(ratings) = &r.ratings {
            match m.label_scheme.class_of_ratings(ratings) {
                None => push(ViolationKind::InvalidLabel, "ratings do not fit the label scheme".into()),
                Some(c) if c != r.label => {
                    push(ViolationKind::InvalidLabel, format!("label {} disagrees with ratings (class {c})", r.label))
                }
                Some(_) => {}
            }
            if let Some([lo, hi]) = m.label_scheme.rating_range {
                if ratings.iter().any(|&x| !(x >= lo && x <= hi)) {
                    push(ViolationKind::InvalidLabel, format!("rating outside [{lo}, {hi}]"));
                }
            }
        }
        match &m.features {
            None => {
                let expected = r.duration_s * m.sampling_rate_hz;
                let diff = (r.n_times as f64 - expected).abs();
                if !(diff <= 1.0) {
                    push(
                        ViolationKind::DurationMismatch,
                        format!(
                            "{} samples but {} s at {} Hz implies {expected:.1}",
                            r.n_times, r.duration_s, m.sampling_rate_hz
                        ),
                    );
                }
                if r.n_segments.is_some() {
                    push(ViolationKind::FeatureLayout, "n_segments set on a raw dataset".into());
                }
            }
            Some(f) => match r.n_segments {
                Some(n) if n * f.feature_dim == r.n_times => {}
                Some(n) => push(
                    ViolationKind::FeatureLayout,
                    format!("{} columns but {n} segments x {} features", r.n_times, f.feature_dim),
                ),
                None => push(ViolationKind::FeatureLayout, "feature dataset record without n_segments".into()),
            },
        }
    }

    if m.n_sessions > 0 && m.n_subjects > 0 && m.trials_per_subject > 0 {
        let expected = m.n_sessions as usize * m.n_subjects as usize * m.trials_per_subject as usize;
        if seen.len() < expected && expected <= 10_000_000 {
            for s in 0..m.n_sessions {
                for p in 0..m.n_subjects {
                    for t in 0..m.trials_per_subject {
                        let key = TrialKey::new(s, p, t);
                        if !seen.contains(&key) {
                            out.push(Violation {
                                kind: ViolationKind::MissingRecord,
                                record: Some(key),
                                message: "no record for this key".into(),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) use tests::grid_manifest;

#[cfg(test)]
mod tests {
    use super::*;

    /// Full grid manifest with fixed-duration raw trials.
    pub(crate) fn grid_manifest(
        sessions: u32,
        subjects: u32,
        trials: u32,
        channels: usize,
        fs: f64,
        seconds: f64,
        n_classes: usize,
    ) -> Manifest {
        let mut records = Vec::new();
        for s in 0..sessions {
            for p in 0..subjects {
                for t in 0..trials {
                    records.push(TrialRecord {
                        session: s,
                        subject: p,
                        trial: t,
                        n_channels: channels,
                        n_times: (seconds * fs).round() as usize,
                        label: t as usize % n_classes,
                        ratings: None,
                        duration_s: seconds,
                        n_segments: None,
                    });
                }
            }
        }
        Manifest {
            format_version: MANIFEST_VERSION,
            dataset_name: "grid".into(),
            n_sessions: sessions,
            n_subjects: subjects,
            trials_per_subject: trials,
            n_channels: channels,
            sampling_rate_hz: fs,
            label_scheme: LabelScheme::discrete((0..n_classes).map(|c| format!("c{c}"))),
            features: None,
            trials: records,
        }
    }

    #[test]
    fn seed_shaped_manifest_is_valid() {
        let m = grid_manifest(3, 15, 15, 62, 200.0, 4.0, 3);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn deap_shaped_manifest_is_valid() {
        let mut m = grid_manifest(1, 32, 40, 32, 128.0, 60.0, 2);
        m.label_scheme = LabelScheme::dimensional(["valence"]);
        for (i, r) in m.trials.iter_mut().enumerate() {
            let rating = 1.0 + (i % 9) as f64;
            r.ratings = Some(vec![rating]);
            r.label = usize::from(rating >= 5.0);
        }
        assert!(m.validate().is_empty(), "{:?}", m.validate());
    }

    #[test]
    fn duplicate_key_is_one_violation() {
        let mut m = grid_manifest(1, 2, 4, 4, 100.0, 1.0, 2);
        let mut dup = m.trials[3].clone();
        dup.label = 0;
        m.trials.push(dup);
        let v = m.validate();
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::DuplicateKey);
        assert_eq!(v[0].record, Some(TrialKey::new(0, 0, 3)));
    }

    #[test]
    fn label_outside_scheme_is_one_violation() {
        let mut m = grid_manifest(1, 2, 4, 4, 100.0, 1.0, 3);
        m.trials[2].label = 5;
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::InvalidLabel);
        assert_eq!(v[0].record, Some(TrialKey::new(0, 0, 2)));
    }

    #[test]
    fn channel_and_duration_mismatches_are_reported() {
        let mut m = grid_manifest(1, 1, 3, 62, 200.0, 2.0, 3);
        m.trials[0].n_channels = 63;
        m.trials[1].n_times = 398;
        let kinds: Vec<_> = m.validate().into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::ChannelMismatch, ViolationKind::DurationMismatch]);
    }

    #[test]
    fn missing_record_is_reported() {
        let mut m = grid_manifest(1, 2, 3, 2, 10.0, 1.0, 2);
        m.trials.remove(4);
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::MissingRecord);
        assert_eq!(v[0].record, Some(TrialKey::new(0, 1, 1)));
    }

    #[test]
    fn quadrant_classes() {
        let va = LabelScheme::dimensional(["valence", "arousal"]);
        assert_eq!(va.num_classes(), 4);
        assert!(va.problems().is_empty());
        assert_eq!(va.class_of_ratings(&[4.9, 4.9]), Some(0));
        assert_eq!(va.class_of_ratings(&[4.9, 5.0]), Some(1));
        assert_eq!(va.class_of_ratings(&[5.0, 1.0]), Some(2));
        assert_eq!(va.class_of_ratings(&[9.0, 9.0]), Some(3));
        assert_eq!(va.class_names[2], "high_valence+low_arousal");
    }

    #[test]
    fn threshold_outside_range_is_a_scheme_problem() {
        let mut s = LabelScheme::dimensional(["valence"]);
        s.threshold = Some(10.0);
        assert_eq!(s.problems().len(), 1);
        let one = LabelScheme::discrete(["only"]);
        assert_eq!(one.problems().len(), 1);
    }
}
