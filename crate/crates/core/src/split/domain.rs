use std::fmt;

use serde::{Deserialize, Serialize};

use super::{SplitError, TaskKind};
use crate::corpus::{Manifest, TrialKey};

/// One indivisible element of a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKey {
    Trial(TrialKey),
    Subject(u32),
    Session(u32),
    Sample(usize),
}

impl fmt::Display for UnitKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Trial(k) => write!(f, "trial {k}"),
            Self::Subject(p) => write!(f, "subject {p}"),
            Self::Session(s) => write!(f, "session {s}"),
            Self::Sample(i) => write!(f, "sample {i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub key: UnitKey,
    /// Class label when the unit has a single one (trials, samples).
    pub label: Option<usize>,
}

/// Restriction applied when expanding units to samples.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Scope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<u32>,
}

impl Scope {
    fn admits(&self, key: TrialKey) -> bool {
        self.sessions.as_ref().is_none_or(|s| s.contains(&key.session)) && self.subject.is_none_or(|p| p == key.subject)
    }
}

/// Independent sub-task: a unit set to be split three ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub id: String,
    pub scope: Scope,
    pub units: Vec<Unit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeOptions {
    /// Sessions pooled for cross-subject tasks.
    pub cross_subject_sessions: Vec<u32>,
}

impl Default for MergeOptions {
    fn default() -> Self {
        Self { cross_subject_sessions: vec![0] }
    }
}

/// Global sample numbering: records in key order, samples in segment order.
#[derive(Debug, Clone)]
pub struct SampleIndex {
    keys: Vec<TrialKey>,
    labels: Vec<usize>,
    offsets: Vec<usize>,
}

impl SampleIndex {
    pub fn new(manifest: &Manifest) -> Self {
        let mut records: Vec<_> = manifest.trials.iter().collect();
        records.sort_by_key(|r| r.key());
        let mut offsets = Vec::with_capacity(records.len() + 1);
        offsets.push(0);
        for r in &records {
            offsets.push(offsets.last().unwrap() + r.sample_count());
        }
        Self {
            keys: records.iter().map(|r| r.key()).collect(),
            labels: records.iter().map(|r| r.label).collect(),
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn trials(&self) -> &[TrialKey] {
        &self.keys
    }

    fn position(&self, key: TrialKey) -> Option<usize> {
        self.keys.binary_search(&key).ok()
    }

    pub fn samples_of(&self, key: TrialKey) -> Option<std::ops::Range<usize>> {
        self.position(key).map(|i| self.offsets[i]..self.offsets[i + 1])
    }

    /// Trial position owning a global sample index.
    pub fn trial_of(&self, sample: usize) -> Option<TrialKey> {
        if sample >= self.len() {
            return None;
        }
        let i = self.offsets.partition_point(|&o| o <= sample) - 1;
        Some(self.keys[i])
    }

    pub fn label_of(&self, sample: usize) -> Option<usize> {
        let key = self.trial_of(sample)?;
        self.position(key).map(|i| self.labels[i])
    }
}

fn too_small(domain: &Domain, needed: usize) -> Result<(), SplitError> {
    if domain.units.len() < needed {
        return Err(SplitError::TooSmall { domain: domain.id.clone(), units: domain.units.len(), needed });
    }
    Ok(())
}

/// Groups a manifest into the sub-task domains of a task kind.
///
/// - subject-dependent: one domain per `(session, subject)`, units are trials
///   (sessions of one subject are treated as different subjects);
/// - cross-subject: one domain over `options.cross_subject_sessions`, units
///   are subjects;
/// - cross-session: one domain per subject, units are sessions;
/// - subject-independent: one domain, units are samples.
pub fn merge_to_part(manifest: &Manifest, task: TaskKind, options: &MergeOptions) -> Result<Vec<Domain>, SplitError> {
    let mut records: Vec<_> = manifest.trials.iter().collect();
    records.sort_by_key(|r| r.key());
    let domains = match task {
        TaskKind::SubjectDependent => {
            let mut out: Vec<Domain> = Vec::new();
            for r in records {
                let id = format!("s{}/p{}", r.session, r.subject);
                if out.last().is_none_or(|d| d.id != id) {
                    out.push(Domain {
                        id,
                        scope: Scope { sessions: Some(vec![r.session]), subject: Some(r.subject) },
                        units: Vec::new(),
                    });
                }
                out.last_mut().unwrap().units.push(Unit { key: UnitKey::Trial(r.key()), label: Some(r.label) });
            }
            out
        }
        TaskKind::CrossSubject => {
            let sessions = &options.cross_subject_sessions;
            let mut subjects: Vec<u32> =
                records.iter().filter(|r| sessions.contains(&r.session)).map(|r| r.subject).collect();
            subjects.dedup();
            subjects.sort_unstable();
            subjects.dedup();
            let tag = sessions.iter().map(|s| format!("s{s}")).collect::<Vec<_>>().join("+");
            vec![Domain {
                id: format!("cross_subject/{tag}"),
                scope: Scope { sessions: Some(sessions.clone()), subject: None },
                units: subjects.into_iter().map(|p| Unit { key: UnitKey::Subject(p), label: None }).collect(),
            }]
        }
        TaskKind::CrossSession => {
            let mut out = Vec::new();
            for p in 0..manifest.n_subjects {
                let mut sessions: Vec<u32> = records.iter().filter(|r| r.subject == p).map(|r| r.session).collect();
                sessions.dedup();
                if sessions.is_empty() {
                    continue;
                }
                out.push(Domain {
                    id: format!("p{p}"),
                    scope: Scope { sessions: None, subject: Some(p) },
                    units: sessions.into_iter().map(|s| Unit { key: UnitKey::Session(s), label: None }).collect(),
                });
            }
            out
        }
        TaskKind::SubjectIndependent => {
            let index = SampleIndex::new(manifest);
            let units = (0..index.len()).map(|i| Unit { key: UnitKey::Sample(i), label: index.label_of(i) }).collect();
            vec![Domain { id: "all".into(), scope: Scope::default(), units }]
        }
    };
    if task == TaskKind::CrossSession {
        for d in &domains {
            too_small(d, 3)?;
        }
    }
    Ok(domains)
}

/// Expands one unit into global sample indices inside `scope`.
pub(super) fn expand_unit(index: &SampleIndex, scope: &Scope, unit: UnitKey) -> Option<Vec<usize>> {
    match unit {
        UnitKey::Trial(key) => {
            if !scope.admits(key) {
                return None;
            }
            index.samples_of(key).map(Iterator::collect)
        }
        UnitKey::Subject(p) => {
            let out: Vec<usize> = index
                .trials()
                .iter()
                .filter(|k| k.subject == p && scope.admits(**k))
                .flat_map(|k| index.samples_of(*k).unwrap())
                .collect();
            let known = index.trials().iter().any(|k| k.subject == p && scope.admits(*k));
            known.then_some(out)
        }
        UnitKey::Session(s) => {
            let known = index.trials().iter().any(|k| k.session == s && scope.admits(*k));
            let out = index
                .trials()
                .iter()
                .filter(|k| k.session == s && scope.admits(**k))
                .flat_map(|k| index.samples_of(*k).unwrap())
                .collect();
            known.then_some(out)
        }
        UnitKey::Sample(i) => {
            let key = index.trial_of(i)?;
            scope.admits(key).then(|| vec![i])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::grid_manifest;

    #[test]
    fn seed_shaped_domains() {
        let m = grid_manifest(3, 15, 15, 62, 200.0, 1.0, 3);
        let dep = merge_to_part(&m, TaskKind::SubjectDependent, &MergeOptions::default()).unwrap();
        assert_eq!(dep.len(), 45);
        assert!(dep.iter().all(|d| d.units.len() == 15));
        let cross = merge_to_part(&m, TaskKind::CrossSubject, &MergeOptions::default()).unwrap();
        assert_eq!(cross.len(), 1);
        assert_eq!(cross[0].units.len(), 15);
        assert_eq!(cross[0].scope.sessions, Some(vec![0]));
        let sess = merge_to_part(&m, TaskKind::CrossSession, &MergeOptions::default()).unwrap();
        assert_eq!(sess.len(), 15);
        assert!(sess.iter().all(|d| d.units.len() == 3));
    }

    #[test]
    fn single_session_cannot_split_by_session() {
        let m = grid_manifest(1, 4, 6, 2, 100.0, 1.0, 2);
        let err = merge_to_part(&m, TaskKind::CrossSession, &MergeOptions::default()).unwrap_err();
        assert!(matches!(err, SplitError::TooSmall { units: 1, needed: 3, .. }));
    }

    #[test]
    fn sample_index_maps_back_to_trials() {
        let mut m = grid_manifest(1, 2, 3, 2, 100.0, 1.0, 3);
        for (i, r) in m.trials.iter_mut().enumerate() {
            r.n_segments = Some(i + 1);
        }
        let idx = SampleIndex::new(&m);
        assert_eq!(idx.len(), 21);
        assert_eq!(idx.samples_of(TrialKey::new(0, 0, 2)), Some(3..6));
        assert_eq!(idx.trial_of(6), Some(TrialKey::new(0, 1, 0)));
        assert_eq!(idx.trial_of(20), Some(TrialKey::new(0, 1, 2)));
        assert_eq!(idx.trial_of(21), None);
        let indep = merge_to_part(&m, TaskKind::SubjectIndependent, &MergeOptions::default()).unwrap();
        assert_eq!(indep[0].units.len(), 21);
        assert_eq!(indep[0].units[4].label, Some(2));
    }
}
