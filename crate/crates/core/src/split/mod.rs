//! Leakage-safe train / validation / test planning.
//!
//! Planning happens on *units*: trials for subject-dependent tasks, subjects
//! for cross-subject, sessions for cross-session and single samples for
//! subject-independent. A unit is placed in exactly one set, so samples of
//! one trial (or subject) can never straddle two sets.

mod apportion;
mod domain;
mod plan;

use serde::{Deserialize, Serialize};

use crate::corpus::TrialKey;

pub use apportion::apportion;
pub use domain::{merge_to_part, Domain, MergeOptions, SampleIndex, Scope, Unit, UnitKey};
pub use plan::{kfold_plan, plan_split, resolve, SplitPlan, SubtaskPlan, SubtaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SubjectDependent,
    CrossSubject,
    CrossSession,
    SubjectIndependent,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SubjectDependent => "subject_dependent",
            Self::CrossSubject => "cross_subject",
            Self::CrossSession => "cross_session",
            Self::SubjectIndependent => "subject_independent",
        }
    }

    /// Tasks whose units never split a trial.
    pub fn is_cross_trial(self) -> bool {
        self != Self::SubjectIndependent
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "subject_dependent" | "dependent" => Ok(Self::SubjectDependent),
            "cross_subject" => Ok(Self::CrossSubject),
            "cross_session" => Ok(Self::CrossSession),
            "subject_independent" | "independent" => Ok(Self::SubjectIndependent),
            other => Err(format!(
                "unknown task `{other}` (subject-dependent, cross-subject, cross-session, subject-independent)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitStrategy {
    Ratio { train: f64, val: f64, test: f64 },
    Kfold { n: usize },
}

impl Default for SplitStrategy {
    fn default() -> Self {
        Self::Ratio { train: 0.6, val: 0.2, test: 0.2 }
    }
}

impl SplitStrategy {
    pub fn ratio(train: f64, val: f64, test: f64) -> Self {
        Self::Ratio { train, val, test }
    }

    pub fn validate(&self) -> Result<(), SplitError> {
        match *self {
            Self::Ratio { train, val, test } => {
                if [train, val, test].iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                    return Err(SplitError::Strategy(format!("ratios must be positive, got {train}:{val}:{test}")));
                }
            }
            Self::Kfold { n } => {
                if n < 2 {
                    return Err(SplitError::Strategy(format!("kfold needs n >= 2, got {n}")));
                }
            }
        }
        Ok(())
    }

    /// Ratios normalized to sum to one.
    pub fn normalized(&self) -> Option<[f64; 3]> {
        match *self {
            Self::Ratio { train, val, test } => {
                let s = train + val + test;
                Some([train / s, val / s, test / s])
            }
            Self::Kfold { .. } => None,
        }
    }
}

impl std::str::FromStr for SplitStrategy {
    type Err = String;

    /// `0.6,0.2,0.2`, `1:1:1` or `kfold:5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(n) = s.strip_prefix("kfold:") {
            let n = n.parse().map_err(|e| format!("bad fold count `{n}`: {e}"))?;
            return Ok(Self::Kfold { n });
        }
        let parts: Vec<f64> = s
            .split([',', ':'])
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad ratio `{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            &[train, val, test] => Ok(Self::Ratio { train, val, test }),
            _ => Err(format!("split `{s}` needs three ratios or kfold:N")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SplitError {
    #[error("invalid split strategy: {0}")]
    Strategy(String),
    #[error("domain {domain} has {units} unit(s); at least {needed} are needed")]
    TooSmall { domain: String, units: usize, needed: usize },
    #[error("plan was built for manifest {planned}, dataset has {actual}")]
    StalePlan { planned: String, actual: String },
    #[error("subtask {subtask}: unit {unit} appears in more than one set")]
    Overlap { subtask: String, unit: String },
    #[error("subtask {subtask}: {message}")]
    Coverage { subtask: String, message: String },
    #[error("subtask {subtask}: trial {trial} contributes samples to more than one set")]
    TrialLeak { subtask: String, trial: TrialKey },
    #[error("subtask {subtask}: unknown unit {unit}")]
    UnknownUnit { subtask: String, unit: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_parsing() {
        assert_eq!("0.6,0.2,0.2".parse::<SplitStrategy>().unwrap(), SplitStrategy::ratio(0.6, 0.2, 0.2));
        assert_eq!("1:1:1".parse::<SplitStrategy>().unwrap(), SplitStrategy::ratio(1.0, 1.0, 1.0));
        assert_eq!("kfold:5".parse::<SplitStrategy>().unwrap(), SplitStrategy::Kfold { n: 5 });
        assert!("0.5,0.5".parse::<SplitStrategy>().is_err());
        assert!(SplitStrategy::ratio(0.6, 0.0, 0.4).validate().is_err());
        assert!(SplitStrategy::Kfold { n: 1 }.validate().is_err());
    }

    #[test]
    fn task_parsing() {
        assert_eq!("subject-dependent".parse::<TaskKind>().unwrap(), TaskKind::SubjectDependent);
        assert_eq!("cross_subject".parse::<TaskKind>().unwrap(), TaskKind::CrossSubject);
        assert!("within".parse::<TaskKind>().is_err());
    }
}
