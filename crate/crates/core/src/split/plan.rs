use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::domain::expand_unit;
use super::{
    apportion, merge_to_part, Domain, MergeOptions, SampleIndex, Scope, SplitError, SplitStrategy, TaskKind, Unit,
    UnitKey,
};
use crate::corpus::{Manifest, TrialKey};
use crate::seed::rng_for;

/// Unit membership of one sub-task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskPlan {
    pub id: String,
    pub domain: String,
    pub scope: Scope,
    pub train: Vec<UnitKey>,
    pub val: Vec<UnitKey>,
    pub test: Vec<UnitKey>,
}

impl SubtaskPlan {
    /// `(m1, m2)`: end of train and end of val in the concatenated order.
    pub fn boundaries(&self) -> (usize, usize) {
        (self.train.len(), self.train.len() + self.val.len())
    }

    fn sets(&self) -> [(&'static str, &[UnitKey]); 3] {
        [("train", &self.train), ("val", &self.val), ("test", &self.test)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub task: TaskKind,
    pub seed: u64,
    pub strategy: SplitStrategy,
    pub manifest_hash: String,
    pub options: MergeOptions,
    pub subtasks: Vec<SubtaskPlan>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Concrete, sorted sample indices of one sub-task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskSpec {
    pub id: String,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn sorted_shuffled(domain: &Domain, seed: u64) -> Vec<Unit> {
    let mut units = domain.units.clone();
    units.sort_by_key(|u| u.key);
    units.shuffle(&mut rng_for(seed, &format!("split/{}", domain.id)));
    units
}

/// Interleaves label groups round-robin so that any prefix is as balanced
/// as possible. `None` when some class has fewer than three units.
fn stratified_order(units: &[Unit]) -> Option<Vec<Unit>> {
    let mut groups: BTreeMap<usize, Vec<Unit>> = BTreeMap::new();
    for u in units {
        groups.entry(u.label?).or_default().push(*u);
    }
    if groups.values().any(|g| g.len() < 3) {
        return None;
    }
    let longest = groups.values().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::with_capacity(units.len());
    for i in 0..longest {
        out.extend(groups.values().filter_map(|g| g.get(i)));
    }
    Some(out)
}

/// Ratio split of every domain of `task`.
pub fn plan_split(
    manifest: &Manifest,
    task: TaskKind,
    strategy: SplitStrategy,
    seed: u64,
    options: &MergeOptions,
) -> Result<SplitPlan, SplitError> {
    strategy.validate()?;
    let Some(ratios) = strategy.normalized() else {
        return Err(SplitError::Strategy("plan_split needs a ratio strategy; use kfold_plan".into()));
    };
    let domains = merge_to_part(manifest, task, options)?;
    let mut notes = Vec::new();
    let mut subtasks = Vec::with_capacity(domains.len());
    for d in &domains {
        if d.units.len() < 3 {
            return Err(SplitError::TooSmall { domain: d.id.clone(), units: d.units.len(), needed: 3 });
        }
        let shuffled = sorted_shuffled(d, seed);
        let counts = apportion(&ratios, shuffled.len());
        let labelled = shuffled.iter().all(|u| u.label.is_some());
        let keys: Vec<UnitKey> = match stratified_order(&shuffled) {
            // dealt test first so the small sets get the most even histograms
            Some(order) => {
                let keys: Vec<UnitKey> = order.iter().map(|u| u.key).collect();
                let (test, rest) = keys.split_at(counts[2]);
                let (val, train) = rest.split_at(counts[1]);
                train.iter().chain(val).chain(test).copied().collect()
            }
            None => {
                if labelled {
                    let msg = format!("{}: a class has fewer than 3 units, split is not stratified", d.id);
                    log::warn!("{msg}");
                    notes.push(msg);
                }
                shuffled.iter().map(|u| u.key).collect()
            }
        };
        let (m1, m2) = (counts[0], counts[0] + counts[1]);
        subtasks.push(SubtaskPlan {
            id: d.id.clone(),
            domain: d.id.clone(),
            scope: d.scope.clone(),
            train: keys[..m1].to_vec(),
            val: keys[m1..m2].to_vec(),
            test: keys[m2..].to_vec(),
        });
    }
    Ok(SplitPlan {
        task,
        seed,
        strategy,
        manifest_hash: manifest.content_hash(),
        options: options.clone(),
        subtasks,
        notes,
    })
}

/// Near-equal folds over the shuffled units; the first `len % n` folds get one extra unit.
fn folds(units: &[UnitKey], n: usize) -> Vec<Vec<UnitKey>> {
    let (base, extra) = (units.len() / n, units.len() % n);
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for k in 0..n {
        let len = base + usize::from(k < extra);
        out.push(units[start..start + len].to_vec());
        start += len;
    }
    out
}

/// `n` plans; in plan `k`, fold `k` is the test set and fold `k + 1` the
/// validation set. With two folds, validation is the first quarter of the
/// non-test fold.
pub fn kfold_plan(
    manifest: &Manifest,
    task: TaskKind,
    n: usize,
    seed: u64,
    options: &MergeOptions,
) -> Result<Vec<SplitPlan>, SplitError> {
    let strategy = SplitStrategy::Kfold { n };
    strategy.validate()?;
    let domains = merge_to_part(manifest, task, options)?;
    let hash = manifest.content_hash();
    let mut plans: Vec<SplitPlan> = (0..n)
        .map(|_| SplitPlan {
            task,
            seed,
            strategy,
            manifest_hash: hash.clone(),
            options: options.clone(),
            subtasks: Vec::with_capacity(domains.len()),
            notes: Vec::new(),
        })
        .collect();
    for d in &domains {
        // with two folds, each fold must spare a unit for validation and one for training
        let needed = if n == 2 { 4 } else { n.max(3) };
        if d.units.len() < needed {
            return Err(SplitError::TooSmall { domain: d.id.clone(), units: d.units.len(), needed });
        }
        let shuffled: Vec<UnitKey> = sorted_shuffled(d, seed).iter().map(|u| u.key).collect();
        let folds = folds(&shuffled, n);
        for (k, plan) in plans.iter_mut().enumerate() {
            let test = folds[k].clone();
            let (val, train) = if n == 2 {
                let other = &folds[1 - k];
                let cut = (other.len() / 4).max(1);
                (other[..cut].to_vec(), other[cut..].to_vec())
            } else {
                let v = (k + 1) % n;
                let train = (0..n).filter(|&j| j != k && j != v).flat_map(|j| folds[j].iter().copied()).collect();
                (folds[v].clone(), train)
            };
            plan.subtasks.push(SubtaskPlan {
                id: format!("{}/fold{k}", d.id),
                domain: d.id.clone(),
                scope: d.scope.clone(),
                train,
                val,
                test,
            });
        }
    }
    Ok(plans)
}

/// Expands a plan against the manifest it was built from, re-checking every
/// invariant on the way.
pub fn resolve(plan: &SplitPlan, manifest: &Manifest) -> Result<Vec<SubtaskSpec>, SplitError> {
    let actual = manifest.content_hash();
    if plan.manifest_hash != actual {
        return Err(SplitError::StalePlan { planned: plan.manifest_hash.clone(), actual });
    }
    let domains: BTreeMap<String, Domain> =
        merge_to_part(manifest, plan.task, &plan.options)?.into_iter().map(|d| (d.id.clone(), d)).collect();
    let index = SampleIndex::new(manifest);
    let mut out = Vec::with_capacity(plan.subtasks.len());
    for st in &plan.subtasks {
        let subtask = st.id.clone();
        let domain = domains.get(&st.domain).ok_or_else(|| SplitError::Coverage {
            subtask: subtask.clone(),
            message: format!("domain {} does not exist in the dataset", st.domain),
        })?;
        let expected: BTreeSet<UnitKey> = domain.units.iter().map(|u| u.key).collect();
        let mut seen = BTreeSet::new();
        let mut sets: [Vec<usize>; 3] = Default::default();
        for (slot, (name, units)) in st.sets().into_iter().enumerate() {
            if units.is_empty() {
                return Err(SplitError::Coverage { subtask, message: format!("{name} set is empty") });
            }
            for &u in units {
                if !expected.contains(&u) {
                    return Err(SplitError::UnknownUnit { subtask, unit: u.to_string() });
                }
                if !seen.insert(u) {
                    return Err(SplitError::Overlap { subtask, unit: u.to_string() });
                }
                let samples = expand_unit(&index, &st.scope, u)
                    .ok_or_else(|| SplitError::UnknownUnit { subtask: subtask.clone(), unit: u.to_string() })?;
                sets[slot].extend(samples);
            }
        }
        if seen.len() != expected.len() {
            let missing = expected.difference(&seen).next().unwrap();
            return Err(SplitError::Coverage { subtask, message: format!("{missing} is not assigned to any set") });
        }
        for s in &mut sets {
            s.sort_unstable();
        }
        check_purity(&subtask, plan.task, &index, &sets)?;
        let [train, val, test] = sets;
        out.push(SubtaskSpec { id: subtask, train, val, test });
    }
    Ok(out)
}

fn check_purity(subtask: &str, task: TaskKind, index: &SampleIndex, sets: &[Vec<usize>; 3]) -> Result<(), SplitError> {
    let mut owner: BTreeMap<TrialKey, usize> = BTreeMap::new();
    let mut subject_owner: BTreeMap<u32, usize> = BTreeMap::new();
    for (slot, samples) in sets.iter().enumerate() {
        for w in samples.windows(2) {
            if w[0] == w[1] {
                return Err(SplitError::Overlap { subtask: subtask.into(), unit: format!("sample {}", w[0]) });
            }
        }
        for &i in samples {
            let key = index.trial_of(i).expect("expanded indices are valid");
            if task.is_cross_trial() && *owner.entry(key).or_insert(slot) != slot {
                return Err(SplitError::TrialLeak { subtask: subtask.into(), trial: key });
            }
            if task == TaskKind::CrossSubject && *subject_owner.entry(key.subject).or_insert(slot) != slot {
                return Err(SplitError::Overlap { subtask: subtask.into(), unit: format!("subject {}", key.subject) });
            }
        }
    }
    // sample-level disjointness across sets
    let mut all: Vec<usize> = sets.iter().flatten().copied().collect();
    all.sort_unstable();
    if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
        return Err(SplitError::Overlap { subtask: subtask.into(), unit: format!("sample {}", w[0]) });
    }
    Ok(())
}
