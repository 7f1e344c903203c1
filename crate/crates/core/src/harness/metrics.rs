use serde::{Deserialize, Serialize};

use super::HarnessError;

/// `K × K` counts; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self { classes, counts: vec![0; classes * classes] }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self, HarnessError> {
        if truth.len() != predicted.len() {
            return Err(HarnessError::Data(format!("{} labels vs {} predictions", truth.len(), predicted.len())));
        }
        let mut cm = Self::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.add(t, p)?;
        }
        Ok(cm)
    }

    /// Binary matrix with class 1 as the positive class.
    pub fn binary(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { classes: 2, counts: vec![tn, fp, fn_, tp] }
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<(), HarnessError> {
        if truth >= self.classes || predicted >= self.classes {
            return Err(HarnessError::Data(format!(
                "class pair ({truth}, {predicted}) outside {} classes",
                self.classes
            )));
        }
        self.counts[truth * self.classes + predicted] += 1;
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn trace(&self) -> u64 {
        (0..self.classes).map(|k| self.get(k, k)).sum()
    }

    /// `trace / total`.
    pub fn accuracy(&self) -> Result<f64, HarnessError> {
        match self.total() {
            0 => Err(HarnessError::EmptyMatrix),
            n => Ok(self.trace() as f64 / n as f64),
        }
    }

    /// One-vs-rest F1 of class `k`; zero when `2TP + FP + FN` is zero.
    pub fn class_f1(&self, k: usize) -> f64 {
        let tp = self.get(k, k);
        let fp: u64 = (0..self.classes).filter(|&t| t != k).map(|t| self.get(t, k)).sum();
        let fn_: u64 = (0..self.classes).filter(|&p| p != k).map(|p| self.get(k, p)).sum();
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * tp) as f64 / denom as f64
        }
    }

    /// Binary F1 of class 1 when `K = 2`, otherwise the unweighted mean of
    /// per-class F1 (classes without support contribute 0).
    pub fn f1_score(&self) -> Result<f64, HarnessError> {
        if self.total() == 0 {
            return Err(HarnessError::EmptyMatrix);
        }
        if self.classes == 2 {
            return Ok(self.class_f1(1));
        }
        Ok((0..self.classes).map(|k| self.class_f1(k)).sum::<f64>() / self.classes as f64)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}
