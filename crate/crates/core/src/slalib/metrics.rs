use serde::Serialize;

use super::forest::{predict, Forest};
use super::{FeatureRecord, SlaTier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub tier: SlaTier,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub samples: usize,
    pub accuracy: f64,
    /// Unweighted mean of the three per-class F1 scores. A class with no
    /// true and no predicted samples contributes 0.
    pub macro_f1: f64,
    pub per_class: Vec<ClassScore>,
    /// `confusion[true][predicted]`, tiers in order 1, 2, 3.
    pub confusion: [[usize; 3]; 3],
    /// Sorted by decreasing importance; empty when scoring bare predictions.
    pub feature_importance: Vec<FeatureImportance>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores predictions against ground truth.
pub fn score_predictions(truth: &[SlaTier], predicted: &[SlaTier]) -> Result<EvaluationReport> {
    if truth.is_empty() {
        return Err(Error::Evaluation("test set is empty".into()));
    }
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    let mut confusion = [[0usize; 3]; 3];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[t.index()][p.index()] += 1;
    }
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    let per_class: Vec<ClassScore> = SlaTier::ALL
        .iter()
        .map(|&tier| {
            let i = tier.index();
            let tp = confusion[i][i];
            let support: usize = confusion[i].iter().sum();
            let predicted_i: usize = (0..3).map(|r| confusion[r][i]).sum();
            let fp = predicted_i - tp;
            let fn_ = support - tp;
            ClassScore {
                tier,
                precision: ratio(tp, predicted_i),
                recall: ratio(tp, support),
                f1: ratio(2 * tp, 2 * tp + fp + fn_),
                support,
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / 3.0;
    Ok(EvaluationReport {
        samples: truth.len(),
        accuracy: ratio(correct, truth.len()),
        macro_f1,
        per_class,
        confusion,
        feature_importance: Vec::new(),
    })
}

/// Accuracy, macro-F1, confusion matrix and ranked feature importance of a
/// forest on a labeled test set.
pub fn evaluate(forest: &Forest, test: &[FeatureRecord]) -> Result<EvaluationReport> {
    let truth: Vec<SlaTier> = test.iter().map(|r| r.label).collect();
    let predicted = test
        .iter()
        .map(|r| predict(forest, &r.features))
        .collect::<Result<Vec<_>>>()?;
    let mut report = score_predictions(&truth, &predicted)?;
    let mut ranked: Vec<FeatureImportance> = forest
        .feature_names
        .iter()
        .zip(&forest.feature_importance)
        .map(|(name, &importance)| FeatureImportance {
            feature: name.clone(),
            importance,
        })
        .collect();
    ranked.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    report.feature_importance = ranked;
    Ok(report)
}
