//! Threshold selection and detection metrics.
//!
//! The decision threshold flags exactly as many test points as there are
//! anomalies in the test set. Equal scores at the boundary are resolved by
//! input order: earlier rows are flagged first.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSelection {
    /// Lowest flagged score (`+∞` when nothing is flagged).
    pub threshold: f64,
    pub flagged: Vec<bool>,
}

/// Flags the `n_anomalies` highest-scoring entries.
pub fn select_threshold(scores: &[f64], n_anomalies: usize) -> Result<ThresholdSelection> {
    if n_anomalies > scores.len() {
        return Err(Error::IndexOutOfRange {
            what: "anomaly count",
            index: n_anomalies,
            len: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable: equal scores keep input order
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut flagged = vec![false; scores.len()];
    for &i in &order[..n_anomalies] {
        flagged[i] = true;
    }
    let threshold = match n_anomalies {
        0 => f64::INFINITY,
        n => scores[order[n - 1]],
    };
    Ok(ThresholdSelection { threshold, flagged })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl Confusion {
    /// Counts with "anomaly" as the positive class.
    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                context: "prediction count vs labels",
                expected: truth.len(),
                actual: predicted.len(),
            });
        }
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.true_positives += 1,
                (true, false) => c.false_positives += 1,
                (false, false) => c.true_negatives += 1,
                (false, true) => c.false_negatives += 1,
            }
        }
        Ok(c)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Area under the ROC curve (Mann–Whitney statistic, ties count one half).
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "score count vs labels",
            expected: truth.len(),
            actual: scores.len(),
        });
    }
    let positives = truth.iter().filter(|&&t| t).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::TooFew {
            what: "examples of each class for AUC",
            needed: 1,
            available: positives.min(negatives),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average 1-based ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]].total_cmp(&scores[order[start]]).is_eq() {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&i| truth[i]).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        start = end;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Metrics of one evaluation run under the top-`N_a` threshold protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunMetrics {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub roc_auc: f64,
    pub threshold: f64,
    pub n_anomalies: usize,
    pub confusion: Confusion,
}

/// Scores anomalies-vs-normals with `N_a` = number of true anomalies.
pub fn evaluate_scores(scores: &[f64], truth: &[bool]) -> Result<RunMetrics> {
    let n_anomalies = truth.iter().filter(|&&t| t).count();
    let selection = select_threshold(scores, n_anomalies)?;
    let confusion = Confusion::from_predictions(&selection.flagged, truth)?;
    Ok(RunMetrics {
        f1: confusion.f1(),
        precision: confusion.precision(),
        recall: confusion.recall(),
        roc_auc: roc_auc(scores, truth)?,
        threshold: selection.threshold,
        n_anomalies,
        confusion,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation (divides by `n`).
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> Summary {
    if values.is_empty() {
        return Summary {
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Summary {
        mean,
        std: libm::sqrt(var),
    }
}

/// Repeated-run aggregate.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub runs: Vec<RunMetrics>,
    pub f1: Summary,
    pub precision: Summary,
    pub recall: Summary,
    pub roc_auc: Summary,
}

impl MetricsReport {
    pub fn from_runs(runs: Vec<RunMetrics>) -> Self {
        let pick = |f: fn(&RunMetrics) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
        Self {
            f1: pick(|r| r.f1),
            precision: pick(|r| r.precision),
            recall: pick(|r| r.recall),
            roc_auc: pick(|r| r.roc_auc),
            runs,
        }
    }
}
