//! Transformation probabilities and anomaly scores.
//!
//! The open-set probability of transformation `m′` for a feature `f` is
//!
//! ```text
//! P̃(m′|f) = (exp(−‖f − c_m′‖²) + ε) / (Σ_m̃ exp(−‖f − c_m̃‖²) + M·ε)
//! ```
//!
//! and a sample's score is `−Σ_m log P̃(m | f(T(x, m)))`: higher means more
//! anomalous. Everything is evaluated in the log domain with a shift
//! `s = max(max_m −‖f − c_m‖², ln ε)`, so every shifted term lies in `[0, 1]`
//! and at least one of them is exactly representable as the dominant term.

use alloc::vec::Vec;

use crate::centers::Centers;
use crate::error::{Error, Result};
use crate::loss::squared_distances;
use crate::matrix::Matrix;
use crate::model::{GoadModel, ScoreMode};
use crate::numeric::logsumexp_nonempty;

/// Transformed instances pushed through the network per scoring chunk.
const SCORE_CHUNK_INSTANCES: usize = 1_024;

/// Shifted terms below `exp(−42)` are dropped from the normaliser; the
/// dominant term is at least 1, so each dropped term is under 2⁻⁶⁰ of it.
const NEGLIGIBLE: f64 = -42.0;

#[inline]
fn shifted_exp(z: f64) -> f64 {
    if z < NEGLIGIBLE {
        0.0
    } else {
        libm::exp(z)
    }
}

/// Log-probabilities of all transformations for one feature, given its squared
/// distances to every center. `out` receives `log P̃(m′|f)` for each `m′`.
pub(crate) fn log_probs_from_distances(dist: &[f64], epsilon: f64, out: &mut [f64]) {
    let max_neg = dist.iter().fold(f64::NEG_INFINITY, |acc, &d| acc.max(-d));
    if epsilon > 0.0 {
        let ln_eps = libm::log(epsilon);
        let shift = max_neg.max(ln_eps);
        let eps_shifted = libm::exp(ln_eps - shift);
        let mut total = 0.0;
        for (o, &d) in out.iter_mut().zip(dist) {
            let t = shifted_exp(-d - shift) + eps_shifted;
            *o = t;
            total += t;
        }
        let log_total = libm::log(total);
        for o in out.iter_mut() {
            *o = libm::log(*o) - log_total;
        }
    } else {
        let mut total = 0.0;
        for (o, &d) in out.iter_mut().zip(dist) {
            let z = -d - max_neg;
            *o = z;
            total += shifted_exp(z);
        }
        let log_total = libm::log(total);
        for o in out.iter_mut() {
            *o -= log_total;
        }
    }
}

/// `log P̃(target | f)` only.
fn log_prob_of(dist: &[f64], target: usize, epsilon: f64) -> f64 {
    let max_neg = dist.iter().fold(f64::NEG_INFINITY, |acc, &d| acc.max(-d));
    if epsilon > 0.0 {
        let ln_eps = libm::log(epsilon);
        let shift = max_neg.max(ln_eps);
        let eps_shifted = libm::exp(ln_eps - shift);
        let total: f64 = dist
            .iter()
            .map(|&d| shifted_exp(-d - shift) + eps_shifted)
            .sum();
        libm::log(shifted_exp(-dist[target] - shift) + eps_shifted) - libm::log(total)
    } else {
        let total: f64 = dist.iter().map(|&d| shifted_exp(-d - max_neg)).sum();
        (-dist[target] - max_neg) - libm::log(total)
    }
}

/// `B×M` matrix whose row `i` holds `log P̃(m′ | fᵢ)` for every `m′`.
pub fn transform_log_probs(features: &Matrix, centers: &Centers, epsilon: f64) -> Result<Matrix> {
    if features.cols() != centers.dim() {
        return Err(Error::DimensionMismatch {
            context: "feature dim vs centers",
            expected: centers.dim(),
            actual: features.cols(),
        });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon", "must be >= 0"));
    }
    let dist = squared_distances(features, centers)?;
    let mut out = Matrix::zeros(features.rows(), centers.count());
    for i in 0..features.rows() {
        log_probs_from_distances(dist.row(i), epsilon, out.row_mut(i));
    }
    Ok(out)
}

fn check_input(model: &GoadModel, cols: usize) -> Result<()> {
    if cols != model.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "sample dimension",
            expected: model.input_dim(),
            actual: cols,
        });
    }
    Ok(())
}

/// Open-set score of a single sample.
pub fn anomaly_score(x: &[f64], model: &GoadModel) -> Result<f64> {
    check_input(model, x.len())?;
    let row = Matrix::new(1, x.len(), x.to_vec())?;
    Ok(open_set_scores(model, &row)?[0])
}

/// Closed-set score of a single sample from the auxiliary softmax head.
pub fn closed_set_score(x: &[f64], model: &GoadModel) -> Result<f64> {
    check_input(model, x.len())?;
    let row = Matrix::new(1, x.len(), x.to_vec())?;
    Ok(closed_set_scores(model, &row)?[0])
}

/// Scores every row of `x` using the model's configured score mode.
pub fn score_batch(model: &GoadModel, x: &Matrix) -> Result<Vec<f64>> {
    check_input(model, x.cols())?;
    match model.config().score_mode {
        ScoreMode::OpenSetDistance => open_set_scores(model, x),
        ScoreMode::ClosedSetSoftmax => closed_set_scores(model, x),
    }
}

/// Number of rows scored per internal chunk; chunk boundaries never affect
/// results.
pub fn score_chunk_rows(model: &GoadModel) -> usize {
    (SCORE_CHUNK_INSTANCES / model.bank().tasks()).max(1)
}

fn chunked_features<F>(model: &GoadModel, x: &Matrix, mut per_chunk: F) -> Result<()>
where
    F: FnMut(&Matrix) -> Result<()>,
{
    let step = score_chunk_rows(model);
    let mut start = 0;
    while start < x.rows() {
        let end = (start + step).min(x.rows());
        let idx: Vec<usize> = (start..end).collect();
        let xb = x.select_rows(&idx)?;
        let feats = model
            .net()
            .forward(&model.bank().apply_all(&xb)?.into_instances())?;
        per_chunk(&feats)?;
        start = end;
    }
    Ok(())
}

fn open_set_scores(model: &GoadModel, x: &Matrix) -> Result<Vec<f64>> {
    let tasks = model.bank().tasks();
    let centers = model.centers();
    let epsilon = model.config().epsilon;
    let mut scores = Vec::with_capacity(x.rows());
    chunked_features(model, x, |feats| {
        let dist = squared_distances(feats, centers)?;
        for sample in 0..feats.rows() / tasks {
            let mut score = 0.0;
            for m in 0..tasks {
                score -= log_prob_of(dist.row(sample * tasks + m), m, epsilon);
            }
            scores.push(score);
        }
        Ok(())
    })?;
    Ok(scores)
}

fn closed_set_scores(model: &GoadModel, x: &Matrix) -> Result<Vec<f64>> {
    let head = model.aux_head().ok_or(Error::MissingHead)?;
    let tasks = model.bank().tasks();
    let mut scores = Vec::with_capacity(x.rows());
    chunked_features(model, x, |feats| {
        let logits = head.forward(feats)?;
        for sample in 0..feats.rows() / tasks {
            let mut score = 0.0;
            for m in 0..tasks {
                let row = logits.row(sample * tasks + m);
                score -= row[m] - logsumexp_nonempty(row);
            }
            scores.push(score);
        }
        Ok(())
    })?;
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centers(rows: &[&[f64]]) -> Centers {
        Centers::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn two_center_probabilities() {
        // dist² = [0, 1] → [1/(1+e⁻¹), e⁻¹/(1+e⁻¹)]
        let c = centers(&[&[0.0], &[1.0]]);
        let f = Matrix::from_rows(&[[0.0]]).unwrap();
        let lp = transform_log_probs(&f, &c, 0.0).unwrap();
        let e = libm::exp(-1.0);
        assert!((libm::exp(lp.get(0, 0)) - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((libm::exp(lp.get(0, 1)) - e / (1.0 + e)).abs() < 1e-15);
        assert!((libm::exp(lp.get(0, 0)) - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn equal_distances_are_uniform() {
        let c = centers(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]]);
        let f = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        for eps in [0.0, 1e-12, 1e-3, 10.0] {
            let lp = transform_log_probs(&f, &c, eps).unwrap();
            for m in 0..4 {
                assert!((libm::exp(lp.get(0, m)) - 0.25).abs() <= 1e-16, "eps {eps}");
            }
        }
    }

    #[test]
    fn far_features_fall_back_to_uniform_with_epsilon() {
        let c = centers(&[&[0.0], &[1.0], &[3.0]]);
        let f = Matrix::from_rows(&[[1e4]]).unwrap();
        let lp = transform_log_probs(&f, &c, 1e-12).unwrap();
        for m in 0..3 {
            assert!((libm::exp(lp.get(0, m)) - 1.0 / 3.0).abs() < 1e-12);
        }
        // without ε the nearest center takes everything
        let hard = transform_log_probs(&f, &c, 0.0).unwrap();
        assert!((libm::exp(hard.get(0, 2)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_helper_matches_full_row() {
        let dist = [0.3, 4.0, 1e3, 2.5];
        for eps in [0.0, 1e-12, 1e-3] {
            let mut row = [0.0; 4];
            log_probs_from_distances(&dist, eps, &mut row);
            for m in 0..4 {
                assert!((log_prob_of(&dist, m, eps) - row[m]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn negative_epsilon_rejected() {
        let c = centers(&[&[0.0], &[1.0]]);
        assert!(transform_log_probs(&Matrix::zeros(1, 1), &c, -1.0).is_err());
    }
}
