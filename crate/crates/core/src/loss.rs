//! Training objectives: center triplet loss, head cross-entropy, feature norm
//! penalty, and their combination over a minibatch of transformed instances.

use alloc::vec;
use alloc::vec::Vec;

use crate::centers::Centers;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{DenseLayer, FeatureNet, LayerGradient, NetGradients};

/// Instances per block when a `B×M` intermediate is needed, which keeps the
/// temporaries small however large the minibatch is.
const ROW_BLOCK: usize = 1024;

fn check_features(features: &Matrix, centers: &Centers) -> Result<()> {
    if features.cols() != centers.dim() {
        return Err(Error::DimensionMismatch {
            context: "feature dim vs centers",
            expected: centers.dim(),
            actual: features.cols(),
        });
    }
    Ok(())
}

/// `B×M` matrix of `‖fᵢ − c_m‖²`, computed as `‖fᵢ‖² + ‖c_m‖² − 2fᵢ·c_m`
/// and clamped at zero. Each row depends only on its own feature.
pub fn squared_distances(features: &Matrix, centers: &Centers) -> Result<Matrix> {
    check_features(features, centers)?;
    let c = centers.as_matrix();
    let c_norms: Vec<f64> = c.iter_rows().map(squared_norm).collect();
    let mut out = features.matmul_t(c)?;
    for i in 0..features.rows() {
        let f_norm = squared_norm(features.row(i));
        for (v, &cn) in out.row_mut(i).iter_mut().zip(&c_norms) {
            *v = (f_norm + cn - 2.0 * *v).max(0.0);
        }
    }
    Ok(out)
}

#[inline]
fn squared_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::DimensionMismatch {
            context: "label count",
            expected: rows,
            actual: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&m| m >= classes) {
        return Err(Error::IndexOutOfRange {
            what: "transformation label",
            index: bad,
            len: classes,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripletLoss {
    /// Sum of the per-instance hinge values.
    pub loss: f64,
    pub feature_grad: Matrix,
    /// Present when requested; `M×d`.
    pub center_grad: Option<Matrix>,
}

/// `Σᵢ max(‖fᵢ − c_{mᵢ}‖² + s − min_{m′≠mᵢ} ‖fᵢ − c_{m′}‖², 0)`.
///
/// On ties for the nearest other center the lowest index receives the
/// gradient; an exactly-zero hinge argument is treated as inactive.
pub fn triplet_center_loss(
    features: &Matrix,
    labels: &[usize],
    centers: &Centers,
    margin: f64,
    with_center_grad: bool,
) -> Result<TripletLoss> {
    check_features(features, centers)?;
    let tasks = centers.count();
    if tasks < 2 {
        return Err(Error::TooFew {
            what: "centers",
            needed: 2,
            available: tasks,
        });
    }
    check_labels(labels, features.rows(), tasks)?;

    let d = centers.dim();
    let mut loss = 0.0;
    let mut feature_grad = Matrix::zeros(features.rows(), d);
    let mut center_grad = with_center_grad.then(|| Matrix::zeros(tasks, d));
    let mut block = Matrix::zeros(0, tasks);
    for (i, &own) in labels.iter().enumerate() {
        if i % ROW_BLOCK == 0 {
            let end = (i + ROW_BLOCK).min(features.rows());
            block = squared_distances(&features.slice_rows(i, end)?, centers)?;
        }
        let f = features.row(i);
        let dist = block.row(i % ROW_BLOCK);
        let mut nearest = usize::MAX;
        let mut nearest_dist = f64::INFINITY;
        for (m, &dm) in dist.iter().enumerate() {
            if m != own && dm < nearest_dist {
                nearest = m;
                nearest_dist = dm;
            }
        }
        let hinge = dist[own] + margin - nearest_dist;
        if hinge > 0.0 {
            loss += hinge;
            let c_own = centers.get(own);
            let c_near = centers.get(nearest);
            let g = feature_grad.row_mut(i);
            for j in 0..d {
                // ∂/∂f [‖f−a‖² − ‖f−b‖²] = 2(b − a)
                g[j] = 2.0 * (c_near[j] - c_own[j]);
            }
            if let Some(cg) = center_grad.as_mut() {
                for j in 0..d {
                    cg.row_mut(own)[j] -= 2.0 * (f[j] - c_own[j]);
                    cg.row_mut(nearest)[j] += 2.0 * (f[j] - c_near[j]);
                }
            }
        }
    }
    Ok(TripletLoss {
        loss,
        feature_grad,
        center_grad,
    })
}

/// Summed softmax cross-entropy of `logits` against `labels`, with its
/// gradient w.r.t. the logits.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    check_labels(labels, logits.rows(), logits.cols())?;
    let mut grad = logits.clone();
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = grad.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            total += *v;
        }
        loss += libm::log(total) - (logits.get(i, y) - max);
        let inv = 1.0 / total;
        row.iter_mut().for_each(|v| *v *= inv);
        row[y] -= 1.0;
    }
    Ok((loss, grad))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub margin: f64,
    pub ce_weight: f64,
    pub feat_l2_weight: f64,
}

/// Per-term values of the minibatch objective, each averaged over instances.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ObjectiveParts {
    pub triplet: f64,
    pub cross_entropy: f64,
    pub feature_l2: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct ObjectiveGradients {
    pub net: NetGradients,
    pub head: Option<LayerGradient>,
    pub centers: Option<Matrix>,
}

/// Mean over the `n` rows of `instances` of
/// `triplet + ce_weight·CE(head(f)) + feat_l2_weight·‖f‖²`, with gradients for
/// the network, the head (if any) and optionally the centers.
pub fn batch_objective(
    net: &FeatureNet,
    head: Option<&DenseLayer>,
    centers: &Centers,
    instances: &Matrix,
    labels: &[usize],
    weights: &LossWeights,
    with_center_grad: bool,
) -> Result<(ObjectiveParts, ObjectiveGradients)> {
    let n = instances.rows();
    if n == 0 {
        return Err(Error::Empty("minibatch"));
    }
    let scale = 1.0 / n as f64;
    let trace = net.forward_trace(instances)?;
    let features = trace.output();

    let triplet = triplet_center_loss(features, labels, centers, weights.margin, with_center_grad)?;
    let mut d_features = triplet.feature_grad;

    let mut cross_entropy = 0.0;
    let mut head_grad = None;
    if let Some(head) = head {
        if weights.ce_weight > 0.0 {
            let mut hg = LayerGradient {
                weight: Matrix::zeros(head.output_dim(), head.input_dim()),
                bias: vec![0.0; head.output_dim()],
            };
            for start in (0..n).step_by(ROW_BLOCK) {
                let end = (start + ROW_BLOCK).min(n);
                let fb = features.slice_rows(start, end)?;
                let logits = head.forward(&fb)?;
                let (ce, mut d_logits) = softmax_cross_entropy(&logits, &labels[start..end])?;
                cross_entropy += ce;
                d_logits
                    .as_mut_slice()
                    .iter_mut()
                    .for_each(|v| *v *= weights.ce_weight);
                let (g, d_from_head) = head.backward(&fb, &logits, &d_logits)?;
                for (a, b) in hg.weight.as_mut_slice().iter_mut().zip(g.weight.as_slice()) {
                    *a += b;
                }
                for (a, b) in hg.bias.iter_mut().zip(&g.bias) {
                    *a += b;
                }
                let rows = &mut d_features.as_mut_slice()[start * fb.cols()..end * fb.cols()];
                for (a, b) in rows.iter_mut().zip(d_from_head.as_slice()) {
                    *a += b;
                }
            }
            head_grad = Some(hg);
        }
    }

    let mut feature_l2 = 0.0;
    if weights.feat_l2_weight > 0.0 {
        for (g, &f) in d_features.as_mut_slice().iter_mut().zip(features.as_slice()) {
            feature_l2 += f * f;
            *g += 2.0 * weights.feat_l2_weight * f;
        }
    }

    d_features.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    let net_grad = net.backward_trace(&trace, &d_features)?;

    if let Some(hg) = head_grad.as_mut() {
        hg.weight.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
        hg.bias.iter_mut().for_each(|v| *v *= scale);
    }
    let center_grad = triplet.center_grad.map(|mut g| {
        g.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
        g
    });

    let parts = ObjectiveParts {
        triplet: triplet.loss * scale,
        cross_entropy: cross_entropy * scale,
        feature_l2: feature_l2 * scale,
        total: (triplet.loss + weights.ce_weight * cross_entropy + weights.feat_l2_weight * feature_l2)
            * scale,
    };
    Ok((
        parts,
        ObjectiveGradients {
            net: net_grad,
            head: head_grad,
            centers: center_grad,
        },
    ))
}

/// Transformation labels `0, 1, …, M−1` repeated for each of `rows` samples.
pub fn instance_labels(rows: usize, tasks: usize) -> Vec<usize> {
    (0..rows * tasks).map(|k| k % tasks).collect()
}
