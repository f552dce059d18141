//! Detector configuration and the trained model bundle.

use alloc::format;

use crate::centers::Centers;
use crate::error::{Error, Result};
use crate::nn::{DenseLayer, FeatureNet, NetSpec};
use crate::task_bank::TaskBank;

/// How the per-transformation centers are maintained during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CenterMode {
    /// Centers are the training-set feature means, recomputed at the start of
    /// every epoch and held fixed (no gradient) within it.
    #[default]
    RecomputedMeans,
    /// Centers are free parameters optimised jointly with the network.
    LearnedFree,
}

/// Which transformation classifier produces the anomaly score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoreMode {
    /// Distances to centers with the ε uncertainty prior.
    #[default]
    OpenSetDistance,
    /// Softmax of the auxiliary classification head.
    ClosedSetSoftmax,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    /// Triplet hinge margin `s`.
    pub margin: f64,
    /// Uncertainty prior added to every transformation probability.
    pub epsilon: f64,
    pub epochs: usize,
    /// Rows per minibatch; each row expands into `M` transformed instances.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the softmax cross-entropy loss on the auxiliary head.
    pub ce_weight: f64,
    /// Weight of the mean squared feature norm.
    pub feat_l2_weight: f64,
    pub center_mode: CenterMode,
    pub score_mode: ScoreMode,
    /// Root of the network-initialisation and minibatch-shuffle streams.
    pub seed: u64,
    pub net: NetSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            epsilon: 1e-12,
            epochs: 1,
            batch_size: 256,
            learning_rate: 1e-3,
            ce_weight: 1.0,
            feat_l2_weight: 1e-3,
            center_mode: CenterMode::RecomputedMeans,
            score_mode: ScoreMode::OpenSetDistance,
            seed: 0,
            net: NetSpec::linear(8),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        nonneg("margin", self.margin)?;
        nonneg("epsilon", self.epsilon)?;
        nonneg("ce_weight", self.ce_weight)?;
        nonneg("feat_l2_weight", self.feat_l2_weight)?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if self.net.feature_dim == 0 || self.net.hidden.contains(&0) {
            return Err(Error::invalid("net", "layer widths must be positive"));
        }
        if self.score_mode == ScoreMode::ClosedSetSoftmax && self.ce_weight == 0.0 {
            return Err(Error::invalid(
                "ce_weight",
                "closed-set scoring trains its head through the cross-entropy term; must be > 0",
            ));
        }
        Ok(())
    }

    /// Whether training builds the auxiliary `d → M` head.
    pub fn uses_head(&self) -> bool {
        self.ce_weight > 0.0 || self.score_mode == ScoreMode::ClosedSetSoftmax
    }
}

/// A trained detector: transformations, feature extractor, centers and the
/// scoring configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct GoadModel {
    bank: TaskBank,
    net: FeatureNet,
    centers: Centers,
    config: TrainConfig,
    aux_head: Option<DenseLayer>,
}

impl GoadModel {
    pub fn new(
        bank: TaskBank,
        net: FeatureNet,
        centers: Centers,
        config: TrainConfig,
        aux_head: Option<DenseLayer>,
    ) -> Result<Self> {
        if bank.reduced_dim() != net.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "bank reduced dim vs net input",
                expected: net.input_dim(),
                actual: bank.reduced_dim(),
            });
        }
        if centers.dim() != net.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "center dim vs net output",
                expected: net.output_dim(),
                actual: centers.dim(),
            });
        }
        if centers.count() != bank.tasks() {
            return Err(Error::DimensionMismatch {
                context: "center count vs tasks",
                expected: bank.tasks(),
                actual: centers.count(),
            });
        }
        if let Some(head) = &aux_head {
            if head.input_dim() != net.output_dim() || head.output_dim() != bank.tasks() {
                return Err(Error::ShapeMismatch {
                    context: "auxiliary head",
                    expected_rows: bank.tasks(),
                    expected_cols: net.output_dim(),
                    actual_rows: head.output_dim(),
                    actual_cols: head.input_dim(),
                });
            }
        }
        Ok(Self {
            bank,
            net,
            centers,
            config,
            aux_head,
        })
    }

    pub fn bank(&self) -> &TaskBank {
        &self.bank
    }

    pub fn net(&self) -> &FeatureNet {
        &self.net
    }

    pub fn centers(&self) -> &Centers {
        &self.centers
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn aux_head(&self) -> Option<&DenseLayer> {
        self.aux_head.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.bank.input_dim()
    }

    /// Same model with a different scoring rule.
    pub fn with_score_mode(mut self, mode: ScoreMode) -> Self {
        self.config.score_mode = mode;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.config.epsilon = epsilon;
        self
    }
}
