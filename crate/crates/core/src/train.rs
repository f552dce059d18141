//! Minibatch training of the feature extractor on normal data.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::adam::{AdamConfig, AdamState};
use crate::centers::{compute_centers, Centers};
use crate::error::{Error, Result};
use crate::loss::{batch_objective, instance_labels, LossWeights, ObjectiveParts};
use crate::matrix::Matrix;
use crate::model::{CenterMode, GoadModel, TrainConfig};
use crate::nn::{Activation, DenseLayer, FeatureNet};
use crate::seed::{rng_from_seed, SeedStreams};
use crate::task_bank::{BankSpec, TaskBank};

/// Per-epoch summary handed to the training observer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub batches: usize,
    /// Instance-weighted means over the epoch.
    pub mean: ObjectiveParts,
}

/// Trains a detector on `x_train`, which must hold normal rows only.
pub fn train(x_train: &Matrix, config: &TrainConfig, bank_spec: &BankSpec) -> Result<GoadModel> {
    train_with_observer(x_train, config, bank_spec, |_| {})
}

pub fn train_with_observer<F>(
    x_train: &Matrix,
    config: &TrainConfig,
    bank_spec: &BankSpec,
    mut observer: F,
) -> Result<GoadModel>
where
    F: FnMut(&EpochStats),
{
    config.validate()?;
    if x_train.rows() == 0 {
        return Err(Error::Empty("training set"));
    }
    if bank_spec.input_dim != x_train.cols() {
        return Err(Error::DimensionMismatch {
            context: "bank input dim vs training data",
            expected: x_train.cols(),
            actual: bank_spec.input_dim,
        });
    }

    let streams = SeedStreams::from_root(config.seed);
    let bank = TaskBank::generate(*bank_spec)?;
    let tasks = bank.tasks();

    let mut init_rng = rng_from_seed(streams.init);
    let mut net = FeatureNet::from_spec(bank.reduced_dim(), &config.net, &mut init_rng)?;
    let mut head = if config.uses_head() {
        Some(DenseLayer::he_normal(
            net.output_dim(),
            tasks,
            Activation::Identity,
            &mut init_rng,
        )?)
    } else {
        None
    };
    let mut shuffle_rng = rng_from_seed(streams.shuffle);

    let mut centers = compute_centers(&net, &bank, x_train)?;
    let learn_centers = config.center_mode == CenterMode::LearnedFree;

    let mut sizes = net.parameter_sizes();
    if let Some(h) = &head {
        sizes.extend(h.parameters().iter().map(|p| p.len()));
    }
    if learn_centers {
        sizes.push(tasks * net.output_dim());
    }
    let mut adam = AdamState::new(AdamConfig::with_learning_rate(config.learning_rate), &sizes);

    let weights = LossWeights {
        margin: config.margin,
        ce_weight: config.ce_weight,
        feat_l2_weight: config.feat_l2_weight,
    };
    let mut order: Vec<usize> = (0..x_train.rows()).collect();

    for epoch in 0..config.epochs {
        if epoch > 0 && !learn_centers {
            centers = compute_centers(&net, &bank, x_train)?;
        }
        order.shuffle(&mut shuffle_rng);

        let mut sum = ObjectiveParts::default();
        let mut seen = 0usize;
        let mut batches = 0usize;
        for (batch, rows) in order.chunks(config.batch_size).enumerate() {
            let xb = x_train.select_rows(rows)?;
            let instances = bank.apply_all(&xb)?.into_instances();
            let labels = instance_labels(rows.len(), tasks);
            let (parts, grads) = batch_objective(
                &net,
                head.as_ref(),
                &centers,
                &instances,
                &labels,
                &weights,
                learn_centers,
            )?;
            if !parts.total.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch,
                    value: parts.total,
                });
            }

            let mut params: Vec<&mut [f64]> = net.parameters_mut();
            let mut grad_refs: Vec<&[f64]> = grads.net.tensors();
            if let Some(h) = head.as_mut() {
                let hg = grads
                    .head
                    .as_ref()
                    .expect("ce_weight > 0 whenever the head exists");
                params.extend(h.parameters_mut());
                grad_refs.push(hg.weight.as_slice());
                grad_refs.push(&hg.bias);
            }
            if learn_centers {
                params.push(centers.as_mut_slice());
                grad_refs.push(
                    grads
                        .centers
                        .as_ref()
                        .expect("center gradient requested")
                        .as_slice(),
                );
            }
            adam.step(&mut params, &grad_refs)?;

            let n = instances.rows() as f64;
            sum.triplet += parts.triplet * n;
            sum.cross_entropy += parts.cross_entropy * n;
            sum.feature_l2 += parts.feature_l2 * n;
            sum.total += parts.total * n;
            seen += instances.rows();
            batches += 1;
        }
        let inv = 1.0 / seen as f64;
        observer(&EpochStats {
            epoch,
            batches,
            mean: ObjectiveParts {
                triplet: sum.triplet * inv,
                cross_entropy: sum.cross_entropy * inv,
                feature_l2: sum.feature_l2 * inv,
                total: sum.total * inv,
            },
        });
    }

    let centers: Centers = compute_centers(&net, &bank, x_train)?;
    GoadModel::new(bank, net, centers, config.clone(), head)
}
