//! Analytic gradients against central finite differences.

use goad_core::loss::{batch_objective, instance_labels, softmax_cross_entropy, triplet_center_loss, LossWeights};
use goad_core::seed::rng_from_seed;
use goad_core::{sample_bank, Activation, Centers, DenseLayer, FeatureNet, Matrix, NetSpec};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const SEEDS: usize = 10;

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central difference of `f` w.r.t. each entry of `values`, compared with
/// `analytic`. Returns the worst relative error.
fn check(values: &mut [f64], analytic: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert_eq!(values.len(), analytic.len());
    let mut worst: f64 = 0.0;
    for k in 0..values.len() {
        let orig = values[k];
        values[k] = orig + H;
        let up = f(values);
        values[k] = orig - H;
        let down = f(values);
        values[k] = orig;
        worst = worst.max(rel_err(analytic[k], (up - down) / (2.0 * H)));
    }
    worst
}

fn two_layer_net(rng: &mut impl Rng) -> FeatureNet {
    let spec = NetSpec::deep(vec![5], 3);
    FeatureNet::from_spec(4, &spec, rng).unwrap()
}

fn with_bias_noise(net: &FeatureNet, rng: &mut impl Rng) -> FeatureNet {
    // nonzero biases so their gradients are exercised off the origin
    let mut net = net.clone();
    for p in net.parameters_mut().into_iter().skip(1).step_by(2) {
        p.iter_mut().for_each(|b| *b = { let z: f64 = StandardNormal.sample(rng); 0.3 * z });
    }
    net
}

/// `true` when no pre-activation lies within `gap` of the LeakyReLU kink.
fn away_from_kinks(net: &FeatureNet, x: &Matrix, gap: f64) -> bool {
    let mut a = x.clone();
    for layer in net.layers() {
        let z = DenseLayer::new(layer.weight().clone(), layer.bias().to_vec(), Activation::Identity)
            .unwrap()
            .forward(&a)
            .unwrap();
        if layer.activation() != Activation::Identity && z.as_slice().iter().any(|v| v.abs() < gap) {
            return false;
        }
        a = layer.forward(&a).unwrap();
    }
    true
}

#[test]
pub fn network_layers_match_finite_differences() {
    let mut checked = 0;
    for seed in 0..100u64 {
        if checked == SEEDS {
            break;
        }
        let mut rng = rng_from_seed(seed);
        let net = with_bias_noise(&two_layer_net(&mut rng), &mut rng);
        let mut x = gaussian(6, 4, &mut rng);
        let upstream = gaussian(6, 3, &mut rng);
        if !away_from_kinks(&net, &x, 1e-3) {
            continue;
        }
        checked += 1;
        let objective = |net: &FeatureNet, x: &Matrix| -> f64 {
            let y = net.forward(x).unwrap();
            y.as_slice().iter().zip(upstream.as_slice()).map(|(a, b)| a * b).sum()
        };
        let grads = net.backward(&x, &upstream).unwrap();

        let tensors: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
        for (k, analytic) in tensors.iter().enumerate() {
            let mut probe = net.clone();
            let mut values = probe.parameters()[k].to_vec();
            let err = check(&mut values, analytic, |v| {
                probe.parameters_mut()[k].copy_from_slice(v);
                objective(&probe, &x)
            });
            assert!(err < TOL, "seed {seed} tensor {k}: rel err {err}");
        }

        let analytic = grads.input.as_slice().to_vec();
        let (rows, cols) = x.shape();
        let mut values = x.as_slice().to_vec();
        let err = check(&mut values, &analytic, |v| {
            x = Matrix::new(rows, cols, v.to_vec()).unwrap();
            objective(&net, &x)
        });
        assert!(err < TOL, "seed {seed} input: rel err {err}");
    }
    assert_eq!(checked, SEEDS);
}

/// Smallest distance of any instance to a hinge or nearest-center switch.
fn triplet_kink_gap(features: &Matrix, labels: &[usize], centers: &Centers, margin: f64) -> f64 {
    let mut gap = f64::INFINITY;
    for (i, &own) in labels.iter().enumerate() {
        let f = features.row(i);
        let mut d: Vec<f64> = (0..centers.count())
            .map(|m| f.iter().zip(centers.get(m)).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let own_d = d[own];
        d.remove(own);
        d.sort_by(f64::total_cmp);
        gap = gap.min((own_d + margin - d[0]).abs());
        if d.len() > 1 {
            gap = gap.min(d[1] - d[0]);
        }
    }
    gap
}

#[test]
pub fn triplet_loss_matches_finite_differences() {
    let mut checked = 0;
    for seed in 0..100u64 {
        if checked == SEEDS {
            break;
        }
        let mut rng = rng_from_seed(1000 + seed);
        let (n, m, d) = (12, 4, 2);
        let mut features = gaussian(n, d, &mut rng);
        let centers_m = gaussian(m, d, &mut rng);
        let centers = Centers::new(centers_m.clone()).unwrap();
        let labels = instance_labels(n / m, m);
        if triplet_kink_gap(&features, &labels, &centers, 1.0) < 1e-3 {
            continue;
        }
        checked += 1;
        let out = triplet_center_loss(&features, &labels, &centers, 1.0, true).unwrap();

        let analytic = out.feature_grad.as_slice().to_vec();
        let mut values = features.as_slice().to_vec();
        let err = check(&mut values, &analytic, |v| {
            features = Matrix::new(n, d, v.to_vec()).unwrap();
            triplet_center_loss(&features, &labels, &centers, 1.0, false).unwrap().loss
        });
        assert!(err < TOL, "seed {seed} features: rel err {err}");

        let analytic = out.center_grad.unwrap().as_slice().to_vec();
        let mut values = centers_m.as_slice().to_vec();
        let err = check(&mut values, &analytic, |v| {
            let c = Centers::new(Matrix::new(m, d, v.to_vec()).unwrap()).unwrap();
            triplet_center_loss(&features, &labels, &c, 1.0, false).unwrap().loss
        });
        assert!(err < TOL, "seed {seed} centers: rel err {err}");
    }
    assert_eq!(checked, SEEDS);
}

#[test]
pub fn cross_entropy_head_matches_finite_differences() {
    for seed in 0..SEEDS as u64 {
        let mut rng = rng_from_seed(2000 + seed);
        let (n, d, m) = (8, 3, 4);
        let head = DenseLayer::new(gaussian(m, d, &mut rng), gaussian(1, m, &mut rng).into_vec(), Activation::Identity)
            .unwrap();
        let features = gaussian(n, d, &mut rng);
        let labels = instance_labels(n / m, m);
        let ce = |head: &DenseLayer, f: &Matrix| softmax_cross_entropy(&head.forward(f).unwrap(), &labels).unwrap().0;

        let logits = head.forward(&features).unwrap();
        let (_, d_logits) = softmax_cross_entropy(&logits, &labels).unwrap();
        let (g, d_features) = head.backward(&features, &logits, &d_logits).unwrap();

        let mut w = head.weight().as_slice().to_vec();
        let err = check(&mut w, g.weight.as_slice(), |v| {
            let h = DenseLayer::new(Matrix::new(m, d, v.to_vec()).unwrap(), head.bias().to_vec(), Activation::Identity)
                .unwrap();
            ce(&h, &features)
        });
        assert!(err < TOL, "seed {seed} head weight: rel err {err}");

        let mut b = head.bias().to_vec();
        let err = check(&mut b, &g.bias, |v| {
            let h = DenseLayer::new(head.weight().clone(), v.to_vec(), Activation::Identity).unwrap();
            ce(&h, &features)
        });
        assert!(err < TOL, "seed {seed} head bias: rel err {err}");

        let mut f = features.as_slice().to_vec();
        let err = check(&mut f, d_features.as_slice(), |v| ce(&head, &Matrix::new(n, d, v.to_vec()).unwrap()));
        assert!(err < TOL, "seed {seed} head input: rel err {err}");
    }
}

#[test]
pub fn full_objective_matches_finite_differences() {
    // N = 8 samples, M = 4 tasks, r = 3, d = 2
    let weights = LossWeights {
        margin: 1.0,
        ce_weight: 1.0,
        feat_l2_weight: 1e-3,
    };
    let mut checked = 0;
    for seed in 0..200u64 {
        if checked == SEEDS {
            break;
        }
        let mut rng = rng_from_seed(3000 + seed);
        let bank = sample_bank(seed, 4, 5, 3).unwrap();
        let x = gaussian(8, 5, &mut rng);
        let instances = bank.apply_all(&x).unwrap().into_instances();
        let labels = instance_labels(8, 4);
        let net = with_bias_noise(&FeatureNet::from_spec(3, &NetSpec::deep(vec![4], 2), &mut rng).unwrap(), &mut rng);
        let head = DenseLayer::he_normal(2, 4, Activation::Identity, &mut rng).unwrap();
        let centers_m = gaussian(4, 2, &mut rng);
        let centers = Centers::new(centers_m.clone()).unwrap();

        let features = net.forward(&instances).unwrap();
        if !away_from_kinks(&net, &instances, 1e-3)
            || triplet_kink_gap(&features, &labels, &centers, weights.margin) < 1e-3
        {
            continue;
        }
        checked += 1;
        let total = |net: &FeatureNet, head: &DenseLayer, c: &Centers| {
            batch_objective(net, Some(head), c, &instances, &labels, &weights, false)
                .unwrap()
                .0
                .total
        };
        let (_, grads) = batch_objective(&net, Some(&head), &centers, &instances, &labels, &weights, true).unwrap();

        let tensors: Vec<Vec<f64>> = grads.net.tensors().iter().map(|t| t.to_vec()).collect();
        for (k, analytic) in tensors.iter().enumerate() {
            let mut probe = net.clone();
            let mut values = probe.parameters()[k].to_vec();
            let err = check(&mut values, analytic, |v| {
                probe.parameters_mut()[k].copy_from_slice(v);
                total(&probe, &head, &centers)
            });
            assert!(err < TOL, "seed {seed} net tensor {k}: rel err {err}");
        }

        let hg = grads.head.expect("head gradient");
        let mut w = head.weight().as_slice().to_vec();
        let err = check(&mut w, hg.weight.as_slice(), |v| {
            let h = DenseLayer::new(Matrix::new(4, 2, v.to_vec()).unwrap(), head.bias().to_vec(), Activation::Identity)
                .unwrap();
            total(&net, &h, &centers)
        });
        assert!(err < TOL, "seed {seed} head weight: rel err {err}");
        let mut b = head.bias().to_vec();
        let err = check(&mut b, &hg.bias, |v| {
            let h = DenseLayer::new(head.weight().clone(), v.to_vec(), Activation::Identity).unwrap();
            total(&net, &h, &centers)
        });
        assert!(err < TOL, "seed {seed} head bias: rel err {err}");

        let cg = grads.centers.expect("center gradient");
        let mut c = centers_m.as_slice().to_vec();
        let err = check(&mut c, cg.as_slice(), |v| {
            total(&net, &head, &Centers::new(Matrix::new(4, 2, v.to_vec()).unwrap()).unwrap())
        });
        assert!(err < TOL, "seed {seed} centers: rel err {err}");
    }
    assert_eq!(checked, SEEDS);
}
