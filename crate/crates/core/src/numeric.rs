//! Numerically stable log-domain reductions.

use crate::error::{Error, Result};

/// `ln Σ exp(vᵢ)` with a max shift.
pub fn logsumexp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("logsumexp input"));
    }
    Ok(logsumexp_nonempty(values))
}

pub(crate) fn logsumexp_nonempty(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() || max == f64::INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

/// Replaces `row` with its log-softmax.
pub fn log_softmax_in_place(row: &mut [f64]) {
    if row.is_empty() {
        return;
    }
    let lse = logsumexp_nonempty(row);
    for v in row.iter_mut() {
        *v -= lse;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_zeros_give_ln_two() {
        let v = logsumexp(&[0.0, 0.0]).unwrap();
        assert!((v - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn shift_invariant_at_large_magnitude() {
        let v = logsumexp(&[1000.0, 1000.0]).unwrap();
        assert!((v - (1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
        let huge = logsumexp(&[1e300, 1e300]).unwrap();
        assert!(huge.is_finite());
    }

    #[test]
    fn matches_naive_sum_on_moderate_inputs() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let v: alloc::vec::Vec<f64> = (0..16).map(|_| rng.random_range(-5.0..5.0)).collect();
            let naive = libm::log(v.iter().map(|&x| libm::exp(x)).sum::<f64>());
            assert!((logsumexp(&v).unwrap() - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(logsumexp(&[]), Err(Error::Empty("logsumexp input")));
    }

    #[test]
    fn log_softmax_normalises() {
        let mut row = [1.0, -2.0, 0.5, 3.0];
        log_softmax_in_place(&mut row);
        let total: f64 = row.iter().map(|&v| libm::exp(v)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}
