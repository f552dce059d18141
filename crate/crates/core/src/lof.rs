//! Local Outlier Factor with exact brute-force neighbour search.
//!
//! Neighbourhoods contain exactly `k` points (ties in distance broken by
//! reference index). Reachability distances are floored at
//! [`REACH_FLOOR`] so duplicated points keep finite densities.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const REACH_FLOOR: f64 = 1e-12;
pub const DEFAULT_K: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct LofModel {
    k: usize,
    reference: Matrix,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}

/// The `k` nearest reference rows to `query` as `(distance, index)`, nearest
/// first, optionally skipping one reference index.
fn nearest(reference: &Matrix, query: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = (0..reference.rows())
        .filter(|&j| Some(j) != skip)
        .map(|j| (euclidean(query, reference.row(j)), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, cmp);
        all.truncate(k);
    }
    all.sort_by(cmp);
    all
}

impl LofModel {
    pub fn fit(train: &Matrix, k: usize) -> Result<Self> {
        let n = train.rows();
        if k == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        if k >= n {
            return Err(Error::TooFew {
                what: "reference points for k neighbours",
                needed: k + 1,
                available: n,
            });
        }
        let neighbours: Vec<Vec<(f64, usize)>> = (0..n)
            .map(|i| nearest(train, train.row(i), k, Some(i)))
            .collect();
        let k_distance: Vec<f64> = neighbours.iter().map(|nb| nb[k - 1].0).collect();
        let lrd = neighbours
            .iter()
            .map(|nb| local_reachability_density(nb, &k_distance))
            .collect();
        Ok(Self {
            k,
            reference: train.clone(),
            k_distance,
            lrd,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn reference(&self) -> &Matrix {
        &self.reference
    }

    pub fn k_distances(&self) -> &[f64] {
        &self.k_distance
    }

    /// Local reachability density of every reference point.
    pub fn densities(&self) -> &[f64] {
        &self.lrd
    }

    /// LOF of a query point against the reference set; ≈ 1 for inliers,
    /// larger for outliers.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.reference.cols() {
            return Err(Error::DimensionMismatch {
                context: "LOF query dimension",
                expected: self.reference.cols(),
                actual: x.len(),
            });
        }
        let nb = nearest(&self.reference, x, self.k, None);
        let lrd_x = local_reachability_density(&nb, &self.k_distance);
        let mean_lrd = nb.iter().map(|&(_, j)| self.lrd[j]).sum::<f64>() / nb.len() as f64;
        Ok(mean_lrd / lrd_x)
    }

    pub fn score_batch(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.iter_rows().map(|row| self.score(row)).collect()
    }
}

fn local_reachability_density(neighbours: &[(f64, usize)], k_distance: &[f64]) -> f64 {
    let mean_reach = neighbours
        .iter()
        .map(|&(d, j)| d.max(k_distance[j]).max(REACH_FLOOR))
        .sum::<f64>()
        / neighbours.len() as f64;
    1.0 / mean_reach
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_configurations_share_density() {
        // every point sees the other two at the same distance
        let h = libm::sqrt(3.0) / 2.0;
        let tri = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let d = LofModel::fit(&tri, 2).unwrap().densities().to_vec();
        assert!((d[0] - d[1]).abs() < 1e-12 && (d[1] - d[2]).abs() < 1e-12);

        let line = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let d = LofModel::fit(&line, 1).unwrap().densities().to_vec();
        assert!(d.iter().all(|&v| v == 1.0));
        // with k = 2 the end points have larger reach than the middle one
        let d2 = LofModel::fit(&line, 2).unwrap().densities().to_vec();
        assert_eq!(d2[0], d2[2]);
        assert!(d2[1] < d2[0]);
    }

    #[test]
    fn k_must_be_below_reference_count() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        assert!(LofModel::fit(&x, 3).is_err());
        assert!(LofModel::fit(&x, 0).is_err());
    }

    #[test]
    fn duplicates_stay_finite() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        let model = LofModel::fit(&x, 2).unwrap();
        assert!(model.densities().iter().all(|d| d.is_finite()));
        let s = model.score(&[1.0, 1.0]).unwrap();
        assert!(s.is_finite());
    }

    #[test]
    fn far_point_scores_high() {
        let rows: Vec<[f64; 2]> = (0..25)
            .map(|i| [(i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1])
            .collect();
        let model = LofModel::fit(&Matrix::from_rows(&rows).unwrap(), 5).unwrap();
        assert!(model.score(&[10.0, 10.0]).unwrap() > 2.0);
        assert!(model.score(&[0.3]).is_err());
    }
}
