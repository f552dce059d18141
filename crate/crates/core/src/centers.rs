use alloc::vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::FeatureNet;
use crate::task_bank::TaskBank;

/// One feature-space center per transformation, stored as an `M×d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Centers(Matrix);

/// Rows pushed through the network at once when averaging features.
const CENTER_CHUNK_INSTANCES: usize = 16_384;

impl Centers {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::Empty("centers"));
        }
        if !matrix.is_finite() {
            return Err(Error::invalid("centers", "entries must be finite"));
        }
        Ok(Self(matrix))
    }

    pub fn count(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn get(&self, m: usize) -> &[f64] {
        self.0.row(m)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        self.0.as_mut_slice()
    }
}

/// `c_m = (1/N) Σᵢ f(T(xᵢ, m))` over all rows of `x`.
pub fn compute_centers(net: &FeatureNet, bank: &TaskBank, x: &Matrix) -> Result<Centers> {
    if x.rows() == 0 {
        return Err(Error::Empty("training set"));
    }
    if bank.reduced_dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "bank reduced dim vs net input",
            expected: net.input_dim(),
            actual: bank.reduced_dim(),
        });
    }
    let tasks = bank.tasks();
    let d = net.output_dim();
    let mut sums = vec![0.0; tasks * d];
    let rows_per_chunk = (CENTER_CHUNK_INSTANCES / tasks).max(1);
    let indices: alloc::vec::Vec<usize> = (0..x.rows()).collect();
    for chunk in indices.chunks(rows_per_chunk) {
        let xb = x.select_rows(chunk)?;
        let feats = net.forward(&bank.apply_all(&xb)?.into_instances())?;
        for (k, f) in feats.iter_rows().enumerate() {
            let m = k % tasks;
            for (s, v) in sums[m * d..(m + 1) * d].iter_mut().zip(f) {
                *s += v;
            }
        }
    }
    let n = x.rows() as f64;
    sums.iter_mut().for_each(|s| *s /= n);
    Centers::new(Matrix::new(tasks, d, sums)?)
}
