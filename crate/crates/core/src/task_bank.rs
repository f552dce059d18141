//! The bank of `M` random affine maps `x ↦ W_m x + b_m` from `R^L` to `R^r`.
//!
//! A bank is fully determined by its [`BankSpec`]; matrices are regenerated
//! from the seed rather than stored, and regeneration is bit-exact.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{rng_from_seed, SeededRng};

/// How the matrices `W_m` are drawn. Biases are always zero for generated banks.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum TransformFamily {
    /// I.i.d. `N(0, scale²)` entries.
    Affine { scale: f64 },
    /// I.i.d. `N(0, 1/L)` entries, so `‖W_m x‖²` is about `r·‖x‖²/L`
    /// whatever the input width.
    AffineNormalized,
    /// Orthonormal rows (or columns when `r > L`) from Gram–Schmidt on a
    /// Gaussian matrix.
    Rotation,
    /// Coordinate permutations; requires `r == L`.
    Permutation,
}

impl Default for TransformFamily {
    fn default() -> Self {
        TransformFamily::Affine { scale: 1.0 }
    }
}

impl TransformFamily {
    /// Stable identifier used by the model file format.
    pub fn id(&self) -> u8 {
        match self {
            TransformFamily::Affine { .. } => 0,
            TransformFamily::Rotation => 1,
            TransformFamily::Permutation => 2,
            TransformFamily::AffineNormalized => 3,
        }
    }

    pub fn from_id(id: u8, scale: f64) -> Option<Self> {
        match id {
            0 => Some(TransformFamily::Affine { scale }),
            1 => Some(TransformFamily::Rotation),
            2 => Some(TransformFamily::Permutation),
            3 => Some(TransformFamily::AffineNormalized),
            _ => None,
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            TransformFamily::Affine { scale } => *scale,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BankSpec {
    pub seed: u64,
    pub tasks: usize,
    pub input_dim: usize,
    pub reduced_dim: usize,
    pub family: TransformFamily,
}

impl BankSpec {
    pub fn affine(seed: u64, tasks: usize, input_dim: usize, reduced_dim: usize) -> Self {
        Self {
            seed,
            tasks,
            input_dim,
            reduced_dim,
            family: TransformFamily::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskBank {
    spec: Option<BankSpec>,
    tasks: usize,
    input_dim: usize,
    reduced_dim: usize,
    /// All `W_m` stacked: row `m·r + j` is row `j` of `W_m`.
    weights: Matrix,
    /// Row `m` is `b_m`.
    biases: Matrix,
}

/// Generates an affine bank with standard normal entries and zero biases.
pub fn sample_bank(seed: u64, tasks: usize, input_dim: usize, reduced_dim: usize) -> Result<TaskBank> {
    TaskBank::generate(BankSpec::affine(seed, tasks, input_dim, reduced_dim))
}

impl TaskBank {
    pub fn generate(spec: BankSpec) -> Result<Self> {
        let BankSpec {
            seed,
            tasks,
            input_dim,
            reduced_dim,
            family,
        } = spec;
        if tasks < 2 {
            return Err(Error::TooFew {
                what: "transformations",
                needed: 2,
                available: tasks,
            });
        }
        if input_dim == 0 || reduced_dim == 0 {
            return Err(Error::invalid("bank dims", "L and r must be positive"));
        }
        let mut rng = rng_from_seed(seed);
        let mut weights = Vec::with_capacity(tasks * reduced_dim * input_dim);
        for _ in 0..tasks {
            let block = match family {
                TransformFamily::Affine { scale } => {
                    if !(scale.is_finite() && scale > 0.0) {
                        return Err(Error::invalid("scale", "must be positive and finite"));
                    }
                    gaussian(&mut rng, reduced_dim * input_dim, scale)
                }
                TransformFamily::AffineNormalized => {
                    gaussian(&mut rng, reduced_dim * input_dim, 1.0 / libm::sqrt(input_dim as f64))
                }
                TransformFamily::Rotation => orthonormal_block(&mut rng, reduced_dim, input_dim),
                TransformFamily::Permutation => {
                    if reduced_dim != input_dim {
                        return Err(Error::DimensionMismatch {
                            context: "permutation bank requires r == L",
                            expected: input_dim,
                            actual: reduced_dim,
                        });
                    }
                    permutation_block(&mut rng, input_dim)
                }
            };
            weights.extend_from_slice(&block);
        }
        Ok(Self {
            spec: Some(spec),
            tasks,
            input_dim,
            reduced_dim,
            weights: Matrix::new(tasks * reduced_dim, input_dim, weights)?,
            biases: Matrix::zeros(tasks, reduced_dim),
        })
    }

    /// A bank from explicit matrices. Such a bank has no spec and cannot be
    /// regenerated from a seed.
    pub fn from_parts(weights: &[Matrix], biases: &[Vec<f64>]) -> Result<Self> {
        let tasks = weights.len();
        if tasks < 2 {
            return Err(Error::TooFew {
                what: "transformations",
                needed: 2,
                available: tasks,
            });
        }
        if biases.len() != tasks {
            return Err(Error::DimensionMismatch {
                context: "bank bias count",
                expected: tasks,
                actual: biases.len(),
            });
        }
        let (r, l) = weights[0].shape();
        let mut w = Vec::with_capacity(tasks * r * l);
        let mut b = Vec::with_capacity(tasks * r);
        for (wm, bm) in weights.iter().zip(biases) {
            if wm.shape() != (r, l) {
                return Err(Error::ShapeMismatch {
                    context: "bank matrix",
                    expected_rows: r,
                    expected_cols: l,
                    actual_rows: wm.rows(),
                    actual_cols: wm.cols(),
                });
            }
            if bm.len() != r {
                return Err(Error::DimensionMismatch {
                    context: "bank bias length",
                    expected: r,
                    actual: bm.len(),
                });
            }
            w.extend_from_slice(wm.as_slice());
            b.extend_from_slice(bm);
        }
        Ok(Self {
            spec: None,
            tasks,
            input_dim: l,
            reduced_dim: r,
            weights: Matrix::new(tasks * r, l, w)?,
            biases: Matrix::new(tasks, r, b)?,
        })
    }

    pub fn spec(&self) -> Option<&BankSpec> {
        self.spec.as_ref()
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn reduced_dim(&self) -> usize {
        self.reduced_dim
    }

    /// Row-major `r×L` entries of `W_m`.
    pub fn weight(&self, m: usize) -> Result<&[f64]> {
        self.check_task(m)?;
        let block = self.reduced_dim * self.input_dim;
        Ok(&self.weights.as_slice()[m * block..(m + 1) * block])
    }

    pub fn bias(&self, m: usize) -> Result<&[f64]> {
        self.check_task(m)?;
        Ok(self.biases.row(m))
    }

    fn check_task(&self, m: usize) -> Result<()> {
        if m >= self.tasks {
            return Err(Error::IndexOutOfRange {
                what: "transformation",
                index: m,
                len: self.tasks,
            });
        }
        Ok(())
    }

    /// `W_m x + b_m`
    pub fn apply(&self, m: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_task(m)?;
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "transformation input",
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        let w = Matrix::new(self.reduced_dim, self.input_dim, self.weight(m)?.to_vec())?;
        let xm = Matrix::new(1, self.input_dim, x.to_vec())?;
        let mut out = xm.matmul_t(&w)?.into_vec();
        for (o, b) in out.iter_mut().zip(self.biases.row(m)) {
            *o += b;
        }
        Ok(out)
    }

    /// Every row of `x` under every transformation.
    pub fn apply_all(&self, x: &Matrix) -> Result<TransformedBatch> {
        if x.cols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "transformation input",
                expected: self.input_dim,
                actual: x.cols(),
            });
        }
        let mut out = x.matmul_t(&self.weights)?;
        let bias = self.biases.as_slice();
        if bias.iter().any(|&b| b != 0.0) {
            for i in 0..out.rows() {
                for (o, b) in out.row_mut(i).iter_mut().zip(bias) {
                    *o += b;
                }
            }
        }
        Ok(TransformedBatch {
            samples: x.rows(),
            tasks: self.tasks,
            reduced_dim: self.reduced_dim,
            data: out,
        })
    }

    /// A bank whose tasks are reordered: task `k` of the result is task
    /// `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.tasks {
            return Err(Error::DimensionMismatch {
                context: "task permutation length",
                expected: self.tasks,
                actual: order.len(),
            });
        }
        let mut weights = Vec::with_capacity(self.tasks);
        let mut biases = Vec::with_capacity(self.tasks);
        for &m in order {
            weights.push(Matrix::new(
                self.reduced_dim,
                self.input_dim,
                self.weight(m)?.to_vec(),
            )?);
            biases.push(self.bias(m)?.to_vec());
        }
        Self::from_parts(&weights, &biases)
    }
}

/// Result of [`TaskBank::apply_all`]: an `N×M×r` tensor stored row-major,
/// i.e. the transformed instance `(i, m)` is row `i·M + m` of
/// [`TransformedBatch::instances`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedBatch {
    samples: usize,
    tasks: usize,
    reduced_dim: usize,
    data: Matrix,
}

impl TransformedBatch {
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn reduced_dim(&self) -> usize {
        self.reduced_dim
    }

    pub fn get(&self, i: usize, m: usize) -> &[f64] {
        let start = (i * self.tasks + m) * self.reduced_dim;
        &self.data.as_slice()[start..start + self.reduced_dim]
    }

    /// Flattens to an `(N·M)×r` matrix of transformed instances.
    pub fn into_instances(self) -> Matrix {
        let rows = self.samples * self.tasks;
        self.data
            .reshape(rows, self.reduced_dim)
            .expect("N×(M·r) buffer reshapes to (N·M)×r")
    }
}

fn gaussian(rng: &mut SeededRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

/// `k×n` with orthonormal rows, `k ≤ n`.
fn orthonormal_rows(rng: &mut SeededRng, k: usize, n: usize) -> Vec<f64> {
    loop {
        let mut q = gaussian(rng, k * n, 1.0);
        let mut ok = true;
        for i in 0..k {
            for j in 0..i {
                let (head, tail) = q.split_at_mut(i * n);
                let prev = &head[j * n..(j + 1) * n];
                let row = &mut tail[..n];
                let dot: f64 = prev.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
                for (r, p) in row.iter_mut().zip(prev) {
                    *r -= dot * p;
                }
            }
            let row = &mut q[i * n..(i + 1) * n];
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            if norm < 1e-10 {
                ok = false;
                break;
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        if ok {
            return q;
        }
    }
}

fn orthonormal_block(rng: &mut SeededRng, r: usize, l: usize) -> Vec<f64> {
    if r <= l {
        orthonormal_rows(rng, r, l)
    } else {
        // orthonormal columns: transpose of an L×r block with orthonormal rows
        let q = orthonormal_rows(rng, l, r);
        let mut out = vec![0.0; r * l];
        for i in 0..l {
            for j in 0..r {
                out[j * l + i] = q[i * r + j];
            }
        }
        out
    }
}

fn permutation_block(rng: &mut SeededRng, l: usize) -> Vec<f64> {
    let mut perm: Vec<usize> = (0..l).collect();
    perm.shuffle(rng);
    let mut out = vec![0.0; l * l];
    for (row, &col) in perm.iter().enumerate() {
        out[row * l + col] = 1.0;
    }
    out
}
