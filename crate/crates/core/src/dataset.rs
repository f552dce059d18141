//! Tabular encoding, labelling rules, train/test splitting and
//! standardisation.
//!
//! Parsing files is left to the caller: this module starts from a
//! [`RawTable`] of typed columns.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Label {
    Normal,
    Anomaly,
}

impl Label {
    pub fn is_anomaly(self) -> bool {
        self == Label::Anomaly
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ColumnKind {
    Continuous,
    Categorical,
    Label,
    /// Present in the file but dropped.
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TableSchema {
    columns: Vec<ColumnSpec>,
}

impl TableSchema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let labels = columns.iter().filter(|c| c.kind == ColumnKind::Label).count();
        if labels != 1 {
            return Err(Error::invalid(
                "schema",
                format!("exactly one label column required, found {labels}"),
            ));
        }
        let mut seen = BTreeMap::new();
        for c in &columns {
            if seen.insert(c.name.as_str(), ()).is_some() {
                return Err(Error::invalid("schema", format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .expect("validated on construction")
    }

    pub fn count(&self, kind: ColumnKind) -> usize {
        self.columns.iter().filter(|c| c.kind == kind).count()
    }

    /// Canonical text form, one `name:kind` per line; stable across runs.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for c in &self.columns {
            let kind = match c.kind {
                ColumnKind::Continuous => "continuous",
                ColumnKind::Categorical => "categorical",
                ColumnKind::Label => "label",
                ColumnKind::Ignore => "ignore",
            };
            s.push_str(&c.name);
            s.push(':');
            s.push_str(kind);
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawColumn {
    Numeric(Vec<f64>),
    Text(Vec<String>),
    Skipped,
}

/// Typed columns following a [`TableSchema`]: continuous columns are numeric,
/// categorical and label columns are text, ignored columns are skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    schema: TableSchema,
    columns: Vec<RawColumn>,
    rows: usize,
}

impl RawTable {
    pub fn new(schema: TableSchema, columns: Vec<RawColumn>) -> Result<Self> {
        if columns.len() != schema.columns().len() {
            return Err(Error::DimensionMismatch {
                context: "raw table column count",
                expected: schema.columns().len(),
                actual: columns.len(),
            });
        }
        let mut rows = None;
        for (spec, col) in schema.columns().iter().zip(&columns) {
            let len = match (spec.kind, col) {
                (ColumnKind::Continuous, RawColumn::Numeric(v)) => v.len(),
                (ColumnKind::Categorical | ColumnKind::Label, RawColumn::Text(v)) => v.len(),
                (ColumnKind::Ignore, RawColumn::Skipped) => continue,
                _ => {
                    return Err(Error::invalid(
                        "raw table",
                        format!("column `{}` has the wrong storage for its kind", spec.name),
                    ))
                }
            };
            match rows {
                None => rows = Some(len),
                Some(r) if r != len => {
                    return Err(Error::DimensionMismatch {
                        context: "raw table column length",
                        expected: r,
                        actual: len,
                    })
                }
                _ => {}
            }
        }
        Ok(Self {
            schema,
            columns,
            rows: rows.unwrap_or(0),
        })
    }

    pub fn schema(&self) -> &TableSchema {
        &self.schema
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, i: usize) -> &RawColumn {
        &self.columns[i]
    }

    pub fn labels(&self) -> &[String] {
        match &self.columns[self.schema.label_index()] {
            RawColumn::Text(v) => v,
            _ => unreachable!("label column stored as text"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum EncoderBlock {
    Continuous { name: String },
    /// Values in first-seen order.
    Categorical { name: String, values: Vec<String> },
}

/// Column layout of the encoded matrix: one column per continuous attribute
/// and a one-hot block per categorical attribute, in schema order.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Encoder {
    blocks: Vec<EncoderBlock>,
}

impl Encoder {
    pub fn fit(table: &RawTable) -> Self {
        let mut blocks = Vec::new();
        for (spec, col) in table.schema().columns().iter().zip(&table.columns) {
            match (spec.kind, col) {
                (ColumnKind::Continuous, _) => blocks.push(EncoderBlock::Continuous {
                    name: spec.name.clone(),
                }),
                (ColumnKind::Categorical, RawColumn::Text(values)) => {
                    let mut seen = BTreeMap::new();
                    let mut ordered = Vec::new();
                    for v in values {
                        if seen.insert(v.as_str(), ()).is_none() {
                            ordered.push(v.clone());
                        }
                    }
                    blocks.push(EncoderBlock::Categorical {
                        name: spec.name.clone(),
                        values: ordered,
                    });
                }
                _ => {}
            }
        }
        Self { blocks }
    }

    pub fn from_blocks(blocks: Vec<EncoderBlock>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[EncoderBlock] {
        &self.blocks
    }

    /// Encoded width `L`.
    pub fn width(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b {
                EncoderBlock::Continuous { .. } => 1,
                EncoderBlock::Categorical { values, .. } => values.len(),
            })
            .sum()
    }

    /// `name` for continuous columns, `name=value` for one-hot columns.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for b in &self.blocks {
            match b {
                EncoderBlock::Continuous { name } => names.push(name.clone()),
                EncoderBlock::Categorical { name, values } => {
                    names.extend(values.iter().map(|v| format!("{name}={v}")))
                }
            }
        }
        names
    }

    /// Which encoded columns are continuous (and therefore standardised).
    pub fn continuous_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.width());
        for b in &self.blocks {
            match b {
                EncoderBlock::Continuous { .. } => mask.push(true),
                EncoderBlock::Categorical { values, .. } => {
                    mask.extend(core::iter::repeat_n(false, values.len()))
                }
            }
        }
        mask
    }

    /// Encodes every row. Categorical values not seen by [`Encoder::fit`]
    /// produce an all-zero block; their count is returned alongside.
    pub fn transform(&self, table: &RawTable) -> Result<(Matrix, usize)> {
        let mut sources = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let name = match block {
                EncoderBlock::Continuous { name } | EncoderBlock::Categorical { name, .. } => name,
            };
            let idx = table
                .schema()
                .columns()
                .iter()
                .position(|c| &c.name == name)
                .ok_or_else(|| Error::invalid("encoder", format!("column `{name}` missing from table")))?;
            sources.push(idx);
        }
        let width = self.width();
        let mut x = Matrix::zeros(table.rows(), width);
        let mut unknown = 0;
        let mut offset = 0;
        for (block, &src) in self.blocks.iter().zip(&sources) {
            match (block, &table.columns[src]) {
                (EncoderBlock::Continuous { .. }, RawColumn::Numeric(v)) => {
                    for (i, &val) in v.iter().enumerate() {
                        x.set(i, offset, val);
                    }
                    offset += 1;
                }
                (EncoderBlock::Categorical { values, .. }, RawColumn::Text(v)) => {
                    let index: BTreeMap<&str, usize> =
                        values.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
                    for (i, val) in v.iter().enumerate() {
                        match index.get(val.as_str()) {
                            Some(&k) => x.set(i, offset + k, 1.0),
                            None => unknown += 1,
                        }
                    }
                    offset += values.len();
                }
                (b, _) => {
                    return Err(Error::invalid(
                        "encoder",
                        format!("column kind changed for {b:?}"),
                    ))
                }
            }
        }
        Ok((x, unknown))
    }
}

/// Encoded rows with ground-truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDataset {
    pub x: Matrix,
    pub y: Vec<Label>,
    pub feature_names: Vec<String>,
    pub continuous_mask: Vec<bool>,
}

impl EncodedDataset {
    pub fn new(x: Matrix, y: Vec<Label>, feature_names: Vec<String>, continuous_mask: Vec<bool>) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                context: "label count",
                expected: x.rows(),
                actual: y.len(),
            });
        }
        if feature_names.len() != x.cols() || continuous_mask.len() != x.cols() {
            return Err(Error::DimensionMismatch {
                context: "feature metadata width",
                expected: x.cols(),
                actual: feature_names.len().min(continuous_mask.len()),
            });
        }
        Ok(Self {
            x,
            y,
            feature_names,
            continuous_mask,
        })
    }

    pub fn anomaly_count(&self) -> usize {
        self.y.iter().filter(|l| l.is_anomaly()).count()
    }
}

/// Fits an encoder on `table`, applies `rule` and returns the labelled rows.
pub fn encode(table: &RawTable, rule: &LabelRule, seed: u64) -> Result<(EncodedDataset, Encoder)> {
    let encoder = Encoder::fit(table);
    let (x, _) = encoder.transform(table)?;
    let assignment = rule.apply(table.labels(), seed)?;
    let x = x.select_rows(&assignment.rows)?;
    let ds = EncodedDataset::new(
        x,
        assignment.labels,
        encoder.feature_names(),
        encoder.continuous_mask(),
    )?;
    Ok((ds, encoder))
}

/// Maps raw label values to normal/anomaly, possibly dropping rows.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "rule", rename_all = "snake_case"))]
pub enum LabelRule {
    /// Classes 3, 4, 5, 7, 8, 9, 14 and 15 are anomalous. A label column
    /// holding only 0/1 is read as an already binarised outlier flag.
    Arrhythmia,
    /// Class 1 (`hyperfunction`) is anomalous.
    Thyroid,
    /// The non-attack (`normal.`) class is the anomaly.
    #[cfg_attr(feature = "serde", serde(rename = "kddcup99", alias = "kdd"))]
    KddCup99,
    /// Attacks are anomalous and subsampled to a quarter of the non-attack
    /// count.
    #[cfg_attr(feature = "serde", serde(rename = "kddrev"))]
    KddRev,
    /// Rows whose label equals one of `anomalous` (text or numeric match).
    Custom { anomalous: Vec<String> },
}

pub const ARRHYTHMIA_ANOMALY_CLASSES: [i64; 8] = [3, 4, 5, 7, 8, 9, 14, 15];
pub const KDDREV_ATTACK_RATIO: f64 = 0.25;

/// Rule for one of the named benchmark datasets.
pub fn label_rules(dataset: &str) -> Result<LabelRule> {
    match dataset.to_ascii_lowercase().as_str() {
        "arrhythmia" => Ok(LabelRule::Arrhythmia),
        "thyroid" => Ok(LabelRule::Thyroid),
        "kdd" | "kddcup99" => Ok(LabelRule::KddCup99),
        "kddrev" | "kddcup99-rev" | "kdd-rev" => Ok(LabelRule::KddRev),
        other => Err(Error::LabelRule(format!(
            "unknown dataset `{other}`; use arrhythmia, thyroid, kdd, kddrev or a custom rule"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelAssignment {
    /// Kept source rows, ascending.
    pub rows: Vec<usize>,
    pub labels: Vec<Label>,
}

fn as_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

fn is_kdd_normal(s: &str) -> bool {
    s.trim().trim_end_matches('.').eq_ignore_ascii_case("normal")
}

impl LabelRule {
    fn is_anomalous(&self, raw: &str) -> Result<bool> {
        Ok(match self {
            LabelRule::Arrhythmia => {
                let v = as_number(raw)
                    .ok_or_else(|| Error::LabelRule(format!("non-numeric arrhythmia class `{raw}`")))?;
                ARRHYTHMIA_ANOMALY_CLASSES.iter().any(|&c| c as f64 == v)
            }
            LabelRule::Thyroid => {
                raw.trim().eq_ignore_ascii_case("hyperfunction") || as_number(raw) == Some(1.0)
            }
            LabelRule::KddCup99 => is_kdd_normal(raw),
            LabelRule::KddRev => !is_kdd_normal(raw),
            LabelRule::Custom { anomalous } => anomalous.iter().any(|a| {
                a.trim() == raw.trim()
                    || matches!((as_number(a), as_number(raw)), (Some(x), Some(y)) if x == y)
            }),
        })
    }

    /// Labels every row; `seed` drives the KDDRev attack subsample.
    pub fn apply(&self, raw_labels: &[String], seed: u64) -> Result<LabelAssignment> {
        let binary = *self == LabelRule::Arrhythmia
            && raw_labels
                .iter()
                .all(|r| matches!(as_number(r), Some(v) if v == 0.0 || v == 1.0));
        let flags: Vec<bool> = if binary {
            raw_labels.iter().map(|r| as_number(r) == Some(1.0)).collect()
        } else {
            raw_labels
                .iter()
                .map(|r| self.is_anomalous(r))
                .collect::<Result<_>>()?
        };
        let mut rows: Vec<usize> = (0..flags.len()).collect();
        if *self == LabelRule::KddRev {
            let normal = flags.iter().filter(|&&a| !a).count();
            let mut attacks: Vec<usize> = (0..flags.len()).filter(|&i| flags[i]).collect();
            let keep = kddrev_attack_count(normal).min(attacks.len());
            attacks.shuffle(&mut rng_from_seed(seed));
            attacks.truncate(keep);
            rows = (0..flags.len()).filter(|&i| !flags[i]).collect();
            rows.extend(attacks);
            rows.sort_unstable();
        }
        let labels = rows
            .iter()
            .map(|&i| if flags[i] { Label::Anomaly } else { Label::Normal })
            .collect();
        Ok(LabelAssignment { rows, labels })
    }
}

/// `round(0.25 × #non-attack)`.
pub fn kddrev_attack_count(non_attack: usize) -> usize {
    libm::round(KDDREV_ATTACK_RATIO * non_attack as f64) as usize
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SplitSpec {
    pub train_fraction_of_normals: f64,
    pub seed: u64,
    /// Fraction of training rows that are (unlabelled) anomalies.
    pub contamination_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction_of_normals: 0.5,
            seed: 0,
            contamination_fraction: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataSplit {
    pub train: Matrix,
    /// Ground truth of the training rows (the detector never sees it).
    pub train_labels: Vec<Label>,
    pub test: Matrix,
    pub test_labels: Vec<Label>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl DataSplit {
    pub fn test_truth(&self) -> Vec<bool> {
        self.test_labels.iter().map(|l| l.is_anomaly()).collect()
    }
}

/// Number of anomalies to mix into `train_normals` training rows so that they
/// make up `fraction` of the training set.
pub fn contamination_count(train_normals: usize, fraction: f64) -> usize {
    if fraction <= 0.0 {
        return 0;
    }
    libm::round(fraction * train_normals as f64 / (1.0 - fraction)) as usize
}

/// Shuffles normals with `spec.seed`; the first part trains, the rest plus
/// all (remaining) anomalies test.
pub fn split(dataset: &EncodedDataset, spec: &SplitSpec) -> Result<DataSplit> {
    let frac = spec.train_fraction_of_normals;
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::invalid("train_fraction_of_normals", "must lie in [0, 1]"));
    }
    if !(0.0..1.0).contains(&spec.contamination_fraction) {
        return Err(Error::invalid("contamination_fraction", "must lie in [0, 1)"));
    }
    let mut normals: Vec<usize> = (0..dataset.y.len()).filter(|&i| !dataset.y[i].is_anomaly()).collect();
    let mut anomalies: Vec<usize> = (0..dataset.y.len()).filter(|&i| dataset.y[i].is_anomaly()).collect();
    if normals.len() < 2 {
        return Err(Error::TooFew {
            what: "normal rows",
            needed: 2,
            available: normals.len(),
        });
    }
    let mut rng = rng_from_seed(spec.seed);
    normals.shuffle(&mut rng);
    let n_train = (frac * normals.len() as f64) as usize;
    if n_train == 0 {
        return Err(Error::TooFew {
            what: "training rows",
            needed: 1,
            available: 0,
        });
    }

    let n_contam = contamination_count(n_train, spec.contamination_fraction);
    if n_contam > 0 {
        if n_contam >= anomalies.len() {
            return Err(Error::TooFew {
                what: "anomalies for contamination (one must remain for testing)",
                needed: n_contam + 1,
                available: anomalies.len(),
            });
        }
        anomalies.shuffle(&mut rng);
    }

    let mut train_rows: Vec<usize> = normals[..n_train].to_vec();
    train_rows.extend_from_slice(&anomalies[..n_contam]);
    let mut test_rows: Vec<usize> = normals[n_train..].to_vec();
    test_rows.extend_from_slice(&anomalies[n_contam..]);

    Ok(DataSplit {
        train: dataset.x.select_rows(&train_rows)?,
        train_labels: train_rows.iter().map(|&i| dataset.y[i]).collect(),
        test: dataset.x.select_rows(&test_rows)?,
        test_labels: test_rows.iter().map(|&i| dataset.y[i]).collect(),
        train_rows,
        test_rows,
    })
}

/// How continuous columns are normalised with training statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Standardization {
    /// `(x − mean) / std`.
    #[default]
    ZScore,
    /// `x / std`. With a linear extractor, z-scored training data has mean
    /// zero, which makes every center identical; keeping the mean avoids it.
    ScaleOnly,
    Off,
}

/// Per-column affine normalisation `(x − mean) / scale`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl NormalizationStats {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            scale: vec![1.0; width],
        }
    }

    /// Z-scores the columns selected by `mask` using statistics of `train`.
    /// Constant columns are only centred.
    pub fn fit(train: &Matrix, mask: &[bool]) -> Result<Self> {
        Self::fit_with(train, mask, Standardization::ZScore)
    }

    pub fn fit_with(train: &Matrix, mask: &[bool], mode: Standardization) -> Result<Self> {
        if mask.len() != train.cols() {
            return Err(Error::DimensionMismatch {
                context: "normalisation mask",
                expected: train.cols(),
                actual: mask.len(),
            });
        }
        let mut stats = Self::identity(train.cols());
        if train.rows() == 0 || mode == Standardization::Off {
            return Ok(stats);
        }
        let n = train.rows() as f64;
        for (j, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            let first = train.get(0, j);
            if train.iter_rows().all(|r| r[j] == first) {
                if mode == Standardization::ZScore {
                    stats.mean[j] = first;
                }
                continue;
            }
            let mean = train.iter_rows().map(|r| r[j]).sum::<f64>() / n;
            let var = train.iter_rows().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / n;
            let std = libm::sqrt(var);
            if mode == Standardization::ZScore {
                stats.mean[j] = mean;
            }
            stats.scale[j] = if std > 1e-12 { std } else { 1.0 };
        }
        Ok(stats)
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.width() {
            return Err(Error::DimensionMismatch {
                context: "normalisation width",
                expected: self.width(),
                actual: x.cols(),
            });
        }
        Ok(())
    }
}

/// Fits statistics on `train` and applies them to both matrices.
pub fn standardize(train: &Matrix, test: &Matrix, mask: &[bool]) -> Result<(Matrix, Matrix, NormalizationStats)> {
    standardize_with(train, test, mask, Standardization::ZScore)
}

pub fn standardize_with(
    train: &Matrix,
    test: &Matrix,
    mask: &[bool],
    mode: Standardization,
) -> Result<(Matrix, Matrix, NormalizationStats)> {
    let stats = NormalizationStats::fit_with(train, mask, mode)?;
    Ok((stats.apply(train)?, stats.apply(test)?, stats))
}

impl core::fmt::Display for Label {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Anomaly => "anomaly",
        })
    }
}

impl core::str::FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" | "numeric" => Ok(ColumnKind::Continuous),
            "categorical" => Ok(ColumnKind::Categorical),
            "label" => Ok(ColumnKind::Label),
            "ignore" | "skip" => Ok(ColumnKind::Ignore),
            other => Err(Error::invalid("column kind", other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_table() -> RawTable {
        let schema = TableSchema::new(vec![
            ColumnSpec::new("color", ColumnKind::Categorical),
            ColumnSpec::new("size", ColumnKind::Continuous),
            ColumnSpec::new("note", ColumnKind::Ignore),
            ColumnSpec::new("class", ColumnKind::Label),
        ])
        .unwrap();
        RawTable::new(
            schema,
            vec![
                RawColumn::Text(vec!["a".into(), "b".into(), "a".into()]),
                RawColumn::Numeric(vec![1.0, 2.0, 3.0]),
                RawColumn::Skipped,
                RawColumn::Text(vec!["0".into(), "1".into(), "0".into()]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn toy_table_encodes_to_three_columns() {
        let table = toy_table();
        let (ds, enc) = encode(&table, &LabelRule::Custom { anomalous: vec!["1".into()] }, 0).unwrap();
        assert_eq!(ds.x.shape(), (3, 3));
        assert_eq!(enc.feature_names(), vec!["color=a", "color=b", "size"]);
        assert_eq!(ds.x.row(1), &[0.0, 1.0, 2.0]);
        assert_eq!(ds.y, vec![Label::Normal, Label::Anomaly, Label::Normal]);
        assert_eq!(ds.continuous_mask, vec![false, false, true]);
    }

    #[test]
    fn one_hot_block_and_unknown_values() {
        let enc = Encoder::from_blocks(vec![EncoderBlock::Categorical {
            name: "c".into(),
            values: vec!["a".into(), "b".into(), "c".into()],
        }]);
        let schema = TableSchema::new(vec![
            ColumnSpec::new("c", ColumnKind::Categorical),
            ColumnSpec::new("y", ColumnKind::Label),
        ])
        .unwrap();
        let table = RawTable::new(
            schema,
            vec![
                RawColumn::Text(vec!["b".into(), "zzz".into()]),
                RawColumn::Text(vec!["0".into(), "0".into()]),
            ],
        )
        .unwrap();
        let (x, unknown) = enc.transform(&table).unwrap();
        assert_eq!(x.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(x.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(unknown, 1);
    }

    #[test]
    fn schema_requires_one_label() {
        assert!(TableSchema::new(vec![ColumnSpec::new("a", ColumnKind::Continuous)]).is_err());
        assert!(TableSchema::new(vec![
            ColumnSpec::new("a", ColumnKind::Label),
            ColumnSpec::new("a", ColumnKind::Continuous)
        ])
        .is_err());
    }

    #[test]
    fn benchmark_label_rules() {
        let arr: Vec<String> = ["1", "3", "6", "15", "16", "14"].iter().map(|s| s.to_string()).collect();
        let a = LabelRule::Arrhythmia.apply(&arr, 0).unwrap();
        assert_eq!(
            a.labels.iter().map(|l| l.is_anomaly()).collect::<Vec<_>>(),
            vec![false, true, false, true, false, true]
        );
        let odds: Vec<String> = ["0", "1", "0"].iter().map(|s| s.to_string()).collect();
        let o = LabelRule::Arrhythmia.apply(&odds, 0).unwrap();
        assert_eq!(o.labels, vec![Label::Normal, Label::Anomaly, Label::Normal]);
        let thy: Vec<String> = ["1", "2", "3", "hyperfunction"].iter().map(|s| s.to_string()).collect();
        let t = LabelRule::Thyroid.apply(&thy, 0).unwrap();
        assert_eq!(
            t.labels.iter().map(|l| l.is_anomaly()).collect::<Vec<_>>(),
            vec![true, false, false, true]
        );
        let kdd: Vec<String> = ["normal.", "smurf.", "neptune."].iter().map(|s| s.to_string()).collect();
        let k = LabelRule::KddCup99.apply(&kdd, 0).unwrap();
        assert_eq!(k.labels, vec![Label::Anomaly, Label::Normal, Label::Normal]);
        assert!(label_rules("cifar").is_err());
        assert_eq!(label_rules("KDDRev").unwrap(), LabelRule::KddRev);
    }

    #[test]
    fn kddrev_keeps_a_quarter_as_many_attacks() {
        let mut raw = vec![String::from("normal."); 10];
        raw.extend(core::iter::repeat_n(String::from("smurf."), 20));
        let r = LabelRule::KddRev.apply(&raw, 3).unwrap();
        assert_eq!(r.labels.iter().filter(|l| !l.is_anomaly()).count(), 10);
        // round(0.25 × 10) = 3 (round half away from zero of 2.5)
        assert_eq!(r.labels.iter().filter(|l| l.is_anomaly()).count(), 3);
        assert!(r.rows.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(r, LabelRule::KddRev.apply(&raw, 3).unwrap());
    }

    fn labelled(normals: usize, anomalies: usize) -> EncodedDataset {
        let n = normals + anomalies;
        let x = Matrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let mut y = vec![Label::Normal; normals];
        y.extend(core::iter::repeat_n(Label::Anomaly, anomalies));
        EncodedDataset::new(x, y, vec!["v".into()], vec![true]).unwrap()
    }

    #[test]
    fn half_of_normals_train() {
        let ds = labelled(10, 4);
        let s = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(s.train.rows(), 5);
        assert_eq!(s.test.rows(), 9);
        assert_eq!(s.test_labels.iter().filter(|l| l.is_anomaly()).count(), 4);
        assert!(s.train_labels.iter().all(|l| !l.is_anomaly()));
        assert!(s.train_rows.iter().all(|r| !s.test_rows.contains(r)));
    }

    #[test]
    fn contamination_moves_anomalies_into_train() {
        let ds = labelled(200, 50);
        let spec = SplitSpec {
            contamination_fraction: 0.1,
            ..SplitSpec::default()
        };
        let s = split(&ds, &spec).unwrap();
        let contam = s.train_labels.iter().filter(|l| l.is_anomaly()).count();
        // 100 normals train → round(0.1·100/0.9) = 11 anomalies
        assert_eq!(contam, 11);
        assert_eq!(s.test_labels.iter().filter(|l| l.is_anomaly()).count(), 39);
        assert!(s.train_rows.iter().all(|r| !s.test_rows.contains(r)));
        let too_much = SplitSpec {
            contamination_fraction: 0.5,
            ..SplitSpec::default()
        };
        assert!(split(&labelled(200, 20), &too_much).is_err());
    }

    #[test]
    fn too_few_normals() {
        assert!(matches!(split(&labelled(1, 3), &SplitSpec::default()), Err(Error::TooFew { .. })));
    }

    #[test]
    fn standardisation_uses_train_statistics() {
        let train = Matrix::from_rows(&[[1.0, 5.0, 0.3], [3.0, 5.0, 0.7]]).unwrap();
        let test = Matrix::from_rows(&[[2.0, 6.0, 1.0]]).unwrap();
        let (tr, te, stats) = standardize(&train, &test, &[true, true, false]).unwrap();
        assert_eq!(tr.row(0), &[-1.0, 0.0, 0.3]);
        assert_eq!(te.row(0), &[0.0, 1.0, 1.0]);
        assert_eq!(stats.scale, vec![1.0, 1.0, 1.0]);
        assert_eq!(stats.mean, vec![2.0, 5.0, 0.0]);

        let (tr, _, _) = standardize_with(&train, &test, &[true, true, false], Standardization::ScaleOnly).unwrap();
        assert_eq!(tr.row(1), &[3.0, 5.0, 0.7]);
        let (tr, _, _) = standardize_with(&train, &test, &[true, true, true], Standardization::Off).unwrap();
        assert_eq!(tr, train);
    }
}
