//! The trained-model container. The byte layout is described in
//! `docs/model_format.md`; every field is little-endian.

use std::path::Path;

use goad_core::dataset::{Encoder, EncoderBlock, NormalizationStats};
use goad_core::{
    Activation, BankSpec, CenterMode, Centers, DenseLayer, FeatureNet, GoadModel, Matrix, NetSpec, ScoreMode,
    TaskBank, TrainConfig, TransformFamily,
};
use sha2::{Digest, Sha256};

use crate::bin_io::{Reader, Writer};
use crate::error::{GoadError, Result};
use crate::schema::SchemaFile;

pub const MODEL_MAGIC: &[u8; 8] = b"GOADMDL\0";
pub const MODEL_VERSION: u32 = 1;

/// Everything needed to score raw rows: detector, preprocessing and layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub model: GoadModel,
    pub normalization: NormalizationStats,
    pub encoder: Encoder,
    pub schema: SchemaFile,
}

type Decode<T> = std::result::Result<T, String>;

impl ModelFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let spec = self
            .model
            .bank()
            .spec()
            .ok_or_else(|| GoadError::Config("task bank has no generator spec and cannot be saved".into()))?;
        let mut w = Writer::new();
        w.bytes(MODEL_MAGIC);
        w.u32(MODEL_VERSION);
        write_config(&mut w, self.model.config());

        w.u64(spec.seed);
        w.usize(spec.tasks);
        w.usize(spec.input_dim);
        w.usize(spec.reduced_dim);
        w.u8(spec.family.id());
        w.f64(spec.family.scale());

        let layers = self.model.net().layers();
        w.u32(layers.len() as u32);
        for layer in layers {
            write_layer(&mut w, layer);
        }

        let c = self.model.centers().as_matrix();
        w.usize(c.rows());
        w.usize(c.cols());
        w.f64s(c.as_slice());

        match self.model.aux_head() {
            Some(head) => {
                w.u8(1);
                write_layer(&mut w, head);
            }
            None => w.u8(0),
        }

        w.usize(self.normalization.width());
        w.f64s(&self.normalization.mean);
        w.f64s(&self.normalization.scale);

        let blocks = self.encoder.blocks();
        w.u32(blocks.len() as u32);
        for b in blocks {
            match b {
                EncoderBlock::Continuous { name } => {
                    w.u8(0);
                    w.str(name);
                }
                EncoderBlock::Categorical { name, values } => {
                    w.u8(1);
                    w.str(name);
                    w.u32(values.len() as u32);
                    for v in values {
                        w.str(v);
                    }
                }
            }
        }

        w.str(&self.schema.to_toml());
        w.bytes(&self.schema.fingerprint()?);

        let digest: [u8; 32] = Sha256::digest(&w.buf).into();
        w.bytes(&digest);
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Decode<Self> {
        if bytes.len() < MODEL_MAGIC.len() + 4 + 32 {
            return Err("file too short".into());
        }
        let (body, checksum) = bytes.split_at(bytes.len() - 32);
        let mut r = Reader::new(body);
        if r.take(8)? != MODEL_MAGIC {
            return Err("bad magic".into());
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(format!("unsupported version {version}"));
        }
        if Sha256::digest(body).as_slice() != checksum {
            return Err("checksum mismatch".into());
        }
        let config = read_config(&mut r)?;

        let seed = r.u64()?;
        let tasks = r.usize()?;
        let input_dim = r.usize()?;
        let reduced_dim = r.usize()?;
        let family_id = r.u8()?;
        let scale = r.f64()?;
        let family = TransformFamily::from_id(family_id, scale).ok_or(format!("unknown transform family {family_id}"))?;
        let bank = TaskBank::generate(BankSpec {
            seed,
            tasks,
            input_dim,
            reduced_dim,
            family,
        })
        .map_err(|e| e.to_string())?;

        let n_layers = r.u32()?;
        let layers = (0..n_layers).map(|_| read_layer(&mut r)).collect::<Decode<Vec<_>>>()?;
        let net = FeatureNet::new(layers).map_err(|e| e.to_string())?;

        let rows = r.usize()?;
        let cols = r.usize()?;
        let data = r.f64s(rows.checked_mul(cols).ok_or("shape overflow")?)?;
        let centers = Matrix::new(rows, cols, data)
            .and_then(Centers::new)
            .map_err(|e| e.to_string())?;

        let head = match r.u8()? {
            0 => None,
            1 => Some(read_layer(&mut r)?),
            b => return Err(format!("bad head flag {b}")),
        };
        let model = GoadModel::new(bank, net, centers, config, head).map_err(|e| e.to_string())?;

        let width = r.usize()?;
        let normalization = NormalizationStats {
            mean: r.f64s(width)?,
            scale: r.f64s(width)?,
        };

        let n_blocks = r.u32()?;
        let mut blocks = Vec::with_capacity(n_blocks.min(1 << 16) as usize);
        for _ in 0..n_blocks {
            let kind = r.u8()?;
            let name = r.str()?;
            blocks.push(match kind {
                0 => EncoderBlock::Continuous { name },
                1 => {
                    let n = r.u32()?;
                    let values = (0..n).map(|_| r.str()).collect::<Decode<Vec<_>>>()?;
                    EncoderBlock::Categorical { name, values }
                }
                k => return Err(format!("bad encoder block kind {k}")),
            });
        }
        let encoder = Encoder::from_blocks(blocks);

        let schema: SchemaFile = toml::from_str(&r.str()?).map_err(|e| format!("embedded schema: {e}"))?;
        let fingerprint = r.take(32)?;
        if schema.fingerprint().map_err(|e| e.to_string())?.as_slice() != fingerprint {
            return Err("schema fingerprint does not match the embedded schema".into());
        }
        if r.remaining() != 0 {
            return Err(format!("{} unexpected bytes at offset {}", r.remaining(), r.position()));
        }

        if encoder.width() != input_dim || normalization.width() != input_dim {
            return Err(format!(
                "encoded width {} / normalisation width {} do not match the bank input {input_dim}",
                encoder.width(),
                normalization.width()
            ));
        }
        Ok(Self {
            model,
            normalization,
            encoder,
            schema,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| GoadError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| GoadError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|message| GoadError::Format {
            path: path.to_owned(),
            what: "model file",
            message,
        })
    }
}

fn write_config(w: &mut Writer, c: &TrainConfig) {
    w.f64(c.margin);
    w.f64(c.epsilon);
    w.usize(c.epochs);
    w.usize(c.batch_size);
    w.f64(c.learning_rate);
    w.f64(c.ce_weight);
    w.f64(c.feat_l2_weight);
    w.u8(match c.center_mode {
        CenterMode::RecomputedMeans => 0,
        CenterMode::LearnedFree => 1,
    });
    w.u8(match c.score_mode {
        ScoreMode::OpenSetDistance => 0,
        ScoreMode::ClosedSetSoftmax => 1,
    });
    w.u64(c.seed);
    w.u32(c.net.hidden.len() as u32);
    for &h in &c.net.hidden {
        w.usize(h);
    }
    w.usize(c.net.feature_dim);
    w.f64(c.net.leaky_slope);
}

fn read_config(r: &mut Reader) -> Decode<TrainConfig> {
    let margin = r.f64()?;
    let epsilon = r.f64()?;
    let epochs = r.usize()?;
    let batch_size = r.usize()?;
    let learning_rate = r.f64()?;
    let ce_weight = r.f64()?;
    let feat_l2_weight = r.f64()?;
    let center_mode = match r.u8()? {
        0 => CenterMode::RecomputedMeans,
        1 => CenterMode::LearnedFree,
        b => return Err(format!("bad center mode {b}")),
    };
    let score_mode = match r.u8()? {
        0 => ScoreMode::OpenSetDistance,
        1 => ScoreMode::ClosedSetSoftmax,
        b => return Err(format!("bad score mode {b}")),
    };
    let seed = r.u64()?;
    let n_hidden = r.u32()?;
    let hidden = (0..n_hidden).map(|_| r.usize()).collect::<Decode<Vec<_>>>()?;
    let feature_dim = r.usize()?;
    let leaky_slope = r.f64()?;
    Ok(TrainConfig {
        margin,
        epsilon,
        epochs,
        batch_size,
        learning_rate,
        ce_weight,
        feat_l2_weight,
        center_mode,
        score_mode,
        seed,
        net: NetSpec {
            hidden,
            feature_dim,
            leaky_slope,
        },
    })
}

fn write_layer(w: &mut Writer, layer: &DenseLayer) {
    w.usize(layer.output_dim());
    w.usize(layer.input_dim());
    match layer.activation() {
        Activation::Identity => {
            w.u8(0);
            w.f64(0.0);
        }
        Activation::LeakyRelu(slope) => {
            w.u8(1);
            w.f64(slope);
        }
    }
    w.f64s(layer.weight().as_slice());
    w.f64s(layer.bias());
}

fn read_layer(r: &mut Reader) -> Decode<DenseLayer> {
    let out = r.usize()?;
    let inp = r.usize()?;
    let act = match (r.u8()?, r.f64()?) {
        (0, _) => Activation::Identity,
        (1, slope) => Activation::leaky_relu(slope).map_err(|e| e.to_string())?,
        (b, _) => return Err(format!("bad activation {b}")),
    };
    let weight = Matrix::new(out, inp, r.f64s(out.checked_mul(inp).ok_or("shape overflow")?)?).map_err(|e| e.to_string())?;
    let bias = r.f64s(out)?;
    DenseLayer::new(weight, bias, act).map_err(|e| e.to_string())
}

impl ModelFile {
    /// Scores every row of a table laid out like the training file. Label
    /// values are read but ignored.
    pub fn score_table(&self, table: &goad_core::dataset::RawTable) -> Result<Vec<f64>> {
        let (x, unknown) = self.encoder.transform(table)?;
        if unknown > 0 {
            log::warn!("{unknown} categorical values unseen in training were encoded as all-zero blocks");
        }
        let x = self.normalization.apply(&x)?;
        Ok(goad_core::score_batch(&self.model, &x)?)
    }
}
