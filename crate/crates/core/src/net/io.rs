//! Versioned JSON model files and line-delimited training logs.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Dims, EpochRecord, ModelKind, ModelParams, TrainedModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "metaeng-pair-classifier";
pub const MODEL_VERSION: u32 = 1;

/// Identifies the embedding file a model was trained against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tensor {
    rows: usize,
    cols: usize,
    /// Row-major.
    data: Vec<f64>,
}

impl Tensor {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            data.extend(m.row(r).iter());
        }
        Tensor {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    fn from_vector(v: &DVector<f64>) -> Self {
        Tensor {
            rows: v.len(),
            cols: 1,
            data: v.as_slice().to_vec(),
        }
    }

    fn to_matrix(&self, name: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        self.check(name, rows, cols)?;
        Ok(DMatrix::from_row_slice(rows, cols, &self.data))
    }

    fn to_vector(&self, name: &str, len: usize) -> Result<DVector<f64>> {
        self.check(name, len, 1)?;
        Ok(DVector::from_column_slice(&self.data))
    }

    fn check(&self, name: &str, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols || self.data.len() != rows * cols {
            return Err(Error::InvalidConfig(format!(
                "tensor {name} has shape {}x{} ({} values), expected {rows}x{cols}",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("tensor {name} has non-finite entries")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tensors {
    gate_weight: Tensor,
    gate_bias: Tensor,
    first_weight: Tensor,
    first_bias: Tensor,
    second_weight: Tensor,
    second_bias: Tensor,
    hidden_weight: Tensor,
    hidden_bias: Tensor,
    output_weight: Tensor,
    output_bias: f64,
}

/// On-disk form of a [`TrainedModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    format: String,
    version: u32,
    kind: ModelKind,
    dims: Dims,
    threshold: f64,
    best_epoch: usize,
    best_dev_metric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embeddings: Option<EmbeddingRef>,
    tensors: Tensors,
}

impl From<&TrainedModel> for ModelFile {
    fn from(m: &TrainedModel) -> Self {
        let p = &m.params;
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            kind: m.kind,
            dims: p.dims,
            threshold: m.threshold,
            best_epoch: m.best_epoch,
            best_dev_metric: m.best_dev_metric.is_finite().then_some(m.best_dev_metric),
            embeddings: m.embeddings.clone(),
            tensors: Tensors {
                gate_weight: Tensor::from_matrix(&p.gate_weight),
                gate_bias: Tensor::from_vector(&p.gate_bias),
                first_weight: Tensor::from_matrix(&p.first_weight),
                first_bias: Tensor::from_vector(&p.first_bias),
                second_weight: Tensor::from_matrix(&p.second_weight),
                second_bias: Tensor::from_vector(&p.second_bias),
                hidden_weight: Tensor::from_matrix(&p.hidden_weight),
                hidden_bias: Tensor::from_vector(&p.hidden_bias),
                output_weight: Tensor::from_vector(&p.output_weight),
                output_bias: p.output_bias,
            },
        }
    }
}

impl ModelFile {
    pub fn into_model(self) -> Result<TrainedModel> {
        if self.format != MODEL_FORMAT {
            return Err(Error::InvalidConfig(format!(
                "not a model file (format {:?})",
                self.format
            )));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model version {}",
                self.version
            )));
        }
        self.dims.validate()?;
        let Dims {
            embedding: e,
            mapped: z,
            hidden: d,
        } = self.dims;
        let t = &self.tensors;
        let params = ModelParams {
            dims: self.dims,
            gate_weight: t.gate_weight.to_matrix("gate_weight", e, e)?,
            gate_bias: t.gate_bias.to_vector("gate_bias", e)?,
            first_weight: t.first_weight.to_matrix("first_weight", z, e)?,
            first_bias: t.first_bias.to_vector("first_bias", z)?,
            second_weight: t.second_weight.to_matrix("second_weight", z, e)?,
            second_bias: t.second_bias.to_vector("second_bias", z)?,
            hidden_weight: t.hidden_weight.to_matrix("hidden_weight", d, z)?,
            hidden_bias: t.hidden_bias.to_vector("hidden_bias", d)?,
            output_weight: t.output_weight.to_vector("output_weight", d)?,
            output_bias: t.output_bias,
        };
        if !params.output_bias.is_finite() {
            return Err(Error::InvalidConfig("output_bias is not finite".into()));
        }
        Ok(TrainedModel {
            kind: self.kind,
            params,
            threshold: self.threshold,
            log: Vec::new(),
            best_epoch: self.best_epoch,
            best_dev_metric: self.best_dev_metric.unwrap_or(f64::NAN),
            embeddings: self.embeddings,
        })
    }
}

impl TrainedModel {
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &ModelFile::from(self))?;
        writeln!(out)?;
        Ok(())
    }

    pub fn read_json<R: std::io::Read>(input: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(input)?;
        file.into_model()
    }
}

pub fn write_training_log<W: Write>(log: &[EpochRecord], mut out: W) -> Result<()> {
    for record in log {
        serde_json::to_writer(&mut out, record)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_training_log<R: BufRead>(input: R) -> Result<Vec<EpochRecord>> {
    let mut log = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        log.push(serde_json::from_str(&line).map_err(|e| Error::format(i + 1, e.to_string()))?);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trip() {
        let params = ModelParams::init_seeded(Dims::new(3, 4, 2).unwrap(), 5, 0.3).unwrap();
        let mut model = TrainedModel::from_params(ModelKind::VerbArg, params);
        model.embeddings = Some(EmbeddingRef {
            path: "emb.txt".into(),
            sha256: "00".into(),
        });
        let mut buf = Vec::new();
        model.write_json(&mut buf).unwrap();
        let back = TrainedModel::read_json(buf.as_slice()).unwrap();
        assert_eq!(back.params, model.params);
        assert_eq!(back.kind, ModelKind::VerbArg);
        assert_eq!(back.embeddings, model.embeddings);
    }

    #[test]
    fn rejects_wrong_shape() {
        let model = TrainedModel::from_params(ModelKind::AdjNoun, ModelParams::zeros(Dims::new(2, 2, 1).unwrap()));
        let mut file = ModelFile::from(&model);
        file.tensors.gate_bias.data.push(1.0);
        file.tensors.gate_bias.rows = 3;
        assert!(file.into_model().is_err());
    }

    #[test]
    fn log_round_trip() {
        let log = vec![
            EpochRecord {
                epoch: 1,
                train_loss: 3.5,
                active: 10,
                dev_metric: 0.5,
                dev_loss: 0.25,
            },
            EpochRecord {
                epoch: 2,
                train_loss: 1.25,
                active: 4,
                dev_metric: 0.75,
                dev_loss: 0.125,
            },
        ];
        let mut buf = Vec::new();
        write_training_log(&log, &mut buf).unwrap();
        assert_eq!(read_training_log(buf.as_slice()).unwrap(), log);
    }
}
