//! Gated word-pair metaphor classifier.
//!
//! The first word of a pair gates the embedding of the second; both are then
//! mapped through position-specific `tanh` layers, combined element-wise, and
//! passed through a hidden layer and a logistic output unit. Embeddings stay
//! fixed; only the layers in [`ModelParams`] are trained.

mod adadelta;
mod forward;
mod io;
mod train;

pub use adadelta::AdaDelta;
pub use forward::{batch_loss_and_grads, forward, hinge_loss, BatchLoss, Example, ForwardTrace};
pub use io::{read_training_log, write_training_log, EmbeddingRef, ModelFile, MODEL_FORMAT, MODEL_VERSION};
pub use train::{
    evaluate, train, DevMetric, EpochRecord, Metrics, ModelKind, PairScore, TrainConfig, TrainedModel,
    DEFAULT_THRESHOLD, EVAL_THRESHOLD,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer sizes: embedding `E`, mapped space `Z`, hidden layer `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub embedding: usize,
    pub mapped: usize,
    pub hidden: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            embedding: 100,
            mapped: 300,
            hidden: 50,
        }
    }
}

impl Dims {
    pub fn new(embedding: usize, mapped: usize, hidden: usize) -> Result<Self> {
        let dims = Dims {
            embedding,
            mapped,
            hidden,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding == 0 || self.mapped == 0 || self.hidden == 0 {
            return Err(Error::InvalidDims(format!(
                "all of (E, Z, D) must be positive, got ({}, {}, {})",
                self.embedding, self.mapped, self.hidden
            )));
        }
        Ok(())
    }

    /// `E·E + E + 2·(Z·E + Z) + D·Z + D + D + 1`
    pub fn trainable_parameter_count(&self) -> usize {
        let (e, z, d) = (self.embedding, self.mapped, self.hidden);
        e * e + e + 2 * (z * e + z) + d * z + d + d + 1
    }
}

pub const GROUP_NAMES: [&str; 10] = [
    "gate_weight",
    "gate_bias",
    "first_weight",
    "first_bias",
    "second_weight",
    "second_bias",
    "hidden_weight",
    "hidden_bias",
    "output_weight",
    "output_bias",
];

/// Trainable weights. The same shape doubles as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: Dims,
    /// `E×E`, gates the second word from the first.
    pub gate_weight: DMatrix<f64>,
    pub gate_bias: DVector<f64>,
    /// `Z×E`, maps the first word.
    pub first_weight: DMatrix<f64>,
    pub first_bias: DVector<f64>,
    /// `Z×E`, maps the gated second word.
    pub second_weight: DMatrix<f64>,
    pub second_bias: DVector<f64>,
    /// `D×Z`
    pub hidden_weight: DMatrix<f64>,
    pub hidden_bias: DVector<f64>,
    /// The single output row, length `D`.
    pub output_weight: DVector<f64>,
    pub output_bias: f64,
}

pub type Gradients = ModelParams;

impl ModelParams {
    pub fn zeros(dims: Dims) -> Self {
        let Dims {
            embedding: e,
            mapped: z,
            hidden: d,
        } = dims;
        ModelParams {
            dims,
            gate_weight: DMatrix::zeros(e, e),
            gate_bias: DVector::zeros(e),
            first_weight: DMatrix::zeros(z, e),
            first_bias: DVector::zeros(z),
            second_weight: DMatrix::zeros(z, e),
            second_bias: DVector::zeros(z),
            hidden_weight: DMatrix::zeros(d, z),
            hidden_bias: DVector::zeros(d),
            output_weight: DVector::zeros(d),
            output_bias: 0.0,
        }
    }

    /// Weights uniform in `[-scale, scale]`, biases zero.
    pub fn init<R: Rng + ?Sized>(dims: Dims, scale: f64, rng: &mut R) -> Result<Self> {
        dims.validate()?;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "init scale must be non-negative, got {scale}"
            )));
        }
        let mut params = ModelParams::zeros(dims);
        let mut fill = |m: &mut [f64]| {
            for v in m.iter_mut() {
                *v = if scale > 0.0 {
                    rng.random_range(-scale..=scale)
                } else {
                    0.0
                };
            }
        };
        fill(params.gate_weight.as_mut_slice());
        fill(params.first_weight.as_mut_slice());
        fill(params.second_weight.as_mut_slice());
        fill(params.hidden_weight.as_mut_slice());
        fill(params.output_weight.as_mut_slice());
        Ok(params)
    }

    /// Seeded initialisation; identical seeds give bit-identical parameters.
    pub fn init_seeded(dims: Dims, seed: u64, scale: f64) -> Result<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ModelParams::init(dims, scale, &mut rng)
    }

    /// Parameter tensors in [`GROUP_NAMES`] order.
    pub fn groups(&self) -> [&[f64]; 10] {
        [
            self.gate_weight.as_slice(),
            self.gate_bias.as_slice(),
            self.first_weight.as_slice(),
            self.first_bias.as_slice(),
            self.second_weight.as_slice(),
            self.second_bias.as_slice(),
            self.hidden_weight.as_slice(),
            self.hidden_bias.as_slice(),
            self.output_weight.as_slice(),
            std::slice::from_ref(&self.output_bias),
        ]
    }

    pub fn groups_mut(&mut self) -> [&mut [f64]; 10] {
        [
            self.gate_weight.as_mut_slice(),
            self.gate_bias.as_mut_slice(),
            self.first_weight.as_mut_slice(),
            self.first_bias.as_mut_slice(),
            self.second_weight.as_mut_slice(),
            self.second_bias.as_mut_slice(),
            self.hidden_weight.as_mut_slice(),
            self.hidden_bias.as_mut_slice(),
            self.output_weight.as_mut_slice(),
            std::slice::from_mut(&mut self.output_bias),
        ]
    }

    /// Counts entries across all trainable tensors.
    pub fn parameter_count(&self) -> usize {
        self.groups().iter().map(|g| g.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|g| g.iter().all(|v| v.is_finite()))
    }
}
