use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forward::{batch_loss_and_grads, forward, hinge_loss, Example};
use super::{AdaDelta, Dims, EmbeddingRef, ModelParams};
use crate::dataset::{Construction, LabeledPair};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};

/// Decision threshold used when benchmarking a classifier.
pub const EVAL_THRESHOLD: f64 = 0.5;
/// Default threshold for counting a corpus pair as metaphorical.
pub const DEFAULT_THRESHOLD: f64 = 0.7;

/// Which constructions a model instance is responsible for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Adjective–noun pairs.
    AdjNoun,
    /// Verb–subject and verb–object pairs.
    VerbArg,
}

impl ModelKind {
    pub fn handles(self, construction: Construction) -> bool {
        construction.model_kind() == self
    }

    /// Accuracy for verb–argument, F1 for adjective–noun.
    pub fn default_dev_metric(self) -> DevMetric {
        match self {
            ModelKind::AdjNoun => DevMetric::F1,
            ModelKind::VerbArg => DevMetric::Accuracy,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adj" | "adj-noun" | "adjective" | "an" => Ok(ModelKind::AdjNoun),
            "verb" | "verb-arg" | "verb-argument" | "sv" | "vo" => Ok(ModelKind::VerbArg),
            other => Err(Error::InvalidConfig(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DevMetric {
    Accuracy,
    F1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dims: Dims,
    pub margin: f64,
    pub max_epochs: usize,
    /// Epochs without dev improvement before stopping; 0 stops after the first epoch.
    pub patience: usize,
    pub batch_size: usize,
    pub adadelta_rho: f64,
    pub adadelta_eps: f64,
    pub init_scale: f64,
    pub seed: u64,
    pub dev_metric: DevMetric,
}

impl TrainConfig {
    pub fn for_kind(kind: ModelKind) -> Self {
        TrainConfig {
            dims: Dims::default(),
            margin: 0.4,
            max_epochs: 300,
            patience: 7,
            batch_size: 32,
            adadelta_rho: 0.95,
            adadelta_eps: 1e-6,
            init_scale: 0.1,
            seed: 0,
            dev_metric: kind.default_dev_metric(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if !(self.margin > 0.0 && self.margin <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "margin must be in (0, 0.5], got {}",
                self.margin
            )));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "max_epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.adadelta_rho > 0.0 && self.adadelta_rho < 1.0) || self.adadelta_eps <= 0.0 {
            return Err(Error::InvalidConfig("AdaDelta requires 0 < rho < 1 and eps > 0".into()));
        }
        if self.init_scale.is_nan() || self.init_scale <= 0.0 {
            return Err(Error::InvalidConfig("init_scale must be positive".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::for_kind(ModelKind::VerbArg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub active: usize,
    pub dev_metric: f64,
    /// Mean hinge loss on the development set.
    #[serde(default)]
    pub dev_loss: f64,
}

/// Classification metrics for the metaphor class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Result<Self> {
        if predicted.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        if predicted.len() != actual.len() {
            return Err(Error::DimensionMismatch {
                expected: actual.len(),
                found: predicted.len(),
            });
        }
        let (mut tp, mut fp, mut tn, mut fneg) = (0, 0, 0, 0);
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fneg += 1,
            }
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Ok(Metrics {
            n: predicted.len(),
            true_pos: tp,
            false_pos: fp,
            true_neg: tn,
            false_neg: fneg,
            accuracy: ratio(tp + tn, predicted.len()),
            precision,
            recall,
            f1,
        })
    }

    pub fn get(&self, metric: DevMetric) -> f64 {
        match metric {
            DevMetric::Accuracy => self.accuracy,
            DevMetric::F1 => self.f1,
        }
    }
}

/// Score of one candidate pair, or the word that was missing from the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub enum PairScore {
    Scored { score: f64, is_metaphor: bool },
    OutOfVocabulary(String),
}

impl PairScore {
    pub fn score(&self) -> Option<f64> {
        match self {
            PairScore::Scored { score, .. } => Some(*score),
            PairScore::OutOfVocabulary(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    /// Default corpus-scoring threshold.
    pub threshold: f64,
    pub log: Vec<EpochRecord>,
    /// 1-based epoch of the returned snapshot.
    pub best_epoch: usize,
    pub best_dev_metric: f64,
    pub embeddings: Option<EmbeddingRef>,
}

impl TrainedModel {
    pub fn from_params(kind: ModelKind, params: ModelParams) -> Self {
        TrainedModel {
            kind,
            params,
            threshold: DEFAULT_THRESHOLD,
            log: Vec::new(),
            best_epoch: 0,
            best_dev_metric: f64::NAN,
            embeddings: None,
        }
    }

    pub fn score_vectors(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        Ok(forward(&self.params, x1, x2)?.score)
    }

    /// Scores `(left, right)` with `left` as the governor (verb or adjective)
    /// and `right` as the noun. The pair is metaphorical when the score is at
    /// least `threshold`.
    pub fn classify(&self, left: &str, right: &str, store: &EmbeddingStore, threshold: f64) -> Result<PairScore> {
        let Some(x1) = store.lookup(left) else {
            return Ok(PairScore::OutOfVocabulary(left.to_string()));
        };
        let Some(x2) = store.lookup(right) else {
            return Ok(PairScore::OutOfVocabulary(right.to_string()));
        };
        let score = self.score_vectors(x1, x2)?;
        Ok(PairScore::Scored {
            score,
            is_metaphor: score >= threshold,
        })
    }
}

struct Encoded<'a> {
    examples: Vec<Example<'a>>,
}

fn encode<'a>(pairs: &[LabeledPair], store: &'a EmbeddingStore, what: &'static str) -> Result<Encoded<'a>> {
    if pairs.is_empty() {
        return Err(Error::Empty(what));
    }
    let mut examples = Vec::with_capacity(pairs.len());
    for p in pairs {
        let x1 = store
            .lookup(&p.left)
            .ok_or_else(|| Error::OutOfVocabulary(p.left.clone()))?;
        let x2 = store
            .lookup(&p.right)
            .ok_or_else(|| Error::OutOfVocabulary(p.right.clone()))?;
        examples.push(Example { x1, x2, label: p.label });
    }
    Ok(Encoded { examples })
}

/// Metrics at the evaluation threshold and the mean hinge loss.
fn metrics_on(params: &ModelParams, examples: &[Example<'_>], margin: f64) -> Result<(Metrics, f64)> {
    let mut predicted = Vec::with_capacity(examples.len());
    let mut actual = Vec::with_capacity(examples.len());
    let mut loss = 0.0;
    for ex in examples {
        let score = forward(params, ex.x1, ex.x2)?.score;
        predicted.push(score >= EVAL_THRESHOLD);
        actual.push(ex.label);
        loss += hinge_loss(score, ex.label, margin);
    }
    Ok((
        Metrics::from_predictions(&predicted, &actual)?,
        loss / examples.len().max(1) as f64,
    ))
}

/// Trains one classifier with shuffled mini-batches and AdaDelta, keeping
/// the parameters from the epoch with the best development metric. Equal
/// metrics count as an improvement when the development hinge loss drops.
pub fn train(
    kind: ModelKind,
    train_set: &[LabeledPair],
    dev_set: &[LabeledPair],
    store: &EmbeddingStore,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    if store.dimension() != config.dims.embedding {
        return Err(Error::DimensionMismatch {
            expected: config.dims.embedding,
            found: store.dimension(),
        });
    }
    let train_ex = encode(train_set, store, "training set")?;
    let dev_ex = encode(dev_set, store, "development set")?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::init(config.dims, config.init_scale, &mut rng)?;
    let mut optimizer = AdaDelta::new(&params, config.adadelta_rho, config.adadelta_eps);
    let mut order: Vec<usize> = (0..train_ex.examples.len()).collect();

    let mut best = params.clone();
    let mut best_metric = f64::NEG_INFINITY;
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut log = Vec::new();
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_active = 0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_ex.examples[i]));
            let out = batch_loss_and_grads(&params, &batch, config.margin)?;
            epoch_loss += out.loss;
            epoch_active += out.active;
            if out.active > 0 {
                optimizer.step(&mut params, &out.grads)?;
            }
        }
        let (dev_metrics, dev_loss) = metrics_on(&params, &dev_ex.examples, config.margin)?;
        let dev = dev_metrics.get(config.dev_metric);
        log.push(EpochRecord {
            epoch,
            train_loss: epoch_loss,
            active: epoch_active,
            dev_metric: dev,
            dev_loss,
        });
        if dev > best_metric || (dev == best_metric && dev_loss < best_loss) {
            best_metric = dev;
            best_loss = dev_loss;
            best_epoch = epoch;
            best = params.clone();
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= config.patience {
            break;
        }
    }

    Ok(TrainedModel {
        kind,
        params: best,
        threshold: DEFAULT_THRESHOLD,
        log,
        best_epoch,
        best_dev_metric: best_metric,
        embeddings: None,
    })
}

/// Benchmarks `model` at the 0.5 decision threshold.
pub fn evaluate(model: &TrainedModel, test_set: &[LabeledPair], store: &EmbeddingStore) -> Result<Metrics> {
    let ex = encode(test_set, store, "evaluation set")?;
    Ok(metrics_on(&model.params, &ex.examples, TrainConfig::for_kind(model.kind).margin)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_all_correct() {
        let labels = [true, false, true, false];
        let m = Metrics::from_predictions(&labels, &labels).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn metrics_all_metaphor_on_balanced_set() {
        let actual = [true, true, false, false];
        let m = Metrics::from_predictions(&[true; 4], &actual).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.precision, 0.5);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_empty() {
        assert!(Metrics::from_predictions(&[], &[]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::default();
        assert!(c.validate().is_ok());
        c.margin = 0.6;
        assert!(c.validate().is_err());
        c.margin = 0.4;
        c.batch_size = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        let store = EmbeddingStore::from_rows([("a", vec![0.0]), ("b", vec![0.0])], 1).unwrap();
        let mut params = ModelParams::zeros(Dims::new(1, 1, 1).unwrap());
        // σ(logit(0.7)) is 0.7 up to rounding; score it and threshold exactly there.
        params.output_bias = (0.7f64 / 0.3).ln();
        let model = TrainedModel::from_params(ModelKind::AdjNoun, params);
        let s = model.classify("a", "b", &store, 0.7).unwrap().score().unwrap();
        match model.classify("a", "b", &store, s).unwrap() {
            PairScore::Scored { is_metaphor, .. } => assert!(is_metaphor),
            other => panic!("{other:?}"),
        }
        match model.classify("a", "b", &store, s + 1e-12).unwrap() {
            PairScore::Scored { is_metaphor, .. } => assert!(!is_metaphor),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            model.classify("a", "zzz", &store, 0.7).unwrap(),
            PairScore::OutOfVocabulary("zzz".into())
        );
    }
}
