use serde::{Deserialize, Serialize};

use super::lstm::{accumulate_gradients, Dims, LstmParams};
use super::vocab::{build_vocabulary, DEFAULT_MAX_SIZE, DEFAULT_MIN_COUNT};
use super::{TextModelError, TribeClassifier};
use crate::corpus::Corpus;
use crate::rng::SeededRng;
use crate::tribecraft::TribeProject;

pub const INIT_SCALE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "defaults::embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "defaults::hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default = "defaults::max_seq_len")]
    pub max_seq_len: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::beta1")]
    pub beta1: f64,
    #[serde(default = "defaults::beta2")]
    pub beta2: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default = "defaults::min_leader_tweets")]
    pub min_leader_tweets: usize,
    #[serde(default = "defaults::vocab_min_count")]
    pub vocab_min_count: u32,
    #[serde(default = "defaults::vocab_max_size")]
    pub vocab_max_size: u32,
}

mod defaults {
    pub fn embed_dim() -> usize {
        64
    }
    pub fn hidden_dim() -> usize {
        128
    }
    pub fn max_seq_len() -> usize {
        50
    }
    pub fn batch_size() -> usize {
        32
    }
    pub fn epochs() -> usize {
        10
    }
    pub fn learning_rate() -> f64 {
        1e-3
    }
    pub fn beta1() -> f64 {
        0.9
    }
    pub fn beta2() -> f64 {
        0.999
    }
    pub fn epsilon() -> f64 {
        1e-8
    }
    pub fn min_leader_tweets() -> usize {
        200
    }
    pub fn vocab_min_count() -> u32 {
        super::DEFAULT_MIN_COUNT
    }
    pub fn vocab_max_size() -> u32 {
        super::DEFAULT_MAX_SIZE
    }
}

impl TrainConfig {
    /// Defaults for everything but the seed.
    pub fn new(seed: u64) -> Self {
        Self {
            embed_dim: defaults::embed_dim(),
            hidden_dim: defaults::hidden_dim(),
            max_seq_len: defaults::max_seq_len(),
            batch_size: defaults::batch_size(),
            epochs: defaults::epochs(),
            learning_rate: defaults::learning_rate(),
            beta1: defaults::beta1(),
            beta2: defaults::beta2(),
            epsilon: defaults::epsilon(),
            seed,
            min_leader_tweets: defaults::min_leader_tweets(),
            vocab_min_count: defaults::vocab_min_count(),
            vocab_max_size: defaults::vocab_max_size(),
        }
    }

    pub fn validate(&self) -> Result<(), TextModelError> {
        let counts = [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("max_seq_len", self.max_seq_len),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("vocab_min_count", self.vocab_min_count as usize),
            ("vocab_max_size", self.vocab_max_size as usize),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(TextModelError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        let reals = [
            ("learning_rate", self.learning_rate),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(TextModelError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(TextModelError::InvalidConfig("betas must be below 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean training cross-entropy over the epoch's batches, weighted by size.
    pub loss: f64,
    /// Fraction of training examples classified correctly before each update.
    pub accuracy: f64,
}

/// One labelled training text.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub text: String,
    pub label: usize,
}

/// Leader tweets labelled with their tribe index, after the per-tribe
/// data checks. `force` skips the `min_leader_tweets` threshold.
pub fn leader_examples(
    project: &TribeProject,
    corpus: &Corpus,
    min_leader_tweets: usize,
    force: bool,
) -> Result<Vec<Example>, TextModelError> {
    let mut out = Vec::new();
    for (k, tribe) in project.macro_category.tribes.iter().enumerate() {
        let leaders = project.leaders(&tribe.id).cloned().unwrap_or_default();
        if leaders.is_empty() {
            return Err(TextModelError::NoLeaders(tribe.id.clone()));
        }
        let mut n = 0;
        for leader in &leaders {
            for t in corpus.tweets_by(leader) {
                out.push(Example {
                    text: t.text.clone(),
                    label: k,
                });
                n += 1;
            }
        }
        if n < min_leader_tweets && !force {
            return Err(TextModelError::InsufficientData {
                tribe: tribe.id.clone(),
                tweets: n,
                required: min_leader_tweets,
            });
        }
    }
    Ok(out)
}

/// Train on a project's confirmed leaders.
pub fn train_classifier(
    project: &TribeProject,
    corpus: &Corpus,
    config: &TrainConfig,
    force: bool,
    progress: &mut dyn FnMut(&EpochMetrics),
) -> Result<TribeClassifier, TextModelError> {
    config.validate()?;
    let examples = leader_examples(project, corpus, config.min_leader_tweets, force)?;
    let tribe_ids = project.macro_category.tribe_ids().map(String::from).collect();
    train_on_examples(&project.macro_category.id, tribe_ids, &examples, config, progress)
}

/// Build a vocabulary from `examples`, then fit embeddings and LSTM jointly
/// with Adam. Single-threaded, so the result depends only on the inputs.
pub fn train_on_examples(
    macro_category_id: &str,
    tribe_ids: Vec<String>,
    examples: &[Example],
    config: &TrainConfig,
    progress: &mut dyn FnMut(&EpochMetrics),
) -> Result<TribeClassifier, TextModelError> {
    config.validate()?;
    let k = tribe_ids.len();
    if k < 2 {
        return Err(TextModelError::InvalidConfig("need at least 2 tribes".into()));
    }
    if let Some(e) = examples.iter().find(|e| e.label >= k) {
        return Err(TextModelError::LabelOutOfRange {
            label: e.label,
            classes: k,
        });
    }
    let vocabulary = build_vocabulary(
        examples.iter().map(|e| e.text.as_str()),
        config.vocab_min_count,
        config.vocab_max_size,
    )?;
    let data: Vec<(Vec<usize>, usize)> = examples
        .iter()
        .filter_map(|e| {
            let mut seq = vocabulary.encode(&e.text);
            seq.truncate(config.max_seq_len);
            (!seq.is_empty()).then_some((seq, e.label))
        })
        .collect();
    if data.is_empty() {
        return Err(TextModelError::EmptyTrainingSet);
    }

    let mut rng = SeededRng::new(config.seed);
    let dims = Dims::new(vocabulary.len(), config.embed_dim, config.hidden_dim, k);
    let mut params = LstmParams::random(dims, INIT_SCALE, &mut rng);
    let mut adam = Adam::new(dims, config);
    let mut grads = LstmParams::zeros(dims);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let (loss, hits) = accumulate_gradients(&params, &batch, &mut grads)?;
            if !loss.is_finite() {
                return Err(TextModelError::NonFiniteLoss {
                    epoch,
                    batch: b,
                    loss,
                });
            }
            adam.step(&mut params, &grads);
            loss_sum += loss * batch.len() as f64;
            correct += hits;
        }
        let m = EpochMetrics {
            epoch,
            loss: loss_sum / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
        };
        progress(&m);
        history.push(m);
    }
    params.round_to_f32();
    Ok(TribeClassifier {
        macro_category_id: macro_category_id.to_string(),
        tribe_ids,
        vocabulary,
        params,
        config: config.clone(),
        history,
    })
}

struct Adam {
    m: LstmParams,
    v: LstmParams,
    t: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(dims: Dims, c: &TrainConfig) -> Self {
        Self {
            m: LstmParams::zeros(dims),
            v: LstmParams::zeros(dims),
            t: 0,
            lr: c.learning_rate,
            beta1: c.beta1,
            beta2: c.beta2,
            eps: c.epsilon,
        }
    }

    fn step(&mut self, params: &mut LstmParams, grads: &LstmParams) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, p), (_, g)), (_, m)), (_, v)) in tensors {
            let (p, g, m, v) = (p.data_mut(), g.data(), m.data_mut(), v.data_mut());
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
