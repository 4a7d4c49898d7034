//! Tribe allocation: tribal vocabulary, jointly trained word embeddings and
//! an LSTM softmax classifier, per-tweet prediction and per-user vote.

mod classify;
pub mod lstm;
pub mod snapshot;
mod train;
mod vocab;

use std::path::Path;

use thiserror::Error;

pub use classify::{allocate_from_probabilities, argmax, allocate_user, classify_tweet, resolve_allocation, TribeAllocation};
pub use lstm::{batch_loss, lstm_forward, lstm_gradients, softmax, BatchGradients, Dims, LstmOutput, LstmParams, Matrix};
pub use train::{leader_examples, train_classifier, train_on_examples, EpochMetrics, Example, TrainConfig};
pub use vocab::{build_vocabulary, Vocabulary, OOV, PAD};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TextModelError {
    #[error("no training text")]
    EmptyTrainingSet,
    #[error("empty token sequence")]
    EmptySequence,
    #[error("empty batch")]
    EmptyBatch,
    #[error("token index {index} outside vocabulary of {vocab}")]
    IndexOutOfRange { index: usize, vocab: usize },
    #[error("label {label} outside {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("tribe {0} has no leaders")]
    NoLeaders(String),
    #[error("insufficient leader tweets for tribe {tribe}: {tweets} < {required} (use force to override)")]
    InsufficientData {
        tribe: String,
        tweets: usize,
        required: usize,
    },
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid snapshot: {0}")]
    Snapshot(String),
    #[error("{0}")]
    Io(String),
}

/// A trained classifier for one macro-category.
#[derive(Debug, Clone, PartialEq)]
pub struct TribeClassifier {
    pub macro_category_id: String,
    pub tribe_ids: Vec<String>,
    pub vocabulary: Vocabulary,
    pub params: LstmParams,
    pub config: TrainConfig,
    pub history: Vec<EpochMetrics>,
}

impl TribeClassifier {
    pub fn classify(&self, text: &str) -> Vec<f64> {
        classify_tweet(self, text)
    }

    pub fn allocate<S: AsRef<str>>(&self, user_id: &str, tweets: &[S]) -> TribeAllocation {
        allocate_user(self, user_id, tweets)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        snapshot::to_bytes(self)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, TextModelError> {
        snapshot::from_bytes(buf)
    }

    pub fn save(&self, path: &Path) -> Result<(), TextModelError> {
        snapshot::save(self, path)
    }

    pub fn load(path: &Path) -> Result<Self, TextModelError> {
        snapshot::load(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trained() -> TribeClassifier {
        let examples: Vec<Example> = (0..20)
            .map(|i| Example {
                text: if i % 2 == 0 { "sun sand sea".into() } else { "snow ski cold".into() },
                label: i % 2,
            })
            .collect();
        let config = TrainConfig {
            embed_dim: 4,
            hidden_dim: 5,
            epochs: 20,
            batch_size: 5,
            learning_rate: 0.05,
            vocab_min_count: 1,
            ..TrainConfig::new(9)
        };
        train_on_examples("holiday", vec!["beach".into(), "mountain".into()], &examples, &config, &mut |_| {})
            .unwrap()
    }

    #[test]
    fn snapshot_round_trips_bit_exactly() {
        let c = trained();
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..8], b"TFMODEL1");
        let back = TribeClassifier::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let bytes = trained().to_bytes();
        assert!(TribeClassifier::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(TribeClassifier::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(TribeClassifier::from_bytes(&extra).is_err());
    }

    #[test]
    fn classification_conventions() {
        let c = trained();
        assert_eq!(c.classify(""), [0.5, 0.5]);
        assert_eq!(c.classify("!!! ???"), [0.5, 0.5]);
        let p = c.classify("unknown words only");
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(crate::textmodel::classify::argmax(&c.classify("sun sand")), 0);
        assert_eq!(crate::textmodel::classify::argmax(&c.classify("ski snow")), 1);
        let a = c.allocate("u", &["sun sea", "cold snow ski", "sand"]);
        assert_eq!(a.tribe_id, "beach");
        assert_eq!(a.votes, [2, 1]);
    }
}
