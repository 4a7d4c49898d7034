use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::SignalError;
use crate::corpus::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

impl Polarity {
    fn slot(self) -> usize {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
        }
    }
}

/// One record of a labelled sentiment file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledText {
    pub text: String,
    pub label: Polarity,
}

/// Anything that maps a text to a positivity score in `[0, 1]`.
pub trait SentimentScorer: Sync {
    fn score(&self, text: &str) -> f64;
}

/// Multinomial naive Bayes over tokenizer output with add-α smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentModel {
    alpha: f64,
    log_prior: [f64; 2],
    log_likelihood: HashMap<String, [f64; 2]>,
}

pub const DEFAULT_SMOOTHING: f64 = 1.0;

pub fn train_sentiment(examples: &[LabeledText], alpha: f64) -> Result<SentimentModel, SignalError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(SignalError::InvalidSmoothing(alpha));
    }
    let mut docs = [0usize; 2];
    let mut totals = [0u64; 2];
    let mut counts: HashMap<String, [u64; 2]> = HashMap::new();
    for ex in examples {
        let c = ex.label.slot();
        docs[c] += 1;
        for tok in tokenize(&ex.text) {
            counts.entry(tok).or_default()[c] += 1;
            totals[c] += 1;
        }
    }
    for (c, name) in [(0, "pos"), (1, "neg")] {
        if docs[c] == 0 {
            return Err(SignalError::MissingClass(name.into()));
        }
    }
    let n_docs = (docs[0] + docs[1]) as f64;
    let v = counts.len() as f64;
    let denom = [
        (totals[0] as f64 + alpha * v).ln(),
        (totals[1] as f64 + alpha * v).ln(),
    ];
    let log_likelihood = counts
        .into_iter()
        .map(|(w, c)| {
            let ll = [
                (c[0] as f64 + alpha).ln() - denom[0],
                (c[1] as f64 + alpha).ln() - denom[1],
            ];
            (w, ll)
        })
        .collect();
    Ok(SentimentModel {
        alpha,
        log_prior: [(docs[0] as f64 / n_docs).ln(), (docs[1] as f64 / n_docs).ln()],
        log_likelihood,
    })
}

impl SentimentModel {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocabulary_size(&self) -> usize {
        self.log_likelihood.len()
    }

    pub fn log_prior(&self, class: Polarity) -> f64 {
        self.log_prior[class.slot()]
    }

    /// `ln P(token | class)`, or `None` for tokens never seen in training.
    pub fn log_likelihood(&self, token: &str, class: Polarity) -> Option<f64> {
        self.log_likelihood.get(token).map(|ll| ll[class.slot()])
    }

    /// Posterior probability of the positive class. Texts with no known
    /// tokens score exactly 0.5.
    pub fn score(&self, text: &str) -> f64 {
        let mut lp = self.log_prior;
        let mut known = false;
        for tok in tokenize(text) {
            if let Some(ll) = self.log_likelihood.get(&tok) {
                known = true;
                lp[0] += ll[0];
                lp[1] += ll[1];
            }
        }
        if !known {
            return 0.5;
        }
        1.0 / (1.0 + (lp[1] - lp[0]).exp())
    }
}

impl SentimentScorer for SentimentModel {
    fn score(&self, text: &str) -> f64 {
        SentimentModel::score(self, text)
    }
}

pub fn sentiment_score(model: &SentimentModel, text: &str) -> f64 {
    model.score(text)
}

/// Parse a labelled file: one JSON record per line, blank lines skipped.
pub fn parse_labeled_texts(src: &str) -> Result<Vec<LabeledText>, SignalError> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SignalError::SeedFile {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

const SEED: &str = include_str!("../../data/sentiment_seed.jsonl");

/// The labelled seed texts shipped with the crate.
pub fn bundled_seed() -> Vec<LabeledText> {
    parse_labeled_texts(SEED).expect("bundled sentiment seed parses")
}

/// Naive Bayes trained on the bundled seed with α = 1.
pub fn bundled_sentiment_model() -> &'static SentimentModel {
    static CELL: OnceLock<SentimentModel> = OnceLock::new();
    CELL.get_or_init(|| train_sentiment(&bundled_seed(), DEFAULT_SMOOTHING).expect("seed has both classes"))
}
