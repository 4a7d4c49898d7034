//! Honest signals: interaction graph centralities, interactivity and
//! language-use metrics per user.

mod graph;
mod language;
mod leadership;
mod profile;
mod sentiment;

use thiserror::Error;

pub use graph::{
    betweenness_centrality, betweenness_series, brandes, build_interaction_graph, degree_centrality,
    sliding_windows, BetweennessSeries, InteractionGraph, Window,
};
pub use language::{text_complexity, user_language_metrics, LanguageMetrics, UnigramStats};
pub use leadership::{rotating_leadership, PLATEAU_TOLERANCE};
pub use profile::{
    messages_sent, read_profiles_csv, signal_profiles, write_profiles_csv, SignalConfig, SignalProfile, METRICS,
};
pub use sentiment::{
    bundled_seed, bundled_sentiment_model, parse_labeled_texts, sentiment_score, train_sentiment, LabeledText,
    Polarity, SentimentModel, SentimentScorer, DEFAULT_SMOOTHING,
};

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("sentiment training set has no {0} examples")]
    MissingClass(String),
    #[error("smoothing must be positive, got {0}")]
    InvalidSmoothing(f64),
    #[error("sentiment file line {line}: {reason}")]
    SeedFile { line: usize, reason: String },
    #[error("profile table: {0}")]
    Csv(String),
}

impl From<csv::Error> for SignalError {
    fn from(e: csv::Error) -> Self {
        SignalError::Csv(e.to_string())
    }
}
