use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::graph::{betweenness_centrality, betweenness_series, build_interaction_graph, degree_centrality};
use super::language::{user_language_metrics, UnigramStats};
use super::leadership::rotating_leadership;
use super::sentiment::SentimentScorer;
use super::SignalError;
use crate::corpus::Corpus;

/// The seven honest-signal metrics of one user, in export column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile {
    pub user_id: String,
    pub degree: u32,
    pub betweenness: f64,
    pub messages_sent: u32,
    pub rotating_leadership: u32,
    pub sentiment: f64,
    pub emotionality: f64,
    pub complexity: f64,
}

/// Names of the seven metrics, in column order.
pub const METRICS: [&str; 7] = [
    "degree",
    "betweenness",
    "messages_sent",
    "rotating_leadership",
    "sentiment",
    "emotionality",
    "complexity",
];

impl SignalProfile {
    /// Metric values in [`METRICS`] order.
    pub fn values(&self) -> [f64; 7] {
        [
            self.degree as f64,
            self.betweenness,
            self.messages_sent as f64,
            self.rotating_leadership as f64,
            self.sentiment,
            self.emotionality,
            self.complexity,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(default = "default_window")]
    pub window_days: u32,
    #[serde(default = "default_step")]
    pub step_days: u32,
}

fn default_window() -> u32 {
    7
}

fn default_step() -> u32 {
    1
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            window_days: default_window(),
            step_days: default_step(),
        }
    }
}

pub fn messages_sent(corpus: &Corpus, user_id: &str) -> u32 {
    corpus.tweets_by(user_id).count() as u32
}

/// Profiles for `users` (sorted, deduplicated). Network metrics use the
/// whole-corpus graph; rotating leadership uses the sliding-window series.
pub fn signal_profiles<'a>(
    corpus: &Corpus,
    users: impl IntoIterator<Item = &'a str>,
    scorer: &dyn SentimentScorer,
    config: &SignalConfig,
) -> Result<Vec<SignalProfile>, SignalError> {
    let graph = build_interaction_graph(corpus, None);
    let degree = degree_centrality(&graph);
    let betweenness = betweenness_centrality(&graph);
    let series = betweenness_series(
        corpus,
        Duration::days(config.window_days.into()),
        Duration::days(config.step_days.into()),
    )?;
    let stats = UnigramStats::from_corpus(corpus);
    let users: BTreeMap<&str, ()> = users.into_iter().map(|u| (u, ())).collect();
    Ok(users
        .into_keys()
        .map(|u| {
            let texts: Vec<&str> = corpus.tweets_by(u).map(|t| t.text.as_str()).collect();
            let lang = user_language_metrics(scorer, &stats, &texts);
            SignalProfile {
                user_id: u.to_string(),
                degree: degree.get(u).copied().unwrap_or(0) as u32,
                betweenness: betweenness.get(u).copied().unwrap_or(0.0),
                messages_sent: texts.len() as u32,
                rotating_leadership: series.series.get(u).map_or(0, |s| rotating_leadership(s)),
                sentiment: lang.sentiment,
                emotionality: lang.emotionality,
                complexity: lang.complexity,
            }
        })
        .collect())
}

/// CSV with a header row, columns in field order.
pub fn write_profiles_csv<W: Write>(out: W, profiles: &[SignalProfile]) -> Result<(), SignalError> {
    let mut w = csv::Writer::from_writer(out);
    for p in profiles {
        w.serialize(p)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_profiles_csv<R: Read>(input: R) -> Result<Vec<SignalProfile>, SignalError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}
