use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::sentiment::SentimentScorer;
use crate::corpus::{tokenize, Corpus};

/// Token counts over an analysis corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnigramStats {
    counts: HashMap<String, u64>,
    total: u64,
}

impl UnigramStats {
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut stats = Self::default();
        for t in texts {
            for tok in tokenize(t.as_ref()) {
                *stats.counts.entry(tok).or_default() += 1;
                stats.total += 1;
            }
        }
        stats
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self::from_texts(corpus.tweets().iter().map(|t| t.text.as_str()))
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    /// Add-one smoothed probability `(c + 1) / (N + V)`.
    pub fn probability(&self, token: &str) -> f64 {
        (self.count(token) + 1) as f64 / (self.total + self.counts.len() as u64) as f64
    }

    /// Information content `-log2 p̂` in bits.
    pub fn surprisal(&self, token: &str) -> f64 {
        -self.probability(token).log2()
    }
}

/// Mean token surprisal of a text, `None` when it has no tokens.
pub fn text_complexity(stats: &UnigramStats, text: &str) -> Option<f64> {
    let toks = tokenize(text);
    if toks.is_empty() {
        return None;
    }
    Some(toks.iter().map(|t| stats.surprisal(t)).sum::<f64>() / toks.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanguageMetrics {
    pub sentiment: f64,
    pub emotionality: f64,
    pub complexity: f64,
}

impl LanguageMetrics {
    pub const NO_DATA: LanguageMetrics = LanguageMetrics {
        sentiment: 0.5,
        emotionality: 0.0,
        complexity: 0.0,
    };
}

/// Mean sentiment, twice the mean distance from 0.5, and mean per-tweet
/// complexity (tweets without tokens are left out of the complexity mean).
pub fn user_language_metrics<S: AsRef<str>>(
    scorer: &dyn SentimentScorer,
    stats: &UnigramStats,
    tweets: &[S],
) -> LanguageMetrics {
    if tweets.is_empty() {
        return LanguageMetrics::NO_DATA;
    }
    let n = tweets.len() as f64;
    let scores: Vec<f64> = tweets.iter().map(|t| scorer.score(t.as_ref())).collect();
    let sentiment = scores.iter().sum::<f64>() / n;
    let emotionality = 2.0 * scores.iter().map(|s| (s - 0.5).abs()).sum::<f64>() / n;
    let per_tweet: Vec<f64> = tweets
        .iter()
        .filter_map(|t| text_complexity(stats, t.as_ref()))
        .collect();
    let complexity = if per_tweet.is_empty() {
        0.0
    } else {
        per_tweet.iter().sum::<f64>() / per_tweet.len() as f64
    };
    LanguageMetrics {
        sentiment,
        emotionality,
        complexity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(f64);
    impl SentimentScorer for Fixed {
        fn score(&self, _: &str) -> f64 {
            self.0
        }
    }

    #[test]
    fn three_to_one_corpus() {
        let stats = UnigramStats::from_texts(["common common common rare"]);
        assert_eq!(stats.probability("common"), 4.0 / 6.0);
        assert_eq!(stats.probability("rare"), 2.0 / 6.0);
        assert!((stats.surprisal("common") - 0.584_962_5).abs() < 1e-7);
        assert!((text_complexity(&stats, "rare").unwrap() - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn repeated_word_is_simple() {
        let text = vec!["same"; 1000].join(" ");
        let stats = UnigramStats::from_texts([text]);
        assert!(text_complexity(&stats, "same same").unwrap() < 0.01);
    }

    #[test]
    fn neutral_scores_have_no_emotionality() {
        let stats = UnigramStats::from_texts(["a b"]);
        let m = user_language_metrics(&Fixed(0.5), &stats, &["a", "b a"]);
        assert_eq!(m.emotionality, 0.0);
        assert_eq!(m.sentiment, 0.5);
        let m = user_language_metrics(&Fixed(1.0), &stats, &["a"]);
        assert_eq!(m.emotionality, 1.0);
    }

    #[test]
    fn no_tweets_is_neutral() {
        let stats = UnigramStats::default();
        let none: [&str; 0] = [];
        assert_eq!(user_language_metrics(&Fixed(0.9), &stats, &none), LanguageMetrics::NO_DATA);
    }
}
