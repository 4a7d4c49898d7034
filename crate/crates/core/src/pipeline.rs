//! Glue between the modules: seeding planted projects, allocating whole
//! corpora and scoring allocations against ground truth.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, GroundTruth};
use crate::signals::{signal_profiles, SentimentScorer, SignalConfig, SignalError, SignalProfile};
use crate::stats::{build_report, StatsError, TribeComparisonReport};
use crate::textmodel::{TribeAllocation, TribeClassifier};
use crate::tribecraft::{Decision, TribeError, TribeProject, Verdict};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Signals(#[from] SignalError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("no tweets match keywords {0:?}")]
    NoMatches(Vec<String>),
}

/// Everything an analysis run produces.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub allocations: Vec<TribeAllocation>,
    pub profiles: Vec<SignalProfile>,
    pub report: TribeComparisonReport,
}

/// Allocate every user, compute signal profiles and compare tribes.
///
/// With `keywords`, signals and the comparison are restricted to the
/// sub-corpus of matching tweets (e.g. one brand) and to its authors, while
/// each author keeps the tribe allocated from all of their tweets.
pub fn analyze(
    classifier: &TribeClassifier,
    corpus: &Corpus,
    scorer: &dyn SentimentScorer,
    config: &SignalConfig,
    keywords: Option<&[String]>,
) -> Result<Analysis, AnalysisError> {
    let allocations = allocate_corpus(classifier, corpus);
    let filtered;
    let scope = match keywords {
        Some(k) => {
            filtered = corpus.filter_by_keywords(k).map_err(|e| match e {
                CorpusError::Empty => AnalysisError::NoMatches(k.to_vec()),
                other => other.into(),
            })?;
            &filtered
        }
        None => corpus,
    };
    let profiles = signal_profiles(scope, scope.authors(), scorer, config)?;
    let tribe_of = allocation_map(&allocations);
    let groups: Vec<(String, Vec<SignalProfile>)> = classifier
        .tribe_ids
        .iter()
        .map(|t| {
            let members = profiles
                .iter()
                .filter(|p| tribe_of.get(&p.user_id) == Some(t))
                .cloned()
                .collect();
            (t.clone(), members)
        })
        .collect();
    let report = build_report(&classifier.macro_category_id, &groups)?;
    Ok(Analysis {
        allocations,
        profiles,
        report,
    })
}

/// KEEP the first `per_tribe` users (by id) of each planted tribe. Returns
/// the decisions recorded.
pub fn seed_leaders_from_ground_truth(
    project: &mut TribeProject,
    truth: &GroundTruth,
    per_tribe: usize,
    actor: &str,
    timestamp: DateTime<Utc>,
) -> Result<Vec<Decision>, TribeError> {
    let tribes: Vec<String> = project.macro_category.tribe_ids().map(String::from).collect();
    let mut taken = vec![0usize; tribes.len()];
    let mut out = Vec::new();
    for (user, &k) in truth {
        let Some(tribe) = tribes.get(k) else {
            return Err(TribeError::UnknownTribe(format!("index {k}")));
        };
        if taken[k] >= per_tribe {
            continue;
        }
        taken[k] += 1;
        let d = Decision {
            user_id: user.clone(),
            tribe_id: tribe.clone(),
            verdict: Verdict::Keep,
            timestamp,
            actor: actor.to_string(),
            request_key: None,
        };
        project.record_decision(d.clone())?;
        out.push(d);
    }
    Ok(out)
}

/// Allocate every tweeting user in the corpus, in user-id order. Work is
/// spread over scoped threads; each allocation is computed independently so
/// the result does not depend on the thread count.
pub fn allocate_corpus(classifier: &TribeClassifier, corpus: &Corpus) -> Vec<TribeAllocation> {
    let users: Vec<&str> = corpus.authors().collect();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(users.len().max(1));
    let chunk = users.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = users
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|u| {
                            let texts: Vec<&str> = corpus.tweets_by(u).map(|t| t.text.as_str()).collect();
                            classifier.allocate(u, &texts)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("allocation worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// User-level accuracy over users present in `truth` and not in `exclude`
/// (typically the training leaders).
pub fn user_accuracy(
    allocations: &[TribeAllocation],
    truth: &GroundTruth,
    exclude: &BTreeSet<String>,
) -> Accuracy {
    let mut acc = Accuracy { correct: 0, total: 0 };
    for a in allocations {
        if exclude.contains(&a.user_id) {
            continue;
        }
        if let Some(&k) = truth.get(&a.user_id) {
            acc.total += 1;
            acc.correct += usize::from(a.tribe_index == k);
        }
    }
    acc
}

/// Per-tweet accuracy over tweets by users in `truth` and not in `exclude`.
pub fn tweet_accuracy(
    classifier: &TribeClassifier,
    corpus: &Corpus,
    truth: &GroundTruth,
    exclude: &BTreeSet<String>,
) -> Accuracy {
    let mut acc = Accuracy { correct: 0, total: 0 };
    for t in corpus.tweets() {
        if exclude.contains(&t.user_id) {
            continue;
        }
        if let Some(&k) = truth.get(&t.user_id) {
            let p = classifier.classify(&t.text);
            acc.total += 1;
            acc.correct += usize::from(crate::textmodel::argmax(&p) == k);
        }
    }
    acc
}

/// Allocated tribe per user.
pub fn allocation_map(allocations: &[TribeAllocation]) -> BTreeMap<String, String> {
    allocations
        .iter()
        .map(|a| (a.user_id.clone(), a.tribe_id.clone()))
        .collect()
}
