//! Line-delimited corpus files.
//!
//! Tweets: one JSON object per line with exactly the fields
//! `id, user_id, ts, text, hashtags, mentions, retweet_of, reply_to`.
//! Profiles: `user_id, handle, bio, followers, friends`.
//! Ground truth: `user_id<TAB>tribe_index`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Corpus, CorpusError, GroundTruth, Tweet, UserProfile};

/// Fraction of malformed records above which a file is rejected.
pub const MALFORMED_LIMIT: f64 = 0.10;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// 1-based line numbers of malformed tweet records.
    pub malformed_tweet_lines: Vec<usize>,
    pub malformed_profile_lines: Vec<usize>,
}

impl LoadReport {
    pub fn warning_count(&self) -> usize {
        self.malformed_tweet_lines.len() + self.malformed_profile_lines.len()
    }
}

fn read_records<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, Vec<usize>), CorpusError> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let mut total = 0usize;
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match serde_json::from_str::<T>(line) {
            Ok(r) => records.push(r),
            Err(_) => malformed.push(i + 1),
        }
    }
    if total > 0 && malformed.len() as f64 > MALFORMED_LIMIT * total as f64 {
        return Err(CorpusError::TooManyMalformed {
            path: path.to_path_buf(),
            total,
            malformed,
        });
    }
    Ok((records, malformed))
}

pub fn load_corpus(
    tweets_path: impl AsRef<Path>,
    profiles_path: impl AsRef<Path>,
) -> Result<(Corpus, LoadReport), CorpusError> {
    let (tweets, malformed_tweet_lines) = read_records::<Tweet>(tweets_path.as_ref())?;
    let (profiles, malformed_profile_lines) = read_records::<UserProfile>(profiles_path.as_ref())?;
    let corpus = Corpus::new(tweets, profiles)?;
    Ok((
        corpus,
        LoadReport {
            malformed_tweet_lines,
            malformed_profile_lines,
        },
    ))
}

fn write_records<T: Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_corpus(
    corpus: &Corpus,
    tweets_path: impl AsRef<Path>,
    profiles_path: impl AsRef<Path>,
) -> std::io::Result<()> {
    write_records(tweets_path.as_ref(), corpus.tweets())?;
    write_records(profiles_path.as_ref(), corpus.profiles())
}

pub fn write_ground_truth(truth: &GroundTruth, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for (user, tribe) in truth {
        writeln!(w, "{user}\t{tribe}")?;
    }
    w.flush()
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth, CorpusError> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut truth = GroundTruth::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (user, tribe) = line.split_once('\t').ok_or_else(|| CorpusError::GroundTruth {
            line: i + 1,
            reason: "expected user_id<TAB>tribe_index".into(),
        })?;
        let tribe = tribe.trim().parse().map_err(|_| CorpusError::GroundTruth {
            line: i + 1,
            reason: format!("bad tribe index {tribe:?}"),
        })?;
        truth.insert(user.to_string(), tribe);
    }
    Ok(truth)
}
