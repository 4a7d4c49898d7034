//! Offline social-media corpora: tweets, user profiles and follow edges.
//!
//! A [`Corpus`] is immutable once built and is the universe for one analysis.
//! Files are line-delimited JSON records (see [`io`]); synthetic corpora with
//! planted tribes come from [`synth`].

pub mod io;
pub mod synth;
mod tokenize;
mod validate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use io::{load_corpus, read_ground_truth, write_corpus, write_ground_truth, LoadReport};
pub use synth::{generate_synthetic, shared_token, synthetic_start, tribe_token, GroundTruth, SynthConfig};
pub use tokenize::{tokenize, URL_TOKEN};
pub use validate::{validate_corpus, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty corpus")]
    Empty,
    #[error("{path}: {} of {total} records malformed (lines {})", malformed.len(), fmt_lines(malformed))]
    TooManyMalformed {
        path: PathBuf,
        total: usize,
        malformed: Vec<usize>,
    },
    #[error("ground truth line {line}: {reason}")]
    GroundTruth { line: usize, reason: String },
    #[error("invalid synthetic config: {0}")]
    InvalidSynthConfig(String),
}

fn fmt_lines(lines: &[usize]) -> String {
    let shown: Vec<String> = lines.iter().take(20).map(|l| l.to_string()).collect();
    if lines.len() > 20 {
        format!("{}, ...", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

mod ts_format {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tweet {
    pub id: String,
    pub user_id: String,
    #[serde(with = "ts_format")]
    pub ts: DateTime<Utc>,
    pub text: String,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub retweet_of: Option<String>,
    pub reply_to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserProfile {
    pub user_id: String,
    pub handle: String,
    pub bio: String,
    pub followers: Vec<String>,
    pub friends: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    profiles: Vec<UserProfile>,
    time_span: (DateTime<Utc>, DateTime<Utc>),
    tweet_index: HashMap<String, usize>,
    profile_index: HashMap<String, usize>,
    by_user: BTreeMap<String, Vec<usize>>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.tweets == other.tweets && self.profiles == other.profiles
    }
}

impl Corpus {
    /// Build a corpus. The first occurrence wins for duplicated ids in the
    /// lookup indexes; duplicates themselves are kept for validation.
    pub fn new(tweets: Vec<Tweet>, profiles: Vec<UserProfile>) -> Result<Self, CorpusError> {
        let min = tweets.iter().map(|t| t.ts).min().ok_or(CorpusError::Empty)?;
        let max = tweets.iter().map(|t| t.ts).max().ok_or(CorpusError::Empty)?;
        let mut tweet_index = HashMap::with_capacity(tweets.len());
        let mut by_user: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in tweets.iter().enumerate() {
            tweet_index.entry(t.id.clone()).or_insert(i);
            by_user.entry(t.user_id.clone()).or_default().push(i);
        }
        let mut profile_index = HashMap::with_capacity(profiles.len());
        for (i, p) in profiles.iter().enumerate() {
            profile_index.entry(p.user_id.clone()).or_insert(i);
        }
        Ok(Self {
            tweets,
            profiles,
            time_span: (min, max),
            tweet_index,
            profile_index,
            by_user,
        })
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn profiles(&self) -> &[UserProfile] {
        &self.profiles
    }

    pub fn time_span(&self) -> (DateTime<Utc>, DateTime<Utc>) {
        self.time_span
    }

    pub fn tweet(&self, id: &str) -> Option<&Tweet> {
        self.tweet_index.get(id).map(|&i| &self.tweets[i])
    }

    pub fn profile(&self, user_id: &str) -> Option<&UserProfile> {
        self.profile_index.get(user_id).map(|&i| &self.profiles[i])
    }

    pub fn tweets_by<'a>(&'a self, user_id: &str) -> impl Iterator<Item = &'a Tweet> + 'a {
        self.by_user
            .get(user_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.tweets[i])
    }

    /// Users who tweeted, in user_id order.
    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.by_user.keys().map(String::as_str)
    }

    /// Authors and profile owners, sorted and deduplicated.
    pub fn users(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self
            .authors()
            .chain(self.profiles.iter().map(|p| p.user_id.as_str()))
            .collect();
        set.into_iter().collect()
    }

    /// Users a tweet interacts with: each mention, the author of the tweet it
    /// replies to, and the author of the tweet it retweets. Self-interactions
    /// and unresolvable reply/retweet targets are dropped.
    pub fn interaction_targets<'a>(&'a self, tweet: &'a Tweet) -> Vec<&'a str> {
        let mut out: Vec<&str> = tweet.mentions.iter().map(String::as_str).collect();
        for target in [&tweet.reply_to, &tweet.retweet_of].into_iter().flatten() {
            if let Some(t) = self.tweet(target) {
                out.push(t.user_id.as_str());
            }
        }
        out.retain(|u| *u != tweet.user_id);
        out
    }

    /// Sub-corpus of tweets matching `keep`; profiles are retained.
    pub fn filter_tweets(&self, keep: impl Fn(&Tweet) -> bool) -> Result<Corpus, CorpusError> {
        let tweets = self.tweets.iter().filter(|t| keep(t)).cloned().collect();
        Corpus::new(tweets, self.profiles.clone())
    }

    /// Sub-corpus of tweets whose tokens contain any keyword (a leading `#`
    /// is ignored on both sides).
    pub fn filter_by_keywords(&self, keywords: &[String]) -> Result<Corpus, CorpusError> {
        let wanted: BTreeSet<String> = keywords
            .iter()
            .map(|k| k.trim_start_matches('#').to_lowercase())
            .collect();
        self.filter_tweets(|t| {
            tokenize(&t.text)
                .iter()
                .any(|tok| wanted.contains(tok.trim_start_matches(['#', '@'])))
        })
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use chrono::TimeZone;

    pub fn ts(day: u32, hour: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 3, day, hour, 0, 0).unwrap()
    }

    pub fn tweet(id: &str, user: &str, at: DateTime<Utc>, text: &str) -> Tweet {
        let toks = tokenize(text);
        Tweet {
            id: id.into(),
            user_id: user.into(),
            ts: at,
            text: text.into(),
            hashtags: toks
                .iter()
                .filter_map(|t| t.strip_prefix('#').map(String::from))
                .collect(),
            mentions: toks
                .iter()
                .filter_map(|t| t.strip_prefix('@').map(String::from))
                .collect(),
            retweet_of: None,
            reply_to: None,
        }
    }

    pub fn profile(user: &str, bio: &str, followers: &[&str], friends: &[&str]) -> UserProfile {
        UserProfile {
            user_id: user.into(),
            handle: format!("h_{user}"),
            bio: bio.into(),
            followers: followers.iter().map(|s| s.to_string()).collect(),
            friends: friends.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn time_span_and_lookup() {
        let c = Corpus::new(
            vec![
                tweet("t1", "a", ts(2, 0), "hi"),
                tweet("t2", "b", ts(1, 0), "yo"),
                tweet("t3", "a", ts(5, 0), "bye"),
            ],
            vec![profile("a", "", &[], &[]), profile("b", "", &[], &[])],
        )
        .unwrap();
        assert_eq!(c.time_span(), (ts(1, 0), ts(5, 0)));
        assert_eq!(c.tweets_by("a").count(), 2);
        assert_eq!(c.tweet("t2").unwrap().user_id, "b");
        assert_eq!(c.users(), ["a", "b"]);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(matches!(Corpus::new(vec![], vec![]), Err(CorpusError::Empty)));
    }

    #[test]
    fn interaction_targets_resolve_replies_and_retweets() {
        let mut reply = tweet("t2", "b", ts(1, 2), "@a @b sure");
        reply.reply_to = Some("t1".into());
        let mut rt = tweet("t3", "c", ts(1, 3), "rt");
        rt.retweet_of = Some("t1".into());
        let mut dangling = tweet("t4", "c", ts(1, 4), "x");
        dangling.reply_to = Some("missing".into());
        let c = Corpus::new(
            vec![tweet("t1", "a", ts(1, 1), "hello"), reply, rt, dangling],
            vec![],
        )
        .unwrap();
        assert_eq!(c.interaction_targets(&c.tweets()[1]), ["a", "a"]);
        assert_eq!(c.interaction_targets(&c.tweets()[2]), ["a"]);
        assert!(c.interaction_targets(&c.tweets()[3]).is_empty());
    }

    #[test]
    fn keyword_filter_keeps_matching_tweets() {
        let c = Corpus::new(
            vec![
                tweet("t1", "a", ts(1, 1), "New #Adidas shoes"),
                tweet("t2", "b", ts(1, 2), "adidas again"),
                tweet("t3", "c", ts(1, 3), "nike"),
            ],
            vec![],
        )
        .unwrap();
        let sub = c.filter_by_keywords(&["#adidas".into()]).unwrap();
        assert_eq!(sub.tweets().len(), 2);
        assert!(matches!(
            c.filter_by_keywords(&["puma".into()]),
            Err(CorpusError::Empty)
        ));
    }
}
