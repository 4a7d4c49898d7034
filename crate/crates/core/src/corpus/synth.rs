//! Planted-tribe corpora.
//!
//! Every user belongs to one tribe. Each token of a user's tweets and bio is
//! drawn from the tribe's own vocabulary with probability `separation` and from
//! a vocabulary shared by all tribes otherwise (both Zipf-ranked). Mentions,
//! replies, retweets and follow edges stay inside the tribe 80% of the time.
//! A tribe-dependent share of tweets carries a sentiment word whose polarity
//! bias also scales with `separation`, so `separation = 0` makes all tribes
//! statistically identical.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Tweet, UserProfile};
use crate::rng::{SeededRng, ZipfTable};

/// user_id -> tribe index
pub type GroundTruth = BTreeMap<String, usize>;

const INTRA_TRIBE: f64 = 0.8;
const REPLY_SHARE: f64 = 0.25;
const RETWEET_SHARE: f64 = 0.15;
const HASHTAG_RATE: f64 = 0.3;
const SENTIMENT_RATE: f64 = 0.6;
const BIO_TOKENS: usize = 8;

pub const POSITIVE_WORDS: &[&str] = &[
    "love", "great", "happy", "awesome", "amazing", "wonderful", "fantastic", "beautiful",
    "excellent", "best", "enjoy", "glad", "brilliant", "perfect", "fun", "nice", "proud",
    "excited", "thanks", "delightful",
];

pub const NEGATIVE_WORDS: &[&str] = &[
    "hate", "awful", "sad", "terrible", "horrible", "worst", "angry", "ugly", "bad", "boring",
    "annoying", "disgusting", "broken", "fail", "upset", "sick", "tired", "lousy", "poor",
    "disappointed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_tribes: usize,
    pub users_per_tribe: usize,
    pub tweets_per_user: usize,
    pub shared_vocab_size: usize,
    pub tribe_vocab_size: usize,
    /// Probability that a token comes from the tribe vocabulary.
    pub separation: f64,
    /// Per-tweet probability of a mention; replies and retweets scale with it.
    pub interaction_density: f64,
    pub time_span_days: u32,
    /// Mean tweet length; actual lengths are uniform in `[n/2, 3n/2]`.
    pub tokens_per_tweet: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_tribes: 4,
            users_per_tribe: 50,
            tweets_per_user: 30,
            shared_vocab_size: 400,
            tribe_vocab_size: 80,
            separation: 0.9,
            interaction_density: 0.3,
            time_span_days: 30,
            tokens_per_tweet: 12,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let counts = [
            ("n_tribes", self.n_tribes),
            ("users_per_tribe", self.users_per_tribe),
            ("tweets_per_user", self.tweets_per_user),
            ("shared_vocab_size", self.shared_vocab_size),
            ("tribe_vocab_size", self.tribe_vocab_size),
            ("time_span_days", self.time_span_days as usize),
            ("tokens_per_tweet", self.tokens_per_tweet),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(CorpusError::InvalidSynthConfig(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [
            ("separation", self.separation),
            ("interaction_density", self.interaction_density),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CorpusError::InvalidSynthConfig(format!("{name} must be in [0,1]")));
            }
        }
        Ok(())
    }
}

pub fn synthetic_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap()
}

pub fn tribe_token(tribe: usize, rank: usize) -> String {
    format!("tr{tribe}w{rank}")
}

pub fn shared_token(rank: usize) -> String {
    format!("sh{rank}")
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: SeededRng,
    shared: ZipfTable,
    tribal: ZipfTable,
    ids: Vec<String>,
}

impl Generator<'_> {
    fn word(&mut self, tribe: usize) -> String {
        if self.rng.chance(self.cfg.separation) {
            let r = self.tribal.sample(&mut self.rng);
            tribe_token(tribe, r)
        } else {
            let r = self.shared.sample(&mut self.rng);
            shared_token(r)
        }
    }

    fn user(&self, tribe: usize, j: usize) -> usize {
        tribe * self.cfg.users_per_tribe + j
    }

    fn peer_tribe(&mut self, tribe: usize) -> usize {
        let n = self.cfg.n_tribes;
        if n == 1 || self.rng.chance(INTRA_TRIBE) {
            tribe
        } else {
            let other = self.rng.index(n - 1);
            if other >= tribe {
                other + 1
            } else {
                other
            }
        }
    }

    /// A user other than `me`, preferring `me`'s tribe.
    fn peer(&mut self, tribe: usize, me: usize) -> Option<usize> {
        let u = self.cfg.users_per_tribe;
        if u == 1 && self.cfg.n_tribes == 1 {
            return None;
        }
        let mut t = self.peer_tribe(tribe);
        if t == tribe && u == 1 {
            t = (tribe + 1) % self.cfg.n_tribes;
        }
        let j = self.rng.index(u);
        let mut p = self.user(t, j);
        if p == me {
            p = self.user(t, (p - t * u + 1) % u);
        }
        Some(p)
    }

    fn follow_edges(&mut self, tribe: usize, me: usize) -> Vec<String> {
        let k = 1 + self.rng.index(6);
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            if let Some(p) = self.peer(tribe, me) {
                out.push(self.ids[p].clone());
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn positivity(&self, tribe: usize) -> f64 {
        let n = self.cfg.n_tribes;
        let spread = if n > 1 { tribe as f64 / (n - 1) as f64 - 0.5 } else { 0.0 };
        0.5 + 0.6 * spread * self.cfg.separation
    }

    fn tweet_text(&mut self, tribe: usize) -> (String, Vec<String>) {
        let n = self.cfg.tokens_per_tweet;
        let lo = (n / 2).max(1);
        let len = lo + self.rng.index(n + n / 2 - lo + 1);
        let mut words: Vec<String> = (0..len).map(|_| self.word(tribe)).collect();
        let mut hashtags = Vec::new();
        if self.rng.chance(HASHTAG_RATE) {
            let at = self.rng.index(words.len());
            hashtags.push(words[at].clone());
            words[at] = format!("#{}", words[at]);
        }
        if self.rng.chance(SENTIMENT_RATE) {
            let p = self.positivity(tribe);
            let positive = self.rng.chance(p);
            let lexicon = if positive { POSITIVE_WORDS } else { NEGATIVE_WORDS };
            let w = lexicon[self.rng.index(lexicon.len())];
            let at = self.rng.index(words.len() + 1);
            words.insert(at, w.to_string());
        }
        (words.join(" "), hashtags)
    }
}

/// Generate a planted-tribe corpus and its ground truth. Deterministic in
/// `config` (including the seed).
pub fn generate_synthetic(config: &SynthConfig) -> Result<(Corpus, GroundTruth), CorpusError> {
    config.validate()?;
    let n_users = config.n_tribes * config.users_per_tribe;
    let mut rng = SeededRng::new(config.seed);
    let mut perm: Vec<usize> = (0..n_users).collect();
    rng.shuffle(&mut perm);
    let width = n_users.to_string().len().max(4);
    let ids: Vec<String> = perm.iter().map(|p| format!("u{p:0width$}")).collect();

    let mut g = Generator {
        cfg: config,
        rng,
        shared: ZipfTable::new(config.shared_vocab_size),
        tribal: ZipfTable::new(config.tribe_vocab_size),
        ids,
    };

    let mut truth = GroundTruth::new();
    let mut profiles = Vec::with_capacity(n_users);
    for tribe in 0..config.n_tribes {
        for j in 0..config.users_per_tribe {
            let me = g.user(tribe, j);
            truth.insert(g.ids[me].clone(), tribe);
            let bio: Vec<String> = (0..BIO_TOKENS).map(|_| g.word(tribe)).collect();
            let followers = g.follow_edges(tribe, me);
            let friends = g.follow_edges(tribe, me);
            profiles.push(UserProfile {
                user_id: g.ids[me].clone(),
                handle: format!("handle_{}", g.ids[me]),
                bio: bio.join(" "),
                followers,
                friends,
            });
        }
    }

    let start = synthetic_start();
    let span_secs = config.time_span_days as u64 * 86_400;
    // (ts, author, tribe, seq) before ids are assigned
    let mut drafts = Vec::with_capacity(n_users * config.tweets_per_user);
    for tribe in 0..config.n_tribes {
        for j in 0..config.users_per_tribe {
            let me = g.user(tribe, j);
            for seq in 0..config.tweets_per_user {
                let ts = start + Duration::seconds(g.rng.below(span_secs) as i64);
                let (text, hashtags) = g.tweet_text(tribe);
                let mentions = if g.rng.chance(config.interaction_density) {
                    g.peer(tribe, me).map(|p| vec![g.ids[p].clone()]).unwrap_or_default()
                } else {
                    Vec::new()
                };
                drafts.push((ts, me, tribe, seq, text, hashtags, mentions));
            }
        }
    }
    drafts.sort_by(|a, b| (a.0, &g.ids[a.1], a.3).cmp(&(b.0, &g.ids[b.1], b.3)));

    let id_width = drafts.len().to_string().len().max(6);
    let mut tweets: Vec<Tweet> = Vec::with_capacity(drafts.len());
    let mut earlier_by_tribe: Vec<Vec<usize>> = vec![Vec::new(); config.n_tribes];
    for (i, (ts, me, tribe, _, text, hashtags, mentions)) in drafts.into_iter().enumerate() {
        let mut reply_to = None;
        let mut retweet_of = None;
        if g.rng.chance(config.interaction_density * REPLY_SHARE) {
            reply_to = pick_earlier(&mut g, &earlier_by_tribe, &tweets, tribe, me);
        } else if g.rng.chance(config.interaction_density * RETWEET_SHARE) {
            retweet_of = pick_earlier(&mut g, &earlier_by_tribe, &tweets, tribe, me);
        }
        tweets.push(Tweet {
            id: format!("t{i:0id_width$}"),
            user_id: g.ids[me].clone(),
            ts,
            text,
            hashtags,
            mentions,
            retweet_of,
            reply_to,
        });
        earlier_by_tribe[tribe].push(i);
    }

    let corpus = Corpus::new(tweets, profiles)?;
    Ok((corpus, truth))
}

fn pick_earlier(
    g: &mut Generator,
    earlier: &[Vec<usize>],
    tweets: &[Tweet],
    tribe: usize,
    me: usize,
) -> Option<String> {
    let t = g.peer_tribe(tribe);
    let pool = &earlier[t];
    if pool.is_empty() {
        return None;
    }
    let target = &tweets[pool[g.rng.index(pool.len())]];
    (target.user_id != g.ids[me]).then(|| target.id.clone())
}
