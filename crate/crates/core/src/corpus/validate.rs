use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use super::Corpus;

/// Consistency findings for a corpus. Empty means internally consistent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub duplicate_tweet_ids: Vec<String>,
    pub duplicate_user_ids: Vec<String>,
    /// (tweet_id, mentioned user_id)
    pub dangling_mentions: Vec<(String, String)>,
    /// (tweet_id, referenced tweet_id) for reply_to / retweet_of
    pub dangling_tweet_refs: Vec<(String, String)>,
    /// (profile user_id, referenced user_id)
    pub dangling_followers: Vec<(String, String)>,
    pub dangling_friends: Vec<(String, String)>,
    /// Tweet authors without a profile record.
    pub profileless_users: Vec<String>,
    /// Tweets whose timestamp precedes the previous record in file order.
    pub out_of_order: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issue_count() == 0
    }

    pub fn issue_count(&self) -> usize {
        self.duplicate_tweet_ids.len()
            + self.duplicate_user_ids.len()
            + self.dangling_mentions.len()
            + self.dangling_tweet_refs.len()
            + self.dangling_followers.len()
            + self.dangling_friends.len()
            + self.profileless_users.len()
            + self.out_of_order.len()
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut dup = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            dup.insert(id.to_string());
        }
    }
    dup.into_iter().collect()
}

pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let known_users: HashSet<&str> = corpus.users().into_iter().collect();
    let profiled: HashSet<&str> = corpus.profiles().iter().map(|p| p.user_id.as_str()).collect();

    let mut report = ValidationReport {
        duplicate_tweet_ids: duplicates(corpus.tweets().iter().map(|t| t.id.as_str())),
        duplicate_user_ids: duplicates(corpus.profiles().iter().map(|p| p.user_id.as_str())),
        ..Default::default()
    };

    let mut previous = None;
    for t in corpus.tweets() {
        for m in &t.mentions {
            if !known_users.contains(m.as_str()) {
                report.dangling_mentions.push((t.id.clone(), m.clone()));
            }
        }
        for r in [&t.reply_to, &t.retweet_of].into_iter().flatten() {
            if corpus.tweet(r).is_none() {
                report.dangling_tweet_refs.push((t.id.clone(), r.clone()));
            }
        }
        if previous.is_some_and(|p| t.ts < p) {
            report.out_of_order.push(t.id.clone());
        }
        previous = Some(t.ts);
    }

    for p in corpus.profiles() {
        for f in &p.followers {
            if !known_users.contains(f.as_str()) {
                report.dangling_followers.push((p.user_id.clone(), f.clone()));
            }
        }
        for f in &p.friends {
            if !known_users.contains(f.as_str()) {
                report.dangling_friends.push((p.user_id.clone(), f.clone()));
            }
        }
    }

    report.profileless_users = corpus
        .authors()
        .filter(|u| !profiled.contains(u))
        .map(String::from)
        .collect();
    report
}
