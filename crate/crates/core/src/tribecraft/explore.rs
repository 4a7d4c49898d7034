//! Views over a tribe's confirmed leaders: hashtag cloud and interaction
//! network.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashtagCount {
    /// Lowercase, without the leading `#`.
    pub hashtag: String,
    pub count: u32,
}

impl std::fmt::Display for HashtagCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{} ({})", self.hashtag, self.count)
    }
}

/// Hashtag frequencies over the leaders' tweets, most frequent first, ties
/// in lexicographic order.
pub fn hashtag_cloud<'a, I>(corpus: &Corpus, leaders: I) -> Vec<HashtagCount>
where
    I: IntoIterator<Item = &'a String>,
{
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    let leaders: BTreeSet<&String> = leaders.into_iter().collect();
    for leader in leaders {
        for t in corpus.tweets_by(leader) {
            for h in &t.hashtags {
                *counts.entry(h.to_lowercase()).or_default() += 1;
            }
        }
    }
    let mut cloud: Vec<HashtagCount> = counts
        .into_iter()
        .map(|(hashtag, count)| HashtagCount { hashtag, count })
        .collect();
    cloud.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.hashtag.cmp(&b.hashtag)));
    cloud
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub id: String,
    pub leader: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkEdge {
    /// `source < target`; the graph is undirected.
    pub source: String,
    pub target: String,
    pub weight: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderNetwork {
    pub nodes: Vec<NetworkNode>,
    pub edges: Vec<NetworkEdge>,
}

impl LeaderNetwork {
    pub fn weight(&self, a: &str, b: &str) -> u32 {
        let (s, t) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .iter()
            .find(|e| e.source == s && e.target == t)
            .map_or(0, |e| e.weight)
    }
}

/// Undirected network of leaders and everyone they mention, reply to or
/// retweet. Edge weight counts interactions in either direction that
/// originate from a leader's tweet.
pub fn leader_network<'a, I>(corpus: &Corpus, leaders: I) -> LeaderNetwork
where
    I: IntoIterator<Item = &'a String>,
{
    let leaders: BTreeSet<&str> = leaders.into_iter().map(String::as_str).collect();
    let mut nodes: BTreeSet<&str> = leaders.clone();
    let mut edges: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    for &leader in &leaders {
        for t in corpus.tweets_by(leader) {
            for target in corpus.interaction_targets(t) {
                nodes.insert(target);
                let key = if leader < target { (leader, target) } else { (target, leader) };
                *edges.entry(key).or_default() += 1;
            }
        }
    }
    LeaderNetwork {
        nodes: nodes
            .into_iter()
            .map(|id| NetworkNode {
                id: id.to_string(),
                leader: leaders.contains(id),
            })
            .collect(),
        edges: edges
            .into_iter()
            .map(|((s, t), weight)| NetworkEdge {
                source: s.to_string(),
                target: t.to_string(),
                weight,
            })
            .collect(),
    }
}
