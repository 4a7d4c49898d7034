//! Candidate discovery with four search functions: profile bio, tweets,
//! followers and friends.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{normalize_keywords, TribeError};
use crate::corpus::{tokenize, Corpus};

/// Non-negative weights of the four search functions; they must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWeights {
    pub bio: f64,
    pub tweets: f64,
    pub followers: f64,
    pub friends: f64,
}

impl Default for SearchWeights {
    fn default() -> Self {
        Self {
            bio: 0.25,
            tweets: 0.25,
            followers: 0.25,
            friends: 0.25,
        }
    }
}

impl SearchWeights {
    pub fn new(bio: f64, tweets: f64, followers: f64, friends: f64) -> Result<Self, TribeError> {
        let w = Self {
            bio,
            tweets,
            followers,
            friends,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), TribeError> {
        let all = [self.bio, self.tweets, self.followers, self.friends];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(TribeError::InvalidWeights("weights must be non-negative".into()));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TribeError::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub user_id: String,
    /// Keyword occurrences in the tokenized bio.
    pub bio_hits: u32,
    /// Tweets containing at least one keyword.
    pub tweet_hits: u32,
    /// Confirmed leaders of the tribe among the user's followers.
    pub follower_overlap: u32,
    /// Confirmed leaders of the tribe among the user's friends.
    pub friend_overlap: u32,
    /// Weighted normalized contribution of each function, in the order
    /// bio, tweets, followers, friends. Sums to `combined`.
    pub components: [f64; 4],
    pub combined: f64,
}

fn bare(token: &str) -> &str {
    token.trim_start_matches(['#', '@'])
}

fn occurrences(tokens: &[&str], keyword: &[&str]) -> u32 {
    if keyword.is_empty() || tokens.len() < keyword.len() {
        return 0;
    }
    tokens.windows(keyword.len()).filter(|w| *w == keyword).count() as u32
}

struct Matcher {
    keywords: Vec<Vec<String>>,
}

impl Matcher {
    fn new(keywords: &[String]) -> Self {
        Self {
            keywords: normalize_keywords(keywords)
                .into_iter()
                .map(|k| k.split(' ').map(String::from).collect())
                .collect(),
        }
    }

    fn count(&self, text: &str) -> u32 {
        let toks = tokenize(text);
        let toks: Vec<&str> = toks.iter().map(|t| bare(t)).collect();
        self.keywords
            .iter()
            .map(|k| {
                let k: Vec<&str> = k.iter().map(String::as_str).collect();
                occurrences(&toks, &k)
            })
            .sum()
    }
}

/// Score every corpus user against a tribe's keywords and confirmed leaders.
///
/// Each raw count is divided by its maximum over the corpus (0 when that
/// maximum is 0) and the four ratios are combined with `weights`. Users with
/// all-zero raw counts are omitted. Sorted by combined score descending, then
/// user_id ascending; at most `limit` entries.
pub fn search_candidates(
    corpus: &Corpus,
    keywords: &[String],
    leaders: &BTreeSet<String>,
    weights: SearchWeights,
    limit: usize,
) -> Result<Vec<CandidateScore>, TribeError> {
    weights.validate()?;
    let matcher = Matcher::new(keywords);
    if matcher.keywords.is_empty() {
        return Err(TribeError::EmptyKeywords);
    }

    let mut raw: HashMap<&str, [u32; 4]> = HashMap::new();
    for user in corpus.users() {
        let tweet_hits = corpus
            .tweets_by(user)
            .filter(|t| matcher.count(&t.text) > 0)
            .count() as u32;
        let (bio_hits, follower_overlap, friend_overlap) = match corpus.profile(user) {
            Some(p) => (
                matcher.count(&p.bio),
                p.followers.iter().filter(|f| leaders.contains(*f)).count() as u32,
                p.friends.iter().filter(|f| leaders.contains(*f)).count() as u32,
            ),
            None => (0, 0, 0),
        };
        raw.insert(user, [bio_hits, tweet_hits, follower_overlap, friend_overlap]);
    }

    let mut max = [0u32; 4];
    for counts in raw.values() {
        for (m, c) in max.iter_mut().zip(counts) {
            *m = (*m).max(*c);
        }
    }
    let w = [weights.bio, weights.tweets, weights.followers, weights.friends];

    let mut scored: Vec<CandidateScore> = raw
        .into_iter()
        .filter(|(_, c)| c.iter().any(|&x| x > 0))
        .map(|(user, c)| {
            let mut components = [0.0; 4];
            for i in 0..4 {
                if max[i] > 0 {
                    components[i] = w[i] * c[i] as f64 / max[i] as f64;
                }
            }
            CandidateScore {
                user_id: user.to_string(),
                bio_hits: c[0],
                tweet_hits: c[1],
                follower_overlap: c[2],
                friend_overlap: c[3],
                components,
                combined: components.iter().sum(),
            }
        })
        .collect();
    scored.sort_by(|a, b| {
        b.combined
            .total_cmp(&a.combined)
            .then_with(|| a.user_id.cmp(&b.user_id))
    });
    scored.truncate(limit);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::corpus::Corpus;

    fn leaders(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn kw(k: &[&str]) -> Vec<String> {
        k.iter().map(|s| s.to_string()).collect()
    }

    /// Five users with hand-counted hits for keywords {vegan, plant based}
    /// and confirmed leaders {a, e}:
    ///
    /// | user | bio | tweets | followers | friends |
    /// |------|-----|--------|-----------|---------|
    /// | a    | 2   | 1      | 0         | 1       |
    /// | b    | 0   | 2      | 2         | 0       |
    /// | c    | 1   | 0      | 1         | 1       |
    /// | d    | 0   | 0      | 0         | 0       |
    /// | e    | 1   | 1      | 0         | 0       |
    fn five_users() -> Corpus {
        Corpus::new(
            vec![
                tweet("t1", "a", ts(1, 0), "vegan food is great, so vegan"),
                tweet("t2", "b", ts(1, 1), "#vegan life"),
                tweet("t3", "b", ts(1, 2), "plant based burgers"),
                tweet("t4", "b", ts(1, 3), "based plant? no"),
                tweet("t5", "c", ts(1, 4), "steak night"),
                tweet("t6", "e", ts(1, 5), "VEGAN"),
                tweet("t7", "d", ts(1, 6), "vegetables"),
            ],
            vec![
                profile("a", "Vegan mom. #vegan", &["d"], &["e"]),
                profile("b", "foodie", &["a", "e", "x"], &[]),
                profile("c", "plant based runner", &["e"], &["a"]),
                profile("d", "", &[], &[]),
                profile("e", "vegans unite, vegan", &[], &["d"]),
            ],
        )
        .unwrap()
    }

    /// Independent scoring oracle over the hand-counted table above.
    fn oracle(weights: [f64; 4]) -> Vec<(String, f64)> {
        let table = [
            ("a", [2.0, 1.0, 0.0, 1.0]),
            ("b", [0.0, 2.0, 2.0, 0.0]),
            ("c", [1.0, 0.0, 1.0, 1.0]),
            ("e", [1.0, 1.0, 0.0, 0.0]),
        ];
        let max = [2.0, 2.0, 2.0, 1.0];
        let mut out: Vec<(String, f64)> = table
            .iter()
            .map(|(u, c)| {
                let s = (0..4).map(|i| weights[i] * c[i] / max[i]).sum();
                (u.to_string(), s)
            })
            .collect();
        out.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        out
    }

    #[test]
    fn hand_counted_fixture_matches_oracle() {
        let c = five_users();
        let got = search_candidates(
            &c,
            &kw(&["vegan", "plant based"]),
            &leaders(&["a", "e"]),
            SearchWeights::default(),
            10,
        )
        .unwrap();
        let raw: Vec<(&str, [u32; 4])> = got
            .iter()
            .map(|s| {
                (
                    s.user_id.as_str(),
                    [s.bio_hits, s.tweet_hits, s.follower_overlap, s.friend_overlap],
                )
            })
            .collect();
        assert!(raw.contains(&("a", [2, 1, 0, 1])));
        assert!(raw.contains(&("b", [0, 2, 2, 0])));
        assert!(raw.contains(&("c", [1, 0, 1, 1])));
        assert!(raw.contains(&("e", [1, 1, 0, 0])));
        assert_eq!(got.len(), 4, "d has no hits");

        for weights in [[0.25; 4], [0.1, 0.2, 0.3, 0.4], [0.0, 0.0, 0.5, 0.5]] {
            let w = SearchWeights::new(weights[0], weights[1], weights[2], weights[3]).unwrap();
            let got = search_candidates(&c, &kw(&["vegan", "plant based"]), &leaders(&["a", "e"]), w, 10)
                .unwrap();
            let want = oracle(weights);
            assert_eq!(got.len(), want.len());
            for (g, (u, s)) in got.iter().zip(&want) {
                assert_eq!(&g.user_id, u);
                assert!((g.combined - s).abs() < 1e-12);
                assert!((g.components.iter().sum::<f64>() - g.combined).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unique_bio_match_ranks_first() {
        let c = Corpus::new(
            vec![tweet("t1", "x", ts(1, 0), "hello"), tweet("t2", "y", ts(1, 0), "hi")],
            vec![profile("x", "cats", &[], &[]), profile("y", "vegan chef", &[], &[])],
        )
        .unwrap();
        let got = search_candidates(&c, &kw(&["vegan"]), &BTreeSet::new(), SearchWeights::default(), 5)
            .unwrap();
        assert_eq!(got[0].user_id, "y");
        assert_eq!(got[0].components[0] / 0.25, 1.0);
    }

    #[test]
    fn no_match_gives_empty_list() {
        let got = search_candidates(
            &five_users(),
            &kw(&["skateboard"]),
            &BTreeSet::new(),
            SearchWeights::default(),
            5,
        )
        .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn empty_keywords_and_bad_weights_error() {
        let c = five_users();
        assert_eq!(
            search_candidates(&c, &[], &BTreeSet::new(), SearchWeights::default(), 5),
            Err(TribeError::EmptyKeywords)
        );
        assert_eq!(
            search_candidates(&c, &kw(&["  ", "#"]), &BTreeSet::new(), SearchWeights::default(), 5),
            Err(TribeError::EmptyKeywords)
        );
        assert!(SearchWeights::new(0.5, 0.5, 0.5, -0.5).is_err());
        assert!(SearchWeights::new(0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn bio_only_weights_order_by_bio_hits() {
        let w = SearchWeights::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let got = search_candidates(&five_users(), &kw(&["vegan", "plant based"]), &leaders(&["a", "e"]), w, 10)
            .unwrap();
        let order: Vec<(&str, u32)> = got.iter().map(|s| (s.user_id.as_str(), s.bio_hits)).collect();
        assert_eq!(order, [("a", 2), ("c", 1), ("e", 1), ("b", 0)]);
    }

    #[test]
    fn limit_truncates() {
        let got = search_candidates(
            &five_users(),
            &kw(&["vegan"]),
            &BTreeSet::new(),
            SearchWeights::default(),
            2,
        )
        .unwrap();
        assert_eq!(got.len(), 2);
    }
}
