use serde::{Deserialize, Serialize};

use super::lstm::{lstm_forward, softmax};
use super::TribeClassifier;

/// Tribe probabilities for one text. Texts with no tokens get the uniform
/// vector.
pub fn classify_tweet(classifier: &TribeClassifier, text: &str) -> Vec<f64> {
    let k = classifier.tribe_ids.len();
    let mut seq = classifier.vocabulary.encode(text);
    seq.truncate(classifier.config.max_seq_len);
    match lstm_forward(&classifier.params, &seq) {
        Ok(out) => softmax(&out.logits),
        Err(_) => vec![1.0 / k as f64; k],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TribeAllocation {
    pub user_id: String,
    pub votes: Vec<u32>,
    pub prob_sums: Vec<f64>,
    pub tribe_index: usize,
    pub tribe_id: String,
    /// The user had no tweets; the allocation is the first tribe by default.
    pub no_data: bool,
}

/// Index of the largest value, first one on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Most votes; ties go to the larger probability sum, then the earlier tribe.
pub fn resolve_allocation(votes: &[u32], prob_sums: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..votes.len() {
        if votes[i] > votes[best] || (votes[i] == votes[best] && prob_sums[i] > prob_sums[best]) {
            best = i;
        }
    }
    best
}

/// Aggregate per-tweet probability vectors into one allocation. Sums are
/// taken over sorted values so the result ignores tweet order.
pub fn allocate_from_probabilities(user_id: &str, tribe_ids: &[String], probs: &[Vec<f64>]) -> TribeAllocation {
    let k = tribe_ids.len();
    let mut votes = vec![0u32; k];
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(probs.len()); k];
    for p in probs {
        votes[argmax(p)] += 1;
        for (col, &x) in columns.iter_mut().zip(p) {
            col.push(x);
        }
    }
    let prob_sums: Vec<f64> = columns
        .into_iter()
        .map(|mut c| {
            c.sort_by(f64::total_cmp);
            c.iter().sum()
        })
        .collect();
    let tribe_index = resolve_allocation(&votes, &prob_sums);
    TribeAllocation {
        user_id: user_id.to_string(),
        votes,
        prob_sums,
        tribe_index,
        tribe_id: tribe_ids[tribe_index].clone(),
        no_data: probs.is_empty(),
    }
}

pub fn allocate_user<S: AsRef<str>>(classifier: &TribeClassifier, user_id: &str, tweets: &[S]) -> TribeAllocation {
    let probs: Vec<Vec<f64>> = tweets
        .iter()
        .map(|t| classify_tweet(classifier, t.as_ref()))
        .collect();
    allocate_from_probabilities(user_id, &classifier.tribe_ids, &probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("t{i}")).collect()
    }

    fn onehotish(k: usize, hot: usize, p: f64) -> Vec<f64> {
        let rest = (1.0 - p) / (k - 1) as f64;
        (0..k).map(|i| if i == hot { p } else { rest }).collect()
    }

    #[test]
    fn strict_majority_wins() {
        assert_eq!(resolve_allocation(&[3, 1, 0, 0], &[0.0; 4]), 0);
    }

    #[test]
    fn tied_votes_use_probability_sums() {
        assert_eq!(resolve_allocation(&[2, 2, 0, 0], &[1.7, 2.1, 0.1, 0.1]), 1);
        assert_eq!(resolve_allocation(&[2, 2, 0, 0], &[2.0, 2.0, 0.0, 0.0]), 0);
    }

    #[test]
    fn no_tweets_is_flagged() {
        let a = allocate_from_probabilities("u", &ids(3), &[]);
        assert!(a.no_data);
        assert_eq!(a.tribe_index, 0);
        assert_eq!(a.votes, [0, 0, 0]);
    }

    #[test]
    fn votes_sum_to_tweet_count() {
        let probs = vec![
            onehotish(3, 2, 0.6),
            onehotish(3, 2, 0.5),
            onehotish(3, 0, 0.9),
        ];
        let a = allocate_from_probabilities("u", &ids(3), &probs);
        assert_eq!(a.votes, [1, 0, 2]);
        assert_eq!(a.tribe_id, "t2");
        assert!(!a.no_data);
    }
}
