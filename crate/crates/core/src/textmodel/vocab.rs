use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TextModelError;
use crate::corpus::tokenize;

pub const PAD: usize = 0;
pub const OOV: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";
pub const DEFAULT_MIN_COUNT: u32 = 2;
pub const DEFAULT_MAX_SIZE: u32 = 20_000;

/// Token <-> index map with `<pad>` = 0 and `<oov>` = 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u32>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    min_count: u32,
    max_size: u32,
}

impl Vocabulary {
    pub(crate) fn from_parts(tokens: Vec<String>, counts: Vec<u32>, min_count: u32, max_size: u32) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            tokens,
            counts,
            index,
            min_count,
            max_size,
        }
    }

    /// Entries including the two specials.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    pub fn max_size(&self) -> u32 {
        self.max_size
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Training-set frequency of the entry at `index` (0 for specials).
    pub fn count(&self, index: usize) -> u32 {
        self.counts.get(index).copied().unwrap_or(0)
    }

    pub(crate) fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Tokenize and map to indices; unknown tokens become `<oov>`.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        tokenize(text)
            .iter()
            .map(|t| self.index_of(t).unwrap_or(OOV))
            .collect()
    }
}

/// Keep tokens seen at least `min_count` times, most frequent first (ties in
/// lexicographic order), at most `max_size` of them besides the specials.
pub fn build_vocabulary<I, S>(texts: I, min_count: u32, max_size: u32) -> Result<Vocabulary, TextModelError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut freq: HashMap<String, u32> = HashMap::new();
    let mut n_texts = 0usize;
    for text in texts {
        n_texts += 1;
        for tok in tokenize(text.as_ref()) {
            *freq.entry(tok).or_default() += 1;
        }
    }
    if n_texts == 0 {
        return Err(TextModelError::EmptyTrainingSet);
    }
    let mut kept: Vec<(String, u32)> = freq.into_iter().filter(|(_, c)| *c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    kept.truncate(max_size as usize);

    let mut tokens = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
    let mut counts = vec![0, 0];
    for (t, c) in kept {
        tokens.push(t);
        counts.push(c);
    }
    Ok(Vocabulary::from_parts(tokens, counts, min_count, max_size))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_tokens_at_min_count() {
        let v = build_vocabulary(["a b a", "b c"], 2, 100).unwrap();
        assert_eq!(v.tokens(), [PAD_TOKEN, OOV_TOKEN, "a", "b"]);
        assert_eq!(v.count(2), 2);
        assert_eq!(v.encode("a c b"), [2, OOV, 3]);
    }

    #[test]
    fn max_size_keeps_most_frequent() {
        let v = build_vocabulary(["x y y z z z"], 1, 1).unwrap();
        assert_eq!(v.tokens(), [PAD_TOKEN, OOV_TOKEN, "z"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = build_vocabulary(["b a c", "c a b"], 1, 2).unwrap();
        assert_eq!(&v.tokens()[2..], ["a", "b"]);
    }

    #[test]
    fn empty_input_is_an_error() {
        let none: [&str; 0] = [];
        assert!(matches!(
            build_vocabulary(none, 1, 10),
            Err(TextModelError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn specials_are_not_addressable_by_text() {
        let v = build_vocabulary(["<pad> <oov> pad"], 1, 10).unwrap();
        assert_eq!(v.index_of("<pad>"), None);
        assert!(v.index_of("pad").is_some());
    }
}
