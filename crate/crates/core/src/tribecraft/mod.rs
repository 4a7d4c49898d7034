//! Tribe creation: keyword-driven discovery of candidate tribal leaders, the
//! human keep/reject log, and the hashtag cloud and leader network used to
//! refine keywords between rounds.

mod category;
mod explore;
mod project;
mod search;

pub use category::{MacroCategory, TribeDef};
pub use explore::{hashtag_cloud, leader_network, HashtagCount, LeaderNetwork, NetworkEdge, NetworkNode};
pub use project::{normalize_keywords, Decision, TribeProject, Verdict};
pub use search::{search_candidates, CandidateScore, SearchWeights};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TribeError {
    #[error("unknown tribe {0:?}")]
    UnknownTribe(String),
    #[error("unknown macro-category {0:?}")]
    UnknownCategory(String),
    #[error("invalid macro-category: {0}")]
    InvalidCategory(String),
    #[error("one tribe per macro-category: {user} is already a leader of {existing}")]
    OneTribePerCategory { user: String, existing: String },
    #[error("empty keyword set")]
    EmptyKeywords,
    #[error("invalid search weights: {0}")]
    InvalidWeights(String),
}
