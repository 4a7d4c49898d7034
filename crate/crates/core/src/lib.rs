//! Consumer tribe discovery and comparison for offline social-media corpora.

pub mod corpus;
pub mod pipeline;
pub mod rng;
pub mod signals;
pub mod stats;
pub mod textmodel;
pub mod tribecraft;
