use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{MacroCategory, TribeError};
use crate::corpus::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Keep,
    Reject,
}

/// One entry of the append-only decision log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub user_id: String,
    pub tribe_id: String,
    pub verdict: Verdict,
    pub timestamp: DateTime<Utc>,
    pub actor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_key: Option<String>,
}

/// A macro-category under construction. Leaders are derived from the
/// decision log: the latest verdict for a (user, tribe) pair is the live one.
#[derive(Debug, Clone, PartialEq)]
pub struct TribeProject {
    pub project_id: String,
    pub macro_category: MacroCategory,
    keywords: BTreeMap<String, Vec<String>>,
    decisions: Vec<Decision>,
    leaders: BTreeMap<String, BTreeSet<String>>,
}

/// Lowercase, strip `#`, trim, drop empties and duplicates (first wins).
pub fn normalize_keywords<S: AsRef<str>>(raw: &[S]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for k in raw {
        let k = tokenize(k.as_ref())
            .iter()
            .map(|t| t.trim_start_matches(['#', '@']))
            .collect::<Vec<_>>()
            .join(" ");
        if !k.is_empty() && seen.insert(k.clone()) {
            out.push(k);
        }
    }
    out
}

impl TribeProject {
    pub fn new(project_id: impl Into<String>, macro_category: MacroCategory) -> Result<Self, TribeError> {
        macro_category.validate()?;
        let leaders = macro_category
            .tribe_ids()
            .map(|t| (t.to_string(), BTreeSet::new()))
            .collect();
        Ok(Self {
            project_id: project_id.into(),
            macro_category,
            keywords: BTreeMap::new(),
            decisions: Vec::new(),
            leaders,
        })
    }

    /// Rebuild a project by replaying its decision log from empty.
    pub fn replay(
        project_id: impl Into<String>,
        macro_category: MacroCategory,
        keywords: BTreeMap<String, Vec<String>>,
        decisions: impl IntoIterator<Item = Decision>,
    ) -> Result<Self, TribeError> {
        let mut p = Self::new(project_id, macro_category)?;
        for (tribe, kws) in keywords {
            p.set_keywords(&tribe, &kws)?;
        }
        for d in decisions {
            p.record_decision(d)?;
        }
        Ok(p)
    }

    fn check_tribe(&self, tribe_id: &str) -> Result<(), TribeError> {
        self.macro_category
            .tribe_index(tribe_id)
            .map(|_| ())
            .ok_or_else(|| TribeError::UnknownTribe(tribe_id.to_string()))
    }

    pub fn set_keywords<S: AsRef<str>>(&mut self, tribe_id: &str, keywords: &[S]) -> Result<(), TribeError> {
        self.check_tribe(tribe_id)?;
        self.keywords
            .insert(tribe_id.to_string(), normalize_keywords(keywords));
        Ok(())
    }

    pub fn keywords(&self, tribe_id: &str) -> &[String] {
        self.keywords.get(tribe_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_keywords(&self) -> &BTreeMap<String, Vec<String>> {
        &self.keywords
    }

    /// Check a decision against the current state without applying it.
    pub fn check_decision(&self, user_id: &str, tribe_id: &str, verdict: Verdict) -> Result<(), TribeError> {
        self.check_tribe(tribe_id)?;
        if verdict == Verdict::Keep {
            if let Some(existing) = self.leader_tribe(user_id) {
                if existing != tribe_id {
                    return Err(TribeError::OneTribePerCategory {
                        user: user_id.to_string(),
                        existing: existing.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn record_decision(&mut self, decision: Decision) -> Result<(), TribeError> {
        self.check_decision(&decision.user_id, &decision.tribe_id, decision.verdict)?;
        let set = self
            .leaders
            .get_mut(&decision.tribe_id)
            .expect("tribe checked above");
        match decision.verdict {
            Verdict::Keep => set.insert(decision.user_id.clone()),
            Verdict::Reject => set.remove(&decision.user_id),
        };
        self.decisions.push(decision);
        Ok(())
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn leaders(&self, tribe_id: &str) -> Option<&BTreeSet<String>> {
        self.leaders.get(tribe_id)
    }

    pub fn all_leaders(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.leaders
    }

    pub fn leader_tribe(&self, user_id: &str) -> Option<&str> {
        self.leaders
            .iter()
            .find(|(_, set)| set.contains(user_id))
            .map(|(t, _)| t.as_str())
    }

    /// Users with any decision for `tribe_id`.
    pub fn decided_users(&self, tribe_id: &str) -> BTreeSet<&str> {
        self.decisions
            .iter()
            .filter(|d| d.tribe_id == tribe_id)
            .map(|d| d.user_id.as_str())
            .collect()
    }
}
