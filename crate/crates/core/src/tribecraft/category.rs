use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::TribeError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TribeDef {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
}

/// A partition axis: every user gets exactly one of its tribes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroCategory {
    pub id: String,
    pub name: String,
    pub tribes: Vec<TribeDef>,
}

const BUILTIN_JSON: &str = include_str!("../../data/categories.json");

fn builtins() -> &'static [MacroCategory] {
    static CELL: OnceLock<Vec<MacroCategory>> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(BUILTIN_JSON).expect("bundled categories.json"))
}

impl MacroCategory {
    /// The shipped categories: alternative realities, lifestyle, recreation.
    pub fn builtin_all() -> &'static [MacroCategory] {
        builtins()
    }

    /// Look up a shipped category, or build `synth-<n>` (tribes `tribe0`..)
    /// for planted-tribe corpora.
    pub fn resolve(id: &str) -> Result<MacroCategory, TribeError> {
        if let Some(c) = builtins().iter().find(|c| c.id == id) {
            return Ok(c.clone());
        }
        if let Some(n) = id.strip_prefix("synth-").and_then(|n| n.parse::<usize>().ok()) {
            let c = Self::synthetic(n);
            c.validate()?;
            return Ok(c);
        }
        Err(TribeError::UnknownCategory(id.to_string()))
    }

    pub fn synthetic(n_tribes: usize) -> MacroCategory {
        MacroCategory {
            id: format!("synth-{n_tribes}"),
            name: format!("Synthetic ({n_tribes} tribes)"),
            tribes: (0..n_tribes)
                .map(|i| TribeDef {
                    id: format!("tribe{i}"),
                    name: format!("Tribe {i}"),
                    description: String::new(),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), TribeError> {
        if self.tribes.len() < 2 {
            return Err(TribeError::InvalidCategory(format!(
                "{} needs at least 2 tribes",
                self.id
            )));
        }
        let mut seen = HashSet::new();
        for t in &self.tribes {
            if !seen.insert(t.id.as_str()) {
                return Err(TribeError::InvalidCategory(format!("duplicate tribe id {}", t.id)));
            }
        }
        Ok(())
    }

    pub fn tribe_index(&self, tribe_id: &str) -> Option<usize> {
        self.tribes.iter().position(|t| t.id == tribe_id)
    }

    pub fn tribe_ids(&self) -> impl Iterator<Item = &str> {
        self.tribes.iter().map(|t| t.id.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_ships_three_categories_of_four() {
        let all = MacroCategory::builtin_all();
        let ids: Vec<&str> = all.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["alternative-realities", "lifestyle", "recreation"]);
        assert_eq!(all.iter().map(|c| c.tribes.len()).sum::<usize>(), 12);
        for c in all {
            c.validate().unwrap();
        }
        let lifestyle = MacroCategory::resolve("lifestyle").unwrap();
        let tribes: Vec<&str> = lifestyle.tribe_ids().collect();
        assert_eq!(tribes, ["fitness", "sedentary", "yolo", "vegan"]);
    }

    #[test]
    fn synthetic_categories_resolve() {
        let c = MacroCategory::resolve("synth-3").unwrap();
        assert_eq!(c.tribe_index("tribe2"), Some(2));
        assert!(MacroCategory::resolve("synth-1").is_err());
        assert!(matches!(
            MacroCategory::resolve("cooking"),
            Err(TribeError::UnknownCategory(_))
        ));
    }

    #[test]
    fn duplicate_tribe_ids_are_invalid() {
        let mut c = MacroCategory::synthetic(2);
        c.tribes[1].id = "tribe0".into();
        assert!(c.validate().is_err());
    }
}
