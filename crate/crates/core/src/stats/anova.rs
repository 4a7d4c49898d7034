use serde::{Deserialize, Serialize};

use super::special::f_sf;
use super::StatsError;

/// One group's observations (one value per user).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSample {
    pub label: String,
    pub values: Vec<f64>,
}

impl GroupSample {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub label: String,
    pub n: usize,
    pub mean: f64,
}

/// One-way ANOVA table. `f` and `p` are `None` when the within-group mean
/// square is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
    pub df_between: u64,
    pub df_within: u64,
    pub ms_between: f64,
    pub ms_within: f64,
    pub f: Option<f64>,
    pub p: Option<f64>,
    pub group_means: Vec<GroupMean>,
}

impl AnovaResult {
    /// Builds the table from sums of squares and degrees of freedom alone.
    pub fn from_sums(ss_between: f64, df_between: u64, ss_within: f64, df_within: u64) -> Result<Self, StatsError> {
        if df_between == 0 || df_within == 0 {
            return Err(StatsError::TooFewGroups);
        }
        if !(ss_between.is_finite() && ss_within.is_finite()) || ss_between < 0.0 || ss_within < 0.0 {
            return Err(StatsError::NonFinite);
        }
        let ms_between = ss_between / df_between as f64;
        let ms_within = ss_within / df_within as f64;
        let (f, p) = if ms_within > 0.0 {
            let f = ms_between / ms_within;
            (Some(f), Some(f_sf(f, df_between as f64, df_within as f64).clamp(0.0, 1.0)))
        } else {
            (None, None)
        };
        Ok(Self {
            ss_between,
            ss_within,
            ss_total: ss_between + ss_within,
            df_between,
            df_within,
            ms_between,
            ms_within,
            f,
            p,
            group_means: Vec::new(),
        })
    }

    /// True when there is no within-group variation, so F is undefined.
    pub fn is_degenerate(&self) -> bool {
        self.f.is_none()
    }

    pub fn mean_of(&self, label: &str) -> Option<f64> {
        self.group_means.iter().find(|g| g.label == label).map(|g| g.mean)
    }
}

pub fn one_way_anova(groups: &[GroupSample]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if let Some(g) = groups.iter().find(|g| g.is_empty()) {
        return Err(StatsError::EmptyGroup(g.label.clone()));
    }
    if groups.iter().any(|g| g.values.iter().any(|v| !v.is_finite())) {
        return Err(StatsError::NonFinite);
    }
    let k = groups.len();
    let n: usize = groups.iter().map(GroupSample::len).sum();
    if n < k + 1 {
        return Err(StatsError::TooFewObservations { n, k });
    }
    let grand = groups.iter().flat_map(|g| &g.values).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    let mut group_means = Vec::with_capacity(k);
    for g in groups {
        let m = g.mean();
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.values.iter().map(|v| (v - m).powi(2)).sum::<f64>();
        group_means.push(GroupMean {
            label: g.label.clone(),
            n: g.len(),
            mean: m,
        });
    }
    let mut result = AnovaResult::from_sums(ss_between, (k - 1) as u64, ss_within, (n - k) as u64)?;
    result.group_means = group_means;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(label: &str, v: &[f64]) -> GroupSample {
        GroupSample::new(label, v.to_vec())
    }

    #[test]
    fn identical_groups() {
        let r = one_way_anova(&[g("a", &[1.0, 2.0, 3.0]), g("b", &[1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(r.ss_between, 0.0);
        assert_eq!(r.f, Some(0.0));
        assert_eq!(r.p, Some(1.0));
    }

    #[test]
    fn hand_decomposition() {
        let r = one_way_anova(&[g("a", &[1.0, 2.0]), g("b", &[3.0, 4.0])]).unwrap();
        assert!((r.ss_between - 4.0).abs() < 1e-12);
        assert!((r.ss_within - 1.0).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 2));
        assert!((r.f.unwrap() - 8.0).abs() < 1e-12);
        assert!((r.p.unwrap() - (1.0 - 0.8f64.sqrt())).abs() < 1e-10);
        assert_eq!(r.mean_of("b"), Some(3.5));
    }

    #[test]
    fn constant_values_are_flagged() {
        let r = one_way_anova(&[g("a", &[2.0, 2.0]), g("b", &[2.0, 2.0])]).unwrap();
        assert!(r.is_degenerate());
        assert_eq!(r.p, None);
        // distinct means but no spread inside groups
        let r = one_way_anova(&[g("a", &[1.0, 1.0]), g("b", &[2.0, 2.0])]).unwrap();
        assert!(r.is_degenerate());
    }

    #[test]
    fn preconditions() {
        assert_eq!(one_way_anova(&[g("a", &[1.0, 2.0])]), Err(StatsError::TooFewGroups));
        assert_eq!(
            one_way_anova(&[g("a", &[1.0]), g("b", &[2.0])]),
            Err(StatsError::TooFewObservations { n: 2, k: 2 })
        );
        assert_eq!(
            one_way_anova(&[g("a", &[1.0, 2.0]), g("b", &[])]),
            Err(StatsError::EmptyGroup("b".into()))
        );
        assert_eq!(one_way_anova(&[g("a", &[1.0, f64::NAN]), g("b", &[1.0])]), Err(StatsError::NonFinite));
    }
}
