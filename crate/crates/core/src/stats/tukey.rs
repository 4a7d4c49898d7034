use serde::{Deserialize, Serialize};

use super::anova::{AnovaResult, GroupSample};
use super::special::studentized_range_cdf_tol;
use super::{StatsError, STUDENTIZED_RANGE_TOL};

/// One unordered pairwise comparison. `mean_diff` is `mean(a) - mean(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub label_a: String,
    pub label_b: String,
    pub mean_diff: f64,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub stars: String,
}

/// `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn significance_stars(p: Option<f64>) -> &'static str {
    match p {
        Some(p) if p < 0.001 => "***",
        Some(p) if p < 0.01 => "**",
        Some(p) if p < 0.05 => "*",
        _ => "",
    }
}

pub fn tukey_hsd(groups: &[GroupSample], anova: &AnovaResult) -> Result<Vec<TukeyPair>, StatsError> {
    tukey_hsd_tol(groups, anova, STUDENTIZED_RANGE_TOL)
}

/// Tukey–Kramer comparisons for every unordered pair, in input order.
pub fn tukey_hsd_tol(groups: &[GroupSample], anova: &AnovaResult, tol: f64) -> Result<Vec<TukeyPair>, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if let Some(g) = groups.iter().find(|g| g.is_empty()) {
        return Err(StatsError::EmptyGroup(g.label.clone()));
    }
    let k = groups.len();
    let means: Vec<f64> = groups.iter().map(GroupSample::mean).collect();
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let diff = means[a] - means[b];
            let (q, p) = if anova.is_degenerate() {
                (None, None)
            } else {
                let se = (anova.ms_within * (1.0 / groups[a].len() as f64 + 1.0 / groups[b].len() as f64) / 2.0).sqrt();
                let q = diff.abs() / se;
                let p = 1.0 - studentized_range_cdf_tol(q, k, anova.df_within as f64, tol);
                (Some(q), Some(p.clamp(0.0, 1.0)))
            };
            pairs.push(TukeyPair {
                label_a: groups[a].label.clone(),
                label_b: groups[b].label.clone(),
                mean_diff: diff,
                q,
                p,
                stars: significance_stars(p).to_string(),
            });
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::one_way_anova;

    #[test]
    fn star_thresholds() {
        assert_eq!(significance_stars(Some(0.0005)), "***");
        assert_eq!(significance_stars(Some(0.005)), "**");
        assert_eq!(significance_stars(Some(0.02)), "*");
        assert_eq!(significance_stars(Some(0.05)), "");
        assert_eq!(significance_stars(Some(0.10557)), "");
        assert_eq!(significance_stars(None), "");
    }

    #[test]
    fn identical_means_are_not_significant() {
        let groups = [
            GroupSample::new("a", vec![1.0, 2.0, 3.0]),
            GroupSample::new("b", vec![3.0, 2.0, 1.0]),
            GroupSample::new("c", vec![0.0, 2.0, 4.0]),
        ];
        let anova = one_way_anova(&groups).unwrap();
        let pairs = tukey_hsd(&groups, &anova).unwrap();
        assert_eq!(pairs.len(), 3);
        for p in pairs {
            assert_eq!(p.q, Some(0.0));
            assert_eq!(p.p, Some(1.0));
            assert_eq!(p.stars, "");
        }
    }

    #[test]
    fn degenerate_anova_gives_unflagged_pairs() {
        let groups = [GroupSample::new("a", vec![1.0, 1.0]), GroupSample::new("b", vec![2.0, 2.0])];
        let anova = one_way_anova(&groups).unwrap();
        let pairs = tukey_hsd(&groups, &anova).unwrap();
        assert_eq!(pairs[0].mean_diff, -1.0);
        assert_eq!((pairs[0].q, pairs[0].p, pairs[0].stars.as_str()), (None, None, ""));
    }

    #[test]
    fn separated_groups_get_three_stars() {
        let groups = [
            GroupSample::new("low", (0..30).map(|i| (i % 5) as f64).collect()),
            GroupSample::new("high", (0..40).map(|i| 10.0 + (i % 5) as f64).collect()),
        ];
        let anova = one_way_anova(&groups).unwrap();
        let pairs = tukey_hsd(&groups, &anova).unwrap();
        assert_eq!(pairs[0].stars, "***");
    }
}
