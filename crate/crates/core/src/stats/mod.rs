//! One-way ANOVA, Tukey HSD post-hoc comparisons and tribe comparison reports.

mod anova;
mod report;
mod special;
mod tukey;

use thiserror::Error;

pub use anova::{one_way_anova, AnovaResult, GroupMean, GroupSample};
pub use report::{
    build_report, metric_title, render_section, ExcludedTribe, MetricSection, ReportRecord, TribeComparisonReport,
    HEADER_COLUMNS, MIN_GROUP_SIZE,
};
pub use special::{
    f_cdf, f_sf, integrate, normal_cdf, regularized_beta, studentized_range_cdf, studentized_range_cdf_tol,
    STUDENTIZED_RANGE_TOL,
};
pub use tukey::{significance_stars, tukey_hsd, tukey_hsd_tol, TukeyPair};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least two groups with enough observations")]
    TooFewGroups,
    #[error("group {0} has no observations")]
    EmptyGroup(String),
    #[error("{n} observations in {k} groups leave no within-group degrees of freedom")]
    TooFewObservations { n: usize, k: usize },
    #[error("non-finite or negative input")]
    NonFinite,
    #[error("report records: {0}")]
    ReportFormat(String),
}
