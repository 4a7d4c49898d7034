use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::anova::{one_way_anova, AnovaResult, GroupMean, GroupSample};
use super::tukey::{tukey_hsd, TukeyPair};
use super::StatsError;
use crate::signals::{SignalProfile, METRICS};

/// Minimum users a tribe needs to take part in the comparison.
pub const MIN_GROUP_SIZE: usize = 2;

pub fn metric_title(metric: &str) -> &str {
    match metric {
        "degree" => "Degree centrality",
        "betweenness" => "Betweenness centrality",
        "messages_sent" => "Messages sent",
        "rotating_leadership" => "Rotating leadership",
        "sentiment" => "Average sentiment",
        "emotionality" => "Average emotionality",
        "complexity" => "Average complexity",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSection {
    pub metric: String,
    pub anova: AnovaResult,
    pub pairs: Vec<TukeyPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedTribe {
    pub tribe: String,
    pub users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TribeComparisonReport {
    pub macro_category: String,
    pub tribes: Vec<String>,
    pub excluded: Vec<ExcludedTribe>,
    pub sections: Vec<MetricSection>,
}

/// ANOVA plus Tukey pairs for all seven metrics. `groups` is in display
/// order; tribes with fewer than [`MIN_GROUP_SIZE`] users are excluded.
pub fn build_report(
    macro_category: &str,
    groups: &[(String, Vec<SignalProfile>)],
) -> Result<TribeComparisonReport, StatsError> {
    let (kept, dropped): (Vec<_>, Vec<_>) = groups.iter().partition(|(_, p)| p.len() >= MIN_GROUP_SIZE);
    if kept.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    let sections = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..METRICS.len())
            .map(|m| {
                let kept = &kept;
                scope.spawn(move || {
                    let samples: Vec<GroupSample> = kept
                        .iter()
                        .map(|(tribe, profiles)| {
                            GroupSample::new(tribe.clone(), profiles.iter().map(|p| p.values()[m]).collect())
                        })
                        .collect();
                    let anova = one_way_anova(&samples)?;
                    let pairs = tukey_hsd(&samples, &anova)?;
                    Ok(MetricSection {
                        metric: METRICS[m].to_string(),
                        anova,
                        pairs,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("metric section panicked"))
            .collect::<Result<Vec<_>, StatsError>>()
    })?;
    Ok(TribeComparisonReport {
        macro_category: macro_category.to_string(),
        tribes: kept.iter().map(|(t, _)| t.clone()).collect(),
        excluded: dropped
            .iter()
            .map(|(t, p)| ExcludedTribe {
                tribe: t.clone(),
                users: p.len(),
            })
            .collect(),
        sections,
    })
}

// Column widths of the ANOVA half.
const W_LABEL: usize = 16;
const W_SS: usize = 16;
const W_DF: usize = 8;
const W_MS: usize = 14;
const W_F: usize = 10;
const W_SIG: usize = 8;
const LEFT: usize = W_LABEL + W_SS + W_DF + W_MS + W_F + W_SIG;

pub const HEADER_COLUMNS: [&str; 6] = ["Sum of squares", "df", "Mean square", "F", "Sig.", "Mean"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

/// One metric block: ANOVA rows on the left, `label = mean` rows with the
/// pairwise star matrix on the right.
pub fn render_section(title: &str, anova: &AnovaResult, pairs: &[TukeyPair]) -> String {
    let labels: Vec<&str> = anova.group_means.iter().map(|g| g.label.as_str()).collect();
    let mean_cells: Vec<String> = anova
        .group_means
        .iter()
        .map(|g| format!("{} = {:.3}", g.label, g.mean))
        .collect();
    let w_mean = mean_cells.iter().map(|c| c.chars().count()).max().unwrap_or(0).max(4);
    let star_w: Vec<usize> = labels.iter().map(|l| l.chars().count().max(3)).collect();
    let stars = |a: &str, b: &str| -> &str {
        pairs
            .iter()
            .find(|p| (p.label_a == a && p.label_b == b) || (p.label_a == b && p.label_b == a))
            .map_or("", |p| p.stars.as_str())
    };

    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "{:<W_LABEL$}{:<w$}  | Post hoc analysis (Tukey HSD)",
        "",
        "One-way ANOVA",
        w = LEFT - W_LABEL
    );
    let mut header = format!(
        "{:<W_LABEL$}{:>W_SS$}{:>W_DF$}{:>W_MS$}{:>W_F$}{:>W_SIG$}  | {:<w_mean$}",
        "", HEADER_COLUMNS[0], HEADER_COLUMNS[1], HEADER_COLUMNS[2], HEADER_COLUMNS[3], HEADER_COLUMNS[4],
        HEADER_COLUMNS[5]
    );
    for (l, w) in labels.iter().zip(&star_w) {
        let _ = write!(header, "  {l:>w$}");
    }
    let _ = writeln!(out, "{}", header.trim_end());

    let anova_rows = [
        format!(
            "{:<W_LABEL$}{:>W_SS$.3}{:>W_DF$}{:>W_MS$.3}{:>W_F$}{:>W_SIG$}",
            "Between groups",
            anova.ss_between,
            anova.df_between,
            anova.ms_between,
            fmt_opt(anova.f),
            fmt_opt(anova.p)
        ),
        format!(
            "{:<W_LABEL$}{:>W_SS$.3}{:>W_DF$}{:>W_MS$.3}",
            "Within groups", anova.ss_within, anova.df_within, anova.ms_within
        ),
        format!(
            "{:<W_LABEL$}{:>W_SS$.3}{:>W_DF$}",
            "Total",
            anova.ss_total,
            anova.df_between + anova.df_within
        ),
    ];
    for row in 0..anova_rows.len().max(labels.len()) {
        let left = anova_rows.get(row).map_or("", String::as_str);
        let mut line = format!("{left:<LEFT$}  | ");
        if let Some(cell) = mean_cells.get(row) {
            let _ = write!(line, "{cell:<w_mean$}");
            for (other, w) in labels.iter().zip(&star_w) {
                let s = if *other == labels[row] { "" } else { stars(labels[row], other) };
                let _ = write!(line, "  {s:>w$}");
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

impl TribeComparisonReport {
    pub fn section(&self, metric: &str) -> Option<&MetricSection> {
        self.sections.iter().find(|s| s.metric == metric)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Tribe comparison: {}", self.macro_category);
        let sizes: Vec<String> = match self.sections.first() {
            Some(s) => s.anova.group_means.iter().map(|g| format!("{} (n={})", g.label, g.n)).collect(),
            None => self.tribes.clone(),
        };
        let _ = writeln!(out, "Tribes: {}", sizes.join(", "));
        if !self.excluded.is_empty() {
            let ex: Vec<String> = self
                .excluded
                .iter()
                .map(|e| format!("{} (n={})", e.tribe, e.users))
                .collect();
            let _ = writeln!(out, "Excluded (fewer than {MIN_GROUP_SIZE} users): {}", ex.join(", "));
        }
        for s in &self.sections {
            out.push('\n');
            out.push_str(&render_section(metric_title(&s.metric), &s.anova, &s.pairs));
        }
        out.push('\n');
        out.push_str("Tukey HSD with the Tukey-Kramer correction for unequal group sizes.\n");
        out.push_str("* p < 0.05, ** p < 0.01, *** p < 0.001. Marginal differences (0.05 <= p < 0.1) are not starred.\n");
        out.push_str("n/a: no variation within groups, F and p undefined.\n");
        out
    }

    pub fn to_records(&self) -> Vec<ReportRecord> {
        let mut recs = vec![ReportRecord::Report {
            macro_category: self.macro_category.clone(),
            tribes: self.tribes.clone(),
            excluded: self.excluded.clone(),
        }];
        for s in &self.sections {
            let a = &s.anova;
            let stats = [
                ("ss_between", Some(a.ss_between)),
                ("ss_within", Some(a.ss_within)),
                ("ss_total", Some(a.ss_total)),
                ("df_between", Some(a.df_between as f64)),
                ("df_within", Some(a.df_within as f64)),
                ("ms_between", Some(a.ms_between)),
                ("ms_within", Some(a.ms_within)),
                ("f", a.f),
                ("p", a.p),
            ];
            for (name, value) in stats {
                recs.push(ReportRecord::Stat {
                    metric: s.metric.clone(),
                    statistic: name.to_string(),
                    value,
                });
            }
            for g in &a.group_means {
                recs.push(ReportRecord::Group {
                    metric: s.metric.clone(),
                    tribe: g.label.clone(),
                    n: g.n,
                    mean: g.mean,
                });
            }
            for p in &s.pairs {
                recs.push(ReportRecord::Pair {
                    metric: s.metric.clone(),
                    pair: p.clone(),
                });
            }
        }
        recs
    }

    pub fn write_records<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in self.to_records() {
            serde_json::to_writer(&mut out, &r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn records_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_records(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn from_records(records: impl IntoIterator<Item = ReportRecord>) -> Result<Self, StatsError> {
        let bad = |reason: String| StatsError::ReportFormat(reason);
        let mut header = None;
        let mut sections: Vec<MetricSection> = Vec::new();
        let section_for = |sections: &mut Vec<MetricSection>, metric: &str| -> usize {
            match sections.iter().position(|s| s.metric == metric) {
                Some(i) => i,
                None => {
                    sections.push(MetricSection {
                        metric: metric.to_string(),
                        anova: AnovaResult {
                            ss_between: 0.0,
                            ss_within: 0.0,
                            ss_total: 0.0,
                            df_between: 0,
                            df_within: 0,
                            ms_between: 0.0,
                            ms_within: 0.0,
                            f: None,
                            p: None,
                            group_means: Vec::new(),
                        },
                        pairs: Vec::new(),
                    });
                    sections.len() - 1
                }
            }
        };
        for r in records {
            match r {
                ReportRecord::Report {
                    macro_category,
                    tribes,
                    excluded,
                } => {
                    if header.replace((macro_category, tribes, excluded)).is_some() {
                        return Err(bad("duplicate report record".into()));
                    }
                }
                ReportRecord::Stat {
                    metric,
                    statistic,
                    value,
                } => {
                    let i = section_for(&mut sections, &metric);
                    let a = &mut sections[i].anova;
                    let need = || value.ok_or_else(|| bad(format!("{metric}.{statistic} is null")));
                    let int = |v: f64| {
                        if v >= 0.0 && v.fract() == 0.0 {
                            Ok(v as u64)
                        } else {
                            Err(bad(format!("{metric}.{statistic} is not a count")))
                        }
                    };
                    match statistic.as_str() {
                        "ss_between" => a.ss_between = need()?,
                        "ss_within" => a.ss_within = need()?,
                        "ss_total" => a.ss_total = need()?,
                        "df_between" => a.df_between = int(need()?)?,
                        "df_within" => a.df_within = int(need()?)?,
                        "ms_between" => a.ms_between = need()?,
                        "ms_within" => a.ms_within = need()?,
                        "f" => a.f = value,
                        "p" => a.p = value,
                        other => return Err(bad(format!("unknown statistic {other}"))),
                    }
                }
                ReportRecord::Group { metric, tribe, n, mean } => {
                    let i = section_for(&mut sections, &metric);
                    sections[i].anova.group_means.push(GroupMean { label: tribe, n, mean });
                }
                ReportRecord::Pair { metric, pair } => {
                    let i = section_for(&mut sections, &metric);
                    sections[i].pairs.push(pair);
                }
            }
        }
        let (macro_category, tribes, excluded) = header.ok_or_else(|| bad("missing report record".into()))?;
        Ok(Self {
            macro_category,
            tribes,
            excluded,
            sections,
        })
    }

    pub fn parse_records(jsonl: &str) -> Result<Self, StatsError> {
        let records = jsonl
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| StatsError::ReportFormat(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<ReportRecord>, _>>()?;
        Self::from_records(records)
    }
}

/// One line of the machine-readable export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ReportRecord {
    Report {
        macro_category: String,
        tribes: Vec<String>,
        excluded: Vec<ExcludedTribe>,
    },
    Stat {
        metric: String,
        statistic: String,
        value: Option<f64>,
    },
    Group {
        metric: String,
        tribe: String,
        n: usize,
        mean: f64,
    },
    Pair {
        metric: String,
        #[serde(flatten)]
        pair: TukeyPair,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(user: &str, base: f64, i: usize) -> SignalProfile {
        SignalProfile {
            user_id: user.into(),
            degree: (base as u32) + (i % 3) as u32,
            betweenness: base * 0.5 + i as f64 * 0.25,
            messages_sent: 10 + i as u32,
            rotating_leadership: (i % 2) as u32,
            sentiment: 0.4 + base * 0.01 + i as f64 * 0.003,
            emotionality: 0.2 + i as f64 * 0.01,
            complexity: 7.0 + base * 0.1 + (i % 4) as f64 * 0.2,
        }
    }

    fn groups() -> Vec<(String, Vec<SignalProfile>)> {
        vec![
            ("alpha".into(), (0..6).map(|i| profile(&format!("a{i}"), 1.0, i)).collect()),
            ("beta".into(), (0..8).map(|i| profile(&format!("b{i}"), 5.0, i)).collect()),
            ("gamma".into(), vec![profile("g0", 3.0, 0)]),
        ]
    }

    #[test]
    fn seven_sections_and_exclusions() {
        let r = build_report("test", &groups()).unwrap();
        assert_eq!(r.sections.len(), 7);
        assert_eq!(r.tribes, ["alpha", "beta"]);
        assert_eq!(r.excluded, [ExcludedTribe { tribe: "gamma".into(), users: 1 }]);
        for (s, m) in r.sections.iter().zip(METRICS) {
            assert_eq!(s.metric, m);
            assert_eq!(s.pairs.len(), 1);
            assert_eq!(s.anova.group_means.len(), 2);
        }
        let text = r.render_text();
        assert!(text.contains("Excluded (fewer than 2 users): gamma (n=1)"));
        assert!(text.contains("Rotating leadership"));
    }

    #[test]
    fn too_few_tribes() {
        let g = groups();
        assert_eq!(build_report("x", &g[..1]), Err(StatsError::TooFewGroups));
        assert_eq!(build_report("x", &[g[0].clone(), g[2].clone()]), Err(StatsError::TooFewGroups));
    }

    #[test]
    fn records_round_trip() {
        let r = build_report("test", &groups()).unwrap();
        let back = TribeComparisonReport::parse_records(&r.records_jsonl()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn header_row_has_table_columns() {
        let a = AnovaResult::from_sums(344.557, 3, 498262.430, 25241).unwrap();
        let text = render_section("Messages sent", &a, &[]);
        let header = text.lines().nth(2).unwrap();
        let cols: Vec<&str> = header
            .split('|')
            .flat_map(|half| half.split("  "))
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .collect();
        assert_eq!(cols, HEADER_COLUMNS);
    }

    #[test]
    fn malformed_records() {
        assert!(TribeComparisonReport::parse_records("").is_err());
        assert!(TribeComparisonReport::parse_records("{\"record\":\"nope\"}").is_err());
        let line = r#"{"record":"report","macro_category":"m","tribes":[],"excluded":[]}"#;
        let stat = r#"{"record":"stat","metric":"degree","statistic":"df_within","value":2.5}"#;
        assert!(TribeComparisonReport::parse_records(&format!("{line}\n{stat}")).is_err());
    }
}
