//! One-way ANOVA with Tukey HSD on hand-made groups, rendered as a report
//! section and as JSONL records.
//!
//! `cargo run --example anova_report`

use tribeforge::stats::{one_way_anova, render_section, tukey_hsd, GroupSample};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let groups = [
        GroupSample::new("runners", vec![3.1, 2.8, 3.6, 3.3, 2.9, 3.4]),
        GroupSample::new("gamers", vec![2.2, 2.5, 2.1, 2.6, 2.4, 2.0]),
        GroupSample::new("cooks", vec![2.9, 3.0, 2.7, 3.2, 2.8, 3.1]),
    ];
    let anova = one_way_anova(&groups)?;
    let pairs = tukey_hsd(&groups, &anova)?;
    print!("{}", render_section("Messages per day", &anova, &pairs));
    for p in &pairs {
        println!(
            "{} vs {}: diff {:+.3}, q {:.3}, p {:.4} {}",
            p.label_a,
            p.label_b,
            p.mean_diff,
            p.q.unwrap_or(f64::NAN),
            p.p.unwrap_or(f64::NAN),
            p.stars
        );
    }
    Ok(())
}
