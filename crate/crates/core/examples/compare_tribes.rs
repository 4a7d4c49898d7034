//! Full analysis: train on planted leaders, allocate everyone, compute
//! honest signals and compare tribes. Pass keywords to restrict the signals
//! to tweets about a brand.
//!
//! `cargo run --release --example compare_tribes -- [keyword ...]`

use tribeforge::corpus::{generate_synthetic, shared_token, synthetic_start, SynthConfig};
use tribeforge::pipeline::{analyze, seed_leaders_from_ground_truth};
use tribeforge::signals::{bundled_sentiment_model, SignalConfig};
use tribeforge::textmodel::{train_classifier, TrainConfig};
use tribeforge::tribecraft::{MacroCategory, TribeProject};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let keywords: Vec<String> = std::env::args().skip(1).collect();
    let synth = SynthConfig {
        n_tribes: 3,
        users_per_tribe: 25,
        tweets_per_user: 20,
        ..SynthConfig::default()
    };
    let (corpus, truth) = generate_synthetic(&synth)?;
    let mut project = TribeProject::new("demo", MacroCategory::synthetic(3))?;
    seed_leaders_from_ground_truth(&mut project, &truth, 6, "example", synthetic_start())?;
    let config = TrainConfig {
        embed_dim: 16,
        hidden_dim: 16,
        epochs: 4,
        learning_rate: 5e-3,
        min_leader_tweets: 100,
        ..TrainConfig::new(1)
    };
    let classifier = train_classifier(&project, &corpus, &config, false, &mut |_| {})?;

    let filter = (!keywords.is_empty()).then_some(keywords.as_slice());
    if filter.is_none() {
        eprintln!("tip: pass e.g. `{}` to analyse one brand", shared_token(0));
    }
    let analysis = analyze(&classifier, &corpus, bundled_sentiment_model(), &SignalConfig::default(), filter)?;
    print!("{}", analysis.report.render_text());
    Ok(())
}
