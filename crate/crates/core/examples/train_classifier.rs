//! Train a tribe classifier on a planted-tribe corpus and score it.
//!
//! `cargo run --release --example train_classifier -- [separation] [seed]`

use std::collections::BTreeSet;
use std::time::Instant;

use tribeforge::corpus::{generate_synthetic, synthetic_start, SynthConfig};
use tribeforge::pipeline::{allocate_corpus, seed_leaders_from_ground_truth, tweet_accuracy, user_accuracy};
use tribeforge::textmodel::{train_classifier, TrainConfig};
use tribeforge::tribecraft::{MacroCategory, TribeProject};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let separation: f64 = args.next().map_or(Ok(0.9), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;

    let synth = SynthConfig {
        separation,
        seed,
        ..SynthConfig::default()
    };
    let (corpus, truth) = generate_synthetic(&synth)?;
    let mut project = TribeProject::new("demo", MacroCategory::synthetic(synth.n_tribes))?;
    seed_leaders_from_ground_truth(&mut project, &truth, 10, "example", synthetic_start())?;
    let leaders: BTreeSet<String> = project.all_leaders().values().flatten().cloned().collect();

    let started = Instant::now();
    let classifier = train_classifier(&project, &corpus, &TrainConfig::new(seed), false, &mut |m| {
        println!("epoch {:>2}  loss {:.4}  train acc {:.3}", m.epoch, m.loss, m.accuracy)
    })?;
    println!("trained in {:.1?}", started.elapsed());

    let allocations = allocate_corpus(&classifier, &corpus);
    let users = user_accuracy(&allocations, &truth, &leaders);
    let tweets = tweet_accuracy(&classifier, &corpus, &truth, &leaders);
    println!("held-out tweet accuracy {:.3} ({}/{})", tweets.rate(), tweets.correct, tweets.total);
    println!("held-out user accuracy  {:.3} ({}/{})", users.rate(), users.correct, users.total);
    Ok(())
}
