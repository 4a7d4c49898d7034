//! Seven honest-signal metrics per user, written as CSV to stdout.
//!
//! `cargo run --release --example honest_signals -- [window_days] [step_days]`

use tribeforge::corpus::{generate_synthetic, SynthConfig};
use tribeforge::signals::{bundled_sentiment_model, signal_profiles, write_profiles_csv, SignalConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = SignalConfig {
        window_days: args.next().map_or(Ok(7), |s| s.parse())?,
        step_days: args.next().map_or(Ok(1), |s| s.parse())?,
    };
    let (corpus, _) = generate_synthetic(&SynthConfig {
        n_tribes: 2,
        users_per_tribe: 10,
        ..SynthConfig::default()
    })?;
    let profiles = signal_profiles(&corpus, corpus.authors(), bundled_sentiment_model(), &config)?;
    write_profiles_csv(std::io::stdout().lock(), &profiles)?;
    Ok(())
}
