//! Generate a planted-tribe corpus, write it as JSONL and check it.
//!
//! `cargo run --example synth_corpus -- <out-dir> [separation] [seed]`

use std::path::PathBuf;

use tribeforge::corpus::{
    generate_synthetic, load_corpus, validate_corpus, write_corpus, write_ground_truth, SynthConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "planted".into()));
    let separation: f64 = args.next().map_or(Ok(0.9), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;

    let config = SynthConfig {
        separation,
        seed,
        ..SynthConfig::default()
    };
    let (corpus, truth) = generate_synthetic(&config)?;
    std::fs::create_dir_all(&out)?;
    let (tweets, profiles) = (out.join("tweets.jsonl"), out.join("profiles.jsonl"));
    write_corpus(&corpus, &tweets, &profiles)?;
    write_ground_truth(&truth, out.join("truth.tsv"))?;

    let (back, load) = load_corpus(&tweets, &profiles)?;
    let report = validate_corpus(&back);
    let (first, last) = back.time_span();
    println!("{} tweets by {} users, {first} .. {last}", back.tweets().len(), back.users().len());
    println!("malformed lines {}, consistency issues {}", load.warning_count(), report.issue_count());
    println!("sample: {}", back.tweets()[0].text);
    Ok(())
}
