//! Drive the project store and job queue in-process, then optionally serve
//! the same store over HTTP.
//!
//! `cargo run --release -p tribeforge-service --example service_walkthrough -- [data-dir] [--serve]`

use std::time::Duration;

use tribeforge::corpus::{generate_synthetic, SynthConfig};
use tribeforge::signals::SignalConfig;
use tribeforge::textmodel::TrainConfig;
use tribeforge::tribecraft::Verdict;
use tribeforge_service::{DecisionRequest, JobState, Service, DEFAULT_PORT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let data = args.iter().find(|a| !a.starts_with("--")).cloned().unwrap_or_else(|| "walkthrough-data".into());
    let svc = Service::open(&data)?;

    let (corpus, truth) = generate_synthetic(&SynthConfig {
        n_tribes: 3,
        users_per_tribe: 20,
        tweets_per_user: 20,
        ..SynthConfig::default()
    })?;
    svc.import_corpus("planted", &corpus, Some(&truth))?;
    let project = svc.create_project("synth-3", Some("planted"), Some("walkthrough"))?;
    let id = project.project_id;

    for (user, &k) in truth.iter().filter(|(u, _)| u.ends_with(['0', '1', '2'])) {
        svc.decide(
            &id,
            DecisionRequest {
                user_id: user.clone(),
                tribe_id: format!("tribe{k}"),
                verdict: Verdict::Keep,
                request_key: Some(format!("keep-{user}")),
                actor: Some("walkthrough".into()),
            },
        )?;
    }
    println!("{id}: {} decisions", svc.decisions(&id)?.len());

    let config = TrainConfig {
        embed_dim: 16,
        hidden_dim: 16,
        epochs: 4,
        learning_rate: 5e-3,
        min_leader_tweets: 50,
        ..TrainConfig::new(3)
    };
    let train = svc.submit_training(&id, config, false, Some("train-1"))?;
    let analysis = svc.submit_analysis(&id, None, None, SignalConfig::default(), Some("analyze-1"))?;
    for job in [train, analysis] {
        let done = svc.wait_job(&job.job_id, Duration::from_secs(600))?;
        println!("{} {:?} {:?} -> {}", done.job_id, done.kind, done.state, done.result.clone().or(done.error.clone()).unwrap_or_default());
        if done.state == JobState::Done && done.result.as_deref().is_some_and(|r| r.starts_with('r')) {
            print!("{}", svc.report(done.result.as_deref().unwrap(), "text")?);
        }
    }

    if args.iter().any(|a| a == "--serve") {
        let addr = std::net::SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT));
        println!("serving {data} on http://{addr}");
        tokio::runtime::Runtime::new()?.block_on(tribeforge_service::serve(svc, addr))?;
    }
    Ok(())
}
