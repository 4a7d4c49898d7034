//! Subcommand implementations over the service library.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;
use tribeforge::corpus::{generate_synthetic, load_corpus, validate_corpus, write_corpus, write_ground_truth, read_ground_truth, SynthConfig};
use tribeforge::pipeline::{allocate_corpus, user_accuracy};
use tribeforge::signals::{bundled_sentiment_model, signal_profiles, write_profiles_csv, SignalConfig};
use tribeforge::textmodel::TrainConfig;
use tribeforge::tribecraft::SearchWeights;
use tribeforge_service::{DecisionRequest, Job, JobState, Service};

use crate::args::*;
use crate::Failure;

const JOB_TIMEOUT: Duration = Duration::from_secs(24 * 3600);

pub fn ingest(svc: &Service, a: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let (corpus, load) = load_corpus(&a.tweets, &a.profiles)?;
    let truth = a.truth.as_ref().map(read_ground_truth).transpose()?;
    svc.import_corpus(&a.name, &corpus, truth.as_ref())?;
    for line in &load.malformed_tweet_lines {
        eprintln!("warning: skipped malformed tweet record at line {line}");
    }
    for line in &load.malformed_profile_lines {
        eprintln!("warning: skipped malformed profile record at line {line}");
    }
    writeln!(
        out,
        "{}: {} tweets, {} users, {} warnings",
        a.name,
        corpus.tweets().len(),
        corpus.users().len(),
        load.warning_count()
    )?;
    Ok(())
}

pub fn validate(svc: &Service, a: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let (corpus, malformed) = match (&a.source.corpus, &a.source.tweets, &a.profiles) {
        (Some(name), _, _) => ((*svc.corpus(name)?).clone(), 0),
        (None, Some(t), Some(p)) => {
            let (c, load) = load_corpus(t, p)?;
            (c, load.warning_count())
        }
        _ => bail!(Failure::Validation("--tweets needs --profiles".into())),
    };
    let report = validate_corpus(&corpus);
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        let rows = [
            ("duplicate tweet ids", report.duplicate_tweet_ids.len()),
            ("duplicate user ids", report.duplicate_user_ids.len()),
            ("dangling mentions", report.dangling_mentions.len()),
            ("dangling reply/retweet refs", report.dangling_tweet_refs.len()),
            ("dangling followers", report.dangling_followers.len()),
            ("dangling friends", report.dangling_friends.len()),
            ("authors without profile", report.profileless_users.len()),
            ("out-of-order tweets", report.out_of_order.len()),
            ("malformed records", malformed),
        ];
        for (what, n) in rows {
            writeln!(out, "{what:<28} {n}")?;
        }
    }
    let issues = report.issue_count() + malformed;
    if issues > 0 {
        bail!(Failure::Validation(format!("{issues} issues found")));
    }
    writeln!(out, "ok")?;
    Ok(())
}

pub fn synth(svc: Option<&Service>, a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let config = SynthConfig {
        n_tribes: a.tribes,
        users_per_tribe: a.users,
        tweets_per_user: a.tweets,
        separation: a.separation,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let (corpus, truth) = generate_synthetic(&config)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_corpus(&corpus, dir.join("tweets.jsonl"), dir.join("profiles.jsonl"))?;
        write_ground_truth(&truth, dir.join("truth.tsv"))?;
        writeln!(out, "wrote {}", dir.display())?;
    }
    if let (Some(name), Some(svc)) = (&a.name, svc) {
        svc.import_corpus(name, &corpus, Some(&truth))?;
        writeln!(out, "imported {name}")?;
    }
    writeln!(
        out,
        "{} tribes, {} users, {} tweets",
        config.n_tribes,
        truth.len(),
        corpus.tweets().len()
    )?;
    Ok(())
}

pub fn corpora(svc: &Service, out: &mut dyn Write) -> Result<()> {
    for name in svc.corpora()? {
        writeln!(out, "{name}")?;
    }
    Ok(())
}

fn json_line(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

pub fn project(svc: &Service, cmd: &ProjectCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        ProjectCommand::New(a) => {
            let view = svc.create_project(&a.macro_category, a.corpus.as_deref(), a.request_key.as_deref())?;
            writeln!(out, "{}", view.project_id)?;
        }
        ProjectCommand::List => {
            for p in svc.projects() {
                let corpus = p.corpus_ref.as_deref().unwrap_or("-");
                let leaders: usize = p.leaders.values().map(Vec::len).sum();
                writeln!(
                    out,
                    "{}\t{}\t{corpus}\t{leaders} leaders\t{}",
                    p.project_id,
                    p.macro_category.id,
                    if p.has_model { "trained" } else { "untrained" }
                )?;
            }
        }
        ProjectCommand::Show(r) => json_line(out, &svc.project(&r.project)?)?,
        ProjectCommand::Keywords(a) => {
            let kept = svc.set_keywords(&a.project, &a.tribe, &a.keywords)?;
            writeln!(out, "{}: {}", a.tribe, kept.join(" "))?;
        }
        ProjectCommand::Candidates(a) => {
            let weights = match &a.weights {
                Some(w) => SearchWeights::new(w[0], w[1], w[2], w[3])?,
                None => SearchWeights::default(),
            };
            let ranked = svc.candidates(&a.project, &a.tribe, a.limit, weights)?;
            if a.json {
                json_line(out, &ranked)?;
            } else {
                writeln!(out, "user_id\tscore\tbio\ttweets\tfollowers\tfriends")?;
                for c in ranked {
                    writeln!(
                        out,
                        "{}\t{:.4}\t{}\t{}\t{}\t{}",
                        c.user_id, c.combined, c.bio_hits, c.tweet_hits, c.follower_overlap, c.friend_overlap
                    )?;
                }
            }
        }
        ProjectCommand::Decide(a) => decide(svc, a, out)?,
        ProjectCommand::Decisions(r) => {
            for d in svc.decisions(&r.project)? {
                writeln!(out, "{}", serde_json::to_string(&d)?)?;
            }
        }
        ProjectCommand::Cloud(t) => {
            for h in svc.hashtag_cloud(&t.project, &t.tribe)? {
                writeln!(out, "{}\t{}", h.hashtag, h.count)?;
            }
        }
        ProjectCommand::Network(t) => json_line(out, &svc.leader_network(&t.project, &t.tribe)?)?,
    }
    Ok(())
}

/// One decision from a replay file. Extra fields (timestamps from a
/// project's own log) are ignored; the service stamps its own.
fn replay_request(line: &str) -> Result<DecisionRequest> {
    let v: Value = serde_json::from_str(line)?;
    let field = |k: &str| v.get(k).and_then(Value::as_str).map(String::from);
    let verdict = v.get("verdict").cloned().ok_or_else(|| anyhow!("missing verdict"))?;
    Ok(DecisionRequest {
        user_id: field("user_id").ok_or_else(|| anyhow!("missing user_id"))?,
        tribe_id: field("tribe_id").ok_or_else(|| anyhow!("missing tribe_id"))?,
        verdict: serde_json::from_value(Value::String(
            verdict.as_str().unwrap_or_default().to_uppercase(),
        ))?,
        request_key: field("request_key"),
        actor: field("actor"),
    })
}

fn decide(svc: &Service, a: &DecideArgs, out: &mut dyn Write) -> Result<()> {
    let Some(path) = &a.from_file else {
        let req = DecisionRequest {
            user_id: a.user.clone().unwrap_or_default(),
            tribe_id: a.tribe.clone().unwrap_or_default(),
            verdict: a.verdict.expect("required by the parser").into(),
            request_key: a.request_key.clone(),
            actor: a.actor.clone(),
        };
        let d = svc.decide(&a.project, req)?;
        writeln!(out, "{}", serde_json::to_string(&d)?)?;
        return Ok(());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut requests = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let req = replay_request(line)
            .map_err(|e| Failure::Validation(format!("{} line {}: {e}", path.display(), i + 1)))?;
        requests.push(req);
    }
    for req in requests {
        svc.decide(&a.project, req)?;
    }
    let project = svc.project(&a.project)?;
    for (tribe, leaders) in &project.leaders {
        writeln!(out, "{tribe}: {} leaders", leaders.len())?;
    }
    writeln!(out, "{} decisions in log", project.decision_count)?;
    Ok(())
}

/// Block until `job` ends. A failed job is a validation failure unless the
/// service reports a storage problem or a crash.
fn finish(svc: &Service, job: Job) -> Result<Job> {
    let mut last = -1.0;
    let deadline = std::time::Instant::now() + JOB_TIMEOUT;
    let done = loop {
        let j = svc.wait_job(&job.job_id, Duration::from_millis(500))?;
        if j.state.is_terminal() {
            break j;
        }
        if j.progress > last + 0.099 {
            eprintln!("{} {:?} {:.0}%", j.job_id, j.state, 100.0 * j.progress);
            last = j.progress;
        }
        if std::time::Instant::now() > deadline {
            bail!("job {} did not finish", j.job_id);
        }
    };
    if done.state == JobState::Failed {
        let msg = done.error.clone().unwrap_or_default();
        let msg = format!("job {} failed: {msg}", done.job_id);
        if msg.contains("storage error") || msg.contains("panicked") {
            bail!(msg);
        }
        bail!(Failure::Validation(msg));
    }
    Ok(done)
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut v = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Value>(&text).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Failure::Validation("training config must be a JSON object".into()))?;
    let mut set = |k: &str, x: Option<Value>| {
        if let Some(x) = x {
            obj.insert(k.into(), x);
        }
    };
    set("seed", a.seed.map(Value::from));
    set("epochs", a.epochs.map(Value::from));
    set("embed_dim", a.embed_dim.map(Value::from));
    set("hidden_dim", a.hidden_dim.map(Value::from));
    set("learning_rate", a.learning_rate.map(Value::from));
    set("min_leader_tweets", a.min_leader_tweets.map(Value::from));
    if !obj.contains_key("seed") {
        bail!(Failure::Validation("training needs --seed (or a seed in --config)".into()));
    }
    let config: TrainConfig = serde_json::from_value(v).map_err(|e| Failure::Validation(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn train(svc: &Service, a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let config = train_config(a)?;
    let job = svc.submit_training(&a.project, config, a.force, a.request_key.as_deref())?;
    if a.no_wait {
        writeln!(out, "{}", job.job_id)?;
        return Ok(());
    }
    let done = finish(svc, job)?;
    writeln!(out, "{} done: {}", done.job_id, done.result.unwrap_or_default())?;
    Ok(())
}

pub fn classify(svc: &Service, a: &ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    svc.project(&a.project)?;
    let clf = svc
        .store()
        .load_model(&a.project)?
        .ok_or_else(|| Failure::Validation(format!("project {} has no trained classifier", a.project)))?;
    let texts: Vec<String> = if a.texts.is_empty() {
        std::io::stdin().lock().lines().collect::<std::io::Result<_>>()?
    } else {
        a.texts.clone()
    };
    writeln!(out, "tribe\t{}\ttext", clf.tribe_ids.join("\t"))?;
    for t in texts {
        let p = clf.classify(&t);
        let best = &clf.tribe_ids[tribeforge::textmodel::argmax(&p)];
        let cols: Vec<String> = p.iter().map(|x| format!("{x:.4}")).collect();
        writeln!(out, "{best}\t{}\t{t}", cols.join("\t"))?;
    }
    Ok(())
}

fn corpus_ref(svc: &Service, project: &str, given: &Option<String>) -> Result<String> {
    match given {
        Some(c) => Ok(c.clone()),
        None => svc.project(project)?.corpus_ref.ok_or_else(|| {
            Failure::Validation(format!("project {project} has no corpus; pass --corpus")).into()
        }),
    }
}

pub fn allocate(svc: &Service, a: &AllocateArgs, out: &mut dyn Write) -> Result<()> {
    let view = svc.project(&a.project)?;
    let name = corpus_ref(svc, &a.project, &a.corpus)?;
    let corpus = svc.corpus(&name)?;
    let clf = svc
        .store()
        .load_model(&a.project)?
        .ok_or_else(|| Failure::Validation(format!("project {} has no trained classifier", a.project)))?;
    let allocations = allocate_corpus(&clf, &corpus);
    if let Some(path) = &a.out {
        let mut w = std::io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for x in &allocations {
            writeln!(w, "{}", serde_json::to_string(x)?)?;
        }
        w.flush()?;
    }
    let mut counts: BTreeMap<&str, usize> = clf.tribe_ids.iter().map(|t| (t.as_str(), 0)).collect();
    for x in &allocations {
        *counts.entry(x.tribe_id.as_str()).or_default() += 1;
    }
    for (tribe, n) in &counts {
        writeln!(out, "{tribe}\t{n} users")?;
    }
    if let Some(truth) = svc.store().load_truth(&name)? {
        let leaders: BTreeSet<String> = view.leaders.values().flatten().cloned().collect();
        let acc = user_accuracy(&allocations, &truth, &leaders);
        writeln!(
            out,
            "user accuracy {:.4} ({}/{} held-out users)",
            acc.rate(),
            acc.correct,
            acc.total
        )?;
    }
    Ok(())
}

fn signal_config(w: &WindowArgs) -> SignalConfig {
    SignalConfig {
        window_days: w.window_days,
        step_days: w.step_days,
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(bytes)?,
    }
    Ok(())
}

pub fn signals(svc: &Service, a: &SignalsArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = svc.corpus(&a.corpus)?;
    let users: Vec<&str> = if a.users.is_empty() {
        corpus.authors().collect()
    } else {
        a.users.iter().map(String::as_str).collect()
    };
    let profiles = signal_profiles(&corpus, users, bundled_sentiment_model(), &signal_config(&a.window))?;
    let mut buf = Vec::new();
    write_profiles_csv(&mut buf, &profiles)?;
    emit(out, a.out.as_deref(), &buf)
}

pub fn report(svc: &Service, a: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let filter = (!a.filter.is_empty()).then(|| a.filter.clone());
    let job = svc.submit_analysis(
        &a.project,
        a.corpus.as_deref(),
        filter,
        signal_config(&a.window),
        a.request_key.as_deref(),
    )?;
    let done = finish(svc, job)?;
    let id = done.result.unwrap_or_default();
    eprintln!("report {id}");
    emit(out, a.out.as_deref(), svc.report(&id, a.format.as_str())?.as_bytes())
}

pub fn reports(svc: &Service, a: &ReportsArgs, out: &mut dyn Write) -> Result<()> {
    match &a.report_id {
        Some(id) => out.write_all(svc.report(id, a.format.as_str())?.as_bytes())?,
        None => {
            for id in svc.reports()? {
                writeln!(out, "{id}")?;
            }
        }
    }
    Ok(())
}

pub fn jobs(svc: &Service, a: &JobsArgs, out: &mut dyn Write) -> Result<()> {
    match &a.job_id {
        Some(id) => json_line(out, &svc.job(id)?)?,
        None => {
            for j in svc.jobs(a.project.as_deref()) {
                writeln!(
                    out,
                    "{}\t{}\t{:?}\t{:?}\t{}",
                    j.job_id,
                    j.project_id,
                    j.kind,
                    j.state,
                    j.result.or(j.error).unwrap_or_default()
                )?;
            }
        }
    }
    Ok(())
}

pub fn serve(svc: Service, a: &ServeArgs) -> Result<()> {
    let addr = std::net::SocketAddr::new(a.host, a.port);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(tribeforge_service::serve(svc, addr))
        .with_context(|| format!("serving on {addr}"))
}
