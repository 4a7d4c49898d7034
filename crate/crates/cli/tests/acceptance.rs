//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use num::{BigInt, BigRational, Zero};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};
use tribeforge::corpus::{generate_synthetic, synthetic_start, write_corpus, write_ground_truth, SynthConfig};
use tribeforge::pipeline::{allocate_corpus, seed_leaders_from_ground_truth};
use tribeforge::rng::SeededRng;
use tribeforge::signals::{brandes, rotating_leadership};
use tribeforge::stats::{render_section, studentized_range_cdf, AnovaResult};
use tribeforge::textmodel::{batch_loss, lstm_gradients, train_classifier, Dims, LstmParams, TrainConfig};
use tribeforge::tribecraft::{MacroCategory, TribeProject};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn deadline(start: Instant, limit: Duration) -> Result<(), String> {
    check(start.elapsed() < limit, format!("took {:.1?}, limit {limit:?}", start.elapsed()))
}

// 1 ------------------------------------------------------------------------

fn reference_anova() -> Outcome {
    let start = Instant::now();
    let a = AnovaResult::from_sums(344.557, 3, 498262.430, 25241).map_err(|e| e.to_string())?;
    let f = a.f.ok_or("degenerate")?;
    let p = a.p.ok_or("degenerate")?;
    check(within(a.ms_between, 114.852, 0.001), format!("ms_between {}", a.ms_between))?;
    check(within(a.ms_within, 19.740, 0.001), format!("ms_within {}", a.ms_within))?;
    check(within(f, 5.818, 0.001), format!("F {f}"))?;
    check((0.0005..=0.0015).contains(&p), format!("p {p}"))?;
    let text = render_section("Messages sent", &a, &[]);
    let row = text.lines().find(|l| l.starts_with("Between groups")).ok_or("no between row")?;
    let cells: Vec<&str> = row.split_whitespace().collect();
    check(cells[2..7] == ["344.557", "3", "114.852", "5.818", "0.001"], format!("rendered {row:?}"))?;

    let r = AnovaResult::from_sums(7342.151, 3, 143905.426, 25241).map_err(|e| e.to_string())?;
    let rf = r.f.ok_or("degenerate")?;
    check(within(rf, 429.271, 0.01), format!("rotating leadership F {rf}"))?;
    deadline(start, Duration::from_secs(1))?;
    Ok(format!(
        "ms_b={:.3} ms_w={:.3} F={f:.3} p={p:.5}; rotating leadership F={rf:.3}",
        a.ms_between, a.ms_within
    ))
}

// 2 ------------------------------------------------------------------------

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; adj.len()];
    d[s] = Some(0);
    let mut frontier = vec![s];
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        let mut next = Vec::new();
        for v in frontier {
            for &w in &adj[v] {
                if d[w].is_none() {
                    d[w] = Some(level);
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    d
}

/// Every shortest s-t path, each as its list of vertices.
fn geodesics(adj: &[Vec<usize>], from_s: &[Option<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    // walk backwards from t along strictly decreasing distance from s
    fn walk(adj: &[Vec<usize>], from_s: &[Option<usize>], v: usize, s: usize, tail: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        tail.push(v);
        if v == s {
            out.push(tail.iter().rev().copied().collect());
        } else {
            let dv = from_s[v].unwrap();
            for &u in &adj[v] {
                if from_s[u] == Some(dv - 1) {
                    walk(adj, from_s, u, s, tail, out);
                }
            }
        }
        tail.pop();
    }
    let mut out = Vec::new();
    walk(adj, from_s, t, s, &mut Vec::new(), &mut out);
    out
}

fn betweenness_by_enumeration(adj: &[Vec<usize>]) -> Vec<BigRational> {
    let n = adj.len();
    let mut cb = vec![BigRational::zero(); n];
    for s in 0..n {
        let from_s = bfs(adj, s);
        for t in s + 1..n {
            if from_s[t].is_none() {
                continue;
            }
            let paths = geodesics(adj, &from_s, s, t);
            let total = BigInt::from(paths.len());
            let mut hits = vec![0u64; n];
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    hits[v] += 1;
                }
            }
            for (v, &h) in hits.iter().enumerate() {
                if h > 0 {
                    cb[v] += BigRational::new(BigInt::from(h), total.clone());
                }
            }
        }
    }
    cb
}

fn betweenness_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(2);
    let mut nonzero = 0usize;
    for case in 0..200 {
        let n = 1 + rng.index(50);
        // mean degree between roughly 1 and 6
        let p = (1.0 + 5.0 * rng.next_f64()) / n.max(2) as f64;
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.chance(p.min(1.0)) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let fast = brandes::<BigRational>(&adj);
        let slow = betweenness_by_enumeration(&adj);
        check(fast == slow, format!("case {case} (n={n}) differs"))?;
        nonzero += slow.iter().filter(|x| !x.is_zero()).count();
    }
    deadline(start, Duration::from_secs(30))?;
    Ok(format!("200 graphs exact, {nonzero} non-zero scores, {:.1?}", start.elapsed()))
}

// 3 ------------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let step = 1e-5;
    let floor = 1e-6;
    let mut rng = SeededRng::new(33);
    let mut worst: f64 = 0.0;
    for case in 0..25 {
        let v = 2 + rng.index(9);
        let d = 1 + rng.index(4);
        let h = 1 + rng.index(5);
        let k = 2 + rng.index(3);
        let params = LstmParams::random(Dims::new(v, d, h, k), 0.5, &mut rng);
        let batch: Vec<(Vec<usize>, usize)> = (0..3)
            .map(|_| {
                let len = 1 + rng.index(6);
                ((0..len).map(|_| rng.index(v)).collect(), rng.index(k))
            })
            .collect();
        let analytic = lstm_gradients(&params, &batch).map_err(|e| e.to_string())?.grads;
        let analytic: Vec<Vec<f64>> = analytic.tensors().iter().map(|(_, m)| m.data().to_vec()).collect();
        let mut probe = params.clone();
        for (ti, a) in analytic.iter().enumerate() {
            for (j, &g) in a.iter().enumerate() {
                let orig = probe.tensors()[ti].1.data()[j];
                probe.tensors_mut()[ti].1.data_mut()[j] = orig + step;
                let up = batch_loss(&probe, &batch).map_err(|e| e.to_string())?;
                probe.tensors_mut()[ti].1.data_mut()[j] = orig - step;
                let down = batch_loss(&probe, &batch).map_err(|e| e.to_string())?;
                probe.tensors_mut()[ti].1.data_mut()[j] = orig;
                let num = (up - down) / (2.0 * step);
                let scale = g.abs().max(num.abs());
                if scale >= floor {
                    worst = worst.max((g - num).abs() / scale);
                }
            }
        }
        check(worst < 1e-4, format!("case {case} (V={v} d={d} h={h} K={k}): relative error {worst:e}"))?;
    }
    deadline(start, Duration::from_secs(60))?;
    Ok(format!("max relative error {worst:.2e} over 25 nets, {:.1?}", start.elapsed()))
}

// 4 ------------------------------------------------------------------------

/// Held-out user accuracy, counted directly against the planted labels.
fn planted_accuracy(separation: f64) -> Result<f64, String> {
    let synth = SynthConfig {
        n_tribes: 4,
        users_per_tribe: 50,
        tweets_per_user: 30,
        separation,
        seed: 7,
        ..SynthConfig::default()
    };
    let (corpus, truth) = generate_synthetic(&synth).map_err(|e| e.to_string())?;
    let mut project = TribeProject::new("acceptance", MacroCategory::synthetic(4)).map_err(|e| e.to_string())?;
    seed_leaders_from_ground_truth(&mut project, &truth, 10, "acceptance", synthetic_start()).map_err(|e| e.to_string())?;
    let leaders: BTreeSet<String> = project.all_leaders().values().flatten().cloned().collect();
    let clf = train_classifier(&project, &corpus, &TrainConfig::new(7), false, &mut |_| {}).map_err(|e| e.to_string())?;
    let (mut right, mut total) = (0usize, 0usize);
    for a in allocate_corpus(&clf, &corpus) {
        if leaders.contains(&a.user_id) {
            continue;
        }
        total += 1;
        right += usize::from(a.tribe_id == format!("tribe{}", truth[&a.user_id]));
    }
    check(total == 160, format!("{total} held-out users"))?;
    Ok(right as f64 / total as f64)
}

fn planted_end_to_end() -> Outcome {
    let start = Instant::now();
    let separated = planted_accuracy(0.9)?;
    let blind = planted_accuracy(0.0)?;
    check(separated >= 0.90, format!("separation 0.9: accuracy {separated:.3}"))?;
    check(within(blind, 0.25, 0.10), format!("separation 0: accuracy {blind:.3}"))?;
    deadline(start, Duration::from_secs(600))?;
    Ok(format!(
        "held-out accuracy {separated:.3} at separation 0.9, {blind:.3} at separation 0, {:.1?}",
        start.elapsed()
    ))
}

// 5 ------------------------------------------------------------------------

fn studentized_range() -> Outcome {
    let tail = 1.0 - studentized_range_cdf(3.88, 3, 10.0);
    check((tail - 0.05).abs() < 0.002, format!("upper tail at q=3.88, k=3, df=10: {tail}"))?;
    let z = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for q in [1.0, 2.0, 3.0] {
        // the range of two standard normals is |Z1 - Z2| ~ sqrt(2)|Z|
        let expected = 2.0 * z.cdf(q / 2f64.sqrt()) - 1.0;
        let got = studentized_range_cdf(q, 2, 10000.0);
        worst = worst.max((got - expected).abs());
    }
    check(worst < 5e-4, format!("k=2 reduction off by {worst:e}"))?;
    Ok(format!("tail {tail:.5}; k=2 max deviation {worst:.1e}"))
}

// 6 ------------------------------------------------------------------------

/// Strict local extrema after merging runs of equal values.
fn count_extrema(xs: &[i64]) -> u32 {
    let mut runs: Vec<i64> = Vec::new();
    for &x in xs {
        if runs.last() != Some(&x) {
            runs.push(x);
        }
    }
    let mut n = 0;
    for i in 1..runs.len().saturating_sub(1) {
        let rising = runs[i] > runs[i - 1];
        let falling = runs[i + 1] < runs[i];
        n += u32::from(rising == falling);
    }
    n
}

fn rotating_leadership_oracle() -> Outcome {
    let mut rng = SeededRng::new(6);
    let mut total = 0;
    for case in 0..1000 {
        let len = rng.index(60);
        let spread = 1 + rng.index(6) as i64;
        let xs: Vec<i64> = (0..len).map(|_| rng.index(spread as usize) as i64 - spread / 2).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        let (got, want) = (rotating_leadership(&fs), count_extrema(&xs));
        check(got == want, format!("case {case} {xs:?}: {got} vs {want}"))?;
        total += want;
    }
    for len in [0, 1, 2, 10, 100] {
        check(rotating_leadership(&vec![3.5; len]) == 0, format!("constant series of {len}"))?;
    }
    Ok(format!("1000 series agree ({total} extrema), constant series give 0"))
}

// 7 ------------------------------------------------------------------------

fn synth_bytes(config: &SynthConfig, dir: &Path) -> Result<Vec<u8>, String> {
    let (corpus, truth) = generate_synthetic(config).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    write_corpus(&corpus, dir.join("tweets.jsonl"), dir.join("profiles.jsonl")).map_err(|e| e.to_string())?;
    write_ground_truth(&truth, dir.join("truth.tsv")).map_err(|e| e.to_string())?;
    let mut all = Vec::new();
    for f in ["tweets.jsonl", "profiles.jsonl", "truth.tsv"] {
        all.extend(std::fs::read(dir.join(f)).map_err(|e| e.to_string())?);
    }
    Ok(all)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = SynthConfig::default();
    let a = synth_bytes(&config, &tmp.path().join("a"))?;
    let b = synth_bytes(&config, &tmp.path().join("b"))?;
    check(a == b, "synthetic corpora differ")?;

    let small = SynthConfig {
        n_tribes: 3,
        users_per_tribe: 12,
        tweets_per_user: 20,
        ..SynthConfig::default()
    };
    let (corpus, truth) = generate_synthetic(&small).map_err(|e| e.to_string())?;
    let mut project = TribeProject::new("det", MacroCategory::synthetic(3)).map_err(|e| e.to_string())?;
    seed_leaders_from_ground_truth(&mut project, &truth, 4, "acceptance", synthetic_start()).map_err(|e| e.to_string())?;
    let train = TrainConfig {
        embed_dim: 16,
        hidden_dim: 16,
        epochs: 3,
        min_leader_tweets: 50,
        ..TrainConfig::new(11)
    };
    let mut snapshots = Vec::new();
    for run in ["s1.tfm", "s2.tfm"] {
        let clf = train_classifier(&project, &corpus, &train, false, &mut |_| {}).map_err(|e| e.to_string())?;
        let path = tmp.path().join(run);
        clf.save(&path).map_err(|e| e.to_string())?;
        snapshots.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    check(snapshots[0] == snapshots[1], "classifier snapshots differ")?;
    Ok(format!("corpus {} bytes and snapshot {} bytes identical across runs", a.len(), snapshots[0].len()))
}

// 8 ------------------------------------------------------------------------

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn free_port() -> Result<u16, String> {
    let l = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    Ok(l.local_addr().map_err(|e| e.to_string())?.port())
}

fn start_server(data: &Path) -> Result<(Server, String), String> {
    let port = free_port()?;
    let child = Command::new(env!("CARGO_BIN_EXE_tribeforge"))
        .args(["serve", "--port", &port.to_string()])
        .env("TRIBEFORGE_DATA_DIR", data)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let server = Server(child);
    let base = format!("http://127.0.0.1:{port}");
    let until = Instant::now() + Duration::from_secs(30);
    while Instant::now() < until {
        if ureq::get(&format!("{base}/health")).call().is_ok() {
            return Ok((server, base));
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    Err("server did not come up".into())
}

fn get_json(url: &str) -> Result<Value, String> {
    ureq::get(url)
        .call()
        .map_err(|e| format!("GET {url}: {e}"))?
        .body_mut()
        .read_json()
        .map_err(|e| e.to_string())
}

fn post_json(url: &str, body: Value) -> Result<Value, String> {
    ureq::post(url)
        .send_json(body)
        .map_err(|e| format!("POST {url}: {e}"))?
        .body_mut()
        .read_json()
        .map_err(|e| e.to_string())
}

fn leaders_of(base: &str, project: &str) -> Result<BTreeMap<String, Vec<String>>, String> {
    let view = get_json(&format!("{base}/projects/{project}"))?;
    serde_json::from_value(view["leaders"].clone()).map_err(|e| e.to_string())
}

fn persistence() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path();
    let status = Command::new(env!("CARGO_BIN_EXE_tribeforge"))
        .args(["synth", "--tribes", "3", "--users", "20", "--tweets", "10", "--seed", "5", "--name", "c1"])
        .env("TRIBEFORGE_DATA_DIR", data)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    check(status.success(), "synth failed")?;

    let (mut server, base) = start_server(data)?;
    let project = post_json(
        &format!("{base}/projects"),
        json!({"macro_category_id": "synth-3", "corpus_ref": "c1", "request_key": "create"}),
    )?;
    let id = project["project_id"].as_str().ok_or("no project id")?.to_string();
    // 40 first verdicts, then 10 reversals of earlier keeps
    for i in 0..50 {
        let (user, verdict) = if i < 40 {
            (i, if i % 4 == 3 { "REJECT" } else { "KEEP" })
        } else {
            ((i - 40) * 4, "REJECT")
        };
        let body = json!({
            "user_id": format!("u{user:04}"),
            "tribe_id": format!("tribe{}", user % 3),
            "verdict": verdict,
            "request_key": format!("d{i}"),
        });
        post_json(&format!("{base}/projects/{id}/decisions"), body)?;
    }
    let before = leaders_of(&base, &id)?;
    let kept: usize = before.values().map(Vec::len).sum();
    server.0.kill().map_err(|e| e.to_string())?;
    server.0.wait().map_err(|e| e.to_string())?;
    drop(server);

    let (_server, base) = start_server(data)?;
    let after = leaders_of(&base, &id)?;
    check(after == before, format!("leaders changed: {before:?} vs {after:?}"))?;
    // a retried request is acknowledged without a second log entry
    post_json(
        &format!("{base}/projects/{id}/decisions"),
        json!({"user_id": "u0036", "tribe_id": "tribe0", "verdict": "REJECT", "request_key": "d49"}),
    )?;
    let log = get_json(&format!("{base}/projects/{id}/decisions"))?;
    let entries = log.as_array().map_or(0, Vec::len);
    check(entries == 50, format!("{entries} log entries after restart"))?;
    Ok(format!("{kept} leaders from 50 decisions identical after kill and restart"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("reference ANOVA arithmetic", reference_anova),
        ("betweenness vs geodesic enumeration", betweenness_oracle),
        ("LSTM gradient check", gradient_check),
        ("planted-tribe end to end", planted_end_to_end),
        ("studentized range", studentized_range),
        ("rotating leadership oracle", rotating_leadership_oracle),
        ("determinism", determinism),
        ("persistence across restart", persistence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
