use std::collections::{BTreeMap, HashMap};
use std::panic::AssertUnwindSafe;
use std::path::Path;
use std::sync::{mpsc, Arc, Condvar, Mutex, RwLock, Weak};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tribeforge::corpus::{Corpus, GroundTruth};
use tribeforge::pipeline::analyze;
use tribeforge::signals::{bundled_sentiment_model, SignalConfig};
use tribeforge::textmodel::{train_classifier, TrainConfig};
use tribeforge::tribecraft::{
    hashtag_cloud, leader_network, search_candidates, CandidateScore, Decision, HashtagCount, LeaderNetwork,
    MacroCategory, SearchWeights, TribeProject, Verdict,
};

use crate::jobs::{Job, JobSpec, JobState};
use crate::store::{check_name, Manifest, ProjectStore};
use crate::ServiceError;

/// Summary of a project as served by `GET /projects/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectView {
    pub project_id: String,
    pub macro_category: MacroCategory,
    pub corpus_ref: Option<String>,
    pub created_at: DateTime<Utc>,
    pub keywords: BTreeMap<String, Vec<String>>,
    pub leaders: BTreeMap<String, Vec<String>>,
    pub decision_count: usize,
    pub has_model: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub user_id: String,
    pub tribe_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub request_key: Option<String>,
    #[serde(default)]
    pub actor: Option<String>,
}

struct ProjectEntry {
    manifest: Manifest,
    project: TribeProject,
    /// request_key -> the decision it produced
    keys: HashMap<String, Decision>,
}

#[derive(Default)]
struct JobTable {
    jobs: BTreeMap<u64, Job>,
    next_job: u64,
    next_report: u64,
    keys: HashMap<(String, String), String>,
}

struct Inner {
    store: ProjectStore,
    projects: RwLock<BTreeMap<String, Arc<Mutex<ProjectEntry>>>>,
    /// Serializes project creation; holds the next id and creation keys.
    creation: Mutex<(u64, HashMap<String, String>)>,
    jobs: Mutex<JobTable>,
    job_changed: Condvar,
    workers: Mutex<HashMap<String, mpsc::Sender<String>>>,
    corpora: Mutex<HashMap<String, Arc<Corpus>>>,
}

/// The project store plus job workers. Cheap to clone.
#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

fn numeric_id(id: &str, prefix: &str) -> Option<u64> {
    id.strip_prefix(prefix)?.parse().ok()
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Service {
    /// Open (or create) the store at `root` and rebuild state from it. Jobs
    /// left QUEUED or RUNNING by a previous process are marked FAILED.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let store = ProjectStore::open(root.as_ref())?;
        let mut projects = BTreeMap::new();
        let mut creation_keys = HashMap::new();
        for id in store.project_ids()? {
            let manifest = store.read_manifest(&id)?;
            let keywords = store.read_keywords(&id)?;
            let decisions = store.read_decisions(&id)?;
            let keys = decisions
                .iter()
                .filter_map(|d| Some((d.request_key.clone()?, d.clone())))
                .collect();
            let project = TribeProject::replay(id.clone(), manifest.macro_category.clone(), keywords, decisions)?;
            if let Some(k) = &manifest.request_key {
                creation_keys.insert(k.clone(), id.clone());
            }
            projects.insert(
                id,
                Arc::new(Mutex::new(ProjectEntry {
                    manifest,
                    project,
                    keys,
                })),
            );
        }
        let mut table = JobTable {
            next_job: store.max_id("jobs", "j")?,
            next_report: store.max_id("reports", "r")?,
            ..Default::default()
        };
        for mut job in store.read_jobs()? {
            if !job.state.is_terminal() {
                job.fail("interrupted by service restart".into());
                store.write_job(&job)?;
            }
            if let Some(k) = &job.request_key {
                table.keys.insert((job.project_id.clone(), k.clone()), job.job_id.clone());
            }
            if let Some(n) = numeric_id(&job.job_id, "j") {
                table.jobs.insert(n, job);
            }
        }
        let next_project = store.max_id("projects", "p")?;
        Ok(Self {
            inner: Arc::new(Inner {
                store,
                projects: RwLock::new(projects),
                creation: Mutex::new((next_project, creation_keys)),
                jobs: Mutex::new(table),
                job_changed: Condvar::new(),
                workers: Mutex::new(HashMap::new()),
                corpora: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn store(&self) -> &ProjectStore {
        &self.inner.store
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<ProjectEntry>>, ServiceError> {
        self.inner
            .projects
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("project {id}")))
    }

    fn view(&self, e: &ProjectEntry) -> ProjectView {
        ProjectView {
            project_id: e.manifest.project_id.clone(),
            macro_category: e.manifest.macro_category.clone(),
            corpus_ref: e.manifest.corpus_ref.clone(),
            created_at: e.manifest.created_at,
            keywords: e.project.all_keywords().clone(),
            leaders: e
                .project
                .all_leaders()
                .iter()
                .map(|(t, s)| (t.clone(), s.iter().cloned().collect()))
                .collect(),
            decision_count: e.project.decisions().len(),
            has_model: self.inner.store.model_path(&e.manifest.project_id).exists(),
        }
    }

    // corpora

    pub fn corpora(&self) -> Result<Vec<String>, ServiceError> {
        self.inner.store.corpus_names()
    }

    /// Store a corpus under `name`, replacing any previous one.
    pub fn import_corpus(&self, name: &str, corpus: &Corpus, truth: Option<&GroundTruth>) -> Result<(), ServiceError> {
        self.inner.store.save_corpus(name, corpus, truth)?;
        lock(&self.inner.corpora).remove(name);
        Ok(())
    }

    pub fn corpus(&self, name: &str) -> Result<Arc<Corpus>, ServiceError> {
        if let Some(c) = lock(&self.inner.corpora).get(name) {
            return Ok(c.clone());
        }
        let c = Arc::new(self.inner.store.load_corpus(name)?);
        lock(&self.inner.corpora).insert(name.to_string(), c.clone());
        Ok(c)
    }

    fn project_corpus(&self, e: &ProjectEntry) -> Result<Arc<Corpus>, ServiceError> {
        let name = e
            .manifest
            .corpus_ref
            .as_deref()
            .ok_or_else(|| ServiceError::Invalid(format!("project {} has no corpus", e.manifest.project_id)))?;
        self.corpus(name)
    }

    // projects

    pub fn create_project(
        &self,
        macro_category_id: &str,
        corpus_ref: Option<&str>,
        request_key: Option<&str>,
    ) -> Result<ProjectView, ServiceError> {
        let mut creation = lock(&self.inner.creation);
        if let Some(id) = request_key.and_then(|k| creation.1.get(k)) {
            let e = self.entry(id)?;
            let e = lock(&e);
            return Ok(self.view(&e));
        }
        let macro_category = MacroCategory::resolve(macro_category_id)?;
        if let Some(c) = corpus_ref {
            if !self.inner.store.has_corpus(c) {
                return Err(ServiceError::NotFound(format!("corpus {c}")));
            }
        }
        let id = format!("p{}", creation.0 + 1);
        let manifest = Manifest {
            project_id: id.clone(),
            macro_category: macro_category.clone(),
            corpus_ref: corpus_ref.map(String::from),
            created_at: Utc::now(),
            request_key: request_key.map(String::from),
        };
        let project = TribeProject::new(id.clone(), macro_category)?;
        self.inner.store.create_project(&manifest)?;
        creation.0 += 1;
        if let Some(k) = request_key {
            creation.1.insert(k.to_string(), id.clone());
        }
        let entry = ProjectEntry {
            manifest,
            project,
            keys: HashMap::new(),
        };
        let view = self.view(&entry);
        self.inner
            .projects
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, Arc::new(Mutex::new(entry)));
        Ok(view)
    }

    pub fn project(&self, id: &str) -> Result<ProjectView, ServiceError> {
        let e = self.entry(id)?;
        let e = lock(&e);
        Ok(self.view(&e))
    }

    pub fn projects(&self) -> Vec<ProjectView> {
        let ids: Vec<String> = self
            .inner
            .projects
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect();
        ids.iter().filter_map(|id| self.project(id).ok()).collect()
    }

    /// Snapshot of the live project state (keywords, decisions, leaders).
    pub fn tribe_project(&self, id: &str) -> Result<TribeProject, ServiceError> {
        let e = self.entry(id)?;
        let e = lock(&e);
        Ok(e.project.clone())
    }

    pub fn decisions(&self, id: &str) -> Result<Vec<Decision>, ServiceError> {
        Ok(self.tribe_project(id)?.decisions().to_vec())
    }

    /// Replace a tribe's keywords; returns the normalized list.
    pub fn set_keywords(&self, id: &str, tribe: &str, keywords: &[String]) -> Result<Vec<String>, ServiceError> {
        let e = self.entry(id)?;
        let mut e = lock(&e);
        let mut next = e.project.clone();
        next.set_keywords(tribe, keywords)?;
        self.inner.store.write_keywords(id, next.all_keywords())?;
        e.project = next;
        Ok(e.project.keywords(tribe).to_vec())
    }

    /// Ranked candidates for `tribe`, leaving out users already decided for
    /// it and leaders of other tribes.
    pub fn candidates(
        &self,
        id: &str,
        tribe: &str,
        limit: usize,
        weights: SearchWeights,
    ) -> Result<Vec<CandidateScore>, ServiceError> {
        let e = self.entry(id)?;
        let (project, corpus) = {
            let e = lock(&e);
            (e.project.clone(), self.project_corpus(&e)?)
        };
        let leaders = project
            .leaders(tribe)
            .ok_or_else(|| ServiceError::NotFound(format!("tribe {tribe}")))?;
        let decided = project.decided_users(tribe);
        let mut ranked = search_candidates(&corpus, project.keywords(tribe), leaders, weights, usize::MAX)?;
        ranked.retain(|c| !decided.contains(c.user_id.as_str()) && project.leader_tribe(&c.user_id).is_none());
        ranked.truncate(limit);
        Ok(ranked)
    }

    /// Record a keep/reject verdict. The log entry is fsynced before this
    /// returns; a repeated request key returns the original decision.
    pub fn decide(&self, id: &str, req: DecisionRequest) -> Result<Decision, ServiceError> {
        let e = self.entry(id)?;
        let mut e = lock(&e);
        if let Some(d) = req.request_key.as_ref().and_then(|k| e.keys.get(k)) {
            return Ok(d.clone());
        }
        e.project.check_decision(&req.user_id, &req.tribe_id, req.verdict)?;
        if req.user_id.trim().is_empty() {
            return Err(ServiceError::Invalid("empty user_id".into()));
        }
        let d = Decision {
            user_id: req.user_id,
            tribe_id: req.tribe_id,
            verdict: req.verdict,
            timestamp: Utc::now(),
            actor: req.actor.unwrap_or_else(|| "api".into()),
            request_key: req.request_key,
        };
        self.inner.store.append_decision(id, &d)?;
        e.project.record_decision(d.clone())?;
        if let Some(k) = &d.request_key {
            e.keys.insert(k.clone(), d.clone());
        }
        Ok(d)
    }

    fn leaders_and_corpus(&self, id: &str, tribe: &str) -> Result<(Vec<String>, Arc<Corpus>), ServiceError> {
        let e = self.entry(id)?;
        let e = lock(&e);
        let leaders = e
            .project
            .leaders(tribe)
            .ok_or_else(|| ServiceError::NotFound(format!("tribe {tribe}")))?
            .iter()
            .cloned()
            .collect();
        Ok((leaders, self.project_corpus(&e)?))
    }

    pub fn hashtag_cloud(&self, id: &str, tribe: &str) -> Result<Vec<HashtagCount>, ServiceError> {
        let (leaders, corpus) = self.leaders_and_corpus(id, tribe)?;
        Ok(hashtag_cloud(&corpus, &leaders))
    }

    pub fn leader_network(&self, id: &str, tribe: &str) -> Result<LeaderNetwork, ServiceError> {
        let (leaders, corpus) = self.leaders_and_corpus(id, tribe)?;
        Ok(leader_network(&corpus, &leaders))
    }

    // jobs

    pub fn submit_training(
        &self,
        id: &str,
        config: TrainConfig,
        force: bool,
        request_key: Option<&str>,
    ) -> Result<Job, ServiceError> {
        config
            .validate()
            .map_err(|e| ServiceError::Invalid(e.to_string()))?;
        self.submit(id, JobSpec::Train { config, force }, request_key)
    }

    pub fn submit_analysis(
        &self,
        id: &str,
        corpus_ref: Option<&str>,
        filter_keywords: Option<Vec<String>>,
        signals: SignalConfig,
        request_key: Option<&str>,
    ) -> Result<Job, ServiceError> {
        let corpus_ref = match corpus_ref {
            Some(c) => c.to_string(),
            None => self
                .project(id)?
                .corpus_ref
                .ok_or_else(|| ServiceError::Invalid("no corpus_ref given and project has none".into()))?,
        };
        check_name("corpus", &corpus_ref)?;
        if !self.inner.store.has_corpus(&corpus_ref) {
            return Err(ServiceError::NotFound(format!("corpus {corpus_ref}")));
        }
        if signals.window_days == 0 || signals.step_days == 0 || signals.step_days > signals.window_days {
            return Err(ServiceError::Invalid("signal window must satisfy window_days >= step_days > 0".into()));
        }
        let spec = JobSpec::Analyze {
            corpus_ref,
            filter_keywords,
            signals,
        };
        self.submit(id, spec, request_key)
    }

    fn submit(&self, id: &str, spec: JobSpec, request_key: Option<&str>) -> Result<Job, ServiceError> {
        self.entry(id)?;
        let job = {
            let mut t = lock(&self.inner.jobs);
            if let Some(k) = request_key {
                if let Some(existing) = t.keys.get(&(id.to_string(), k.to_string())) {
                    let n = numeric_id(existing, "j").expect("stored job ids are numeric");
                    return Ok(t.jobs[&n].clone());
                }
            }
            t.next_job += 1;
            let n = t.next_job;
            let job = Job::new(format!("j{n}"), id.to_string(), spec, request_key.map(String::from));
            self.inner.store.write_job(&job)?;
            if let Some(k) = request_key {
                t.keys.insert((id.to_string(), k.to_string()), job.job_id.clone());
            }
            t.jobs.insert(n, job.clone());
            job
        };
        self.enqueue(id, &job.job_id);
        Ok(job)
    }

    /// One worker thread per project runs its jobs in submission order.
    fn enqueue(&self, project_id: &str, job_id: &str) {
        let mut workers = lock(&self.inner.workers);
        let tx = workers.entry(project_id.to_string()).or_insert_with(|| {
            let (tx, rx) = mpsc::channel::<String>();
            let weak = Arc::downgrade(&self.inner);
            std::thread::Builder::new()
                .name(format!("jobs-{project_id}"))
                .spawn(move || worker_loop(weak, rx))
                .expect("spawn job worker");
            tx
        });
        tx.send(job_id.to_string()).expect("job worker alive");
    }

    pub fn job(&self, job_id: &str) -> Result<Job, ServiceError> {
        let n = numeric_id(job_id, "j").ok_or_else(|| ServiceError::NotFound(format!("job {job_id}")))?;
        lock(&self.inner.jobs)
            .jobs
            .get(&n)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("job {job_id}")))
    }

    pub fn jobs(&self, project_id: Option<&str>) -> Vec<Job> {
        lock(&self.inner.jobs)
            .jobs
            .values()
            .filter(|j| project_id.is_none_or(|p| j.project_id == p))
            .cloned()
            .collect()
    }

    /// Block until the job is DONE or FAILED, or `timeout` elapses.
    pub fn wait_job(&self, job_id: &str, timeout: Duration) -> Result<Job, ServiceError> {
        let deadline = Instant::now() + timeout;
        let n = numeric_id(job_id, "j").ok_or_else(|| ServiceError::NotFound(format!("job {job_id}")))?;
        let mut t = lock(&self.inner.jobs);
        loop {
            let job = t
                .jobs
                .get(&n)
                .ok_or_else(|| ServiceError::NotFound(format!("job {job_id}")))?;
            if job.state.is_terminal() {
                return Ok(job.clone());
            }
            let now = Instant::now();
            if now >= deadline {
                return Ok(job.clone());
            }
            t = self
                .inner
                .job_changed
                .wait_timeout(t, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    /// Report body; `format` is `text` or `records`.
    pub fn report(&self, report_id: &str, format: &str) -> Result<String, ServiceError> {
        self.inner.store.read_report(report_id, format)
    }

    pub fn reports(&self) -> Result<Vec<String>, ServiceError> {
        self.inner.store.report_ids()
    }
}

fn worker_loop(inner: Weak<Inner>, rx: mpsc::Receiver<String>) {
    while let Ok(job_id) = rx.recv() {
        let Some(inner) = inner.upgrade() else { return };
        let service = Service { inner };
        service.run_job(&job_id);
    }
}

impl Service {
    fn update_job(&self, job_id: &str, f: impl FnOnce(&mut Job) -> bool) -> Option<Job> {
        let n = numeric_id(job_id, "j")?;
        let mut t = lock(&self.inner.jobs);
        let job = t.jobs.get_mut(&n)?;
        if !f(job) {
            return None;
        }
        let snapshot = job.clone();
        if let Err(e) = self.inner.store.write_job(&snapshot) {
            tracing::error!("persisting job {job_id}: {e}");
        }
        self.inner.job_changed.notify_all();
        Some(snapshot)
    }

    fn run_job(&self, job_id: &str) {
        let Some(job) = self.update_job(job_id, |j| j.advance(JobState::Running)) else {
            return;
        };
        tracing::info!(job = job_id, project = job.project_id, kind = ?job.kind, "job started");
        let outcome = std::panic::catch_unwind(AssertUnwindSafe(|| match &job.spec {
            JobSpec::Train { config, force } => self.run_training(&job, config, *force),
            JobSpec::Analyze {
                corpus_ref,
                filter_keywords,
                signals,
            } => self.run_analysis(&job, corpus_ref, filter_keywords.as_deref(), signals),
        }));
        let outcome = outcome.unwrap_or_else(|_| Err(ServiceError::Io("job panicked".into())));
        match outcome {
            Ok(result) => {
                self.update_job(job_id, |j| j.finish(result));
                tracing::info!(job = job_id, "job done");
            }
            Err(e) => {
                let msg = e.to_string();
                tracing::warn!(job = job_id, "job failed: {msg}");
                self.update_job(job_id, |j| j.fail(msg));
            }
        }
    }

    fn run_training(&self, job: &Job, config: &TrainConfig, force: bool) -> Result<String, ServiceError> {
        let e = self.entry(&job.project_id)?;
        let (project, corpus) = {
            let e = lock(&e);
            (e.project.clone(), self.project_corpus(&e)?)
        };
        let epochs = config.epochs.max(1) as f64;
        let classifier = train_classifier(&project, &corpus, config, force, &mut |m| {
            let p = (m.epoch as f64 / epochs).min(0.99);
            self.update_job(&job.job_id, |j| {
                j.progress = p;
                true
            });
        })
        .map_err(|e| ServiceError::Invalid(e.to_string()))?;
        let path = self.inner.store.save_model(&job.project_id, &classifier)?;
        let rel = path.strip_prefix(self.inner.store.root()).unwrap_or(&path);
        Ok(rel.display().to_string())
    }

    fn run_analysis(
        &self,
        job: &Job,
        corpus_ref: &str,
        filter: Option<&[String]>,
        signals: &SignalConfig,
    ) -> Result<String, ServiceError> {
        let classifier = self
            .inner
            .store
            .load_model(&job.project_id)?
            .ok_or_else(|| ServiceError::Invalid(format!("project {} has no trained classifier", job.project_id)))?;
        let corpus = self.corpus(corpus_ref)?;
        self.update_job(&job.job_id, |j| {
            j.progress = 0.1;
            true
        });
        let analysis = analyze(&classifier, &corpus, bundled_sentiment_model(), signals, filter)
            .map_err(|e| ServiceError::Invalid(e.to_string()))?;
        let report_id = {
            let mut t = lock(&self.inner.jobs);
            t.next_report += 1;
            format!("r{}", t.next_report)
        };
        self.inner
            .store
            .write_report(&report_id, &analysis.report.render_text(), &analysis.report.records_jsonl())?;
        Ok(report_id)
    }
}
