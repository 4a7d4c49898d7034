//! On-disk layout under the data root:
//!
//! ```text
//! projects/<id>/manifest.json     created once
//! projects/<id>/keywords.json     replaced atomically
//! projects/<id>/decisions.log     JSON lines, appended and fsynced
//! projects/<id>/model.tfm         classifier snapshot
//! jobs/<id>.json                  replaced atomically on every change
//! reports/<id>.txt, <id>.jsonl    text and records variants
//! corpora/<name>/tweets.jsonl, profiles.jsonl [, truth.tsv]
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tribeforge::corpus::{load_corpus, read_ground_truth, write_corpus, write_ground_truth, Corpus, GroundTruth};
use tribeforge::textmodel::TribeClassifier;
use tribeforge::tribecraft::{Decision, MacroCategory};

use crate::jobs::Job;
use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub project_id: String,
    pub macro_category: MacroCategory,
    #[serde(default)]
    pub corpus_ref: Option<String>,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub request_key: Option<String>,
}

/// Write `bytes` to a sibling temp file, fsync it, then rename over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent() {
        // directory fsync makes the rename durable; not supported everywhere
        let _ = File::open(dir).and_then(|d| d.sync_all());
    }
    Ok(())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ServiceError + '_ {
    move |e| ServiceError::Io(format!("{}: {e}", path.display()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ServiceError> {
    let raw = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&raw).map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ServiceError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    atomic_write(path, &bytes).map_err(io_err(path))
}

/// Names used as path components must be plain identifiers.
pub fn check_name(kind: &str, name: &str) -> Result<(), ServiceError> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(ServiceError::Invalid(format!("invalid {kind} name {name:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct ProjectStore {
    root: PathBuf,
}

impl ProjectStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        for dir in ["projects", "jobs", "reports", "corpora"] {
            let d = root.join(dir);
            fs::create_dir_all(&d).map_err(io_err(&d))?;
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn project_dir(&self, id: &str) -> PathBuf {
        self.root.join("projects").join(id)
    }

    pub fn model_path(&self, project_id: &str) -> PathBuf {
        self.project_dir(project_id).join("model.tfm")
    }

    pub fn corpus_dir(&self, name: &str) -> PathBuf {
        self.root.join("corpora").join(name)
    }

    fn list_dir(&self, sub: &str) -> Result<Vec<String>, ServiceError> {
        let dir = self.root.join(sub);
        let mut names = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            if let Some(name) = entry.file_name().to_str() {
                names.push(name.to_string());
            }
        }
        names.sort();
        Ok(names)
    }

    /// Largest numeric suffix among ids `<prefix><n>` in `sub`.
    pub fn max_id(&self, sub: &str, prefix: &str) -> Result<u64, ServiceError> {
        Ok(self
            .list_dir(sub)?
            .iter()
            .filter_map(|n| {
                let stem = n.split('.').next().unwrap_or(n);
                stem.strip_prefix(prefix)?.parse::<u64>().ok()
            })
            .max()
            .unwrap_or(0))
    }

    // projects

    pub fn create_project(&self, manifest: &Manifest) -> Result<(), ServiceError> {
        let dir = self.project_dir(&manifest.project_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_json(&dir.join("keywords.json"), &BTreeMap::<String, Vec<String>>::new())?;
        let log = dir.join("decisions.log");
        File::create(&log).and_then(|f| f.sync_all()).map_err(io_err(&log))?;
        // the manifest goes last: a directory without one is an aborted create
        write_json(&dir.join("manifest.json"), manifest)
    }

    pub fn project_ids(&self) -> Result<Vec<String>, ServiceError> {
        Ok(self
            .list_dir("projects")?
            .into_iter()
            .filter(|id| self.project_dir(id).join("manifest.json").exists())
            .collect())
    }

    pub fn read_manifest(&self, id: &str) -> Result<Manifest, ServiceError> {
        read_json(&self.project_dir(id).join("manifest.json"))
    }

    pub fn write_keywords(&self, id: &str, keywords: &BTreeMap<String, Vec<String>>) -> Result<(), ServiceError> {
        write_json(&self.project_dir(id).join("keywords.json"), keywords)
    }

    pub fn read_keywords(&self, id: &str) -> Result<BTreeMap<String, Vec<String>>, ServiceError> {
        read_json(&self.project_dir(id).join("keywords.json"))
    }

    /// Append one decision and fsync before returning.
    pub fn append_decision(&self, id: &str, decision: &Decision) -> Result<(), ServiceError> {
        let path = self.project_dir(id).join("decisions.log");
        let mut line = serde_json::to_vec(decision).expect("serializable");
        line.push(b'\n');
        let mut f = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(&line).map_err(io_err(&path))?;
        f.sync_data().map_err(io_err(&path))
    }

    /// The decision log in append order. A final line without a newline is
    /// a write that was never acknowledged and is ignored.
    pub fn read_decisions(&self, id: &str) -> Result<Vec<Decision>, ServiceError> {
        let path = self.project_dir(id).join("decisions.log");
        let raw = fs::read_to_string(&path).map_err(io_err(&path))?;
        let complete = match raw.rfind('\n') {
            Some(i) => &raw[..=i],
            None => "",
        };
        complete
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| ServiceError::Io(format!("{} line {}: {e}", path.display(), i + 1)))
            })
            .collect()
    }

    pub fn save_model(&self, id: &str, classifier: &TribeClassifier) -> Result<PathBuf, ServiceError> {
        let path = self.model_path(id);
        atomic_write(&path, &classifier.to_bytes()).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn load_model(&self, id: &str) -> Result<Option<TribeClassifier>, ServiceError> {
        let path = self.model_path(id);
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        TribeClassifier::from_bytes(&bytes)
            .map(Some)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))
    }

    // jobs

    pub fn write_job(&self, job: &Job) -> Result<(), ServiceError> {
        write_json(&self.root.join("jobs").join(format!("{}.json", job.job_id)), job)
    }

    pub fn read_jobs(&self) -> Result<Vec<Job>, ServiceError> {
        self.list_dir("jobs")?
            .iter()
            .filter(|n| n.ends_with(".json"))
            .map(|n| read_json(&self.root.join("jobs").join(n)))
            .collect()
    }

    // reports

    pub fn write_report(&self, id: &str, text: &str, records: &str) -> Result<(), ServiceError> {
        let dir = self.root.join("reports");
        let jsonl = dir.join(format!("{id}.jsonl"));
        atomic_write(&jsonl, records.as_bytes()).map_err(io_err(&jsonl))?;
        let txt = dir.join(format!("{id}.txt"));
        atomic_write(&txt, text.as_bytes()).map_err(io_err(&txt))
    }

    /// `format` is `"text"` or `"records"`.
    pub fn read_report(&self, id: &str, format: &str) -> Result<String, ServiceError> {
        check_name("report", id)?;
        let ext = match format {
            "text" => "txt",
            "records" => "jsonl",
            other => return Err(ServiceError::Invalid(format!("unknown report format {other:?}"))),
        };
        let path = self.root.join("reports").join(format!("{id}.{ext}"));
        if !path.exists() {
            return Err(ServiceError::NotFound(format!("report {id}")));
        }
        fs::read_to_string(&path).map_err(io_err(&path))
    }

    pub fn report_ids(&self) -> Result<Vec<String>, ServiceError> {
        Ok(self
            .list_dir("reports")?
            .into_iter()
            .filter_map(|n| n.strip_suffix(".jsonl").map(String::from))
            .collect())
    }

    // corpora

    pub fn corpus_names(&self) -> Result<Vec<String>, ServiceError> {
        Ok(self
            .list_dir("corpora")?
            .into_iter()
            .filter(|n| self.corpus_dir(n).join("tweets.jsonl").exists())
            .collect())
    }

    pub fn has_corpus(&self, name: &str) -> bool {
        check_name("corpus", name).is_ok() && self.corpus_dir(name).join("tweets.jsonl").exists()
    }

    pub fn save_corpus(&self, name: &str, corpus: &Corpus, truth: Option<&GroundTruth>) -> Result<PathBuf, ServiceError> {
        check_name("corpus", name)?;
        let dir = self.corpus_dir(name);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_corpus(corpus, dir.join("tweets.jsonl"), dir.join("profiles.jsonl")).map_err(io_err(&dir))?;
        if let Some(t) = truth {
            write_ground_truth(t, dir.join("truth.tsv")).map_err(io_err(&dir))?;
        }
        Ok(dir)
    }

    pub fn load_corpus(&self, name: &str) -> Result<Corpus, ServiceError> {
        if !self.has_corpus(name) {
            return Err(ServiceError::NotFound(format!("corpus {name}")));
        }
        let dir = self.corpus_dir(name);
        let profiles = dir.join("profiles.jsonl");
        if !profiles.exists() {
            File::create(&profiles).map_err(io_err(&profiles))?;
        }
        let (corpus, _) = load_corpus(dir.join("tweets.jsonl"), profiles)?;
        Ok(corpus)
    }

    pub fn load_truth(&self, name: &str) -> Result<Option<GroundTruth>, ServiceError> {
        let path = self.corpus_dir(name).join("truth.tsv");
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(read_ground_truth(path)?))
    }
}
