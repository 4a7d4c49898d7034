use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tribeforge::signals::SignalConfig;
use tribeforge::textmodel::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JobKind {
    Train,
    Analyze,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

/// What a job was asked to do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum JobSpec {
    Train {
        config: TrainConfig,
        #[serde(default)]
        force: bool,
    },
    Analyze {
        corpus_ref: String,
        #[serde(default)]
        filter_keywords: Option<Vec<String>>,
        #[serde(default)]
        signals: SignalConfig,
    },
}

impl JobSpec {
    pub fn kind(&self) -> JobKind {
        match self {
            JobSpec::Train { .. } => JobKind::Train,
            JobSpec::Analyze { .. } => JobKind::Analyze,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub project_id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub progress: f64,
    /// Snapshot path for TRAIN, report id for ANALYZE.
    #[serde(default)]
    pub result: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub request_key: Option<String>,
    pub created_at: DateTime<Utc>,
    pub spec: JobSpec,
}

impl Job {
    pub fn new(job_id: String, project_id: String, spec: JobSpec, request_key: Option<String>) -> Self {
        Self {
            job_id,
            project_id,
            kind: spec.kind(),
            state: JobState::Queued,
            progress: 0.0,
            result: None,
            error: None,
            request_key,
            created_at: Utc::now(),
            spec,
        }
    }

    /// Move forward to `to`; backward or same-state moves are refused.
    pub fn advance(&mut self, to: JobState) -> bool {
        if self.state.is_terminal() || to <= self.state {
            return false;
        }
        self.state = to;
        true
    }

    pub fn finish(&mut self, result: String) -> bool {
        if !self.advance(JobState::Done) {
            return false;
        }
        self.progress = 1.0;
        self.result = Some(result);
        true
    }

    pub fn fail(&mut self, error: String) -> bool {
        if !self.advance(JobState::Failed) {
            return false;
        }
        self.error = Some(error);
        true
    }
}
