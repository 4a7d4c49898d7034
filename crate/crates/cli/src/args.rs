//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tribeforge::tribecraft::Verdict;

#[derive(Debug, Parser)]
#[command(name = "tribeforge", version, about = "Discover consumer tribes in a tweet corpus and compare their honest signals")]
pub struct Cli {
    /// Store root; created on first use.
    #[arg(long, global = true, env = "TRIBEFORGE_DATA_DIR", default_value = "tribeforge-data")]
    pub data_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Import a tweet/profile JSONL pair into the store under a name.
    Ingest(IngestArgs),
    /// Check a corpus for consistency problems; exits 2 when any are found.
    Validate(ValidateArgs),
    /// Generate a planted-tribe corpus with ground truth.
    Synth(SynthArgs),
    /// List corpora in the store.
    Corpora,
    /// Build tribes: create projects, set keywords, review candidates.
    #[command(subcommand)]
    Project(ProjectCommand),
    /// Train the tribe classifier of a project from its leaders.
    Train(TrainArgs),
    /// Tribe probabilities for individual texts.
    Classify(ClassifyArgs),
    /// Allocate every user of a corpus to a tribe.
    Allocate(AllocateArgs),
    /// Honest-signal profile table as CSV.
    Signals(SignalsArgs),
    /// Compare tribes: allocation, signals, ANOVA and Tukey HSD.
    Report(ReportArgs),
    /// List stored reports, or print one.
    Reports(ReportsArgs),
    /// List jobs, or show one.
    Jobs(JobsArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus name in the store.
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub tweets: PathBuf,
    #[arg(long)]
    pub profiles: PathBuf,
    /// Ground-truth labels (`user<TAB>tribe index`), kept alongside the corpus.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct CorpusSource {
    /// A corpus already in the store.
    #[arg(long)]
    pub corpus: Option<String>,
    /// A tweets JSONL file; pair with --profiles.
    #[arg(long, requires = "profiles")]
    pub tweets: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: CorpusSource,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Print the full findings as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub tribes: usize,
    /// Users per tribe.
    #[arg(long, default_value_t = 50)]
    pub users: usize,
    /// Tweets per user.
    #[arg(long, default_value_t = 30)]
    pub tweets: usize,
    #[arg(long, default_value_t = 0.9)]
    pub separation: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Write tweets.jsonl, profiles.jsonl and truth.tsv here.
    #[arg(long, required_unless_present = "name")]
    pub out: Option<PathBuf>,
    /// Also import into the store under this name.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum ProjectCommand {
    /// Create a project for a macro-category; prints its id.
    New(ProjectNewArgs),
    /// List projects.
    List,
    /// Show a project.
    Show(ProjectRef),
    /// Replace the keywords of a tribe.
    Keywords(KeywordsArgs),
    /// Rank candidate leaders for a tribe.
    Candidates(CandidatesArgs),
    /// Record KEEP/REJECT decisions, one at a time or replayed from a file.
    Decide(DecideArgs),
    /// Print the decision log.
    Decisions(ProjectRef),
    /// Hashtag counts over a tribe's leaders.
    Cloud(TribeRef),
    /// Interaction network among a tribe's leaders.
    Network(TribeRef),
}

#[derive(Debug, Args)]
pub struct ProjectRef {
    #[arg(long)]
    pub project: String,
}

#[derive(Debug, Args)]
pub struct TribeRef {
    #[arg(long)]
    pub project: String,
    #[arg(long)]
    pub tribe: String,
}

#[derive(Debug, Args)]
pub struct ProjectNewArgs {
    /// `lifestyle`, `recreation` or `synth-N`.
    #[arg(long = "macro")]
    pub macro_category: String,
    #[arg(long)]
    pub corpus: Option<String>,
    #[arg(long)]
    pub request_key: Option<String>,
}

#[derive(Debug, Args)]
pub struct KeywordsArgs {
    #[arg(long)]
    pub project: String,
    #[arg(long)]
    pub tribe: String,
    #[arg(required = true)]
    pub keywords: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CandidatesArgs {
    #[arg(long)]
    pub project: String,
    #[arg(long)]
    pub tribe: String,
    #[arg(long, default_value_t = 20)]
    pub limit: usize,
    /// Weights for bio, tweets, followers and friends; must sum to 1.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerdictArg {
    Keep,
    Reject,
}

impl From<VerdictArg> for Verdict {
    fn from(v: VerdictArg) -> Self {
        match v {
            VerdictArg::Keep => Verdict::Keep,
            VerdictArg::Reject => Verdict::Reject,
        }
    }
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    #[arg(long)]
    pub project: String,
    /// JSONL of decisions (`user_id`, `tribe_id`, `verdict`, optional
    /// `request_key`/`actor`). A project's own decision log is accepted as is.
    #[arg(long, conflicts_with_all = ["user", "tribe", "verdict"])]
    pub from_file: Option<PathBuf>,
    #[arg(long, required_unless_present = "from_file")]
    pub user: Option<String>,
    #[arg(long, required_unless_present = "from_file")]
    pub tribe: Option<String>,
    #[arg(long, value_enum, required_unless_present = "from_file")]
    pub verdict: Option<VerdictArg>,
    #[arg(long)]
    pub request_key: Option<String>,
    #[arg(long)]
    pub actor: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub project: String,
    /// Required unless the config file carries a seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON training config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub min_leader_tweets: Option<usize>,
    /// Train even when a tribe has fewer leader tweets than required.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub request_key: Option<String>,
    /// Submit and print the job id without waiting.
    #[arg(long)]
    pub no_wait: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub project: String,
    /// Texts to classify; read one per line from stdin when absent.
    pub texts: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    #[arg(long)]
    pub project: String,
    /// Defaults to the project's corpus.
    #[arg(long)]
    pub corpus: Option<String>,
    /// Write allocations as JSONL.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long, default_value_t = 7)]
    pub window_days: u32,
    #[arg(long, default_value_t = 1)]
    pub step_days: u32,
}

#[derive(Debug, Args)]
pub struct SignalsArgs {
    #[arg(long)]
    pub corpus: String,
    /// Restrict to these users; all authors by default.
    #[arg(long, value_delimiter = ',')]
    pub users: Vec<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Records,
}

impl ReportFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportFormat::Text => "text",
            ReportFormat::Records => "records",
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub project: String,
    /// Defaults to the project's corpus.
    #[arg(long)]
    pub corpus: Option<String>,
    /// Restrict signals to tweets mentioning any of these (brand analysis).
    #[arg(long, value_delimiter = ',')]
    pub filter: Vec<String>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub request_key: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportsArgs {
    pub report_id: Option<String>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct JobsArgs {
    pub job_id: Option<String>,
    #[arg(long)]
    pub project: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, env = "TRIBEFORGE_PORT", default_value_t = tribeforge_service::DEFAULT_PORT)]
    pub port: u16,
}
