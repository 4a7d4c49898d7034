//! Batch driver behind the `tribeforge` binary. Every workflow of the HTTP
//! API is reachable from here without a server.

pub mod args;
mod commands;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use tribeforge::corpus::CorpusError;
use tribeforge::pipeline::AnalysisError;
use tribeforge::signals::SignalError;
use tribeforge::stats::StatsError;
use tribeforge::textmodel::TextModelError;
use tribeforge::tribecraft::TribeError;
use tribeforge_service::{Service, ServiceError};

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Input that was understood but rejected.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

/// Which subcommand covers each HTTP route.
pub const ENDPOINT_COMMANDS: &[(&str, &str, &str)] = &[
    ("GET", "/health", "serve"),
    ("GET", "/corpora", "corpora"),
    ("GET", "/projects", "project list"),
    ("POST", "/projects", "project new"),
    ("GET", "/projects/{id}", "project show"),
    ("PUT", "/projects/{id}/tribes/{tribe}/keywords", "project keywords"),
    ("GET", "/projects/{id}/tribes/{tribe}/candidates", "project candidates"),
    ("GET", "/projects/{id}/decisions", "project decisions"),
    ("POST", "/projects/{id}/decisions", "project decide"),
    ("GET", "/projects/{id}/hashtag-cloud/{tribe}", "project cloud"),
    ("GET", "/projects/{id}/leader-network/{tribe}", "project network"),
    ("POST", "/projects/{id}/train", "train"),
    ("POST", "/projects/{id}/analyze", "report"),
    ("GET", "/jobs", "jobs"),
    ("GET", "/jobs/{job_id}", "jobs"),
    ("GET", "/reports", "reports"),
    ("GET", "/reports/{report_id}", "reports"),
];

fn is_validation(e: &(dyn std::error::Error + 'static)) -> Option<bool> {
    if e.is::<Failure>() || e.is::<TribeError>() || e.is::<serde_json::Error>() {
        return Some(true);
    }
    if let Some(e) = e.downcast_ref::<ServiceError>() {
        return Some(!matches!(e, ServiceError::Io(_)));
    }
    if let Some(e) = e.downcast_ref::<CorpusError>() {
        return Some(!matches!(e, CorpusError::Io { .. }));
    }
    if let Some(e) = e.downcast_ref::<TextModelError>() {
        return Some(matches!(
            e,
            TextModelError::InvalidConfig(_)
                | TextModelError::InsufficientData { .. }
                | TextModelError::NoLeaders(_)
                | TextModelError::EmptyTrainingSet
        ));
    }
    if let Some(e) = e.downcast_ref::<SignalError>() {
        return Some(matches!(e, SignalError::InvalidWindow(_)));
    }
    if let Some(e) = e.downcast_ref::<AnalysisError>() {
        return Some(matches!(e, AnalysisError::NoMatches(_)));
    }
    if let Some(e) = e.downcast_ref::<StatsError>() {
        return Some(matches!(e, StatsError::TooFewGroups));
    }
    None
}

/// Exit status for an error: 2 when the input was rejected, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(v) = is_validation(cause) {
            return if v { EXIT_VALIDATION } else { EXIT_INTERNAL };
        }
    }
    EXIT_INTERNAL
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    // synth with only --out never touches the store
    if let Command::Synth(a) = &cli.command {
        if a.name.is_none() {
            return commands::synth(None, a, out);
        }
    }
    let svc = Service::open(&cli.data_dir)?;
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&svc, a, out),
        Command::Validate(a) => commands::validate(&svc, a, out),
        Command::Synth(a) => commands::synth(Some(&svc), a, out),
        Command::Corpora => commands::corpora(&svc, out),
        Command::Project(c) => commands::project(&svc, c, out),
        Command::Train(a) => commands::train(&svc, a, out),
        Command::Classify(a) => commands::classify(&svc, a, out),
        Command::Allocate(a) => commands::allocate(&svc, a, out),
        Command::Signals(a) => commands::signals(&svc, a, out),
        Command::Report(a) => commands::report(&svc, a, out),
        Command::Reports(a) => commands::reports(&svc, a, out),
        Command::Jobs(a) => commands::jobs(&svc, a, out),
        Command::Serve(a) => commands::serve(svc.clone(), a),
    }
}

/// Parse `argv` (program name first), run, and return the exit status.
/// Usage errors go to stderr with status 64.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn has_command(path: &str) -> bool {
        let mut cmd = Cli::command();
        for part in path.split(' ') {
            match cmd.find_subcommand(part) {
                Some(c) => cmd = c.clone(),
                None => return false,
            }
        }
        true
    }

    #[test]
    fn every_endpoint_has_a_subcommand() {
        for (method, path) in tribeforge_service::ENDPOINTS {
            let hit = ENDPOINT_COMMANDS.iter().find(|(m, p, _)| m == method && p == path);
            let (_, _, cmd) = hit.unwrap_or_else(|| panic!("{method} {path} has no subcommand"));
            assert!(has_command(cmd), "{cmd} is not a subcommand");
        }
        assert_eq!(ENDPOINT_COMMANDS.len(), tribeforge_service::ENDPOINTS.len());
    }

    #[test]
    fn required_subcommands_exist() {
        for c in [
            "ingest", "validate", "synth", "project new", "project keywords", "project candidates",
            "project decide", "train", "classify", "allocate", "signals", "report", "serve",
        ] {
            assert!(has_command(c), "{c}");
        }
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_64() {
        let mut sink = Vec::new();
        assert_eq!(run(["tribeforge", "frobnicate"], &mut sink), EXIT_USAGE);
        assert_eq!(run(["tribeforge", "synth", "--bogus"], &mut sink), EXIT_USAGE);
        assert_eq!(run(["tribeforge", "project", "decide", "--project", "p1"], &mut sink), EXIT_USAGE);
        assert_eq!(run(["tribeforge", "--help"], &mut sink), EXIT_OK);
    }

    #[test]
    fn error_classes() {
        let v = anyhow::Error::new(ServiceError::NotFound("p9".into()));
        assert_eq!(exit_code(&v), EXIT_VALIDATION);
        let io = anyhow::Error::new(ServiceError::Io("disk".into()));
        assert_eq!(exit_code(&io), EXIT_INTERNAL);
        let wrapped = anyhow::Error::new(Failure::Validation("bad".into())).context("while training");
        assert_eq!(exit_code(&wrapped), EXIT_VALIDATION);
        assert_eq!(exit_code(&anyhow::anyhow!("boom")), EXIT_INTERNAL);
    }
}
