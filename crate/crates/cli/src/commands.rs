//! The `codehinter` command line.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use codehinter_core::assist::quiz::DEFAULT_MAX_CANDIDATES;
use codehinter_core::assist::{answer_quiz, locate_and_explain, make_quiz, run_instrumented, suggest_prints};
use codehinter_core::runner::{run_end_to_end, snapshot_source, EndToEnd};
use codehinter_core::session::usage_report;
use codehinter_core::spectrum::{rank, top_k, DEFAULT_TOP_K};
use codehinter_core::trace::parse_trace;
use codehinter_core::{Formula, Outcome, PatchProposal, ProjectConfig, SessionStore, TestReport};

use crate::project::load_project;
use crate::server::PublicQuiz;
use crate::service::{default_provider, Service};

pub const DEFAULT_BIND: &str = "127.0.0.1:8787";

#[derive(Debug, Parser)]
#[command(name = "codehinter", version, about = "Fault localization and debugging helpers for small Python exercises")]
pub struct Cli {
    /// Project directory (subject files, tests/, optional codehinter.json).
    #[arg(long, global = true)]
    pub project: Option<PathBuf>,
    /// A trace file to use instead of running the tests.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
    /// Where session logs live.
    #[arg(long, global = true, default_value = ".codehinter")]
    pub data_dir: PathBuf,
    #[arg(long, global = true, default_value = "ochiai")]
    pub formula: Formula,
    #[arg(long, global = true, default_value_t = DEFAULT_TOP_K)]
    pub top: usize,
    /// Session id (for `report`).
    #[arg(long, global = true)]
    pub session: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the tests and print a summary.
    Test {
        /// Also write the trace here.
        #[arg(long)]
        save_trace: Option<PathBuf>,
    },
    /// Rank lines by suspiciousness.
    Locate {
        /// Add an explanation column (needs --project).
        #[arg(long)]
        explain: bool,
    },
    /// Build a three-option fix quiz.
    Quiz {
        /// Check this option instead of only showing the card.
        #[arg(long)]
        answer: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Suggest debug prints, optionally running the instrumented tests.
    Prints {
        #[arg(long)]
        run: bool,
        #[arg(long)]
        json: bool,
    },
    /// Show the diff a patch proposal would make.
    Diff {
        /// Proposal JSON file.
        #[arg(long)]
        proposal: PathBuf,
        /// Write the patched files.
        #[arg(long)]
        apply: bool,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value = DEFAULT_BIND)]
        bind: SocketAddr,
    },
    /// Feature usage for a recorded session.
    Report,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain { code: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain { .. } => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error[usage]: {m}"),
            CliError::Domain { code, message } => write!(f, "error[{code}]: {message}"),
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain { code: e.code().to_string(), message: e.to_string() }
            }
        }
    )*};
}

domain_from!(
    codehinter_core::RunnerError,
    codehinter_core::TraceError,
    codehinter_core::SpectrumError,
    codehinter_core::assist::AssistError,
    codehinter_core::PatchError,
    codehinter_core::SessionError,
    crate::project::ProjectError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain {
            code: "io_error".into(),
            message: e.to_string(),
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Domain {
        code: "io_error".into(),
        message: format!("{}: {e}", path.display()),
    }
}

fn project(cli: &Cli) -> Result<ProjectConfig, CliError> {
    let dir = cli
        .project
        .as_deref()
        .ok_or_else(|| CliError::Usage("this command needs --project DIR".into()))?;
    Ok(load_project(dir)?)
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

fn print_report(out: &mut dyn Write, report: &TestReport) -> std::io::Result<()> {
    if let Some(se) = &report.syntax_error {
        writeln!(out, "syntax error in {} line {}: {}", se.file, se.line, se.message)?;
        return Ok(());
    }
    writeln!(out, "passed={} failed={}", report.passed, report.failed + report.errored)?;
    for t in &report.failing {
        let label = if t.outcome == Outcome::Error { "ERROR" } else { "FAIL" };
        match &t.message {
            Some(m) => writeln!(out, "{label}\t{}\t{}", t.test_id, first_line(m))?,
            None => writeln!(out, "{label}\t{}", t.test_id)?,
        }
    }
    Ok(())
}

fn run(config: &ProjectConfig) -> Result<EndToEnd, CliError> {
    Ok(run_end_to_end(config)?)
}

fn cmd_test(cli: &Cli, save_trace: Option<&Path>, out: &mut dyn Write) -> Result<u8, CliError> {
    let config = project(cli)?;
    let run = run(&config)?;
    if let Some(path) = save_trace {
        let trace = codehinter_core::TraceFile::new(format!("codehinter-cli/{}", crate::VERSION), run.spectrum.clone());
        std::fs::write(path, trace.to_canonical_json()).map_err(io_at(path))?;
    }
    print_report(out, &run.report)?;
    let green = run.report.syntax_error.is_none() && run.report.failing.is_empty();
    Ok(if green { 0 } else { 1 })
}

fn cmd_locate(cli: &Cli, explain: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    if explain {
        let config = project(cli)?;
        let run = run(&config)?;
        let provider = default_provider();
        let lines = locate_and_explain(&run.spectrum, &run.snapshot, provider.as_ref(), cli.formula, cli.top)?;
        for l in lines {
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{}",
                l.location.file,
                l.location.line,
                l.score,
                l.explanation.replace(['\t', '\n'], " ")
            )?;
        }
        return Ok(0);
    }
    let spectrum = match (&cli.trace, &cli.project) {
        (Some(path), _) => {
            let bytes = std::fs::read(path).map_err(io_at(path))?;
            parse_trace(&bytes)?.spectrum
        }
        (None, Some(_)) => run(&project(cli)?)?.spectrum,
        (None, None) => return Err(CliError::Usage("locate needs --trace FILE or --project DIR".into())),
    };
    let ranking = rank(&spectrum, cli.formula)?;
    for r in top_k(&ranking, cli.top) {
        writeln!(out, "{}\t{}\t{:.6}", r.location.file, r.location.line, r.score)?;
    }
    Ok(0)
}

fn cmd_quiz(cli: &Cli, answer: Option<usize>, json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let config = project(cli)?;
    let run = run(&config)?;
    let provider = default_provider();
    let card = make_quiz(&run.spectrum, &run.snapshot, &config, provider.as_ref(), DEFAULT_MAX_CANDIDATES)?;
    if let Some(choice) = answer {
        let a = answer_quiz(&card, choice)?;
        if json {
            writeln!(out, "{}", serde_json::to_string_pretty(&a).expect("answer serializes"))?;
        } else {
            let verdict = if a.is_correct { "correct" } else { "incorrect" };
            writeln!(out, "{verdict}: {}", a.explanation)?;
        }
        return Ok(0);
    }
    if json {
        let public = PublicQuiz::from(&card);
        writeln!(out, "{}", serde_json::to_string_pretty(&public).expect("card serializes"))?;
        return Ok(0);
    }
    writeln!(out, "{}", card.question)?;
    for (i, opt) in card.options.iter().enumerate() {
        writeln!(out, "[{i}] {}", opt.explanation)?;
        for e in &opt.proposal.edits {
            writeln!(out, "    {}:{}", e.file, e.line)?;
            writeln!(out, "    - {}", e.old_text.trim())?;
            writeln!(out, "    + {}", e.new_text.trim())?;
        }
    }
    Ok(0)
}

fn cmd_prints(cli: &Cli, run_it: bool, json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let config = project(cli)?;
    let e2e = run(&config)?;
    let provider = default_provider();
    let plan = suggest_prints(&e2e.spectrum, &e2e.snapshot, provider.as_ref(), cli.formula)?;
    if !run_it {
        if json {
            writeln!(out, "{}", serde_json::to_string_pretty(&plan).expect("plan serializes"))?;
        } else {
            for ins in &plan.insertions {
                writeln!(out, "{}:{}\t{}\t# {}", ins.file, ins.after_line, ins.statement().trim(), ins.reason)?;
            }
        }
        return Ok(0);
    }
    let output = run_instrumented(&plan, &config)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&output).expect("output serializes"))?;
        return Ok(0);
    }
    for t in &output.tests {
        writeln!(out, "{}\t{:?}", t.test_id, t.outcome)?;
        for l in &t.lines {
            writeln!(out, "    {}", l.text)?;
        }
    }
    for l in &output.unattributed {
        writeln!(out, "(outside tests)    {}", l.text)?;
    }
    Ok(0)
}

fn cmd_diff(cli: &Cli, proposal: &Path, apply: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let config = project(cli)?;
    let text = std::fs::read_to_string(proposal).map_err(io_at(proposal))?;
    let proposal: PatchProposal = serde_json::from_str(&text).map_err(|e| CliError::Domain {
        code: "bad_request".into(),
        message: format!("{}: {e}", proposal.display()),
    })?;
    let snapshot = snapshot_source(&config)?;
    let applied = proposal.apply(&snapshot)?;
    if apply {
        applied.snapshot.write_to(&config.root)?;
    }
    write!(out, "{}", applied.diff)?;
    Ok(0)
}

fn cmd_serve(cli: &Cli, bind: SocketAddr, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut service = Service::open(&cli.data_dir)?;
    service.formula = cli.formula;
    service.top = cli.top;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind).await.map_err(|e| CliError::Domain {
            code: "bind_failure".into(),
            message: format!("{bind}: {e}"),
        })?;
        writeln!(out, "listening on http://{}", listener.local_addr()?)?;
        out.flush()?;
        crate::server::serve(listener, Arc::new(service)).await?;
        Ok::<_, CliError>(())
    })?;
    Ok(0)
}

fn cmd_report(cli: &Cli, out: &mut dyn Write) -> Result<u8, CliError> {
    let id = cli
        .session
        .as_deref()
        .ok_or_else(|| CliError::Usage("report needs --session ID".into()))?;
    let store = SessionStore::open(&cli.data_dir)?;
    store.load(id)?;
    let report = usage_report(&store.read_events(id)?);
    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
    Ok(0)
}

/// Executes a parsed command line, returning the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<u8, CliError> {
    match &cli.command {
        Command::Test { save_trace } => cmd_test(cli, save_trace.as_deref(), out),
        Command::Locate { explain } => cmd_locate(cli, *explain, out),
        Command::Quiz { answer, json } => cmd_quiz(cli, *answer, *json, out),
        Command::Prints { run, json } => cmd_prints(cli, *run, *json, out),
        Command::Diff { proposal, apply } => cmd_diff(cli, proposal, *apply, out),
        Command::Serve { bind } => cmd_serve(cli, *bind, out),
        Command::Report => cmd_report(cli, out),
    }
}

pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = out.flush();
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
