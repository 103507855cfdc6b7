//! Adapter executable: `codehinter-stub-adapter --project DIR --out FILE`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use codehinter_stub_adapter::{run_project, AdapterOptions, DEFAULT_STEP_LIMIT};

#[derive(Parser)]
#[command(version, about = "Runs a project's tests and writes a coverage trace")]
struct Args {
    /// Project root containing subject files and `tests/`.
    #[arg(long)]
    project: PathBuf,
    /// Where to write the trace JSON.
    #[arg(long)]
    out: PathBuf,
    /// Subject file, relative to the project (repeatable).
    #[arg(long = "subject")]
    subjects: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
    step_limit: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut opts = AdapterOptions::new(&args.project);
    opts.step_limit = args.step_limit;
    if !args.subjects.is_empty() {
        opts.subjects = Some(args.subjects);
    }
    let out = match run_project(&opts) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("codehinter-stub-adapter: {e}");
            return ExitCode::from(1);
        }
    };
    eprint!("{}", out.debug);
    let json = out.trace.to_canonical_json();
    let dir = args.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        args.out.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    if let Err(e) = std::fs::write(&tmp, json).and_then(|()| std::fs::rename(&tmp, &args.out)) {
        eprintln!("codehinter-stub-adapter: cannot write {}: {e}", args.out.display());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
