use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use keane_core::cli::{self, CliError, Format};

/// Exact-arithmetic laboratory for Keane's 4-interval exchanges.
///
/// Exit codes: 0 when every check holds, 2 when any check fails, 1 on
/// usage, configuration or runtime errors.
#[derive(Debug, Parser)]
#[command(name = "keane-lab", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for independent sub-checks.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: &Args) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let config = cli::parse_config(&text)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Run(e.to_string()))?;

    let started = Instant::now();
    let outcome = pool.install(|| cli::run_command(&config))?;
    let elapsed = started.elapsed();

    let mut stdout = std::io::stdout().lock();
    let written = cli::emit_report(&outcome, args.format, args.out.as_deref(), &mut stdout)?;
    if let Some(path) = written {
        eprintln!("wrote {}", path.display());
    }
    let summary = &outcome.report.summary;
    eprintln!(
        "{}: {} checks, {} failed, {:.3}s",
        config.command,
        summary.checks,
        summary.failed,
        elapsed.as_secs_f64()
    );
    for name in &summary.failures {
        eprintln!("  FAIL {name}");
    }
    Ok(outcome.report.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
