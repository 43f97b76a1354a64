use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pq_singular::config::{load_config, Command};
use pq_singular::run::run;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Fibering,
    Sweep,
    Verify,
    Bubble,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Fibering => Command::Fibering,
            Cmd::Sweep => Command::Sweep,
            Cmd::Verify => Command::Verify,
            Cmd::Bubble => Command::Bubble,
        }
    }
}

/// Solver and verification suite for the singular (p,q)-Laplacian problem.
///
/// Exit status: 0 all checks pass, 1 a check failed, 2 bad config or
/// input, 3 a solver did not converge.
#[derive(Debug, Parser)]
#[command(name = "pqsolve", version)]
struct Args {
    command: Cmd,
    /// TOML experiment file (see configs/).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for the λ sweep.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    ExitCode::from(real_main(args) as u8)
}

fn real_main(args: Args) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return 2;
        }
    };
    let mut cfg = match load_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return e.exit_code();
        }
    };
    let cmd = Command::from(args.command);
    if cfg.command != cmd {
        eprintln!("note: config declares {:?}, running {:?}", cfg.command, cmd);
        cfg.command = cmd;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads.max(1)).build_global() {
        eprintln!("error: thread pool: {e}");
        return 2;
    }
    let out = args.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match run(&cfg, &out) {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {} ({:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value);
            }
            if let Some(msg) = report.results.get("error").and_then(|m| m.as_str()) {
                eprintln!("error: {msg}");
            }
            println!("status: {:?}; report written to {}", report.status, out.join("report.json").display());
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
