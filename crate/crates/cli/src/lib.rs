//! Command-line front end: configuration, task orchestration and CSV/JSON
//! reporting.

pub mod cli;
pub mod config;
pub mod failure;
pub mod fixtures;
pub mod report;
pub mod selftest;
pub mod table;
pub mod tasks;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use crate::cli::Cli;
use crate::failure::{Failure, EXIT_OK};

/// Files written by a successful run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub outcome: tasks::Outcome,
}

/// Resolves the configuration, runs the task on a pool of `cli.threads`
/// workers and writes the CSV table and the JSON report.
pub fn execute(cli: &Cli) -> Result<RunOutput, Failure> {
    let env_seed = std::env::var(config::SEED_ENV).ok();
    let cfg = config::load(cli.command.name(), cli.config.as_deref(), &cli.overrides, env_seed.as_deref())?;
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Failure::config("--threads must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    let start = Instant::now();
    let outcome = pool.install(|| tasks::run(&cfg))?;
    let wall = start.elapsed();

    fs::create_dir_all(&cli.out_dir)?;
    let csv_path = cli.out_dir.join(cfg.csv_name());
    let json_path = cli.out_dir.join(cfg.json_name());
    for p in [&csv_path, &json_path] {
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
    }
    outcome.table.write_csv(fs::File::create(&csv_path)?)?;
    let report = report::build(&cfg, &outcome, threads, wall);
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    fs::write(&json_path, text)?;
    Ok(RunOutput { csv_path, json_path, outcome })
}

fn print_outcome(out: &RunOutput, selftest: bool) -> Result<(), Failure> {
    if let Some(v) = &out.outcome.stdout_json {
        println!("{}", serde_json::to_string_pretty(v).map_err(|e| Failure::Io(e.to_string()))?);
    } else if selftest {
        for row in &out.outcome.table.rows {
            let cells: Vec<String> = row.iter().map(|c| c.render()).collect();
            println!("{:<4} {:<34} {:<5} {:>24}  {}", cells[0], cells[1], cells[2], cells[3], cells[4]);
        }
    } else {
        print!("{}", out.outcome.table.to_csv_string()?);
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code. Errors are
/// reported as one JSON object on stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { failure::EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let selftest = cli.command == cli::Command::Selftest;
    let result = execute(&cli).and_then(|out| {
        print_outcome(&out, selftest)?;
        if out.outcome.failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::Selftest(format!("failed criteria: {}", out.outcome.failed.join(", "))))
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.exit_code()
        }
    }
}
