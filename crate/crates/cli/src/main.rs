//! `cqrewrite`: classify, minimize, rewrite and verify conjunctive queries
//! over views from the command line.
//!
//! Exit codes: 0 result found, 1 no rewriting (or verification failed),
//! 2 input error, 3 candidate size limit exceeded, 4 query not in the
//! requested class.

mod commands;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cqrewrite::evaluation::DEFAULT_LIMIT;
use cqrewrite::rewriting::{SplitMode, SplitPolicy, Target};
use rayon::prelude::*;

use commands::Outcome;

#[derive(Parser, Debug)]
#[command(
    name = "cqrewrite",
    version,
    about = "Structure-preserving rewriting of conjunctive queries over views"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Accepted for reproducible invocations. Fresh variables are named
    /// deterministically, so output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Worker threads when a problem path is a directory.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural classes of the query and of every view.
    Classify { problem: PathBuf },
    /// The core of the query.
    Minimize { problem: PathBuf },
    /// Rewrite the query over the views.
    Rewrite {
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = TargetArg::Any)]
        target: TargetArg,
        /// Largest canonical candidate, in derived facts.
        #[arg(long, default_value_t = DEFAULT_LIMIT, value_parser = parse_limit)]
        limit: usize,
        #[arg(long = "split-views", value_enum, default_value_t = SplitArg::Auto)]
        split_views: SplitArg,
    },
    /// Check that a rule over the views is an exact rewriting of the query.
    Verify {
        problem: PathBuf,
        rewriting: PathBuf,
    },
    /// Evaluate the query, or one view, on a database file.
    Eval {
        problem: PathBuf,
        database: PathBuf,
        #[arg(long)]
        view: Option<String>,
    },
    /// Split the views into fragments of bounded head arity.
    SplitViews {
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::WeakHead)]
        mode: ModeArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TargetArg {
    Any,
    Acyclic,
    FreeConnex,
    Hierarchical,
    QHierarchical,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Any => Target::Any,
            TargetArg::Acyclic => Target::Acyclic,
            TargetArg::FreeConnex => Target::FreeConnex,
            TargetArg::Hierarchical => Target::Hierarchical,
            TargetArg::QHierarchical => Target::QHierarchical,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitArg {
    Auto,
    Off,
    WeakHead,
}

impl From<SplitArg> for SplitPolicy {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Auto => SplitPolicy::Auto,
            SplitArg::Off => SplitPolicy::Off,
            SplitArg::WeakHead => SplitPolicy::WeakHead,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    FreeConnex,
    WeakHead,
}

impl From<ModeArg> for SplitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FreeConnex => SplitMode::FreeConnex,
            ModeArg::WeakHead => SplitMode::WeakHead,
        }
    }
}

fn parse_limit(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("limit must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

impl Command {
    fn problem(&self) -> &Path {
        match self {
            Command::Classify { problem }
            | Command::Minimize { problem }
            | Command::Rewrite { problem, .. }
            | Command::Verify { problem, .. }
            | Command::Eval { problem, .. }
            | Command::SplitViews { problem, .. } => problem,
        }
    }

    fn run(&self, problem: &Path) -> Outcome {
        match self {
            Command::Classify { .. } => commands::classify(problem),
            Command::Minimize { .. } => commands::minimize(problem),
            Command::Rewrite {
                target,
                limit,
                split_views,
                ..
            } => commands::rewrite(problem, (*target).into(), *limit, (*split_views).into()),
            Command::Verify { rewriting, .. } => commands::verify(problem, rewriting),
            Command::Eval { database, view, .. } => {
                commands::eval(problem, database, view.as_deref())
            }
            Command::SplitViews { mode, .. } => commands::split_views(problem, (*mode).into()),
        }
    }
}

/// Problem files of a batch directory, sorted by path.
fn batch_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "cq"))
        .collect();
    files.sort();
    Ok(files)
}

fn render(outcome: &Outcome, format: Format) -> String {
    match format {
        Format::Text => outcome.text.clone(),
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&outcome.json).expect("JSON values always serialize");
            s.push('\n');
            s
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    log::debug!("seed {}", cli.seed);

    let path = cli.command.problem();
    let (code, output) = if path.is_dir() {
        let files = match batch_files(path) {
            Ok(files) => files,
            Err(e) => {
                let outcome = Outcome::error("IO_ERROR", format!("{}: {e}", path.display()));
                eprint!("{}", outcome.text);
                return ExitCode::from(outcome.code);
            }
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs.unwrap_or(1) as usize)
            .build()
            .expect("thread pool");
        let outcomes: Vec<Outcome> =
            pool.install(|| files.par_iter().map(|f| cli.command.run(f)).collect());
        let code = outcomes.iter().map(|o| o.code).max().unwrap_or(0);
        let output = match cli.format {
            Format::Text => files
                .iter()
                .zip(&outcomes)
                .map(|(f, o)| format!("== {} ==\n{}", f.display(), o.text))
                .collect(),
            Format::Json => {
                let entries: Vec<serde_json::Value> = files
                    .iter()
                    .zip(&outcomes)
                    .map(|(f, o)| serde_json::json!({ "file": f.display().to_string(), "result": o.json }))
                    .collect();
                let mut s =
                    serde_json::to_string_pretty(&entries).expect("JSON values always serialize");
                s.push('\n');
                s
            }
        };
        (code, output)
    } else {
        let outcome = cli.command.run(path);
        if cli.format == Format::Text && outcome.json["status"] == "ERROR" {
            eprint!("{}", outcome.text);
            return ExitCode::from(outcome.code);
        }
        (outcome.code, render(&outcome, cli.format))
    };
    finish(code, &output)
}

fn finish(code: u8, output: &str) -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(output.as_bytes());
    let _ = stdout.flush();
    ExitCode::from(code)
}
