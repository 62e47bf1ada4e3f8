mod bench;
mod dot;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use epik_core::checker::{check_system, CheckOptions, Level, PipelineStats};
use epik_core::frontend::ast::{SpecItem, SystemSpec};
use epik_core::frontend::{formula_to_string, parse_system_with, Overrides, ParseError};
use epik_core::limits::Deadline;
use epik_core::model::{drop_leaves, equality_merge, unfold};
use epik_core::relevance::kappa;
use epik_core::semantics::{find_run, format_run, EnumLimits};

#[derive(Parser)]
#[command(
    name = "epik",
    version,
    about = "Epistemic model checking with conditional independence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Model file.
    file: PathBuf,
    /// Evaluation time for every specification, replacing `@ T`.
    #[arg(long)]
    time: Option<usize>,
    /// Number of steps to unroll, replacing the model's horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Only the specification with this name.
    #[arg(long)]
    spec: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the specifications of a model file.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        /// 0: enumerate runs, 1: formula variables and full observations,
        /// 2: relevance set and fusion.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
        level: u8,
        /// Write pipeline statistics as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Print a complete run through each counterexample.
        #[arg(long)]
        witness: bool,
    },
    /// Export the dependency graph of the timed variables as DOT.
    Graph {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Stage::Optimized)]
        stage: Stage,
        /// Agent whose observable variables are grouped; defaults to the
        /// first agent of the formula.
        #[arg(long)]
        agent: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the generated protocol families at a range of sizes.
    Bench {
        #[arg(long)]
        family: String,
        /// Inclusive range `a..b`, or a single size.
        #[arg(long)]
        sizes: String,
        #[arg(long, value_delimiter = ',', default_value = "0,2")]
        levels: Vec<u8>,
        /// Seconds allowed per instance and level.
        #[arg(long, default_value_t = 120)]
        timeout: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Raw,
    Merged,
    Optimized,
}

#[derive(Debug)]
pub enum CliError {
    Io(PathBuf, std::io::Error),
    Parse(PathBuf, ParseError),
    Usage(String),
    Check(String, epik_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Parse(p, e) => {
                write!(f, "{}:{}:{}: {}", p.display(), e.line, e.col, e.message)
            }
            CliError::Usage(m) => f.write_str(m),
            CliError::Check(name, e) => write!(f, "{name}: {e}"),
        }
    }
}

fn load(args: &ModelArgs) -> Result<SystemSpec, CliError> {
    let src =
        std::fs::read_to_string(&args.file).map_err(|e| CliError::Io(args.file.clone(), e))?;
    let overrides = Overrides {
        horizon: args.horizon,
        time: args.time,
    };
    parse_system_with(&src, overrides).map_err(|e| CliError::Parse(args.file.clone(), e))
}

fn spec_label(item: &SpecItem, index: usize) -> String {
    match &item.name {
        Some(n) => n.clone(),
        None => format!("spec#{}", index + 1),
    }
}

fn selected<'a>(
    spec: &'a SystemSpec,
    name: Option<&str>,
) -> Result<Vec<(String, &'a SpecItem)>, CliError> {
    let items: Vec<_> = spec
        .specs
        .iter()
        .enumerate()
        .map(|(i, s)| (spec_label(s, i), s))
        .filter(|(label, _)| name.is_none_or(|n| n == label))
        .collect();
    if items.is_empty() {
        return Err(CliError::Usage(match name {
            Some(n) => format!("no specification named `{n}`"),
            None => "the model has no specification".into(),
        }));
    }
    Ok(items)
}

#[derive(Serialize)]
struct StatsRecord<'a> {
    spec: &'a str,
    time: usize,
    valid: bool,
    #[serde(flatten)]
    stats: &'a PipelineStats,
}

fn cmd_check(
    model: &ModelArgs,
    level: u8,
    stats_path: Option<&Path>,
    witness: bool,
) -> Result<bool, CliError> {
    let spec = load(model)?;
    let options = CheckOptions {
        level: Level::from_index(level).expect("range checked by clap"),
        ..CheckOptions::default()
    };
    let mut all_valid = true;
    let mut records = Vec::new();
    for (label, item) in selected(&spec, model.spec.as_deref())? {
        let report = check_system(&spec, &item.formula, &options)
            .map_err(|e| CliError::Check(label.clone(), e))?;
        let valid = report.verdict.valid;
        all_valid &= valid;
        println!(
            "{label}: {} @ {}: {}",
            formula_to_string(&spec, &item.formula),
            item.time,
            if valid { "VALID" } else { "FAILS" }
        );
        if let Some(cex) = report.counterexample_names() {
            let shown: Vec<String> = cex.iter().map(|(n, b)| format!("{n}={b}")).collect();
            println!("  counterexample: {}", shown.join(" "));
        }
        if witness && !valid {
            print_witness(&spec, &report);
        }
        records.push((label, item.time, valid, report.stats));
    }
    if let Some(path) = stats_path {
        let out: Vec<StatsRecord> = records
            .iter()
            .map(|(label, time, valid, stats)| StatsRecord {
                spec: label,
                time: *time,
                valid: *valid,
                stats,
            })
            .collect();
        let json = serde_json::to_string_pretty(&out).expect("stats serialize");
        std::fs::write(path, json + "\n").map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    }
    Ok(all_valid)
}

fn print_witness(spec: &SystemSpec, report: &epik_core::checker::CheckReport) {
    let Some(cex) = &report.verdict.counterexample else {
        return;
    };
    let partial: Vec<_> = cex
        .iter()
        .filter(|(v, _)| report.table.is_program(*v))
        .map(|&(v, b)| (v, b == 1))
        .collect();
    let limits = EnumLimits {
        max_worlds: u64::MAX,
        deadline: Deadline::after(Duration::from_secs(60)),
    };
    match find_run(spec, &partial, &limits) {
        Ok(Some(run)) => {
            println!("  witness run:");
            for line in format_run(spec, &run).lines() {
                println!("    {line}");
            }
        }
        Ok(None) => println!("  no run matches the counterexample"),
        Err(e) => println!("  witness search stopped: {e}"),
    }
}

fn cmd_graph(
    model: &ModelArgs,
    stage: Stage,
    agent: Option<&str>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let spec = load(model)?;
    let item = match spec.specs.is_empty() {
        true => None,
        false => Some(selected(&spec, model.spec.as_deref())?[0].1),
    };
    let agent = match agent {
        Some(name) => Some(
            spec.agent_index(name)
                .ok_or_else(|| CliError::Usage(format!("unknown agent `{name}`")))?,
        ),
        None => item
            .and_then(|s| s.formula.agents().into_iter().next())
            .or((!spec.agents.is_empty()).then_some(0)),
    };
    let check = |e| CliError::Check("graph".into(), e);
    let raw = unfold(&spec).map_err(check)?;
    let (sm, highlight) = match stage {
        Stage::Raw => (raw, BTreeSet::new()),
        Stage::Merged => (equality_merge(&raw, &BTreeSet::new()).0, BTreeSet::new()),
        Stage::Optimized => {
            let (merged, aliases) = equality_merge(&raw, &BTreeSet::new());
            let item = item.ok_or_else(|| {
                CliError::Usage("the optimized stage needs a specification".into())
            })?;
            let f = epik_core::checker::resolve_formula(&item.formula, &merged.table, &aliases);
            let k = kappa(&f, &merged).map_err(check)?.kappa;
            (drop_leaves(&merged, &k), k)
        }
    };
    let text = dot::render(&spec, &sm, agent, &highlight);
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(p.to_path_buf(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check {
            model,
            level,
            stats,
            witness,
        } => cmd_check(model, *level, stats.as_deref(), *witness).map(|valid| {
            if valid {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }),
        Command::Graph {
            model,
            stage,
            agent,
            output,
        } => cmd_graph(model, *stage, agent.as_deref(), output.as_deref())
            .map(|()| ExitCode::SUCCESS),
        Command::Bench {
            family,
            sizes,
            levels,
            timeout,
        } => bench::run(family, sizes, levels, Duration::from_secs(*timeout))
            .map(|()| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("{e}");
        ExitCode::from(2)
    })
}
