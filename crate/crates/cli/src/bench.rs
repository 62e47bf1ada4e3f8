use std::time::{Duration, Instant};

use serde::Serialize;

use epik_core::checker::{check_system, CheckOptions, Level, PipelineStats};
use epik_core::families::Family;
use epik_core::limits::Deadline;
use epik_core::Error;

use crate::CliError;

/// One JSON line of benchmark output.
#[derive(Debug, Serialize)]
pub struct Record {
    pub family: &'static str,
    pub n: usize,
    pub spec: String,
    /// `VALID`, `FAILS`, `timeout`, `overflow` or `error: ...`.
    pub verdict: String,
    pub timeout: bool,
    pub wall_ms: f64,
    #[serde(flatten)]
    pub stats: PipelineStats,
}

/// Parses `a..b` (inclusive) or a single size.
pub fn parse_sizes(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("bad size range `{s}` (expected a..b)"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    match s.split_once("..") {
        Some((a, b)) => Ok((num(a)?, num(b.trim_start_matches('='))?)),
        None => num(s).map(|n| (n, n)),
    }
}

pub fn measure(
    family: Family,
    n: usize,
    level: Level,
    timeout: Duration,
) -> Result<Vec<Record>, CliError> {
    let spec = family
        .instance(n)
        .map_err(|e| CliError::Usage(format!("{family}({n}) does not parse: {e}")))?;
    let mut out = Vec::new();
    for (k, item) in spec.specs.iter().enumerate() {
        let options = CheckOptions {
            level,
            deadline: Deadline::after(timeout),
            ..CheckOptions::default()
        };
        let start = Instant::now();
        let result = check_system(&spec, &item.formula, &options);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let (verdict, stats) = match result {
            Ok(r) => (
                if r.verdict.valid { "VALID" } else { "FAILS" }.to_string(),
                r.stats,
            ),
            Err(Error::Timeout) => ("timeout".into(), PipelineStats::default()),
            Err(Error::Overflow { .. }) => ("overflow".into(), PipelineStats::default()),
            Err(e) => (format!("error: {e}"), PipelineStats::default()),
        };
        out.push(Record {
            family: family.name(),
            n,
            spec: item
                .name
                .clone()
                .unwrap_or_else(|| format!("spec#{}", k + 1)),
            timeout: verdict == "timeout",
            verdict,
            wall_ms,
            stats: PipelineStats {
                level: level.index(),
                ..stats
            },
        });
    }
    Ok(out)
}

pub fn run(family: &str, sizes: &str, levels: &[u8], timeout: Duration) -> Result<(), CliError> {
    let family: Family = family
        .parse()
        .map_err(|e| CliError::Usage(format!("{e}")))?;
    let (lo, hi) = parse_sizes(sizes)?;
    let levels = levels
        .iter()
        .map(|&l| Level::from_index(l).ok_or_else(|| CliError::Usage(format!("no level {l}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if lo <= hi && lo < family.min_size() {
        return Err(CliError::Usage(format!(
            "{family} needs n >= {}",
            family.min_size()
        )));
    }
    for n in lo..=hi {
        for &level in &levels {
            for r in measure(family, n, level, timeout)? {
                eprintln!(
                    "{:<17} n={:<3} level={} {:<12} {:<10} {:>10.1} ms  kappa={} worlds={}",
                    r.family,
                    r.n,
                    r.stats.level,
                    r.spec,
                    r.verdict,
                    r.wall_ms,
                    r.stats.vars_kappa,
                    r.stats.worlds_final
                );
                println!("{}", serde_json::to_string(&r).expect("record serializes"));
            }
        }
    }
    Ok(())
}
