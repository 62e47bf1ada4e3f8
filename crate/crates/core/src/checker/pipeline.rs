use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;

use super::{check_valid, Verdict};
use crate::error::Result;
use crate::frontend::ast::{Formula, SystemSpec, TimedAtom};
use crate::limits::Deadline;
use crate::model::{
    epistemic_marginalize, equality_merge, unfold, AliasMap, EpistemicStructure,
    MarginalizeOptions, VarTable,
};
use crate::relevance::kappa;
use crate::semantics::{enumerate_structure, EnumLimits};
use crate::valuation::{Heuristic, VarId};

/// How much of the reduction pipeline to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Level {
    /// Explicit enumeration of every run.
    Oracle = 0,
    /// Unfold and merge, then keep the formula's variables and the full
    /// observation sets of the agents it mentions.
    Restricted = 1,
    /// Unfold, merge, relevance set, leaf elimination and fusion.
    Optimized = 2,
}

impl Level {
    pub fn from_index(i: u8) -> Option<Level> {
        match i {
            0 => Some(Level::Oracle),
            1 => Some(Level::Restricted),
            2 => Some(Level::Optimized),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub level: Level,
    pub max_worlds: u64,
    pub deadline: Deadline,
    pub heuristic: Heuristic,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            level: Level::Optimized,
            max_worlds: 1 << 24,
            deadline: Deadline::none(),
            heuristic: Heuristic::MinSize,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct KnowsStats {
    pub agent: String,
    pub kappa_inner: usize,
    pub observed: usize,
}

/// Sizes and timings of one pipeline run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PipelineStats {
    pub level: u8,
    /// Timed program variables of the unfolded system.
    pub vars_raw: usize,
    /// Timed program variables still present after equality merging.
    pub vars_merged: usize,
    /// Variables of the structure the formula is finally checked on.
    pub vars_kappa: usize,
    pub worlds_final: usize,
    pub max_intermediate_tuples: usize,
    pub stage_ms: BTreeMap<String, f64>,
    /// Unfolded vertices, including the init selector and rand temps.
    pub vertices_raw: usize,
    pub vertices_merged: usize,
    /// Vertices left once leaves outside the target set are removed.
    pub vars_reduced: usize,
    pub elim_order_len: usize,
    pub knows: Vec<KnowsStats>,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub stats: PipelineStats,
    /// Names for every variable id that may appear in the verdict.
    pub table: VarTable,
    pub structure: EpistemicStructure,
}

impl CheckReport {
    /// The counterexample as `name=value` pairs.
    pub fn counterexample_names(&self) -> Option<Vec<(String, u32)>> {
        self.verdict.counterexample.as_ref().map(|w| {
            w.iter()
                .map(|&(v, b)| (self.table.name(v).to_string(), b))
                .collect()
        })
    }
}

/// Maps timed atoms to variable ids, following merged aliases.
pub fn resolve_formula(phi: &Formula, table: &VarTable, aliases: &AliasMap) -> Formula<VarId> {
    phi.map_atoms(&|a: &TimedAtom| {
        Ok::<_, std::convert::Infallible>(aliases.resolve(table.atom(*a)))
    })
    .unwrap()
}

struct Clock {
    last: Instant,
    stages: BTreeMap<String, f64>,
}

impl Clock {
    fn new() -> Self {
        Clock {
            last: Instant::now(),
            stages: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages
            .insert(stage.into(), (now - self.last).as_secs_f64() * 1e3);
        self.last = now;
    }
}

/// Checks `phi` on the system at the requested level of optimization.
pub fn check_system(
    spec: &SystemSpec,
    phi: &Formula,
    options: &CheckOptions,
) -> Result<CheckReport> {
    let mut clock = Clock::new();
    let mut stats = PipelineStats {
        level: options.level.index(),
        vars_raw: (spec.horizon + 1) * spec.vars.len(),
        ..PipelineStats::default()
    };

    if options.level == Level::Oracle {
        let limits = EnumLimits {
            max_worlds: options.max_worlds,
            deadline: options.deadline,
        };
        let m = enumerate_structure(spec, &limits)?;
        clock.lap("enumerate");
        let table = VarTable::program_only(spec);
        let f = resolve_formula(phi, &table, &AliasMap::default());
        options.deadline.check()?;
        let verdict = check_valid(&m, &f)?;
        clock.lap("check");
        stats.vars_merged = stats.vars_raw;
        stats.vars_kappa = m.worlds.vars().len();
        stats.vars_reduced = stats.vars_kappa;
        stats.vertices_raw = stats.vars_raw;
        stats.vertices_merged = stats.vars_raw;
        stats.worlds_final = m.worlds.len();
        stats.max_intermediate_tuples = m.worlds.len();
        stats.stage_ms = clock.stages;
        return Ok(CheckReport {
            verdict,
            stats,
            table,
            structure: m,
        });
    }

    let raw = unfold(spec)?;
    stats.vertices_raw = raw.dag.len();
    clock.lap("unfold");
    let (merged, aliases) = equality_merge(&raw, &BTreeSet::new());
    stats.vertices_merged = merged.dag.len();
    stats.vars_merged = merged
        .dag
        .vertices()
        .filter(|&v| merged.table.is_program(v))
        .count();
    clock.lap("merge");
    options.deadline.check()?;

    let f = resolve_formula(phi, &merged.table, &aliases);
    let target: BTreeSet<VarId> = match options.level {
        Level::Restricted => {
            let mut x = f.atoms();
            for i in f.agents() {
                x.extend(merged.observables[i].iter().copied());
            }
            x
        }
        _ => {
            let r = kappa(&f, &merged)?;
            stats.knows = r
                .knows
                .iter()
                .map(|k| KnowsStats {
                    agent: spec.agents[k.agent].name.clone(),
                    kappa_inner: k.inner.len(),
                    observed: k.observed.len(),
                })
                .collect();
            r.kappa
        }
    };
    stats.vars_kappa = target.len();
    clock.lap("relevance");

    let marginal = epistemic_marginalize(
        &merged,
        &target,
        &MarginalizeOptions {
            heuristic: options.heuristic,
            deadline: options.deadline,
        },
    )?;
    stats.vars_reduced = marginal.reduced_vars;
    stats.elim_order_len = marginal.order.len();
    stats.max_intermediate_tuples = marginal.fusion.max_intermediate_tuples;
    stats.worlds_final = marginal.structure.worlds.len();
    clock.lap("marginalize");
    options.deadline.check()?;

    let verdict = check_valid(&marginal.structure, &f)?;
    clock.lap("check");
    stats.stage_ms = clock.stages;
    Ok(CheckReport {
        verdict,
        stats,
        table: merged.table,
        structure: marginal.structure,
    })
}
