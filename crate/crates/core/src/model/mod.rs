//! Structured relational models over timed variables.

mod transform;
mod unfold;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::frontend::ast::{BaseVar, SystemSpec, TimedAtom};
use crate::graph::Dag;
use crate::valuation::{combine_all, Relation, VarId};

pub use transform::{
    drop_leaves, epistemic_marginalize, equality_merge, Marginal, MarginalizeOptions,
};
pub use unfold::unfold;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarKind {
    Program {
        var: BaseVar,
        time: usize,
    },
    /// Root whose value picks one satisfying assignment of the initial
    /// condition.
    InitSelector,
    /// Fresh value of the `occurrence`-th `rand` statement of a tick.
    RandTemp {
        var: BaseVar,
        time: usize,
        occurrence: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub kind: VarKind,
    pub frame: u32,
    pub name: String,
}

impl VarInfo {
    pub fn time(&self) -> usize {
        match self.kind {
            VarKind::Program { time, .. } | VarKind::RandTemp { time, .. } => time,
            VarKind::InitSelector => 0,
        }
    }
}

/// Registry of every variable id used for a system: timed program
/// variables first (`t * |U| + v`), then the selector and rand temps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarTable {
    infos: Vec<VarInfo>,
    base_names: Vec<String>,
    horizon: usize,
}

impl VarTable {
    pub fn program_only(spec: &SystemSpec) -> Self {
        let nb = spec.vars.len();
        let infos = (0..=spec.horizon)
            .flat_map(|t| {
                spec.vars.iter().enumerate().map(move |(v, name)| VarInfo {
                    kind: VarKind::Program { var: v, time: t },
                    frame: 2,
                    name: format!("{name}@{t}"),
                })
            })
            .collect::<Vec<_>>();
        debug_assert_eq!(infos.len(), (spec.horizon + 1) * nb);
        VarTable {
            infos,
            base_names: spec.vars.clone(),
            horizon: spec.horizon,
        }
    }

    pub fn push(&mut self, kind: VarKind, frame: u32, name: String) -> VarId {
        self.infos.push(VarInfo { kind, frame, name });
        VarId(self.infos.len() as u32 - 1)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn base_count(&self) -> usize {
        self.base_names.len()
    }

    pub fn program_count(&self) -> usize {
        (self.horizon + 1) * self.base_names.len()
    }

    pub fn program(&self, var: BaseVar, time: usize) -> VarId {
        debug_assert!(time <= self.horizon && var < self.base_names.len());
        VarId((time * self.base_names.len() + var) as u32)
    }

    pub fn atom(&self, atom: TimedAtom) -> VarId {
        self.program(atom.var, atom.time)
    }

    pub fn info(&self, v: VarId) -> &VarInfo {
        &self.infos[v.0 as usize]
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.infos[v.0 as usize].name
    }

    pub fn frame(&self, v: VarId) -> u32 {
        self.infos[v.0 as usize].frame
    }

    pub fn is_program(&self, v: VarId) -> bool {
        (v.0 as usize) < self.program_count()
    }

    pub fn len(&self) -> usize {
        self.infos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.infos.is_empty()
    }

    /// Looks up a variable by its display name.
    pub fn by_name(&self, name: &str) -> Option<VarId> {
        self.infos
            .iter()
            .position(|i| i.name == name)
            .map(|i| VarId(i as u32))
    }
}

/// Worlds as assignments over a variable set, with per-agent observable
/// subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpistemicStructure {
    pub worlds: Relation,
    pub observables: Vec<BTreeSet<VarId>>,
}

impl EpistemicStructure {
    pub fn vars(&self) -> BTreeSet<VarId> {
        self.worlds.domain()
    }

    /// M↓X: worlds projected to X, observations intersected with X.
    pub fn marginalize(&self, keep: &BTreeSet<VarId>) -> EpistemicStructure {
        EpistemicStructure {
            worlds: self.worlds.marginalize(keep),
            observables: self
                .observables
                .iter()
                .map(|o| o.intersection(keep).copied().collect())
                .collect(),
        }
    }
}

/// Merged vertices mapped to the vertex that now carries their value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AliasMap(pub BTreeMap<VarId, VarId>);

impl AliasMap {
    pub fn resolve(&self, v: VarId) -> VarId {
        let mut v = v;
        while let Some(&w) = self.0.get(&v) {
            v = w;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A dag over variables with one relation per vertex over the vertex and
/// its parents.
#[derive(Clone, Debug)]
pub struct StructuredModel {
    pub table: VarTable,
    pub dag: Dag<VarId>,
    pub relations: BTreeMap<VarId, Relation>,
    pub observables: Vec<BTreeSet<VarId>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingRelation(VarId),
    /// dom(s_v) differs from {v} ∪ pa(v).
    Domain(VarId),
    /// s_v constrains the parents of v.
    ParentNeutrality(VarId),
    Cyclic,
    /// Edge into an earlier time step.
    TimeOrder {
        from: VarId,
        to: VarId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRelation(v) => write!(f, "{v} has no node relation"),
            Violation::Domain(v) => write!(f, "relation of {v} is not over {v} and its parents"),
            Violation::ParentNeutrality(v) => {
                write!(f, "relation of {v} constrains its parents")
            }
            Violation::Cyclic => write!(f, "dependency graph has a cycle"),
            Violation::TimeOrder { from, to } => write!(f, "edge {from} -> {to} goes back in time"),
        }
    }
}

impl StructuredModel {
    pub fn vertices(&self) -> BTreeSet<VarId> {
        self.dag.vertex_set()
    }

    /// ⊗ of all node relations.
    pub fn combined(&self) -> Result<Relation> {
        combine_all(self.relations.values())
    }

    /// The represented epistemic structure, materialized.
    pub fn to_structure(&self) -> Result<EpistemicStructure> {
        let worlds = self.combined()?;
        if worlds.is_empty() {
            return Err(Error::EmptyWorlds);
        }
        Ok(EpistemicStructure {
            worlds,
            observables: self.observables.clone(),
        })
    }

    /// Checks both structured-model conditions, acyclicity and time
    /// ordering of edges. Empty when the model is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.dag.is_acyclic() {
            out.push(Violation::Cyclic);
        }
        for v in self.dag.vertices() {
            let Some(s) = self.relations.get(&v) else {
                out.push(Violation::MissingRelation(v));
                continue;
            };
            let parents = self.dag.parents(v);
            let mut expected = parents.clone();
            expected.insert(v);
            if s.domain() != expected {
                out.push(Violation::Domain(v));
                continue;
            }
            let schema: Vec<(VarId, u32)> = s
                .schema()
                .into_iter()
                .filter(|(x, _)| parents.contains(x))
                .collect();
            let neutral = Relation::identity(&schema).expect("schema from a relation");
            if s.marginalize(parents) != neutral {
                out.push(Violation::ParentNeutrality(v));
            }
            for &p in parents {
                if self.table.info(p).time() > self.table.info(v).time() {
                    out.push(Violation::TimeOrder { from: p, to: v });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Vertices per agent that the agent observes, as display names.
    pub fn observable_names(&self, agent: usize) -> Vec<&str> {
        self.observables[agent]
            .iter()
            .map(|&v| self.table.name(v))
            .collect()
    }
}
