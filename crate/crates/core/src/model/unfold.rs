use std::collections::{BTreeMap, BTreeSet};

use super::{StructuredModel, VarKind, VarTable};
use crate::error::{Error, Result};
use crate::frontend::ast::{Action, Expr, Stmt, SystemSpec};
use crate::graph::Dag;
use crate::semantics::init_assignments;
use crate::valuation::{Relation, VarId};

/// Relation {v} ∪ vars(e) → the graph of `v = e(parents)`.
fn function_relation(v: VarId, e: &Expr<VarId>, table: &VarTable) -> Relation {
    let parents: Vec<VarId> = e.vars().into_iter().collect();
    let mut schema: Vec<(VarId, u32)> = parents.iter().map(|&p| (p, table.frame(p))).collect();
    schema.push((v, 2));
    let k = parents.len();
    assert!(k < 32, "expression over too many variables");
    let tuples = (0u64..(1u64 << k)).map(|bits| {
        let value = |p: VarId| {
            let i = parents.binary_search(&p).unwrap();
            (bits >> (k - 1 - i)) & 1 == 1
        };
        let mut t: Vec<u32> = (0..k).map(|i| ((bits >> (k - 1 - i)) & 1) as u32).collect();
        t.push(e.eval(&value) as u32);
        t
    });
    Relation::new(&schema, tuples).expect("well-formed function graph")
}

/// Unfolds the system up to its horizon by symbolic execution of each
/// tick.
///
/// Every timed program variable becomes a vertex whose relation is the
/// graph of its end-of-tick value as a function of earlier vertices. A
/// `rand` gets its own vertex only when its value is read, or copied into
/// more than one variable, within the tick; otherwise the variable it
/// writes becomes a free root.
pub fn unfold(spec: &SystemSpec) -> Result<StructuredModel> {
    let mut table = VarTable::program_only(spec);
    let nb = spec.vars.len();
    let mut dag: Dag<VarId> = Dag::default();
    let mut relations = BTreeMap::new();

    let (ivars, sats) = init_assignments(spec);
    if sats.is_empty() {
        return Err(Error::UnsatisfiableInit);
    }
    if !ivars.is_empty() {
        let frame = u32::try_from(sats.len()).map_err(|_| Error::Overflow {
            cap: u32::MAX as u64,
        })?;
        let sel = table.push(VarKind::InitSelector, frame, "p_init".into());
        dag.add_vertex(sel);
        relations.insert(sel, Relation::identity(&[(sel, frame)])?);
        for (i, &v) in ivars.iter().enumerate() {
            let x = table.program(v, 0);
            dag.add_edge(sel, x);
            let rel = Relation::new(
                &[(sel, frame), (x, 2)],
                sats.iter()
                    .enumerate()
                    .map(|(k, sat)| [k as u32, sat[i] as u32]),
            )?;
            relations.insert(x, rel);
        }
    }
    for v in (0..nb).filter(|v| !ivars.contains(v)) {
        let x = table.program(v, 0);
        dag.add_vertex(x);
        relations.insert(x, Relation::identity(&[(x, 2)])?);
    }

    for t in 1..=spec.horizon {
        let mut code: Vec<&Stmt> = Vec::new();
        for i in 0..spec.agents.len() {
            if let Action::Atomic(c) = spec.action(i, t) {
                code.extend(c.0.iter());
            }
        }
        code.extend(spec.env.0.iter());

        // Temps are numbered by placeholder ids past the table until we
        // know which of them need a vertex.
        let placeholder_base = u32::MAX / 2;
        let mut env: Vec<Expr<VarId>> = (0..nb)
            .map(|v| Expr::Var(table.program(v, t - 1)))
            .collect();
        let mut rand_of: Vec<(usize, usize)> = Vec::new();
        for stmt in code {
            match stmt {
                Stmt::Assign(v, e) => env[*v] = e.substitute(&|u| env[u].clone()),
                Stmt::Rand(v) => {
                    env[*v] = Expr::Var(VarId(placeholder_base + rand_of.len() as u32));
                    rand_of.push((*v, rand_of.len()));
                }
            }
        }
        let is_temp = |x: VarId| x.0 >= placeholder_base;

        // A temp needs a vertex unless it is exactly the final value of a
        // single variable and occurs nowhere else.
        let mut uses: BTreeMap<VarId, usize> = BTreeMap::new();
        for e in &env {
            for x in e.vars().into_iter().filter(|&x| is_temp(x)) {
                *uses.entry(x).or_default() += 1;
            }
        }
        let bare: BTreeSet<VarId> = env
            .iter()
            .filter_map(|e| match e {
                Expr::Var(x) if is_temp(*x) && uses[x] == 1 => Some(*x),
                _ => None,
            })
            .collect();
        let mut temp_ids: BTreeMap<VarId, VarId> = BTreeMap::new();
        for (&ph, _) in uses.iter().filter(|(x, _)| !bare.contains(x)) {
            let (var, occurrence) = rand_of[(ph.0 - placeholder_base) as usize];
            let name = format!("{}@{t}#{occurrence}", spec.vars[var]);
            let id = table.push(
                VarKind::RandTemp {
                    var,
                    time: t,
                    occurrence,
                },
                2,
                name,
            );
            dag.add_vertex(id);
            relations.insert(id, Relation::identity(&[(id, 2)])?);
            temp_ids.insert(ph, id);
        }

        for (v, e) in env.iter().enumerate() {
            let x = table.program(v, t);
            dag.add_vertex(x);
            if let Expr::Var(ph) = e {
                if bare.contains(ph) {
                    relations.insert(x, Relation::identity(&[(x, 2)])?);
                    continue;
                }
            }
            let e = e.substitute(&|u| Expr::Var(if is_temp(u) { temp_ids[&u] } else { u }));
            for p in e.vars() {
                dag.add_edge(p, x);
            }
            relations.insert(x, function_relation(x, &e, &table));
        }
    }

    let observables = spec
        .agents
        .iter()
        .map(|a| {
            (0..=spec.horizon)
                .flat_map(|t| a.observes.iter().map(move |&v| (v, t)))
                .map(|(v, t)| table.program(v, t))
                .collect()
        })
        .collect();
    Ok(StructuredModel {
        table,
        dag,
        relations,
        observables,
    })
}
