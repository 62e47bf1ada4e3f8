use std::collections::BTreeSet;

use super::{AliasMap, EpistemicStructure, StructuredModel, VarKind};
use crate::error::{Error, Result};
use crate::limits::Deadline;
use crate::valuation::{
    elimination_order, fuse_all_tracked, FusionStats, Heuristic, Relation, VarId,
};

fn is_delta(s: &Relation, x: VarId, y: VarId) -> bool {
    let (Some(px), Some(py)) = (s.position(x), s.position(y)) else {
        return false;
    };
    s.vars().len() == 2
        && s.frame(x) == s.frame(y)
        && s.len() == s.frame(x).unwrap() as usize
        && (0..s.len()).all(|r| s.value(r, px) == s.value(r, py))
}

fn delta(x: VarId, y: VarId, frame: u32) -> Relation {
    Relation::new(&[(x, frame), (y, frame)], (0..frame).map(|a| [a, a])).expect("valid frame")
}

/// Removes `gone`, whose value always equals that of `keep`, rewriting
/// every relation that mentions it in terms of `keep`.
fn collapse(sm: &mut StructuredModel, gone: VarId, keep: VarId, aliases: &mut AliasMap) {
    let frame = sm.table.frame(gone);
    let d = delta(keep, gone, frame);
    let children: Vec<VarId> = sm.dag.children(gone).iter().copied().collect();
    let parents: Vec<VarId> = sm.dag.parents(gone).iter().copied().collect();
    for c in children.iter().copied().filter(|&c| c != keep) {
        let s = &sm.relations[&c];
        let renamed = s.combine(&d).expect("matching frames").eliminate(gone);
        sm.relations.insert(c, renamed);
        sm.dag.add_edge(keep, c);
    }
    if !parents.contains(&keep) {
        // gone is the parent of keep, which inherits gone's own relation.
        let s_keep = sm.relations[&keep]
            .combine(&sm.relations[&gone])
            .expect("matching frames")
            .eliminate(gone);
        sm.relations.insert(keep, s_keep);
        for &p in &parents {
            sm.dag.add_edge(p, keep);
        }
    }
    sm.dag.remove_vertex(gone);
    sm.relations.remove(&gone);
    for o in &mut sm.observables {
        if o.remove(&gone) {
            o.insert(keep);
        }
    }
    for target in aliases.0.values_mut() {
        if *target == gone {
            *target = keep;
        }
    }
    aliases.0.insert(gone, keep);
}

/// Collapses every vertex whose relation is the identity δ with its sole
/// parent. The earlier vertex survives, except that a program variable is
/// kept in preference to a rand temp; vertices in `protect` are never
/// removed.
pub fn equality_merge(
    sm: &StructuredModel,
    protect: &BTreeSet<VarId>,
) -> (StructuredModel, AliasMap) {
    let mut sm = sm.clone();
    let mut aliases = AliasMap::default();
    loop {
        let mut changed = false;
        let candidates: Vec<VarId> = sm.dag.vertices().collect();
        for y in candidates {
            if !sm.dag.contains(y) || sm.dag.parents(y).len() != 1 {
                continue;
            }
            let x = *sm.dag.parents(y).iter().next().unwrap();
            if sm.table.frame(x) != sm.table.frame(y) || !is_delta(&sm.relations[&y], x, y) {
                continue;
            }
            let temp_parent =
                matches!(sm.table.info(x).kind, VarKind::RandTemp { .. }) && sm.table.is_program(y);
            let (mut gone, mut keep) = if temp_parent { (x, y) } else { (y, x) };
            if protect.contains(&gone) {
                std::mem::swap(&mut gone, &mut keep);
                if protect.contains(&gone) {
                    continue;
                }
            }
            collapse(&mut sm, gone, keep, &mut aliases);
            changed = true;
        }
        if !changed {
            break;
        }
    }
    (sm, aliases)
}

/// Repeatedly removes leaves outside `keep` together with their relations.
pub fn drop_leaves(sm: &StructuredModel, keep: &BTreeSet<VarId>) -> StructuredModel {
    let mut sm = sm.clone();
    let mut stack: Vec<VarId> = sm
        .dag
        .vertices()
        .filter(|v| !keep.contains(v) && sm.dag.is_leaf(*v))
        .collect();
    while let Some(v) = stack.pop() {
        if !sm.dag.contains(v) || !sm.dag.is_leaf(v) {
            continue;
        }
        let parents: Vec<VarId> = sm.dag.parents(v).iter().copied().collect();
        sm.dag.remove_vertex(v);
        sm.relations.remove(&v);
        for o in &mut sm.observables {
            o.remove(&v);
        }
        for p in parents {
            if !keep.contains(&p) && sm.dag.is_leaf(p) {
                stack.push(p);
            }
        }
    }
    sm
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MarginalizeOptions {
    pub heuristic: Heuristic,
    pub deadline: Deadline,
}

/// Result of [`epistemic_marginalize`] with the work it took.
#[derive(Clone, Debug)]
pub struct Marginal {
    pub structure: EpistemicStructure,
    /// Vertices left after leaf elimination.
    pub reduced_vars: usize,
    pub order: Vec<VarId>,
    pub fusion: FusionStats,
}

/// M↓X computed by leaf elimination followed by fusion of the remaining
/// node relations.
pub fn epistemic_marginalize(
    sm: &StructuredModel,
    keep: &BTreeSet<VarId>,
    options: &MarginalizeOptions,
) -> Result<Marginal> {
    let reduced = drop_leaves(sm, keep);
    let rels: Vec<Relation> = reduced.relations.values().cloned().collect();
    let order = elimination_order(&rels, keep, options.heuristic);
    let mut fusion = FusionStats::default();
    let worlds = fuse_all_tracked(rels, keep, &order, &mut fusion, &options.deadline)?;
    if worlds.is_empty() {
        return Err(Error::EmptyWorlds);
    }
    let observables = sm
        .observables
        .iter()
        .map(|o| o.intersection(keep).copied().collect())
        .collect();
    Ok(Marginal {
        structure: EpistemicStructure {
            worlds,
            observables,
        },
        reduced_vars: reduced.dag.len(),
        order,
        fusion,
    })
}
