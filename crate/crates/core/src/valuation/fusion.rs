use std::collections::BTreeSet;

use super::{combine_all, Relation, VarId};
use crate::error::{Error, Result};
use crate::limits::Deadline;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FusionStats {
    /// Largest relation built while fusing, before and after elimination.
    pub max_intermediate_tuples: usize,
    pub steps: usize,
}

/// Estimated size of `acc ⊗ r` from the distinct values of `r` on the
/// shared variables.
fn join_estimate(acc: &Relation, dom: &BTreeSet<VarId>, r: &Relation) -> f64 {
    let shared: BTreeSet<VarId> = r
        .vars()
        .iter()
        .copied()
        .filter(|v| dom.contains(v))
        .collect();
    let space: f64 = shared
        .iter()
        .map(|&v| acc.frame(v).unwrap_or(1) as f64)
        .product();
    let d_acc = (acc.len() as f64).min(space);
    let d_r = r.marginalize(&shared).len() as f64;
    acc.len() as f64 * r.len() as f64 / d_acc.max(d_r).max(1.0)
}

/// Joins `rels` starting from the smallest and always continuing with the
/// relation whose join with the partial result is estimated smallest. When
/// `drop` is given it is projected away during the last join.
fn join_greedy(
    mut rels: Vec<Relation>,
    drop: Option<VarId>,
    filters: &[Relation],
    stats: &mut FusionStats,
    deadline: &Deadline,
) -> Result<Relation> {
    if rels.is_empty() {
        return Ok(Relation::unit());
    }
    let first = (0..rels.len()).min_by_key(|&i| (rels[i].len(), i)).unwrap();
    let mut acc = rels.swap_remove(first);
    while !rels.is_empty() {
        deadline.check()?;
        let dom = acc.domain();
        let est: Vec<f64> = rels.iter().map(|r| join_estimate(&acc, &dom, r)).collect();
        let next = (0..rels.len())
            .min_by(|&i, &j| est[i].total_cmp(&est[j]).then(i.cmp(&j)))
            .unwrap();
        let r = rels.swap_remove(next);
        acc = match drop {
            Some(x) if rels.is_empty() => {
                let mut keep = acc.domain();
                keep.extend(r.vars().iter().copied());
                keep.remove(&x);
                acc.combine_marginalize(&r, &keep)?
            }
            _ => acc.combine(&r)?,
        };
        if acc.len() > r.len() {
            acc = filter_by(acc, filters)?;
        }
        stats.max_intermediate_tuples = stats.max_intermediate_tuples.max(acc.len());
    }
    Ok(acc)
}

/// Semijoins `r` with every relation of `others` no larger than it that
/// shares a variable with it. When the others are all joined with the
/// result later on, this leaves the final join unchanged.
fn filter_by(mut r: Relation, others: &[Relation]) -> Result<Relation> {
    for o in others {
        if o.len() <= r.len() && o.vars().iter().any(|&v| r.contains_var(v)) {
            r = r.semijoin(o)?;
        }
    }
    Ok(r)
}

/// One fusion step Fus_x: the members mentioning `x` are joined and `x` is
/// projected away; the others pass through.
pub fn fuse_step(rels: Vec<Relation>, x: VarId) -> Result<Vec<Relation>> {
    fuse_step_tracked(rels, x, &mut FusionStats::default(), &Deadline::none())
}

fn fuse_step_tracked(
    rels: Vec<Relation>,
    x: VarId,
    stats: &mut FusionStats,
    deadline: &Deadline,
) -> Result<Vec<Relation>> {
    let (plus, mut minus): (Vec<Relation>, Vec<Relation>) =
        rels.into_iter().partition(|r| r.contains_var(x));
    if plus.is_empty() {
        return Ok(minus);
    }
    let reduced = join_greedy(plus, Some(x), &minus, stats, deadline)?.eliminate(x);
    let reduced = filter_by(reduced, &minus)?;
    stats.max_intermediate_tuples = stats.max_intermediate_tuples.max(reduced.len());
    stats.steps += 1;
    minus.push(reduced);
    Ok(minus)
}

/// (⊗ rels)↓keep computed by fusing out `order`, which must list exactly
/// the variables of the relations outside `keep`.
pub fn fuse_all(rels: Vec<Relation>, keep: &BTreeSet<VarId>, order: &[VarId]) -> Result<Relation> {
    fuse_all_tracked(
        rels,
        keep,
        order,
        &mut FusionStats::default(),
        &Deadline::none(),
    )
}

pub fn fuse_all_tracked(
    rels: Vec<Relation>,
    keep: &BTreeSet<VarId>,
    order: &[VarId],
    stats: &mut FusionStats,
    deadline: &Deadline,
) -> Result<Relation> {
    let expected: BTreeSet<VarId> = rels
        .iter()
        .flat_map(|r| r.vars().iter().copied())
        .filter(|v| !keep.contains(v))
        .collect();
    let given: BTreeSet<VarId> = order.iter().copied().collect();
    if given.len() != order.len() || given != expected {
        return Err(Error::NotPermutation);
    }
    for r in &rels {
        stats.max_intermediate_tuples = stats.max_intermediate_tuples.max(r.len());
    }
    let mut rels = rels;
    for &x in order {
        deadline.check()?;
        rels = fuse_step_tracked(rels, x, stats, deadline)?;
    }
    let out = join_greedy(rels, None, &[], stats, deadline)?;
    Ok(out)
}

/// Convenience check used by tests: the direct (⊗ rels)↓keep.
pub fn join_then_project(rels: &[Relation], keep: &BTreeSet<VarId>) -> Result<Relation> {
    Ok(combine_all(rels)?.marginalize(keep))
}
