use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Relation, VarId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Heuristic {
    #[default]
    MinFill,
    MinDegree,
    /// Variables whose joined relations are estimated to be no larger than
    /// their largest member go first, smallest estimate first; the others
    /// follow by min-fill. Estimates come from the actual relation sizes
    /// and their distinct counts on shared variables.
    MinSize,
}

/// Greedy elimination order for the variables of `rels` outside `keep`,
/// over the interaction graph of the relation domains. Ties go to the
/// lowest variable id.
pub fn elimination_order(
    rels: &[Relation],
    keep: &BTreeSet<VarId>,
    heuristic: Heuristic,
) -> Vec<VarId> {
    if heuristic == Heuristic::MinSize {
        return size_order(rels, keep);
    }
    let mut adj: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
    for r in rels {
        for &a in r.vars() {
            let entry = adj.entry(a).or_default();
            entry.extend(r.vars().iter().copied().filter(|&b| b != a));
        }
    }
    let mut pending: BTreeSet<VarId> = adj.keys().copied().filter(|v| !keep.contains(v)).collect();
    let mut order = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let cost = |v: VarId| -> usize {
            let nb = &adj[&v];
            match heuristic {
                Heuristic::MinDegree | Heuristic::MinSize => nb.len(),
                Heuristic::MinFill => {
                    let nb: Vec<VarId> = nb.iter().copied().collect();
                    let mut fill = 0;
                    for (i, a) in nb.iter().enumerate() {
                        for b in &nb[i + 1..] {
                            if !adj[a].contains(b) {
                                fill += 1;
                            }
                        }
                    }
                    fill
                }
            }
        };
        let best = pending
            .iter()
            .copied()
            .min_by_key(|&v| (cost(v), v))
            .expect("pending is nonempty");
        pending.remove(&best);
        order.push(best);
        let nb = adj.remove(&best).unwrap_or_default();
        for &a in &nb {
            let entry = adj.get_mut(&a).expect("neighbours are registered");
            entry.remove(&best);
            entry.extend(nb.iter().copied().filter(|&b| b != a));
        }
    }
    order
}

struct Factor {
    vars: BTreeSet<VarId>,
    est: f64,
    source: Option<usize>,
}

fn size_order(rels: &[Relation], keep: &BTreeSet<VarId>) -> Vec<VarId> {
    let mut frames: BTreeMap<VarId, u32> = BTreeMap::new();
    for r in rels {
        for (v, f) in r.schema() {
            frames.insert(v, f);
        }
    }
    let space = |vars: &BTreeSet<VarId>| vars.iter().map(|v| frames[v] as f64).product::<f64>();
    let mut factors: Vec<Factor> = rels
        .iter()
        .enumerate()
        .map(|(i, r)| Factor {
            vars: r.vars().iter().copied().collect(),
            est: r.len() as f64,
            source: Some(i),
        })
        .collect();
    let mut distinct_cache: HashMap<(usize, Vec<VarId>), f64> = HashMap::new();
    let mut distinct = |f: &Factor, sh: &BTreeSet<VarId>| -> f64 {
        match f.source {
            Some(i) => *distinct_cache
                .entry((i, sh.iter().copied().collect()))
                .or_insert_with(|| rels[i].marginalize(sh).len() as f64),
            None => f.est.min(space(sh)),
        }
    };

    let mut pending: BTreeSet<VarId> = frames
        .keys()
        .copied()
        .filter(|v| !keep.contains(v))
        .collect();
    let mut order = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let mut best: Option<((bool, f64, usize), f64, VarId)> = None;
        for &x in &pending {
            let mut members: Vec<&Factor> =
                factors.iter().filter(|f| f.vars.contains(&x)).collect();
            members.sort_by(|a, b| a.est.total_cmp(&b.est));
            let largest = members.last().unwrap().est;
            let mut vars = members[0].vars.clone();
            let mut est = members[0].est;
            for f in &members[1..] {
                let sh: BTreeSet<VarId> = vars.intersection(&f.vars).copied().collect();
                let d = distinct(f, &sh).max(est.min(space(&sh))).max(1.0);
                est = est * f.est / d;
                vars.extend(f.vars.iter().copied());
                est = est.min(space(&vars));
            }
            let key = if est <= largest {
                (false, est, 0)
            } else {
                let nb: Vec<VarId> = vars.iter().copied().filter(|&v| v != x).collect();
                let mut fill = 0;
                for (i, a) in nb.iter().enumerate() {
                    for b in &nb[i + 1..] {
                        if !factors
                            .iter()
                            .any(|f| f.vars.contains(a) && f.vars.contains(b))
                        {
                            fill += 1;
                        }
                    }
                }
                (true, 0.0, fill)
            };
            let better = match &best {
                None => true,
                Some((k, _, _)) => (key.0, key.2)
                    .cmp(&(k.0, k.2))
                    .then(key.1.total_cmp(&k.1))
                    .is_lt(),
            };
            if better {
                best = Some((key, est, x));
            }
        }
        let (_, est, x) = best.expect("pending is nonempty");
        pending.remove(&x);
        order.push(x);
        let (members, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&x));
        factors = rest;
        let mut vars: BTreeSet<VarId> = members.into_iter().flat_map(|f| f.vars).collect();
        vars.remove(&x);
        let est = est.min(space(&vars));
        factors.push(Factor {
            vars,
            est,
            source: None,
        });
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(ids: &[u32]) -> Relation {
        let schema: Vec<(VarId, u32)> = ids.iter().map(|&i| (VarId(i), 2)).collect();
        Relation::identity(&schema).unwrap()
    }

    #[test]
    fn nothing_to_eliminate() {
        let rels = vec![rel(&[0, 1])];
        let keep = [VarId(0), VarId(1), VarId(2)].into_iter().collect();
        assert!(elimination_order(&rels, &keep, Heuristic::MinFill).is_empty());
    }

    #[test]
    fn chain_is_eliminated_from_the_far_end() {
        let rels = vec![rel(&[0, 1]), rel(&[1, 2]), rel(&[2, 3])];
        let keep = [VarId(3)].into_iter().collect();
        let order = elimination_order(&rels, &keep, Heuristic::MinFill);
        assert_eq!(order, vec![VarId(0), VarId(1), VarId(2)]);
    }

    #[test]
    fn hub_goes_last() {
        // hub 0 joined to leaves 1..=4; keep leaves 3 and 4
        let rels = vec![rel(&[0, 1]), rel(&[0, 2]), rel(&[0, 3]), rel(&[0, 4])];
        let keep = [VarId(3), VarId(4)].into_iter().collect();
        let order = elimination_order(&rels, &keep, Heuristic::MinFill);
        assert_eq!(order.last(), Some(&VarId(0)));
        assert_eq!(order.len(), 3);
    }

    #[test]
    fn functional_hub_goes_first_by_size() {
        // 0 takes 5 values and determines each of 1..=4; 5 links 1 and 2
        let mut rels: Vec<Relation> = (1..=4)
            .map(|i| {
                Relation::new(
                    &[(VarId(0), 5), (VarId(i), 2)],
                    (0..5).map(|a| [a, (a == i) as u32]),
                )
                .unwrap()
            })
            .collect();
        rels.push(Relation::identity(&[(VarId(1), 2), (VarId(2), 2), (VarId(5), 2)]).unwrap());
        let keep: BTreeSet<VarId> = (1..=4).map(VarId).collect();
        let order = elimination_order(&rels, &keep, Heuristic::MinSize);
        assert_eq!(order.len(), 2);
        assert_eq!(order[0], VarId(0));
        assert_eq!(
            elimination_order(&rels, &keep, Heuristic::MinFill)[1],
            VarId(0)
        );
    }
}
