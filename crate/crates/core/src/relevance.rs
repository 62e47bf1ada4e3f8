//! Relevance sets: the variables a formula's truth depends on, with the
//! observations of each knowledge operator cut down to a d-separating
//! subset.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::frontend::ast::{AgentId, Formula};
use crate::graph::{d_separated, minimal_observation_set};
use crate::model::StructuredModel;
use crate::valuation::VarId;

/// The observation subset chosen for one occurrence of `Knows agent ψ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowsChoice {
    pub agent: AgentId,
    /// κ(ψ) for the operand.
    pub inner: BTreeSet<VarId>,
    pub observed: BTreeSet<VarId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelevanceResult {
    /// κ of every subformula occurrence, in pre-order.
    pub subformulas: Vec<BTreeSet<VarId>>,
    /// One entry per knowledge operator, in post-order.
    pub knows: Vec<KnowsChoice>,
    pub kappa: BTreeSet<VarId>,
}

/// Computes κ bottom-up over `phi`, whose atoms must be vertices of `sm`.
pub fn kappa(phi: &Formula<VarId>, sm: &StructuredModel) -> Result<RelevanceResult> {
    let mut subformulas = Vec::new();
    let mut knows = Vec::new();
    let kappa = walk(phi, sm, &mut subformulas, &mut knows)?;
    Ok(RelevanceResult {
        subformulas,
        knows,
        kappa,
    })
}

fn walk(
    phi: &Formula<VarId>,
    sm: &StructuredModel,
    subs: &mut Vec<BTreeSet<VarId>>,
    knows: &mut Vec<KnowsChoice>,
) -> Result<BTreeSet<VarId>> {
    let slot = subs.len();
    subs.push(BTreeSet::new());
    let out = match phi {
        Formula::Atom(v) => {
            if !sm.dag.contains(*v) {
                return Err(Error::UnknownAtom(sm.table.name(*v).to_string()));
            }
            BTreeSet::from([*v])
        }
        Formula::Not(g) => walk(g, sm, subs, knows)?,
        Formula::And(a, b) => {
            let mut k = walk(a, sm, subs, knows)?;
            k.extend(walk(b, sm, subs, knows)?);
            k
        }
        Formula::Knows(i, g) => {
            let inner = walk(g, sm, subs, knows)?;
            let o = &sm.observables[*i];
            let u = minimal_observation_set(&sm.dag, &inner, o);
            debug_assert!(u.is_subset(o));
            debug_assert!(d_separated(
                &sm.dag,
                &inner.difference(&u).copied().collect(),
                &o.difference(&u).copied().collect(),
                &u
            )
            .unwrap_or(false));
            let mut k = inner.clone();
            k.extend(u.iter().copied());
            knows.push(KnowsChoice {
                agent: *i,
                inner,
                observed: u,
            });
            k
        }
    };
    subs[slot] = out.clone();
    Ok(out)
}
