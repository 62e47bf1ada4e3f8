//! Formula evaluation on epistemic structures and the end-to-end
//! checking pipeline.

mod pipeline;

use crate::error::{Error, Result};
use crate::frontend::ast::Formula;
use crate::model::EpistemicStructure;
use crate::valuation::VarId;

pub use pipeline::{
    check_system, resolve_formula, CheckOptions, CheckReport, KnowsStats, Level, PipelineStats,
};

/// Outcome of checking validity; a counterexample accompanies failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub valid: bool,
    /// A falsifying world as `(variable, value)` pairs.
    pub counterexample: Option<Vec<(VarId, u32)>>,
}

fn check_atoms(m: &EpistemicStructure, phi: &Formula<VarId>) -> Result<()> {
    for v in phi.atoms() {
        if !m.worlds.contains_var(v) {
            return Err(Error::UnknownAtom(v.to_string()));
        }
    }
    Ok(())
}

/// The worlds (row indices of `m.worlds`) satisfying `phi`, as a bitmap.
pub fn sat_set(m: &EpistemicStructure, phi: &Formula<VarId>) -> Result<Vec<bool>> {
    check_atoms(m, phi)?;
    let mut ev = Evaluator {
        m,
        classes: vec![None; m.observables.len()],
    };
    Ok(ev.eval(phi))
}

/// Indistinguishability classes of one agent: a class id per world and
/// the number of classes.
type Classes = (Vec<u32>, usize);

struct Evaluator<'a> {
    m: &'a EpistemicStructure,
    classes: Vec<Option<Classes>>,
}

impl Evaluator<'_> {
    fn eval(&mut self, phi: &Formula<VarId>) -> Vec<bool> {
        let w = &self.m.worlds;
        match phi {
            Formula::Atom(v) => {
                let pos = w.position(*v).expect("atoms checked");
                (0..w.len()).map(|r| w.value(r, pos) == 1).collect()
            }
            Formula::Not(g) => self.eval(g).into_iter().map(|b| !b).collect(),
            Formula::And(a, b) => {
                let a = self.eval(a);
                let b = self.eval(b);
                a.into_iter().zip(b).map(|(x, y)| x && y).collect()
            }
            Formula::Knows(i, g) => {
                let inner = self.eval(g);
                let (class, count) = self.classes(*i);
                let mut all = vec![true; *count];
                for (r, &c) in class.iter().enumerate() {
                    all[c as usize] &= inner[r];
                }
                class.iter().map(|&c| all[c as usize]).collect()
            }
        }
    }

    /// Worlds are grouped by their projection onto the agent's observable
    /// variables.
    fn classes(&mut self, agent: usize) -> &Classes {
        let m = self.m;
        self.classes[agent].get_or_insert_with(|| {
            let keys = m.worlds.keys(&m.observables[agent]);
            let mut rows: Vec<u32> = (0..m.worlds.len() as u32).collect();
            rows.sort_unstable_by(|&a, &b| keys.get(a as usize).cmp(keys.get(b as usize)));
            let mut class = vec![0u32; rows.len()];
            let mut count = 0;
            for (k, &r) in rows.iter().enumerate() {
                if k > 0 && keys.get(r as usize) != keys.get(rows[k - 1] as usize) {
                    count += 1;
                }
                class[r as usize] = count as u32;
            }
            (class, if rows.is_empty() { 0 } else { count + 1 })
        })
    }
}

/// Truth of `phi` at world `world` (a row index of `m.worlds`).
pub fn holds(m: &EpistemicStructure, world: usize, phi: &Formula<VarId>) -> Result<bool> {
    if world >= m.worlds.len() {
        return Err(Error::NoSuchWorld(world));
    }
    Ok(sat_set(m, phi)?[world])
}

/// Validity over all worlds; on failure the least failing world is
/// returned.
pub fn check_valid(m: &EpistemicStructure, phi: &Formula<VarId>) -> Result<Verdict> {
    let sat = sat_set(m, phi)?;
    Ok(match sat.iter().position(|b| !b) {
        None => Verdict {
            valid: true,
            counterexample: None,
        },
        Some(r) => Verdict {
            valid: false,
            counterexample: Some(
                m.worlds
                    .vars()
                    .iter()
                    .copied()
                    .zip(m.worlds.tuple(r))
                    .collect(),
            ),
        },
    })
}
