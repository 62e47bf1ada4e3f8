//! Brute-force oracles and random instance generators shared by the
//! integration tests. Nothing here calls into the library's relational or
//! graph algorithms.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use epik_core::frontend::ast::{AgentId, Formula, SystemSpec, TimedAtom};
use epik_core::frontend::parse_system;
use epik_core::graph::Dag;
use epik_core::model::EpistemicStructure;
use epik_core::valuation::{Relation, VarId};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn set(xs: &[u32]) -> BTreeSet<VarId> {
    xs.iter().map(|&i| VarId(i)).collect()
}

// ---- relations as sets of maps -------------------------------------------

pub type Row = BTreeMap<VarId, u32>;

/// A relation as a plain set of partial assignments over `frames`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Naive {
    pub frames: BTreeMap<VarId, u32>,
    pub rows: BTreeSet<Row>,
}

impl Naive {
    pub fn of(r: &Relation) -> Naive {
        let frames = r
            .vars()
            .iter()
            .copied()
            .zip(r.frames().iter().copied())
            .collect();
        let rows = r
            .tuples()
            .map(|t| r.vars().iter().copied().zip(t).collect())
            .collect();
        Naive { frames, rows }
    }

    pub fn unit() -> Naive {
        Naive {
            frames: BTreeMap::new(),
            rows: BTreeSet::from([Row::new()]),
        }
    }

    /// Every assignment over `frames`.
    pub fn full(frames: &BTreeMap<VarId, u32>) -> Naive {
        let mut rows = vec![Row::new()];
        for (&v, &f) in frames {
            rows = rows
                .into_iter()
                .flat_map(|r| {
                    (0..f).map(move |a| {
                        let mut r = r.clone();
                        r.insert(v, a);
                        r
                    })
                })
                .collect();
        }
        Naive {
            frames: frames.clone(),
            rows: rows.into_iter().collect(),
        }
    }

    pub fn join(&self, other: &Naive) -> Naive {
        let mut frames = self.frames.clone();
        frames.extend(other.frames.iter().map(|(&v, &f)| (v, f)));
        let mut rows = BTreeSet::new();
        for a in &self.rows {
            for b in &other.rows {
                if a.iter().all(|(v, x)| b.get(v).is_none_or(|y| x == y)) {
                    let mut r = a.clone();
                    r.extend(b.iter().map(|(&v, &x)| (v, x)));
                    rows.insert(r);
                }
            }
        }
        Naive { frames, rows }
    }

    pub fn project(&self, keep: &BTreeSet<VarId>) -> Naive {
        Naive {
            frames: self
                .frames
                .iter()
                .filter(|(v, _)| keep.contains(v))
                .map(|(&v, &f)| (v, f))
                .collect(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .filter(|(v, _)| keep.contains(v))
                        .map(|(&v, &x)| (v, x))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn domain(&self) -> BTreeSet<VarId> {
        self.frames.keys().copied().collect()
    }

    /// X ⊥ Y | Z checked pair by pair: for every Z-value, every X-part
    /// and every Y-part seen with it occur together.
    pub fn independent(
        &self,
        x: &BTreeSet<VarId>,
        y: &BTreeSet<VarId>,
        z: &BTreeSet<VarId>,
    ) -> bool {
        let xyz: BTreeSet<VarId> = x.iter().chain(y).chain(z).copied().collect();
        let p = self.project(&xyz).rows;
        let part = |r: &Row, s: &BTreeSet<VarId>| -> Row {
            r.iter()
                .filter(|(v, _)| s.contains(v))
                .map(|(&v, &a)| (v, a))
                .collect()
        };
        let mut blocks: BTreeMap<Row, (BTreeSet<Row>, BTreeSet<Row>)> = BTreeMap::new();
        for r in &p {
            let e = blocks.entry(part(r, z)).or_default();
            e.0.insert(part(r, x));
            e.1.insert(part(r, y));
        }
        blocks.iter().all(|(zr, (xs, ys))| {
            xs.iter().all(|xr| {
                ys.iter().all(|yr| {
                    let mut r = zr.clone();
                    r.extend(xr.iter().map(|(&v, &a)| (v, a)));
                    r.extend(yr.iter().map(|(&v, &a)| (v, a)));
                    p.contains(&r)
                })
            })
        })
    }
}

pub fn naive_join_all(rels: &[Relation]) -> Naive {
    rels.iter()
        .fold(Naive::unit(), |acc, r| acc.join(&Naive::of(r)))
}

/// A random relation over a random subset of `pool` (at most `max_vars`
/// variables), each tuple kept with a random density.
pub fn random_relation(rng: &mut Rng8, pool: &[(VarId, u32)], max_vars: usize) -> Relation {
    let k = rng.gen_range(0..=max_vars.min(pool.len()));
    let mut vars: Vec<(VarId, u32)> = pool.choose_multiple(rng, k).copied().collect();
    vars.sort();
    let frames: BTreeMap<VarId, u32> = vars.iter().copied().collect();
    let density: f64 = rng.gen_range(0.2..1.0);
    let rows: Vec<Vec<u32>> = Naive::full(&frames)
        .rows
        .into_iter()
        .filter(|_| rng.gen_bool(density))
        .map(|r| r.values().copied().collect())
        .collect();
    Relation::new(&vars, &rows).unwrap()
}

pub fn random_subset<T: Copy + Ord>(rng: &mut Rng8, xs: &BTreeSet<T>, p: f64) -> BTreeSet<T> {
    xs.iter().copied().filter(|_| rng.gen_bool(p)).collect()
}

// ---- dags -----------------------------------------------------------------

pub fn random_dag(rng: &mut Rng8, n: u32, p: f64) -> Dag<VarId> {
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if rng.gen_bool(p) {
                edges.push((VarId(i), VarId(j)));
            }
        }
    }
    Dag::try_from_edges((0..n).map(VarId), edges).unwrap()
}

/// One boolean relation per vertex over the vertex and its parents; every
/// parent assignment allows a nonempty set of values.
pub fn random_node_relations(rng: &mut Rng8, g: &Dag<VarId>) -> Vec<Relation> {
    g.vertices()
        .map(|v| {
            let parents: Vec<VarId> = g.parents(v).iter().copied().collect();
            let mut schema: Vec<(VarId, u32)> = parents.iter().map(|&p| (p, 2)).collect();
            schema.push((v, 2));
            let mut rows = Vec::new();
            for bits in 0u32..1 << parents.len() {
                let pa: Vec<u32> = (0..parents.len()).map(|i| (bits >> i) & 1).collect();
                let allowed: &[u32] = [&[0][..], &[1], &[0, 1]].choose(rng).unwrap();
                for &a in allowed {
                    let mut row = pa.clone();
                    row.push(a);
                    rows.push(row);
                }
            }
            Relation::new(&schema, &rows).unwrap()
        })
        .collect()
}

/// d-separation by the active-trail search over the dag itself.
pub fn active_trail_separated(
    g: &Dag<VarId>,
    x: &BTreeSet<VarId>,
    y: &BTreeSet<VarId>,
    z: &BTreeSet<VarId>,
) -> bool {
    let mut anc_z = z.clone();
    let mut stack: Vec<VarId> = z.iter().copied().collect();
    while let Some(v) = stack.pop() {
        for &p in g.parents(v) {
            if anc_z.insert(p) {
                stack.push(p);
            }
        }
    }
    // (vertex, arrived from a child)
    let mut todo: Vec<(VarId, bool)> = x.iter().map(|&v| (v, true)).collect();
    let mut seen = BTreeSet::new();
    while let Some((v, up)) = todo.pop() {
        if !seen.insert((v, up)) {
            continue;
        }
        if !z.contains(&v) && y.contains(&v) {
            return false;
        }
        if up && !z.contains(&v) {
            todo.extend(g.parents(v).iter().map(|&p| (p, true)));
            todo.extend(g.children(v).iter().map(|&c| (c, false)));
        } else if !up {
            if !z.contains(&v) {
                todo.extend(g.children(v).iter().map(|&c| (c, false)));
            }
            if anc_z.contains(&v) {
                todo.extend(g.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    true
}

// ---- formulas -------------------------------------------------------------

/// Truth of `phi` at every world, straight from the definition.
pub fn naive_truth(m: &EpistemicStructure, phi: &Formula<VarId>) -> Vec<bool> {
    let w = &m.worlds;
    let value = |r: usize, v: VarId| w.value(r, w.position(v).unwrap());
    let n = w.len();
    match phi {
        Formula::Atom(v) => (0..n).map(|r| value(r, *v) == 1).collect(),
        Formula::Not(g) => naive_truth(m, g).into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => naive_truth(m, a)
            .into_iter()
            .zip(naive_truth(m, b))
            .map(|(x, y)| x && y)
            .collect(),
        Formula::Knows(i, g) => {
            let inner = naive_truth(m, g);
            let obs = &m.observables[*i];
            (0..n)
                .map(|r| {
                    (0..n).all(|u| !obs.iter().all(|&o| value(r, o) == value(u, o)) || inner[u])
                })
                .collect()
        }
    }
}

/// Random formula over the given atoms with at most `k_depth` nested
/// knowledge operators.
pub fn random_formula<A: Clone + Ord>(
    rng: &mut Rng8,
    atoms: &[A],
    agents: usize,
    size: u32,
    k_depth: u32,
) -> Formula<A> {
    if size == 0 {
        return Formula::Atom(atoms.choose(rng).unwrap().clone());
    }
    let choice = rng.gen_range(0..if k_depth > 0 { 6 } else { 5 });
    let sub = |rng: &mut Rng8, d| random_formula(rng, atoms, agents, size - 1, d);
    match choice {
        0 => Formula::Atom(atoms.choose(rng).unwrap().clone()),
        1 => Formula::not(sub(rng, k_depth)),
        2 => Formula::and(sub(rng, k_depth), sub(rng, k_depth)),
        3 => Formula::or(sub(rng, k_depth), sub(rng, k_depth)),
        4 => Formula::implies(sub(rng, k_depth), sub(rng, k_depth)),
        _ => {
            let i: AgentId = rng.gen_range(0..agents);
            Formula::knows(i, sub(rng, k_depth - 1))
        }
    }
}

// ---- systems --------------------------------------------------------------

fn random_expr(rng: &mut Rng8, nvars: usize, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..8) {
            0 => "0".into(),
            1 => "1".into(),
            _ => format!("v{}", rng.gen_range(0..nvars)),
        };
    }
    match rng.gen_range(0..5) {
        0 => format!("!{}", random_expr(rng, nvars, depth - 1)),
        k => {
            let op = ["&", "|", "^", "=>"][k - 1];
            format!(
                "({} {op} {})",
                random_expr(rng, nvars, depth - 1),
                random_expr(rng, nvars, depth - 1)
            )
        }
    }
}

/// Shape parameters for [`random_system`].
#[derive(Clone, Copy, Debug)]
pub struct SystemShape {
    pub max_vars: usize,
    pub max_horizon: usize,
    pub max_agents: usize,
    /// Chance that an assignment is a plain copy `x := y`.
    pub copy_bias: f64,
}

impl Default for SystemShape {
    fn default() -> Self {
        SystemShape {
            max_vars: 4,
            max_horizon: 3,
            max_agents: 2,
            copy_bias: 0.3,
        }
    }
}

fn random_stmt(rng: &mut Rng8, nvars: usize, shape: &SystemShape) -> String {
    let v = rng.gen_range(0..nvars);
    if rng.gen_bool(0.25) {
        format!("rand(v{v})")
    } else if rng.gen_bool(shape.copy_bias) {
        format!("v{v} := v{}", rng.gen_range(0..nvars))
    } else {
        format!("v{v} := {}", random_expr(rng, nvars, 2))
    }
}

/// Source text of a random system with variables `v0..` and agents `A0..`.
pub fn random_system_source(rng: &mut Rng8, shape: &SystemShape) -> String {
    let nvars = rng.gen_range(1..=shape.max_vars);
    let horizon = rng.gen_range(1..=shape.max_horizon);
    let agents = rng.gen_range(1..=shape.max_agents);
    let names: Vec<String> = (0..nvars).map(|i| format!("v{i}")).collect();
    let mut s = format!("vars: {};\n", names.join(", "));
    for a in 0..agents {
        let mut observes: Vec<&str> = names
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(String::as_str)
            .collect();
        if observes.is_empty() {
            observes.push(names.choose(rng).unwrap());
        }
        let actions: Vec<String> = (0..horizon)
            .map(|_| match rng.gen_range(0..6) {
                0 | 1 => "skip".to_string(),
                2 => {
                    let k = rng.gen_range(1..=2);
                    let body: Vec<String> =
                        (0..k).map(|_| random_stmt(rng, nvars, shape)).collect();
                    format!("<{}>", body.join("; "))
                }
                _ => random_stmt(rng, nvars, shape),
            })
            .collect();
        s += &format!(
            "agent A{a} {{ observes: {}; protocol: {}; }}\n",
            observes.join(", "),
            actions.join("; ")
        );
    }
    if rng.gen_bool(0.3) {
        s += &format!("env {{ {} }}\n", random_stmt(rng, nvars, shape));
    }
    let mut literals = Vec::new();
    for n in &names {
        if rng.gen_bool(0.4) {
            literals.push(if rng.gen_bool(0.5) {
                n.clone()
            } else {
                format!("!{n}")
            });
        }
    }
    if !literals.is_empty() {
        s += &format!("init: {};\n", literals.join(" & "));
    } else if rng.gen_bool(0.3) {
        s += &format!("init: !(v0 & {});\n", names.last().unwrap());
    }
    s
}

pub fn random_system(rng: &mut Rng8, shape: &SystemShape) -> SystemSpec {
    let src = random_system_source(rng, shape);
    parse_system(&src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

pub fn timed_atoms(spec: &SystemSpec) -> Vec<TimedAtom> {
    (0..=spec.horizon)
        .flat_map(|time| (0..spec.vars.len()).map(move |var| TimedAtom { var, time }))
        .collect()
}

/// Rows of `m` keyed by their projection onto `vars`, each with its
/// truth value; `None` when two rows with the same key disagree.
pub fn truth_by_projection(
    m: &EpistemicStructure,
    truth: &[bool],
    vars: &BTreeSet<VarId>,
) -> Option<BTreeMap<Vec<u32>, bool>> {
    let w = &m.worlds;
    let pos: Vec<usize> = vars.iter().map(|&v| w.position(v).unwrap()).collect();
    let mut out = BTreeMap::new();
    for (r, &t) in truth.iter().enumerate() {
        let key: Vec<u32> = pos.iter().map(|&p| w.value(r, p)).collect();
        if *out.entry(key).or_insert(t) != t {
            return None;
        }
    }
    Some(out)
}

pub fn distinct<T: std::hash::Hash + Eq>(xs: impl IntoIterator<Item = T>) -> usize {
    xs.into_iter().collect::<HashSet<_>>().len()
}
