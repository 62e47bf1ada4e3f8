//! Directed acyclic graphs, moralization and d-separation.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge mentions a vertex outside the graph")]
    DanglingEdge,
    #[error("edge set contains a cycle")]
    Cyclic,
    #[error("vertex sets are not pairwise disjoint")]
    NotDisjoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag<V: Ord + Copy> {
    parents: BTreeMap<V, BTreeSet<V>>,
    children: BTreeMap<V, BTreeSet<V>>,
}

impl<V: Ord + Copy> Default for Dag<V> {
    fn default() -> Self {
        Dag {
            parents: BTreeMap::new(),
            children: BTreeMap::new(),
        }
    }
}

impl<V: Ord + Copy> Dag<V> {
    /// Builds a graph without checking for cycles; see [`Dag::is_acyclic`].
    pub fn unchecked(
        vertices: impl IntoIterator<Item = V>,
        edges: impl IntoIterator<Item = (V, V)>,
    ) -> Result<Self, GraphError> {
        let mut g = Dag::default();
        for v in vertices {
            g.add_vertex(v);
        }
        for (a, b) in edges {
            if !g.contains(a) || !g.contains(b) {
                return Err(GraphError::DanglingEdge);
            }
            g.add_edge(a, b);
        }
        Ok(g)
    }

    pub fn try_from_edges(
        vertices: impl IntoIterator<Item = V>,
        edges: impl IntoIterator<Item = (V, V)>,
    ) -> Result<Self, GraphError> {
        let g = Self::unchecked(vertices, edges)?;
        if g.is_acyclic() {
            Ok(g)
        } else {
            Err(GraphError::Cyclic)
        }
    }

    pub fn add_vertex(&mut self, v: V) {
        self.parents.entry(v).or_default();
        self.children.entry(v).or_default();
    }

    pub fn add_edge(&mut self, from: V, to: V) {
        self.add_vertex(from);
        self.add_vertex(to);
        self.parents.get_mut(&to).unwrap().insert(from);
        self.children.get_mut(&from).unwrap().insert(to);
    }

    pub fn remove_edge(&mut self, from: V, to: V) {
        if let Some(p) = self.parents.get_mut(&to) {
            p.remove(&from);
        }
        if let Some(c) = self.children.get_mut(&from) {
            c.remove(&to);
        }
    }

    pub fn remove_vertex(&mut self, v: V) {
        if let Some(ps) = self.parents.remove(&v) {
            for p in ps {
                self.children.get_mut(&p).unwrap().remove(&v);
            }
        }
        if let Some(cs) = self.children.remove(&v) {
            for c in cs {
                self.parents.get_mut(&c).unwrap().remove(&v);
            }
        }
    }

    pub fn contains(&self, v: V) -> bool {
        self.parents.contains_key(&v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = V> + '_ {
        self.parents.keys().copied()
    }

    pub fn vertex_set(&self) -> BTreeSet<V> {
        self.vertices().collect()
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (V, V)> + '_ {
        self.children
            .iter()
            .flat_map(|(&a, cs)| cs.iter().map(move |&b| (a, b)))
    }

    pub fn parents(&self, v: V) -> &BTreeSet<V> {
        &self.parents[&v]
    }

    pub fn children(&self, v: V) -> &BTreeSet<V> {
        &self.children[&v]
    }

    pub fn is_leaf(&self, v: V) -> bool {
        self.children.get(&v).is_some_and(|c| c.is_empty())
    }

    /// Reflexive ancestor closure An(X).
    pub fn ancestors(&self, xs: &BTreeSet<V>) -> BTreeSet<V> {
        let mut seen: BTreeSet<V> = xs.iter().copied().filter(|&v| self.contains(v)).collect();
        let mut stack: Vec<V> = seen.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[&v] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// Induced subgraph G_X.
    pub fn restrict(&self, xs: &BTreeSet<V>) -> Dag<V> {
        let mut g = Dag::default();
        for &v in xs.iter().filter(|&&v| self.contains(v)) {
            g.add_vertex(v);
        }
        for (a, b) in self.edges() {
            if xs.contains(&a) && xs.contains(&b) {
                g.add_edge(a, b);
            }
        }
        g
    }

    /// Kahn's algorithm; `None` when the graph has a cycle. Ready vertices
    /// are emitted smallest first.
    pub fn topological_order(&self) -> Option<Vec<V>> {
        let mut indeg: BTreeMap<V, usize> =
            self.parents.iter().map(|(&v, ps)| (v, ps.len())).collect();
        let mut ready: BTreeSet<V> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        let mut out = Vec::with_capacity(self.len());
        while let Some(v) = ready.pop_first() {
            out.push(v);
            for &c in &self.children[&v] {
                let d = indeg.get_mut(&c).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(c);
                }
            }
        }
        (out.len() == self.len()).then_some(out)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph<V: Ord + Copy> {
    adj: BTreeMap<V, BTreeSet<V>>,
}

impl<V: Ord + Copy> UndirectedGraph<V> {
    pub fn new(vertices: impl IntoIterator<Item = V>) -> Self {
        UndirectedGraph {
            adj: vertices.into_iter().map(|v| (v, BTreeSet::new())).collect(),
        }
    }

    /// Adds `a – b`; self-loops are ignored.
    pub fn add_edge(&mut self, a: V, b: V) {
        if a == b {
            return;
        }
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
    }

    pub fn has_edge(&self, a: V, b: V) -> bool {
        self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }

    pub fn neighbors(&self, v: V) -> impl Iterator<Item = V> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }

    pub fn vertices(&self) -> impl Iterator<Item = V> + '_ {
        self.adj.keys().copied()
    }

    /// Each edge once, as `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(V, V)> {
        self.adj
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }
}

/// G^m: marry every pair of parents sharing a child, then drop directions.
pub fn moralize<V: Ord + Copy>(g: &Dag<V>) -> UndirectedGraph<V> {
    let mut m = UndirectedGraph::new(g.vertices());
    for (a, b) in g.edges() {
        m.add_edge(a, b);
    }
    for v in g.vertices() {
        let ps: Vec<V> = g.parents(v).iter().copied().collect();
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                m.add_edge(a, b);
            }
        }
    }
    m
}

/// G restricted to An(X).
pub fn ancestral_restriction<V: Ord + Copy>(g: &Dag<V>, xs: &BTreeSet<V>) -> Dag<V> {
    g.restrict(&g.ancestors(xs))
}

/// Whether Z separates X from Y in the moralized ancestral graph of X∪Y∪Z.
pub fn d_separated<V: Ord + Copy>(
    g: &Dag<V>,
    x: &BTreeSet<V>,
    y: &BTreeSet<V>,
    z: &BTreeSet<V>,
) -> Result<bool, GraphError> {
    if !x.is_disjoint(y) || !x.is_disjoint(z) || !y.is_disjoint(z) {
        return Err(GraphError::NotDisjoint);
    }
    if x.is_empty() || y.is_empty() {
        return Ok(true);
    }
    let all: BTreeSet<V> = x.iter().chain(y).chain(z).copied().collect();
    let h = moralize(&ancestral_restriction(g, &all));
    let mut seen: BTreeSet<V> = x.iter().copied().filter(|v| g.contains(*v)).collect();
    let mut stack: Vec<V> = seen.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if y.contains(&v) {
            return Ok(false);
        }
        for n in h.neighbors(v) {
            if !z.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    Ok(true)
}

/// The least W with keep∩O ⊆ W ⊆ O that separates keep∖W from O∖W.
///
/// W collects `keep ∩ O` plus every vertex of O reached first by a search
/// from `keep ∖ O` through non-observed vertices of the moralized ancestral
/// graph of O ∪ keep.
pub fn minimal_observation_set<V: Ord + Copy>(
    g: &Dag<V>,
    keep: &BTreeSet<V>,
    observed: &BTreeSet<V>,
) -> BTreeSet<V> {
    let mut w: BTreeSet<V> = keep.intersection(observed).copied().collect();
    let sources: BTreeSet<V> = keep.difference(observed).copied().collect();
    if sources.is_empty() {
        return w;
    }
    let all: BTreeSet<V> = keep.union(observed).copied().collect();
    let h = moralize(&ancestral_restriction(g, &all));
    let mut seen = sources.clone();
    let mut stack: Vec<V> = sources.into_iter().collect();
    while let Some(v) = stack.pop() {
        for n in h.neighbors(v) {
            if !seen.insert(n) {
                continue;
            }
            if observed.contains(&n) {
                w.insert(n);
            } else {
                stack.push(n);
            }
        }
    }
    w
}
