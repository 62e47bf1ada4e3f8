use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::VarId;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Slot {
    word: usize,
    shift: u32,
    mask: u64,
}

/// Bit layout of packed tuples. Variables are packed from the most
/// significant end so that comparing word sequences compares tuples
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Layout {
    slots: Vec<Slot>,
    stride: usize,
}

fn width(frame: u32) -> u32 {
    if frame <= 1 {
        0
    } else {
        32 - (frame - 1).leading_zeros()
    }
}

impl Layout {
    fn new(frames: &[u32]) -> Self {
        let mut slots = Vec::with_capacity(frames.len());
        let (mut word, mut used) = (0usize, 0u32);
        for &f in frames {
            let w = width(f);
            if used + w > 64 {
                word += 1;
                used = 0;
            }
            let mask = if w == 0 { 0 } else { (1u64 << w) - 1 };
            slots.push(Slot {
                word,
                shift: 64 - used - w,
                mask,
            });
            used += w;
        }
        let stride = if used == 0 { word } else { word + 1 };
        Layout { slots, stride }
    }

    #[inline]
    fn get(&self, row: &[u64], i: usize) -> u32 {
        let s = self.slots[i];
        if s.mask == 0 {
            0
        } else {
            ((row[s.word] >> s.shift) & s.mask) as u32
        }
    }

    #[inline]
    fn put(&self, row: &mut [u64], i: usize, value: u32) {
        let s = self.slots[i];
        if s.mask != 0 {
            row[s.word] |= (value as u64) << s.shift;
        }
    }
}

/// Copies selected fields of a source layout into a destination layout.
struct Projector {
    moves: Vec<(Slot, Slot)>,
}

impl Projector {
    fn new(src: &Layout, dst: &Layout, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let moves = pairs
            .into_iter()
            .map(|(s, d)| (src.slots[s], dst.slots[d]))
            .filter(|(s, _)| s.mask != 0)
            .collect();
        Projector { moves }
    }

    #[inline]
    fn apply(&self, src: &[u64], dst: &mut [u64]) {
        for (s, d) in &self.moves {
            dst[d.word] |= ((src[s.word] >> s.shift) & s.mask) << d.shift;
        }
    }
}

/// A finite relation: a set of assignments over a sorted variable domain.
///
/// Tuples are stored packed and sorted, so structural equality coincides
/// with set equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    vars: Vec<VarId>,
    frames: Vec<u32>,
    layout: Layout,
    data: Vec<u64>,
    len: usize,
}

/// Packed projections of every row of a relation onto a variable subset.
pub struct Keys {
    stride: usize,
    data: Vec<u64>,
}

impl Keys {
    pub fn get(&self, row: usize) -> &[u64] {
        &self.data[row * self.stride..(row + 1) * self.stride]
    }
}

fn sorted_domain(vars: &[(VarId, u32)]) -> Result<(Vec<VarId>, Vec<u32>, Vec<usize>)> {
    let mut order: Vec<usize> = (0..vars.len()).collect();
    order.sort_by_key(|&i| vars[i].0);
    for w in order.windows(2) {
        if vars[w[0]].0 == vars[w[1]].0 {
            return Err(Error::DuplicateVar(vars[w[0]].0));
        }
    }
    for &(v, f) in vars {
        if f == 0 {
            return Err(Error::BadFrame(v));
        }
    }
    Ok((
        order.iter().map(|&i| vars[i].0).collect(),
        order.iter().map(|&i| vars[i].1).collect(),
        order,
    ))
}

impl Relation {
    fn build(vars: Vec<VarId>, frames: Vec<u32>, mut data: Vec<u64>, rows: usize) -> Self {
        let layout = Layout::new(&frames);
        let stride = layout.stride;
        let len = if stride == 0 {
            rows.min(1)
        } else if stride == 1 {
            data.sort_unstable();
            data.dedup();
            data.len()
        } else {
            let mut chunks: Vec<&[u64]> = data.chunks_exact(stride).collect();
            chunks.sort_unstable();
            chunks.dedup();
            let len = chunks.len();
            data = chunks.concat();
            len
        };
        Relation {
            vars,
            frames,
            layout,
            data,
            len,
        }
    }

    /// Builds a relation from tuples listed in the order of `vars`.
    pub fn new<T: AsRef<[u32]>>(
        vars: &[(VarId, u32)],
        tuples: impl IntoIterator<Item = T>,
    ) -> Result<Self> {
        let (ids, frames, order) = sorted_domain(vars)?;
        let layout = Layout::new(&frames);
        let mut data = Vec::new();
        let mut rows = 0;
        for t in tuples {
            let t = t.as_ref();
            assert_eq!(t.len(), vars.len(), "tuple arity does not match domain");
            let base = data.len();
            data.resize(base + layout.stride, 0);
            for (pos, &src) in order.iter().enumerate() {
                let value = t[src];
                if value >= frames[pos] {
                    return Err(Error::OutOfFrame {
                        var: ids[pos],
                        value,
                    });
                }
                layout.put(&mut data[base..], pos, value);
            }
            rows += 1;
        }
        Ok(Self::build(ids, frames, data, rows))
    }

    /// The neutral element e_X: every assignment over `vars`.
    pub fn identity(vars: &[(VarId, u32)]) -> Result<Self> {
        let (ids, frames, _) = sorted_domain(vars)?;
        let layout = Layout::new(&frames);
        let total: u64 = frames.iter().map(|&f| f as u64).product();
        let mut data = Vec::with_capacity(total as usize * layout.stride);
        let mut digits = vec![0u32; frames.len()];
        for _ in 0..total {
            let base = data.len();
            data.resize(base + layout.stride, 0);
            for (i, &d) in digits.iter().enumerate() {
                layout.put(&mut data[base..], i, d);
            }
            for i in (0..digits.len()).rev() {
                digits[i] += 1;
                if digits[i] < frames[i] {
                    break;
                }
                digits[i] = 0;
            }
        }
        Ok(Self::build(ids, frames, data, total as usize))
    }

    /// The relation with no tuples over `vars`.
    pub fn empty(vars: &[(VarId, u32)]) -> Result<Self> {
        Self::new(vars, std::iter::empty::<Vec<u32>>())
    }

    /// e_∅: the single empty tuple.
    pub fn unit() -> Self {
        Self::build(Vec::new(), Vec::new(), Vec::new(), 1)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn domain(&self) -> BTreeSet<VarId> {
        self.vars.iter().copied().collect()
    }

    pub fn frames(&self) -> &[u32] {
        &self.frames
    }

    /// Domain paired with frame sizes.
    pub fn schema(&self) -> Vec<(VarId, u32)> {
        self.vars
            .iter()
            .copied()
            .zip(self.frames.iter().copied())
            .collect()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.position(v).is_some()
    }

    pub fn frame(&self, v: VarId) -> Option<u32> {
        self.position(v).map(|i| self.frames[i])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn row(&self, r: usize) -> &[u64] {
        let s = self.layout.stride;
        &self.data[r * s..(r + 1) * s]
    }

    /// Value of the variable at domain position `pos` in row `row`.
    pub fn value(&self, row: usize, pos: usize) -> u32 {
        self.layout.get(self.row(row), pos)
    }

    pub fn tuple(&self, row: usize) -> Vec<u32> {
        (0..self.vars.len()).map(|i| self.value(row, i)).collect()
    }

    /// Tuples in canonical (lexicographic) order, values ordered as
    /// [`Relation::vars`].
    pub fn tuples(&self) -> impl Iterator<Item = Vec<u32>> + '_ {
        (0..self.len).map(move |r| self.tuple(r))
    }

    pub fn contains(&self, tuple: &[u32]) -> bool {
        if tuple.len() != self.vars.len() {
            return false;
        }
        let mut packed = vec![0u64; self.layout.stride];
        for (i, &v) in tuple.iter().enumerate() {
            if v >= self.frames[i] {
                return false;
            }
            self.layout.put(&mut packed, i, v);
        }
        if self.layout.stride == 0 {
            return self.len > 0;
        }
        let (mut lo, mut hi) = (0, self.len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.row(mid).cmp(&packed[..]) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Packs the projection of every row onto `vars ∩ dom`; equal keys
    /// mean equal projections.
    pub fn keys(&self, vars: &BTreeSet<VarId>) -> Keys {
        let positions: Vec<usize> = vars.iter().filter_map(|&v| self.position(v)).collect();
        let frames: Vec<u32> = positions.iter().map(|&p| self.frames[p]).collect();
        let dst = Layout::new(&frames);
        let proj = Projector::new(&self.layout, &dst, positions.iter().copied().zip(0..));
        let mut data = vec![0u64; self.len * dst.stride];
        for r in 0..self.len {
            proj.apply(self.row(r), &mut data[r * dst.stride..(r + 1) * dst.stride]);
        }
        Keys {
            stride: dst.stride,
            data,
        }
    }

    /// s ⊗ t: natural join.
    pub fn combine(&self, other: &Relation) -> Result<Relation> {
        self.combine_onto(other, None)
    }

    /// (s ⊗ t)↓X, projecting each joined tuple as it is produced.
    pub fn combine_marginalize(
        &self,
        other: &Relation,
        keep: &BTreeSet<VarId>,
    ) -> Result<Relation> {
        self.combine_onto(other, Some(keep))
    }

    fn combine_onto(&self, other: &Relation, keep: Option<&BTreeSet<VarId>>) -> Result<Relation> {
        let mut shared = Vec::new();
        let (mut i, mut j) = (0, 0);
        let mut out_vars = Vec::new();
        let mut out_frames = Vec::new();
        // (side, index) per output variable; side 0 = self, 1 = other.
        let mut origin = Vec::new();
        while i < self.vars.len() || j < other.vars.len() {
            let a = self.vars.get(i);
            let b = other.vars.get(j);
            match (a, b) {
                (Some(x), Some(y)) if x == y => {
                    if self.frames[i] != other.frames[j] {
                        return Err(Error::FrameMismatch {
                            var: *x,
                            left: self.frames[i],
                            right: other.frames[j],
                        });
                    }
                    shared.push((i, j));
                    out_vars.push(*x);
                    out_frames.push(self.frames[i]);
                    origin.push((0, i));
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    out_vars.push(*x);
                    out_frames.push(self.frames[i]);
                    origin.push((0, i));
                    i += 1;
                }
                (Some(x), None) => {
                    out_vars.push(*x);
                    out_frames.push(self.frames[i]);
                    origin.push((0, i));
                    i += 1;
                }
                (_, Some(y)) => {
                    out_vars.push(*y);
                    out_frames.push(other.frames[j]);
                    origin.push((1, j));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }

        if let Some(keep) = keep {
            let kept: Vec<usize> = (0..out_vars.len())
                .filter(|&d| keep.contains(&out_vars[d]))
                .collect();
            out_vars = kept.iter().map(|&d| out_vars[d]).collect();
            out_frames = kept.iter().map(|&d| out_frames[d]).collect();
            origin = kept.iter().map(|&d| origin[d]).collect();
        }
        let key_frames: Vec<u32> = shared.iter().map(|&(i, _)| self.frames[i]).collect();
        let key_layout = Layout::new(&key_frames);
        let ks = key_layout.stride;
        let left_key = Projector::new(
            &self.layout,
            &key_layout,
            shared.iter().map(|p| p.0).zip(0..),
        );
        let right_key = Projector::new(
            &other.layout,
            &key_layout,
            shared.iter().map(|p| p.1).zip(0..),
        );

        let out_layout = Layout::new(&out_frames);
        let os = out_layout.stride;
        let from_left = Projector::new(
            &self.layout,
            &out_layout,
            origin
                .iter()
                .enumerate()
                .filter(|(_, o)| o.0 == 0)
                .map(|(d, o)| (o.1, d)),
        );
        let from_right = Projector::new(
            &other.layout,
            &out_layout,
            origin
                .iter()
                .enumerate()
                .filter(|(_, o)| o.0 == 1)
                .map(|(d, o)| (o.1, d)),
        );

        // Build an index on the smaller side, probe with the larger one.
        let left_builds = self.len <= other.len;
        let (build, build_key, probe, probe_key) = if left_builds {
            (self, &left_key, other, &right_key)
        } else {
            (other, &right_key, self, &left_key)
        };
        let mut data = Vec::new();
        let mut rows = 0usize;
        let mut emit = |b: usize, r: usize, data: &mut Vec<u64>| {
            let base = data.len();
            data.resize(base + os, 0);
            let (l, rr) = if left_builds { (b, r) } else { (r, b) };
            from_left.apply(self.row(l), &mut data[base..]);
            from_right.apply(other.row(rr), &mut data[base..]);
            rows += 1;
        };
        if ks <= 1 {
            // Single-word keys: probe a sorted array of (key, row) pairs.
            let mut index: Vec<(u64, usize)> = (0..build.len)
                .map(|r| {
                    let mut k = [0u64; 1];
                    build_key.apply(build.row(r), &mut k[..ks]);
                    (k[0], r)
                })
                .collect();
            index.sort_unstable();
            for r in 0..probe.len {
                let mut k = [0u64; 1];
                probe_key.apply(probe.row(r), &mut k[..ks]);
                let lo = index.partition_point(|e| e.0 < k[0]);
                for &(key, b) in &index[lo..] {
                    if key != k[0] {
                        break;
                    }
                    emit(b, r, &mut data);
                }
            }
        } else {
            let mut build_keys = vec![0u64; build.len * ks];
            for r in 0..build.len {
                build_key.apply(build.row(r), &mut build_keys[r * ks..(r + 1) * ks]);
            }
            let key_of = |r: usize| &build_keys[r * ks..(r + 1) * ks];
            let mut index: Vec<usize> = (0..build.len).collect();
            index.sort_unstable_by(|&a, &b| key_of(a).cmp(key_of(b)));
            let mut key = vec![0u64; ks];
            for r in 0..probe.len {
                key.iter_mut().for_each(|w| *w = 0);
                probe_key.apply(probe.row(r), &mut key);
                let lo = index.partition_point(|&b| key_of(b) < &key[..]);
                for &b in &index[lo..] {
                    if key_of(b) != &key[..] {
                        break;
                    }
                    emit(b, r, &mut data);
                }
            }
        }
        Ok(Self::build(out_vars, out_frames, data, rows))
    }

    /// s↓X: projection onto X ∩ dom(s).
    pub fn marginalize(&self, keep: &BTreeSet<VarId>) -> Relation {
        let positions: Vec<usize> = (0..self.vars.len())
            .filter(|&i| keep.contains(&self.vars[i]))
            .collect();
        if positions.len() == self.vars.len() {
            return self.clone();
        }
        let vars: Vec<VarId> = positions.iter().map(|&p| self.vars[p]).collect();
        let frames: Vec<u32> = positions.iter().map(|&p| self.frames[p]).collect();
        let dst = Layout::new(&frames);
        let proj = Projector::new(&self.layout, &dst, positions.iter().copied().zip(0..));
        let mut data = vec![0u64; self.len * dst.stride];
        for r in 0..self.len {
            proj.apply(self.row(r), &mut data[r * dst.stride..(r + 1) * dst.stride]);
        }
        Self::build(vars, frames, data, self.len)
    }

    /// s^{-x} = s↓(dom(s) ∖ {x}).
    pub fn eliminate(&self, x: VarId) -> Relation {
        let mut keep = self.domain();
        keep.remove(&x);
        self.marginalize(&keep)
    }

    /// Keeps the tuples of `self` that agree with some tuple of `other` on
    /// the shared variables.
    pub fn semijoin(&self, other: &Relation) -> Result<Relation> {
        let mut mine = Vec::new();
        let mut theirs = Vec::new();
        for (i, v) in self.vars.iter().enumerate() {
            if let Some(j) = other.position(*v) {
                if self.frames[i] != other.frames[j] {
                    return Err(Error::FrameMismatch {
                        var: *v,
                        left: self.frames[i],
                        right: other.frames[j],
                    });
                }
                mine.push(i);
                theirs.push(j);
            }
        }
        let key_frames: Vec<u32> = mine.iter().map(|&i| self.frames[i]).collect();
        let key_layout = Layout::new(&key_frames);
        let ks = key_layout.stride;
        if ks == 0 {
            return Ok(if other.is_empty() {
                Self::build(self.vars.clone(), self.frames.clone(), Vec::new(), 0)
            } else {
                self.clone()
            });
        }
        let my_key = Projector::new(&self.layout, &key_layout, mine.iter().copied().zip(0..));
        let their_key = Projector::new(&other.layout, &key_layout, theirs.iter().copied().zip(0..));
        let mut allowed = vec![0u64; other.len * ks];
        for r in 0..other.len {
            their_key.apply(other.row(r), &mut allowed[r * ks..(r + 1) * ks]);
        }
        let mut allowed: Vec<&[u64]> = allowed.chunks_exact(ks).collect();
        allowed.sort_unstable();
        allowed.dedup();
        // Rows are kept in their sorted order, so no re-sort is needed.
        let stride = self.layout.stride;
        let mut data = Vec::new();
        let mut len = 0;
        let mut key = vec![0u64; ks];
        for r in 0..self.len {
            key.iter_mut().for_each(|w| *w = 0);
            my_key.apply(self.row(r), &mut key);
            if allowed.binary_search(&&key[..]).is_ok() {
                data.extend_from_slice(self.row(r));
                len += 1;
            }
        }
        debug_assert!(stride > 0 || len <= 1);
        Ok(Relation {
            vars: self.vars.clone(),
            frames: self.frames.clone(),
            layout: self.layout.clone(),
            data,
            len,
        })
    }

    /// Relational conditional independence X ⊥ Y | Z: whenever two tuples
    /// agree on Z, some tuple takes its X∪Z part from the first and its Y∪Z
    /// part from the second.
    pub fn conditional_independent(
        &self,
        x: &BTreeSet<VarId>,
        y: &BTreeSet<VarId>,
        z: &BTreeSet<VarId>,
    ) -> Result<bool> {
        if !x.is_disjoint(y) || !x.is_disjoint(z) || !y.is_disjoint(z) {
            return Err(Error::NotDisjoint);
        }
        for v in x.iter().chain(y).chain(z) {
            if !self.contains_var(*v) {
                return Err(Error::NotInDomain(*v));
            }
        }
        let xz: BTreeSet<VarId> = x.union(z).copied().collect();
        let yz: BTreeSet<VarId> = y.union(z).copied().collect();
        let xyz: BTreeSet<VarId> = xz.union(y).copied().collect();
        // A↓XYZ ⊆ A↓XZ ⋈_Z A↓YZ always; the independency holds iff every
        // Z-block of A↓XYZ is the full product of its X and Y parts.
        let count = |rel: &Relation| {
            let keys = rel.keys(z);
            let mut counts = std::collections::HashMap::<Vec<u64>, u64>::new();
            for r in 0..rel.len() {
                *counts.entry(keys.get(r).to_vec()).or_default() += 1;
            }
            counts
        };
        let c_xyz = count(&self.marginalize(&xyz));
        let c_xz = count(&self.marginalize(&xz));
        let c_yz = count(&self.marginalize(&yz));
        Ok(c_xyz.iter().all(|(k, &n)| n == c_xz[k] * c_yz[k]))
    }

    /// Sorted CSV dump with a header of variable names.
    pub fn to_csv(&self, name: impl Fn(VarId) -> String) -> String {
        let mut out = self
            .vars
            .iter()
            .map(|&v| name(v))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for t in self.tuples() {
            let line = t
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Incremental construction of a relation from rows given in domain
/// order, without materializing unpacked tuples.
pub struct RelationBuilder {
    vars: Vec<VarId>,
    frames: Vec<u32>,
    layout: Layout,
    data: Vec<u64>,
    rows: usize,
}

impl RelationBuilder {
    /// `schema` must be sorted by variable id.
    pub fn new(schema: &[(VarId, u32)]) -> Result<Self> {
        let (vars, frames, order) = sorted_domain(schema)?;
        assert!(
            order.iter().enumerate().all(|(i, &o)| i == o),
            "builder schema must be sorted"
        );
        let layout = Layout::new(&frames);
        Ok(RelationBuilder {
            vars,
            frames,
            layout,
            data: Vec::new(),
            rows: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Appends a row whose value at domain position `i` is `value(i)`.
    pub fn push(&mut self, value: impl Fn(usize) -> u32) {
        let base = self.data.len();
        self.data.resize(base + self.layout.stride, 0);
        for i in 0..self.vars.len() {
            let x = value(i);
            debug_assert!(x < self.frames[i]);
            self.layout.put(&mut self.data[base..], i, x);
        }
        self.rows += 1;
    }

    pub fn finish(self) -> Relation {
        Relation::build(self.vars, self.frames, self.data, self.rows)
    }
}

/// ⊗ of a collection; ⊗∅ = e_∅.
pub fn combine_all<'a>(rels: impl IntoIterator<Item = &'a Relation>) -> Result<Relation> {
    let mut acc = Relation::unit();
    for r in rels {
        acc = acc.combine(r)?;
    }
    Ok(acc)
}
