use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::{Error, Result};

/// What Alice knows about a single bit position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BitState {
    Unknown,
    Known(bool),
    /// Member of a parity group. `root` is the smallest index of the group and
    /// `parity` is this bit XOR the bit at `root`.
    Linked {
        root: u32,
        parity: bool,
    },
}

/// A GF(2) constraint: the XOR of the bits at `indices` equals `parity`.
///
/// Indices are kept sorted and repeated indices cancel, so `{3, 3}` is the
/// empty functional.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Constraint {
    indices: Vec<usize>,
    parity: bool,
}

impl Constraint {
    pub fn new(indices: impl IntoIterator<Item = usize>, parity: bool) -> Self {
        let mut raw: Vec<usize> = indices.into_iter().collect();
        raw.sort_unstable();
        let mut indices = Vec::with_capacity(raw.len());
        for idx in raw {
            if indices.last() == Some(&idx) {
                indices.pop();
            } else {
                indices.push(idx);
            }
        }
        Self { indices, parity }
    }

    pub fn value(index: usize, value: bool) -> Self {
        Self::new([index], value)
    }

    pub fn pair(a: usize, b: usize, parity: bool) -> Self {
        Self::new([a, b], parity)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn parity(&self) -> bool {
        self.parity
    }

    pub fn arity(&self) -> usize {
        self.indices.len()
    }

    /// Whether `bits` satisfies this constraint.
    pub fn holds_for(&self, bits: &[bool]) -> bool {
        self.indices.iter().fold(false, |acc, &i| acc ^ bits[i]) == self.parity
    }
}

/// Alice's partial knowledge of a bit string, restricted to individually known
/// bits and pairwise parities.
///
/// The representation is canonical: every group is rooted at its smallest
/// member, groups have at least two members, so two values compare equal
/// exactly when they encode the same knowledge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParityKnowledge {
    states: Vec<BitState>,
}

/// Per-index input to [`ParityKnowledge::from_raw`]: groups are identified by an
/// arbitrary label and parities are relative to an arbitrary per-label constant.
#[derive(Clone, Copy, Debug)]
pub(crate) enum RawState {
    Unknown,
    Known(bool),
    Class { label: u64, parity: bool },
}

impl ParityKnowledge {
    /// Knowledge of nothing.
    pub fn unknown(length: usize) -> Self {
        Self {
            states: alloc::vec![BitState::Unknown; length],
        }
    }

    pub(crate) fn from_raw(raw: &[RawState]) -> Self {
        // label -> (first index, parity of first index, member count)
        let mut classes: BTreeMap<u64, (u32, bool, u32)> = BTreeMap::new();
        for (i, state) in raw.iter().enumerate() {
            if let RawState::Class { label, parity } = *state {
                classes
                    .entry(label)
                    .and_modify(|e| e.2 += 1)
                    .or_insert((i as u32, parity, 1));
            }
        }
        let states = raw
            .iter()
            .map(|state| match *state {
                RawState::Unknown => BitState::Unknown,
                RawState::Known(v) => BitState::Known(v),
                RawState::Class { label, parity } => {
                    let (root, root_parity, count) = classes[&label];
                    if count < 2 {
                        BitState::Unknown
                    } else {
                        BitState::Linked {
                            root,
                            parity: parity ^ root_parity,
                        }
                    }
                }
            })
            .collect();
        Self { states }
    }

    pub(crate) fn to_raw(&self) -> impl Iterator<Item = RawState> + '_ {
        self.states.iter().map(|s| match *s {
            BitState::Unknown => RawState::Unknown,
            BitState::Known(v) => RawState::Known(v),
            BitState::Linked { root, parity } => RawState::Class {
                label: root as u64,
                parity,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, index: usize) -> BitState {
        self.states[index]
    }

    pub fn states(&self) -> &[BitState] {
        &self.states
    }

    pub fn value(&self, index: usize) -> Option<bool> {
        match self.states[index] {
            BitState::Known(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_known(&self, index: usize) -> bool {
        matches!(self.states[index], BitState::Known(_))
    }

    /// The value of `bit[a] XOR bit[b]` if Alice can determine it.
    pub fn pair_parity(&self, a: usize, b: usize) -> Option<bool> {
        if a == b {
            return Some(false);
        }
        match (self.states[a], self.states[b]) {
            (BitState::Known(x), BitState::Known(y)) => Some(x ^ y),
            (
                BitState::Linked {
                    root: ra,
                    parity: pa,
                },
                BitState::Linked {
                    root: rb,
                    parity: pb,
                },
            ) if ra == rb => Some(pa ^ pb),
            _ => None,
        }
    }

    pub fn known_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, BitState::Known(_)))
            .map(|(i, _)| i)
    }

    pub fn known_count(&self) -> usize {
        self.known_indices().count()
    }

    /// Number of bits that belong to some parity group.
    pub fn correlated_count(&self) -> usize {
        self.states
            .iter()
            .filter(|s| matches!(s, BitState::Linked { .. }))
            .count()
    }

    pub fn group_count(&self) -> usize {
        self.states
            .iter()
            .enumerate()
            .filter(|(i, s)| matches!(s, BitState::Linked { root, .. } if *root as usize == *i))
            .count()
    }

    /// Parity groups ordered by root; each member carries its offset to the root.
    pub fn groups(&self) -> Vec<Vec<(usize, bool)>> {
        let mut by_root: BTreeMap<u32, Vec<(usize, bool)>> = BTreeMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if let BitState::Linked { root, parity } = *s {
                by_root.entry(root).or_default().push((i, parity));
            }
        }
        by_root.into_values().collect()
    }

    /// A minimal constraint list generating this knowledge: one singleton per
    /// known bit and one (member, root) pair per non-root group member.
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            match *s {
                BitState::Unknown => {}
                BitState::Known(v) => out.push(Constraint::value(i, v)),
                BitState::Linked { root, parity } => {
                    if root as usize != i {
                        out.push(Constraint::pair(root as usize, i, parity));
                    }
                }
            }
        }
        out
    }

    /// Whether every known value and every group parity matches `bits`.
    pub fn is_consistent_with(&self, bits: &[bool]) -> bool {
        if bits.len() != self.states.len() {
            return false;
        }
        self.states.iter().enumerate().all(|(i, s)| match *s {
            BitState::Unknown => true,
            BitState::Known(v) => bits[i] == v,
            BitState::Linked { root, parity } => bits[i] ^ bits[root as usize] == parity,
        })
    }

    /// Knowledge about the sub-sequence at `indices` (in the given order).
    pub fn select(&self, indices: &[usize]) -> Self {
        let raw: Vec<RawState> = indices
            .iter()
            .map(|&i| match self.states[i] {
                BitState::Unknown => RawState::Unknown,
                BitState::Known(v) => RawState::Known(v),
                BitState::Linked { root, parity } => RawState::Class {
                    label: root as u64,
                    parity,
                },
            })
            .collect();
        Self::from_raw(&raw)
    }
}

/// Incremental union-find with parity over `length` bit indices plus one
/// anchor node fixed to 0. A bit is determined once it shares a component with
/// the anchor.
#[derive(Clone, Debug)]
pub struct ParityUnionFind {
    parent: Vec<u32>,
    // parity of a node relative to its parent
    link: Vec<bool>,
    size: Vec<u32>,
    determined: usize,
    scratch_roots: Vec<usize>,
    scratch_parent: Vec<usize>,
}

impl ParityUnionFind {
    pub fn new(length: usize) -> Self {
        Self {
            parent: (0..=length as u32).collect(),
            link: alloc::vec![false; length + 1],
            size: alloc::vec![1; length + 1],
            determined: 0,
            scratch_roots: Vec::new(),
            scratch_parent: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn anchor(&self) -> usize {
        self.parent.len() - 1
    }

    /// Number of bit indices whose value is determined.
    pub fn determined_count(&self) -> usize {
        self.determined
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        let mut root = x;
        let mut total = false;
        while self.parent[root] as usize != root {
            total ^= self.link[root];
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        let mut p = total;
        while cur != root {
            let next = self.parent[cur] as usize;
            let l = self.link[cur];
            self.parent[cur] = root as u32;
            self.link[cur] = p;
            p ^= l;
            cur = next;
        }
        (root, total)
    }

    /// Record `bit[a] XOR bit[b] = parity`; returns how many bits became
    /// determined, or `None` on contradiction.
    fn union(&mut self, a: usize, b: usize, parity: bool) -> Option<usize> {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return (pa ^ pb == parity).then_some(0);
        }
        let anchor_root = self.find(self.anchor()).0;
        let gained = if ra == anchor_root {
            self.size[rb] as usize
        } else if rb == anchor_root {
            self.size[ra] as usize
        } else {
            0
        };
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big as u32;
        self.link[small] = pa ^ pb ^ parity;
        self.size[big] += self.size[small];
        self.determined += gained;
        Some(gained)
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                length: self.len(),
            });
        }
        Ok(())
    }

    /// Ingest one constraint of arity at most two. Returns the number of newly
    /// determined bits.
    pub fn apply(&mut self, constraint: &Constraint) -> Result<usize> {
        for &i in constraint.indices() {
            self.check_index(i)?;
        }
        let outcome = match *constraint.indices() {
            [] => (!constraint.parity()).then_some(0),
            [a] => self.union(a, self.anchor(), constraint.parity()),
            [a, b] => self.union(a, b, constraint.parity()),
            _ => return Err(Error::UnsupportedArity(constraint.arity())),
        };
        outcome.ok_or_else(|| Error::Contradiction {
            indices: constraint.indices().to_vec(),
        })
    }

    pub fn value(&mut self, index: usize) -> Option<bool> {
        let (r, p) = self.find(index);
        let (ra, pa) = self.find(self.anchor());
        (r == ra).then_some(p ^ pa)
    }

    pub fn pair_parity(&mut self, a: usize, b: usize) -> Option<bool> {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        (ra == rb).then_some(pa ^ pb)
    }

    /// How many bits would become determined if the given structure were
    /// ingested: `(a, None)` stands for a singleton on `a`, `(a, Some(b))` for
    /// a pair. Parities are irrelevant for the count, so none are needed.
    pub fn preview_gain(&mut self, shape: &[(usize, Option<usize>)]) -> usize {
        let anchor = self.anchor();
        let anchor_root = self.find(anchor).0;
        self.scratch_roots.clear();
        self.scratch_parent.clear();
        self.scratch_roots.push(anchor_root);
        self.scratch_parent.push(0);
        for &(a, b) in shape {
            let ra = self.find(a).0;
            let rb = match b {
                Some(b) => self.find(b).0,
                None => anchor_root,
            };
            let ia = self.overlay_slot(ra);
            let ib = self.overlay_slot(rb);
            let (ra, rb) = (self.overlay_find(ia), self.overlay_find(ib));
            if ra != rb {
                // keep slot 0 (the anchor) as a root
                if ra < rb {
                    self.scratch_parent[rb] = ra;
                } else {
                    self.scratch_parent[ra] = rb;
                }
            }
        }
        let mut gain = 0;
        for slot in 1..self.scratch_roots.len() {
            if self.overlay_find(slot) == 0 {
                gain += self.size[self.scratch_roots[slot]] as usize;
            }
        }
        gain
    }

    fn overlay_slot(&mut self, root: usize) -> usize {
        match self.scratch_roots.iter().position(|&r| r == root) {
            Some(slot) => slot,
            None => {
                self.scratch_roots.push(root);
                self.scratch_parent.push(self.scratch_parent.len());
                self.scratch_roots.len() - 1
            }
        }
    }

    fn overlay_find(&self, mut slot: usize) -> usize {
        while self.scratch_parent[slot] != slot {
            slot = self.scratch_parent[slot];
        }
        slot
    }

    /// Snapshot as canonical [`ParityKnowledge`].
    pub fn freeze(&mut self) -> ParityKnowledge {
        let n = self.len();
        let (anchor_root, anchor_parity) = self.find(self.anchor());
        let raw: Vec<RawState> = (0..n)
            .map(|i| {
                let (r, p) = self.find(i);
                if r == anchor_root {
                    RawState::Known(p ^ anchor_parity)
                } else if self.size[r] < 2 {
                    RawState::Unknown
                } else {
                    RawState::Class {
                        label: r as u64,
                        parity: p,
                    }
                }
            })
            .collect();
        ParityKnowledge::from_raw(&raw)
    }
}

/// Build Alice's knowledge from singleton and pairwise constraints.
///
/// Pairs are merged by union-find with parity; any group that becomes linked
/// to a known bit is promoted to known as a whole.
pub fn knowledge_from_constraints(
    length: usize,
    constraints: &[Constraint],
) -> Result<ParityKnowledge> {
    let mut uf = ParityUnionFind::new(length);
    for c in constraints {
        uf.apply(c)?;
    }
    Ok(uf.freeze())
}
