//! Equivalence relations on a finite state space, stored as canonical
//! class-index arrays.
//!
//! Classes are numbered by first occurrence, so two partitions are equal iff
//! their arrays are equal. A partition doubles as the quotient space (its
//! class range) and as the canonical map onto it ([`Partition::reduce`]).

use std::collections::HashMap;
use std::hash::Hash;

use serde::ser::SerializeSeq;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::StateIndex;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    class_of: Vec<usize>,
    num_classes: usize,
}

impl Partition {
    /// Canonicalizes an arbitrary labelling: states with equal keys share a class.
    pub fn from_keys<K: Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Result<Self> {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let class_of: Vec<usize> = keys
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        if class_of.is_empty() {
            return Err(Error::InvalidPartition("partition of an empty set".into()));
        }
        Ok(Partition { num_classes: ids.len(), class_of })
    }

    pub fn from_fn<K: Hash + Eq>(size: usize, key: impl Fn(StateIndex) -> K) -> Result<Self> {
        Self::from_keys((0..size).map(key))
    }

    /// Builds a partition from an explicit list of classes covering `0..size`
    /// exactly once.
    pub fn from_classes(classes: &[Vec<StateIndex>], size: usize) -> Result<Self> {
        let mut labels = vec![usize::MAX; size];
        for (c, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::InvalidPartition(format!("class {c} is empty")));
            }
            for &x in class {
                if x >= size {
                    return Err(Error::IndexOutOfRange { index: x, size });
                }
                if labels[x] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("state {x} listed twice")));
                }
                labels[x] = c;
            }
        }
        if let Some(x) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("state {x} not covered")));
        }
        Self::from_keys(labels)
    }

    /// All singletons.
    pub fn discrete(size: usize) -> Self {
        Partition { class_of: (0..size).collect(), num_classes: size }
    }

    /// One class.
    pub fn trivial(size: usize) -> Self {
        Partition { class_of: vec![0; size], num_classes: 1 }
    }

    /// On `2^nbits` states, distinguishes exactly the listed bit positions
    /// (1-based, most significant first).
    pub fn bits(nbits: u32, positions: &[u32]) -> Result<Self> {
        if nbits == 0 || nbits > 24 {
            return Err(Error::InvalidSpace(format!("bit width {nbits} outside 1..=24")));
        }
        let mut mask = 0usize;
        for &p in positions {
            if p == 0 || p > nbits {
                return Err(Error::InvalidPartition(format!("bit position {p} outside 1..={nbits}")));
            }
            mask |= crate::state::bits::position_mask(nbits, p);
        }
        Self::from_fn(1 << nbits, |x| x & mask)
    }

    /// Parses either an explicit class list such as `[[0,1,2,3],[4,5,6,7]]`
    /// or the shorthand `bits:1,2`. `discrete` and `trivial` are accepted too.
    pub fn parse(literal: &str, size: usize) -> Result<Self> {
        let s = literal.trim();
        match s {
            "discrete" => return Ok(Self::discrete(size)),
            "trivial" => return Ok(Self::trivial(size)),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("bits:") {
            if !size.is_power_of_two() {
                return Err(Error::InvalidPartition(format!("bits shorthand needs a power-of-two space, got {size}")));
            }
            let nbits = size.trailing_zeros();
            let positions = rest
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u32>().map_err(|_| Error::InvalidPartition(format!("bad bit position {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            return Self::bits(nbits, &positions);
        }
        let classes: Vec<Vec<usize>> =
            serde_json::from_str(s).map_err(|e| Error::InvalidPartition(format!("cannot parse {s:?}: {e}")))?;
        Self::from_classes(&classes, size)
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    /// The canonical map onto the quotient space.
    pub fn reduce(&self, x: StateIndex) -> Result<usize> {
        self.class_of.get(x).copied().ok_or(Error::IndexOutOfRange { index: x, size: self.len() })
    }

    #[inline]
    pub fn class(&self, x: StateIndex) -> usize {
        self.class_of[x]
    }

    #[inline]
    pub fn equivalent(&self, x: StateIndex, y: StateIndex) -> bool {
        self.class_of[x] == self.class_of[y]
    }

    pub fn classes(&self) -> Vec<Vec<StateIndex>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (x, &c) in self.class_of.iter().enumerate() {
            out[c].push(x);
        }
        out
    }

    pub fn is_discrete(&self) -> bool {
        self.num_classes == self.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.num_classes == 1
    }

    fn same_size(&self, other: &Partition) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::size(self.len(), other.len()));
        }
        Ok(())
    }

    /// Some pair `(x, y)` equivalent under `self` but not under `coarser`.
    fn refinement_violation(&self, coarser: &Partition) -> Option<(usize, usize)> {
        let mut target = vec![usize::MAX; self.num_classes];
        let mut rep = vec![0; self.num_classes];
        for (x, (&c, &d)) in self.class_of.iter().zip(&coarser.class_of).enumerate() {
            if target[c] == usize::MAX {
                target[c] = d;
                rep[c] = x;
            } else if target[c] != d {
                return Some((rep[c], x));
            }
        }
        None
    }

    /// True iff every class of `self` lies inside a single class of `other`.
    pub fn refines(&self, other: &Partition) -> Result<bool> {
        self.same_size(other)?;
        Ok(self.refinement_violation(other).is_none())
    }

    /// For `self` finer than `coarser`, the partition of `self`'s classes
    /// whose quotient is `coarser`'s quotient.
    pub fn factor(&self, coarser: &Partition) -> Result<Partition> {
        self.same_size(coarser)?;
        if let Some((x, y)) = self.refinement_violation(coarser) {
            return Err(Error::NotRefinement(x, y));
        }
        let mut keys = vec![0; self.num_classes];
        for (&c, &d) in self.class_of.iter().zip(&coarser.class_of) {
            keys[c] = d;
        }
        Partition::from_keys(keys)
    }

    /// Classwise intersection: the coarsest partition refining both.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        self.same_size(other)?;
        Partition::from_keys(self.class_of.iter().zip(&other.class_of))
    }

    /// Transitive closure of the union of both relations: the finest
    /// partition both refine.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        self.same_size(other)?;
        let mut uf = UnionFind::new(self.len());
        for p in [self, other] {
            let mut first = vec![usize::MAX; p.num_classes];
            for (x, &c) in p.class_of.iter().enumerate() {
                if first[c] == usize::MAX {
                    first[c] = x;
                } else {
                    uf.union(first[c], x);
                }
            }
        }
        Ok(uf.into_partition())
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let classes = self.classes();
        let mut seq = s.serialize_seq(Some(classes.len()))?;
        for c in &classes {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

/// Disjoint sets with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns true if the two sets were distinct.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (mut rx, mut ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        if self.size[rx] < self.size[ry] {
            std::mem::swap(&mut rx, &mut ry);
        }
        self.parent[ry] = rx;
        self.size[rx] += self.size[ry];
        true
    }

    pub fn into_partition(mut self) -> Partition {
        let roots: Vec<usize> = (0..self.len()).map(|x| self.find(x)).collect();
        Partition::from_keys(roots).unwrap_or_else(|_| Partition::discrete(0))
    }
}
