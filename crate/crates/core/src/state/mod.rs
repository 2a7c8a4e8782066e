//! Finite state spaces, transformations stored as index tables, and the
//! monoids they generate.
//!
//! States are integer indices `0..size`. A [`Transform`] is a total function
//! on those indices; composition follows the usual `f ∘ g` convention where
//! the right-hand operand acts first. Two transforms are equal when their
//! tables are equal, regardless of name.

pub mod bits;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::error::{Error, Result};

pub type StateIndex = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    size: usize,
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidSpace("a state space needs at least one state".into()));
        }
        Ok(StateSpace { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidSpace("a state space needs at least one state".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate label {label:?}")));
            }
        }
        Ok(StateSpace { size: labels.len(), labels: Some(labels) })
    }

    /// `2^nbits` states labelled by their bit strings, first bit most significant.
    pub fn bits(nbits: u32) -> Result<Self> {
        if nbits == 0 || nbits > 24 {
            return Err(Error::InvalidSpace(format!("bit width {nbits} outside 1..=24")));
        }
        let size = 1usize << nbits;
        let labels = (0..size).map(|x| bits::bit_string(x, nbits)).collect();
        Self::with_labels(labels)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, x: StateIndex) -> String {
        match &self.labels {
            Some(labels) if x < labels.len() => labels[x].clone(),
            _ => x.to_string(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<StateIndex> {
        self.labels.as_ref()?.iter().position(|l| l == label)
    }
}

/// A total function on a finite state space.
#[derive(Clone)]
pub struct Transform {
    table: Vec<StateIndex>,
    name: Option<String>,
}

impl Transform {
    pub fn new(table: Vec<StateIndex>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidTransform("empty table".into()));
        }
        if let Some((i, &y)) = table.iter().enumerate().find(|(_, &y)| y >= n) {
            return Err(Error::InvalidTransform(format!("entry {i} maps to {y}, outside 0..{n}")));
        }
        Ok(Transform { table, name: None })
    }

    pub fn identity(size: usize) -> Self {
        Transform { table: (0..size).collect(), name: Some("id".into()) }
    }

    pub fn from_fn(size: usize, f: impl Fn(StateIndex) -> StateIndex) -> Result<Self> {
        Self::new((0..size).map(f).collect())
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("<anon>")
    }

    pub fn has_name(&self) -> bool {
        self.name.is_some()
    }

    pub fn table(&self) -> &[StateIndex] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    #[inline]
    pub fn apply(&self, x: StateIndex) -> StateIndex {
        self.table[x]
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &y)| i == y)
    }

    /// `self ∘ inner`: apply `inner`, then `self`.
    pub fn after(&self, inner: &Transform) -> Result<Transform> {
        compose(self, inner)
    }

    /// `self` applied `t` times.
    pub fn power(&self, t: usize) -> Transform {
        let mut acc = Transform::identity(self.len());
        for _ in 0..t {
            acc = compose_tables(self, &acc);
        }
        acc.named(format!("{}^{t}", self.name()))
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.len()];
        self.table.iter().all(|&y| !std::mem::replace(&mut seen[y], true))
    }
}

impl PartialEq for Transform {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table
    }
}

impl Eq for Transform {}

impl Hash for Transform {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.table.hash(state);
    }
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.name(), self.table)
    }
}

impl Serialize for Transform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

fn compose_tables(f: &Transform, g: &Transform) -> Transform {
    Transform { table: g.table.iter().map(|&y| f.table[y]).collect(), name: None }
}

/// `f ∘ g`, i.e. `h(x) = f(g(x))`.
pub fn compose(f: &Transform, g: &Transform) -> Result<Transform> {
    if f.len() != g.len() {
        return Err(Error::size(f.len(), g.len()));
    }
    let name = format!("{}∘{}", f.name(), g.name());
    Ok(compose_tables(f, g).named(name))
}

/// Applies `chain` in order (first element acts first).
pub fn apply_chain<'a>(chain: impl IntoIterator<Item = &'a Transform>, x: StateIndex) -> StateIndex {
    chain.into_iter().fold(x, |acc, t| t.apply(acc))
}

/// A submonoid given by generators. The identity is always implicitly present.
#[derive(Debug, Clone)]
pub struct GeneratedMonoid {
    size: usize,
    generators: Vec<Transform>,
}

impl GeneratedMonoid {
    pub fn new(size: usize, generators: Vec<Transform>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidSpace("a state space needs at least one state".into()));
        }
        let generators = generators
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                if g.len() != size {
                    Err(Error::size(size, g.len()))
                } else if g.has_name() {
                    Ok(g)
                } else {
                    Ok(g.named(format!("g{i}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GeneratedMonoid { size, generators })
    }

    /// The monoid `{id}`.
    pub fn trivial(size: usize) -> Self {
        GeneratedMonoid { size, generators: Vec::new() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn generators(&self) -> &[Transform] {
        &self.generators
    }

    pub fn generator_names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name().to_string()).collect()
    }

    /// Breadth-first closure of `{id} ∪ generators` under composition.
    ///
    /// Elements come out in order of word length, so the first element with a
    /// given property is also one with a shortest generating word.
    pub fn closure(&self, cap: usize) -> Result<Closure> {
        if cap == 0 {
            return Err(Error::PreconditionFailed("closure cap must be at least 1".into()));
        }
        self.bfs(Some(cap), None)
    }

    /// Distinct elements reachable by words of length at most `depth`.
    pub fn words_up_to(&self, depth: usize) -> Closure {
        self.bfs(None, Some(depth)).expect("uncapped enumeration cannot overflow")
    }

    fn bfs(&self, cap: Option<usize>, depth: Option<usize>) -> Result<Closure> {
        let mut closure = Closure::with_identity(self.size);
        let mut queue = VecDeque::from([0usize]);
        while let Some(idx) = queue.pop_front() {
            if let Some(d) = depth {
                if closure.words[idx].len() >= d {
                    continue;
                }
            }
            for (gi, g) in self.generators.iter().enumerate() {
                let next = compose_tables(g, &closure.elements[idx]);
                if closure.index.contains_key(&next.table) {
                    continue;
                }
                let mut word = closure.words[idx].clone();
                word.push(gi);
                closure.push(next, word, &self.generators);
                if let Some(cap) = cap {
                    if closure.len() > cap {
                        return Err(Error::CapExceeded(closure.len()));
                    }
                }
                queue.push_back(closure.len() - 1);
            }
        }
        Ok(closure)
    }

    /// Forward reachability closure of `x` under the generators, sorted.
    ///
    /// This is `{e(x) : e ∈ monoid}` without enumerating the monoid.
    pub fn orbit(&self, x: StateIndex) -> Result<Vec<StateIndex>> {
        if x >= self.size {
            return Err(Error::IndexOutOfRange { index: x, size: self.size });
        }
        let mut seen = vec![false; self.size];
        seen[x] = true;
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            for g in &self.generators {
                let z = g.apply(y);
                if !seen[z] {
                    seen[z] = true;
                    stack.push(z);
                }
            }
        }
        Ok((0..self.size).filter(|&i| seen[i]).collect())
    }

    /// Merges the generator lists of two monoids on the same space.
    pub fn union(&self, other: &GeneratedMonoid) -> Result<GeneratedMonoid> {
        if self.size != other.size {
            return Err(Error::size(self.size, other.size));
        }
        let mut gens = self.generators.clone();
        gens.extend(other.generators.iter().cloned());
        GeneratedMonoid::new(self.size, gens)
    }
}

/// Materialized element set of a [`GeneratedMonoid`].
#[derive(Debug, Clone)]
pub struct Closure {
    elements: Vec<Transform>,
    words: Vec<Vec<usize>>,
    index: HashMap<Vec<StateIndex>, usize>,
}

impl Closure {
    fn with_identity(size: usize) -> Self {
        let id = Transform::identity(size);
        let mut index = HashMap::new();
        index.insert(id.table.clone(), 0);
        Closure { elements: vec![id], words: vec![Vec::new()], index }
    }

    fn push(&mut self, mut t: Transform, word: Vec<usize>, gens: &[Transform]) {
        t.name = Some(word_name(&word, gens));
        self.index.insert(t.table.clone(), self.elements.len());
        self.elements.push(t);
        self.words.push(word);
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Transform] {
        &self.elements
    }

    /// Generator indices of the word that produced element `i`, in
    /// application order.
    pub fn word(&self, i: usize) -> &[usize] {
        &self.words[i]
    }

    pub fn contains(&self, t: &Transform) -> bool {
        self.index.contains_key(&t.table)
    }

    pub fn position(&self, t: &Transform) -> Option<usize> {
        self.index.get(&t.table).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transform> {
        self.elements.iter()
    }
}

fn word_name(word: &[usize], gens: &[Transform]) -> String {
    if word.is_empty() {
        return "id".into();
    }
    word.iter().rev().map(|&g| gens[g].name()).collect::<Vec<_>>().join("∘")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommuteWitness {
    /// Generator from the first monoid.
    pub left: String,
    /// Generator from the second monoid.
    pub right: String,
    pub state: StateIndex,
    /// `left ∘ right` applied to `state`.
    pub left_after_right: StateIndex,
    /// `right ∘ left` applied to `state`.
    pub right_after_left: StateIndex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommuteVerdict {
    pub commute: bool,
    pub witness: Option<CommuteWitness>,
}

/// Decides whether every generator of `ma` commutes with every generator of
/// `mb`; this extends to the generated monoids since commutation is preserved
/// under products.
pub fn check_commute(ma: &GeneratedMonoid, mb: &GeneratedMonoid) -> Result<CommuteVerdict> {
    if ma.size != mb.size {
        return Err(Error::size(ma.size, mb.size));
    }
    for f in &ma.generators {
        for g in &mb.generators {
            for x in 0..ma.size {
                let fg = f.apply(g.apply(x));
                let gf = g.apply(f.apply(x));
                if fg != gf {
                    return Ok(CommuteVerdict {
                        commute: false,
                        witness: Some(CommuteWitness {
                            left: f.name().into(),
                            right: g.name().into(),
                            state: x,
                            left_after_right: fg,
                            right_after_left: gf,
                        }),
                    });
                }
            }
        }
    }
    Ok(CommuteVerdict { commute: true, witness: None })
}
