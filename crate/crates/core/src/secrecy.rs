//! Agents and the secrecy decision procedures.
//!
//! Every check here quantifies over three things: states, secret operations
//! `g` of one party, and post-processing operations of the observing agent.
//! Two reductions keep this tractable:
//!
//! - Secret operations only need to range over generators. If `g` and `h`
//!   are both invisible to the observer then so is `g ∘ h`, because
//!   `b(g(h(x))) ~ b(h(x)) ~ b(x)` for every post-processing `b`.
//! - Outer post-processing only needs to range over generators (plus the
//!   identity) when the observer's partition is a congruence for its own
//!   operations: then equivalent states stay equivalent under every word and
//!   checking the identity already decides the question. Without a congruence
//!   certificate the outer operation ranges over the full closure.
//!
//! The inner post-processing slot of extended secrecy always ranges over the
//! full closure; nothing reduces it in general.
//!
//! Witnesses record the failing chain in application order (first element
//! acts first) next to the reference chain without the secret operation.
//! Candidates are scanned in breadth-first word order and the witness with the
//! smallest total word length is reported.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::state::{apply_chain, check_commute, GeneratedMonoid, StateIndex, Transform};

/// Default number of samples for randomized robustness runs.
pub const DEFAULT_TRIALS: usize = 1000;

/// Pattern-space size up to which robustness chains are enumerated exhaustively.
pub const EXHAUSTIVE_PATTERN_LIMIT: u128 = 1_000_000;

/// A restricted agent: an indistinguishability partition and a monoid of
/// local operations on the same state space.
#[derive(Debug, Clone)]
pub struct Agent {
    pub name: String,
    pub perspective: Partition,
    pub ops: GeneratedMonoid,
}

impl Agent {
    pub fn new(name: impl Into<String>, perspective: Partition, ops: GeneratedMonoid) -> Result<Self> {
        if perspective.len() != ops.size() {
            return Err(Error::size(ops.size(), perspective.len()));
        }
        Ok(Agent { name: name.into(), perspective, ops })
    }

    pub fn size(&self) -> usize {
        self.ops.size()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Post-processing enumerated over the materialized closure.
    Exhaustive,
    /// Outer post-processing reduced to generators under a congruence certificate.
    GeneratorCongruence,
    /// Condition checked generator-wise, which is exact for it.
    Generators,
    /// Post-processing restricted to words of bounded length.
    DepthLimited,
    /// Seeded random sampling of chains.
    Randomized,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    /// Left-hand chain in application order.
    pub chain: Vec<Transform>,
    /// Right-hand chain (the same chain without the secret operations).
    pub reference_chain: Vec<Transform>,
    pub state: StateIndex,
    pub class_lhs: usize,
    pub class_rhs: usize,
}

impl Witness {
    fn new(chain: Vec<Transform>, reference_chain: Vec<Transform>, state: StateIndex, p: &Partition) -> Self {
        let class_lhs = p.class(apply_chain(&chain, state));
        let class_rhs = p.class(apply_chain(&reference_chain, state));
        Witness { chain, reference_chain, state, class_lhs, class_rhs }
    }

    /// Re-evaluates both chains; returns the observed classes.
    pub fn replay(&self, p: &Partition) -> (usize, usize) {
        (p.class(apply_chain(&self.chain, self.state)), p.class(apply_chain(&self.reference_chain, self.state)))
    }

    pub fn chain_names(&self) -> Vec<String> {
        self.chain.iter().map(|t| t.name().to_string()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SecrecyVerdict {
    pub holds: bool,
    pub mode: Mode,
    pub witness: Option<Witness>,
}

impl SecrecyVerdict {
    fn holds(mode: Mode) -> Self {
        SecrecyVerdict { holds: true, mode, witness: None }
    }
}

/// True iff every generator maps `p`-equivalent states to `p`-equivalent
/// states; by induction on words the whole monoid then does.
pub fn is_congruence(p: &Partition, m: &GeneratedMonoid) -> bool {
    if p.len() != m.size() {
        return false;
    }
    let mut image_class = vec![usize::MAX; p.num_classes()];
    m.generators().iter().all(|g| {
        image_class.fill(usize::MAX);
        (0..p.len()).all(|x| {
            let c = p.class(x);
            let d = p.class(g.apply(x));
            if image_class[c] == usize::MAX {
                image_class[c] = d;
                true
            } else {
                image_class[c] == d
            }
        })
    })
}

/// Candidate transforms with their word lengths, in breadth-first order.
struct Candidates {
    elems: Vec<Transform>,
    lens: Vec<usize>,
}

impl Candidates {
    fn identity(size: usize) -> Self {
        Candidates { elems: vec![Transform::identity(size)], lens: vec![0] }
    }

    fn closure(m: &GeneratedMonoid, cap: usize) -> Result<Self> {
        let c = m.closure(cap)?;
        Ok(Self::from_closure(&c))
    }

    fn words(m: &GeneratedMonoid, depth: usize) -> Self {
        Self::from_closure(&m.words_up_to(depth))
    }

    fn from_closure(c: &crate::state::Closure) -> Self {
        let lens = (0..c.len()).map(|i| c.word(i).len()).collect();
        Candidates { elems: c.elements().to_vec(), lens }
    }

    fn generators(m: &GeneratedMonoid) -> Self {
        let mut out = Self::identity(m.size());
        for g in m.generators() {
            out.elems.push(g.clone());
            out.lens.push(1);
        }
        out
    }
}

fn check_sizes(secret_ops: &GeneratedMonoid, b: &Agent, f: Option<&Transform>) -> Result<()> {
    if secret_ops.size() != b.size() {
        return Err(Error::size(b.size(), secret_ops.size()));
    }
    if let Some(f) = f {
        if f.len() != b.size() {
            return Err(Error::size(b.size(), f.len()));
        }
    }
    Ok(())
}

/// Outer post-processing candidates: generators under a congruence
/// certificate, the full closure otherwise.
fn outer_candidates(b: &Agent, cap: usize) -> Result<(Candidates, Mode)> {
    if is_congruence(&b.perspective, &b.ops) {
        Ok((Candidates::generators(&b.ops), Mode::GeneratorCongruence))
    } else {
        Ok((Candidates::closure(&b.ops, cap)?, Mode::Exhaustive))
    }
}

/// A pair of states that must stay indistinguishable under every outer
/// post-processing, with where it came from.
struct Obligation {
    lhs: StateIndex,
    rhs: StateIndex,
    inner: usize,
    secret: usize,
    state: StateIndex,
}

/// Decides `outer ∘ f ∘ inner ∘ g (x) ~ outer ∘ f ∘ inner (x)` over all
/// candidates, generators `g` of `secret_ops` and states `x`.
///
/// `inner = None` drops the inner slot and `f` entirely (plain secrecy form).
fn decide(
    secret_ops: &GeneratedMonoid,
    p: &Partition,
    inner: Option<&Candidates>,
    global: Option<&Transform>,
    outer: &Candidates,
    mode: Mode,
) -> SecrecyVerdict {
    let n = p.len();
    let secret = secret_ops.generators();
    let id_only = Candidates::identity(n);
    let inner_c = inner.unwrap_or(&id_only);

    let mut seen: HashSet<(StateIndex, StateIndex)> = HashSet::new();
    let mut obligations = Vec::new();
    for (ii, h) in inner_c.elems.iter().enumerate() {
        for (si, g) in secret.iter().enumerate() {
            for x in 0..n {
                let mut lhs = h.apply(g.apply(x));
                let mut rhs = h.apply(x);
                if let Some(f) = global {
                    lhs = f.apply(lhs);
                    rhs = f.apply(rhs);
                }
                if lhs != rhs && seen.insert((lhs, rhs)) {
                    obligations.push(Obligation { lhs, rhs, inner: ii, secret: si, state: x });
                }
            }
        }
    }

    let mut best: Option<(usize, usize, usize)> = None; // (total length, outer, obligation)
    for (oi, o) in outer.elems.iter().enumerate() {
        let lo = outer.lens[oi];
        if best.is_some_and(|(t, _, _)| lo >= t) {
            break;
        }
        for (k, ob) in obligations.iter().enumerate() {
            let total = lo + inner_c.lens[ob.inner];
            if best.is_some_and(|(t, _, _)| total >= t) {
                break;
            }
            if !p.equivalent(o.apply(ob.lhs), o.apply(ob.rhs)) {
                best = Some((total, oi, k));
                break;
            }
        }
    }

    let Some((_, oi, k)) = best else {
        return SecrecyVerdict::holds(mode);
    };
    let ob = &obligations[k];
    let mut reference = Vec::new();
    if inner.is_some() {
        reference.push(inner_c.elems[ob.inner].clone());
        reference.push(global.cloned().unwrap_or_else(|| Transform::identity(n)));
    }
    reference.push(outer.elems[oi].clone());
    let mut chain = vec![secret[ob.secret].clone()];
    chain.extend(reference.iter().cloned());
    SecrecyVerdict { holds: false, mode, witness: Some(Witness::new(chain, reference, ob.state, p)) }
}

/// Plain secrecy: `f_B(g(x)) ~_B f_B(x)` for every state, every secret
/// operation `g` and every `f_B` in the agent's monoid.
pub fn check_secrecy(secret_ops: &GeneratedMonoid, b: &Agent, cap: usize) -> Result<SecrecyVerdict> {
    check_sizes(secret_ops, b, None)?;
    let (outer, mode) = outer_candidates(b, cap)?;
    Ok(decide(secret_ops, &b.perspective, None, None, &outer, mode))
}

/// Secrecy in the presence of a global transformation `f`:
/// `f_B ∘ f ∘ f'_B ∘ g (x) ~_B f_B ∘ f ∘ f'_B (x)`.
pub fn check_extended_secrecy(
    secret_ops: &GeneratedMonoid,
    b: &Agent,
    f: &Transform,
    cap: usize,
) -> Result<SecrecyVerdict> {
    check_sizes(secret_ops, b, Some(f))?;
    let inner = Candidates::closure(&b.ops, cap)?;
    let (outer, mode) = outer_candidates(b, cap)?;
    Ok(decide(secret_ops, &b.perspective, Some(&inner), Some(f), &outer, mode))
}

/// Extended secrecy for time-limited agents: both post-processing slots
/// range over words of at most `max_depth` generators. `f = None` means the
/// identity.
pub fn check_secrecy_depth_limited(
    secret_ops: &GeneratedMonoid,
    b: &Agent,
    f: Option<&Transform>,
    max_depth: usize,
) -> Result<SecrecyVerdict> {
    check_sizes(secret_ops, b, f)?;
    let words = Candidates::words(&b.ops, max_depth);
    let id = Transform::identity(b.size());
    let f = f.unwrap_or(&id);
    Ok(decide(secret_ops, &b.perspective, Some(&words), Some(f), &words, Mode::DepthLimited))
}

/// Independence condition `g(x) ~ x` for every generator `g` and state `x`.
/// Generators suffice since the condition composes along words by
/// transitivity.
pub fn check_terminality(ops: &GeneratedMonoid, p: &Partition) -> Result<SecrecyVerdict> {
    if ops.size() != p.len() {
        return Err(Error::size(p.len(), ops.size()));
    }
    for g in ops.generators() {
        for x in 0..p.len() {
            if !p.equivalent(g.apply(x), x) {
                let w = Witness::new(vec![g.clone()], Vec::new(), x, p);
                return Ok(SecrecyVerdict { holds: false, mode: Mode::Generators, witness: Some(w) });
            }
        }
    }
    Ok(SecrecyVerdict::holds(Mode::Generators))
}

/// Secrecy for commuting agents: decides the simplified condition
/// `f_B ∘ f ∘ g (x) ~_B f_B ∘ f (x)` without the inner post-processing slot.
///
/// With commuting monoids this is equivalent to full extended secrecy; when
/// the full check fits in `cap` both are computed and compared.
pub fn check_secrecy_commuting(
    secret_ops: &GeneratedMonoid,
    b: &Agent,
    f: Option<&Transform>,
    cap: usize,
) -> Result<SecrecyVerdict> {
    check_sizes(secret_ops, b, f)?;
    let commute = check_commute(secret_ops, &b.ops)?;
    if let Some(w) = commute.witness {
        return Err(Error::NotCommuting(format!("{} and {} disagree on state {}", w.left, w.right, w.state)));
    }
    let id = Transform::identity(b.size());
    let f = f.unwrap_or(&id);
    let (outer, mode) = outer_candidates(b, cap)?;
    let simplified = decide(secret_ops, &b.perspective, Some(&Candidates::identity(b.size())), Some(f), &outer, mode);
    match check_extended_secrecy(secret_ops, b, f, cap) {
        Ok(full) if full.holds != simplified.holds => Err(Error::InvariantViolation(format!(
            "commuting simplification gave {} but extended secrecy gave {}",
            simplified.holds, full.holds
        ))),
        Ok(_) | Err(Error::CapExceeded(_)) => Ok(simplified),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InheritanceReport {
    pub b_secret_towards_a: bool,
    pub c_secret_towards_a: bool,
    pub a_secret_towards_b: bool,
    pub a_secret_towards_c: bool,
    /// Both implications `B ⇒ C` hold.
    pub inherited: bool,
}

fn secrecy_with(secret_ops: &GeneratedMonoid, agent: &Agent, f: Option<&Transform>, cap: usize) -> Result<bool> {
    Ok(match f {
        Some(f) => check_extended_secrecy(secret_ops, agent, f, cap)?.holds,
        None => check_secrecy(secret_ops, agent, cap)?.holds,
    })
}

/// Restricting an agent (fewer operations, coarser perspective) never
/// destroys secrecy in either direction. `c` must be a restriction of `b`.
pub fn check_restricted_inheritance(
    a: &Agent,
    b: &Agent,
    c: &Agent,
    f: Option<&Transform>,
    cap: usize,
) -> Result<InheritanceReport> {
    if a.size() != b.size() || b.size() != c.size() {
        return Err(Error::size(b.size(), c.size()));
    }
    let b_closure = b.ops.closure(cap)?;
    if let Some(g) = c.ops.generators().iter().find(|g| !b_closure.contains(g)) {
        return Err(Error::PreconditionFailed(format!(
            "operation {} of {} is not in the monoid of {}",
            g.name(),
            c.name,
            b.name
        )));
    }
    if !b.perspective.refines(&c.perspective)? {
        return Err(Error::PreconditionFailed(format!(
            "perspective of {} is not coarser than that of {}",
            c.name, b.name
        )));
    }
    let b_secret_towards_a = secrecy_with(&b.ops, a, f, cap)?;
    let c_secret_towards_a = secrecy_with(&c.ops, a, f, cap)?;
    let a_secret_towards_b = secrecy_with(&a.ops, b, f, cap)?;
    let a_secret_towards_c = secrecy_with(&a.ops, c, f, cap)?;
    let inherited = (!b_secret_towards_a || c_secret_towards_a) && (!a_secret_towards_b || a_secret_towards_c);
    Ok(InheritanceReport { b_secret_towards_a, c_secret_towards_a, a_secret_towards_b, a_secret_towards_c, inherited })
}

#[derive(Debug, Clone)]
pub struct RobustnessConfig {
    /// Global pre-processing applied before everything else.
    pub pre: Option<Transform>,
    /// Global transformation between the two interleaved blocks.
    pub global: Option<Transform>,
    /// Maximum number of (secret, post-processing) rounds per block.
    pub max_len: usize,
    pub trials: usize,
    pub seed: u64,
    pub cap: usize,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            pre: None,
            global: None,
            max_len: 4,
            trials: DEFAULT_TRIALS,
            seed: 0,
            cap: crate::DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessReport {
    pub holds: bool,
    pub mode: Mode,
    /// Size of the chain pattern space (saturating).
    pub pattern_space: u128,
    pub patterns_checked: u64,
}

type Step = (usize, usize);

/// Called with both state vectors and the chain that produced them.
type Visit<'a> = dyn FnMut(&[StateIndex], &[StateIndex], &[Step]) -> Result<()> + 'a;

/// Walks every interleaving `f_N ∘ g_N ∘ … ∘ f_1 ∘ g_1` of length at most
/// `depth`, calling `visit` on each (including the empty one).
fn walk(
    depth: usize,
    secret: &[Transform],
    post: &[Transform],
    lhs: &[StateIndex],
    rhs: &[StateIndex],
    stack: &mut Vec<Step>,
    visit: &mut Visit,
) -> Result<()> {
    visit(lhs, rhs, stack)?;
    if depth == 0 {
        return Ok(());
    }
    for (gi, g) in secret.iter().enumerate() {
        for (fi, fb) in post.iter().enumerate() {
            let l: Vec<_> = lhs.iter().map(|&x| fb.apply(g.apply(x))).collect();
            let r: Vec<_> = rhs.iter().map(|&x| fb.apply(x)).collect();
            stack.push((gi, fi));
            walk(depth - 1, secret, post, &l, &r, stack, visit)?;
            stack.pop();
        }
    }
    Ok(())
}

fn describe_block(steps: &[Step], secret: &[Transform], post: &[Transform]) -> Vec<String> {
    steps.iter().flat_map(|&(g, f)| [secret[g].name().to_string(), post[f].name().to_string()]).collect()
}

fn saturating_pow_sum(k: u128, n: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for _ in 0..=n {
        total = total.saturating_add(term);
        term = term.saturating_mul(k);
    }
    total
}

/// Property-test oracle for robustness of (extended) secrecy: interleaved
/// chains of secret operations and post-processing never become
/// distinguishable once the base checks hold (plain secrecy, and secrecy in
/// the presence of the global map when one is given).
///
/// Enumerates the whole pattern space when it has at most
/// [`EXHAUSTIVE_PATTERN_LIMIT`] patterns, otherwise draws `trials` seeded
/// samples. A failing chain is reported as an invariant violation.
pub fn check_robustness_chain(
    secret_ops: &GeneratedMonoid,
    b: &Agent,
    config: &RobustnessConfig,
) -> Result<RobustnessReport> {
    check_sizes(secret_ops, b, config.global.as_ref())?;
    check_sizes(secret_ops, b, config.pre.as_ref())?;
    let n = b.size();
    // Rounds after the global map need plain secrecy, rounds before it need
    // secrecy in the presence of the map, so both are preconditions.
    if !check_secrecy(secret_ops, b, config.cap)?.holds {
        return Err(Error::PreconditionFailed("base secrecy does not hold".into()));
    }
    if let Some(f) = &config.global {
        if !check_extended_secrecy(secret_ops, b, f, config.cap)?.holds {
            return Err(Error::PreconditionFailed(format!("secrecy in the presence of {} does not hold", f.name())));
        }
    }
    let secret = secret_ops.closure(config.cap)?.elements().to_vec();
    let post = b.ops.closure(config.cap)?.elements().to_vec();
    let k = (secret.len() as u128) * (post.len() as u128);
    let one_side = saturating_pow_sum(k, config.max_len);
    let pattern_space = if config.global.is_some() { one_side.saturating_mul(one_side) } else { one_side };

    let p = &b.perspective;
    let start: Vec<StateIndex> = match &config.pre {
        Some(pre) => pre.table().to_vec(),
        None => (0..n).collect(),
    };
    let violation = |lhs: &[StateIndex], rhs: &[StateIndex]| (0..n).find(|&x| !p.equivalent(lhs[x], rhs[x]));

    if pattern_space <= EXHAUSTIVE_PATTERN_LIMIT {
        let mut checked = 0u64;
        let mut stack = Vec::new();
        match &config.global {
            None => {
                walk(config.max_len, &secret, &post, &start, &start, &mut stack, &mut |l, r, steps| {
                    checked += 1;
                    match violation(l, r) {
                        None => Ok(()),
                        Some(x) => Err(Error::InvariantViolation(format!(
                            "chain {:?} separates state {x}",
                            describe_block(steps, &secret, &post)
                        ))),
                    }
                })?;
            }
            Some(f) => {
                walk(config.max_len, &secret, &post, &start, &start, &mut stack, &mut |l, r, inner_steps| {
                    let l2: Vec<_> = l.iter().map(|&x| f.apply(x)).collect();
                    let r2: Vec<_> = r.iter().map(|&x| f.apply(x)).collect();
                    let inner_names = describe_block(inner_steps, &secret, &post);
                    let mut outer_stack = Vec::new();
                    walk(config.max_len, &secret, &post, &l2, &r2, &mut outer_stack, &mut |l, r, steps| {
                        checked += 1;
                        match violation(l, r) {
                            None => Ok(()),
                            Some(x) => Err(Error::InvariantViolation(format!(
                                "chain {:?} then {} then {:?} separates state {x}",
                                inner_names,
                                f.name(),
                                describe_block(steps, &secret, &post)
                            ))),
                        }
                    })
                })?;
            }
        }
        return Ok(RobustnessReport { holds: true, mode: Mode::Exhaustive, pattern_space, patterns_checked: checked });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sample_block = |lhs: &mut Vec<StateIndex>, rhs: &mut Vec<StateIndex>, names: &mut Vec<String>| {
        let len = rng.gen_range(0..=config.max_len);
        for _ in 0..len {
            let g = &secret[rng.gen_range(0..secret.len())];
            let fb = &post[rng.gen_range(0..post.len())];
            for x in lhs.iter_mut() {
                *x = fb.apply(g.apply(*x));
            }
            for x in rhs.iter_mut() {
                *x = fb.apply(*x);
            }
            names.push(g.name().to_string());
            names.push(fb.name().to_string());
        }
    };
    for _ in 0..config.trials {
        let mut lhs = start.clone();
        let mut rhs = start.clone();
        let mut names = Vec::new();
        sample_block(&mut lhs, &mut rhs, &mut names);
        if let Some(f) = &config.global {
            for x in lhs.iter_mut().chain(rhs.iter_mut()) {
                *x = f.apply(*x);
            }
            names.push(f.name().to_string());
            sample_block(&mut lhs, &mut rhs, &mut names);
        }
        if let Some(x) = violation(&lhs, &rhs) {
            return Err(Error::InvariantViolation(format!("chain {names:?} separates state {x}")));
        }
    }
    Ok(RobustnessReport { holds: true, mode: Mode::Randomized, pattern_space, patterns_checked: config.trials as u64 })
}
