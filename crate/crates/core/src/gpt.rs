//! Finite generalized probabilistic theories: distributions over outcomes,
//! column-stochastic channels, event coarse-grainings, and the secrecy and
//! non-signalling conditions for boxes.
//!
//! Two-bit boxes use row-major indexing with the first bit belonging to
//! Alice: input `(a, b)` is column `2a + b`, output `(x, y)` is row `2x + y`.
//! All stochasticity and equality checks use the absolute tolerance [`TOL`];
//! approximate secrecy measures distance between coarse-grained
//! distributions in total variation.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::state::{GeneratedMonoid, Transform};

pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dist {
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcome_labels: Option<Vec<String>>,
}

impl Dist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let d = Dist { probs, outcome_labels: None };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        if self.probs.is_empty() {
            return Err(Error::InvalidDist("no outcomes".into()));
        }
        if let Some(p) = self.probs.iter().find(|p| !p.is_finite() || **p < -TOL) {
            return Err(Error::InvalidDist(format!("entry {p} is not a probability")));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > TOL {
            return Err(Error::InvalidDist(format!("entries sum to {sum}")));
        }
        if let Some(labels) = &self.outcome_labels {
            if labels.len() != self.probs.len() {
                return Err(Error::size(self.probs.len(), labels.len()));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Dist = serde_json::from_str(s).map_err(|e| Error::InvalidDist(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        self.outcome_labels = Some(labels);
        self.validate()?;
        Ok(self)
    }

    pub fn point(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, size: n });
        }
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Ok(Dist { probs, outcome_labels: None })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDist("no outcomes".into()));
        }
        Ok(Dist { probs: vec![1.0 / n as f64; n], outcome_labels: None })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn tv_distance(&self, other: &Dist) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::size(self.len(), other.len()));
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(p, q)| (p - q).abs()).sum::<f64>())
    }

    fn key(&self) -> Vec<i64> {
        self.probs.iter().map(|p| (p / TOL).round() as i64).collect()
    }
}

/// Conditional distribution `P(z|x)`: rows are outputs, columns inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    matrix: Vec<Vec<f64>>,
    name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChannelJson {
    inputs: usize,
    outputs: usize,
    matrix: Vec<Vec<f64>>,
}

impl Channel {
    /// `matrix[z][x] = P(z|x)`.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let outputs = matrix.len();
        if outputs == 0 {
            return Err(Error::InvalidChannel("no outputs".into()));
        }
        let inputs = matrix[0].len();
        if inputs == 0 {
            return Err(Error::InvalidChannel("no inputs".into()));
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != inputs) {
            return Err(Error::size(inputs, row.len()));
        }
        for (z, row) in matrix.iter().enumerate() {
            for (x, &p) in row.iter().enumerate() {
                if !p.is_finite() || !(-TOL..=1.0 + TOL).contains(&p) {
                    return Err(Error::InvalidChannel(format!("entry ({z},{x}) = {p}")));
                }
            }
        }
        for x in 0..inputs {
            let s: f64 = matrix.iter().map(|r| r[x]).sum();
            if (s - 1.0).abs() > TOL {
                return Err(Error::InvalidChannel(format!("column {x} sums to {s}")));
            }
        }
        Ok(Channel { inputs, outputs, matrix, name: None })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ChannelJson = serde_json::from_str(s).map_err(|e| Error::InvalidChannel(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_value(v: &serde_json::Value) -> Result<Self> {
        let raw: ChannelJson = serde_json::from_value(v.clone()).map_err(|e| Error::InvalidChannel(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: ChannelJson) -> Result<Self> {
        if raw.matrix.len() != raw.outputs {
            return Err(Error::size(raw.outputs, raw.matrix.len()));
        }
        let c = Channel::new(raw.matrix)?;
        if c.inputs != raw.inputs {
            return Err(Error::size(raw.inputs, c.inputs));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "inputs": self.inputs, "outputs": self.outputs, "matrix": self.matrix })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("<channel>")
    }

    pub fn identity(n: usize) -> Self {
        Self::deterministic(n, n, |x| x).named("id")
    }

    /// `P(z|x) = [z = f(x)]`.
    pub fn deterministic(inputs: usize, outputs: usize, f: impl Fn(usize) -> usize) -> Self {
        let mut matrix = vec![vec![0.0; inputs]; outputs];
        for x in 0..inputs {
            matrix[f(x)][x] = 1.0;
        }
        Channel { inputs, outputs, matrix, name: None }
    }

    /// Every input mapped to `d`.
    pub fn constant(inputs: usize, d: &Dist) -> Self {
        let matrix = d.probs.iter().map(|&p| vec![p; inputs]).collect();
        Channel { inputs, outputs: d.len(), matrix, name: None }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn entry(&self, z: usize, x: usize) -> f64 {
        self.matrix[z][x]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    /// `P'(z) = Σ_x P(z|x) P(x)`.
    pub fn apply(&self, p: &Dist) -> Result<Dist> {
        if p.len() != self.inputs {
            return Err(Error::size(self.inputs, p.len()));
        }
        let probs = self.matrix.iter().map(|row| row.iter().zip(&p.probs).map(|(a, b)| a * b).sum()).collect();
        Ok(Dist { probs, outcome_labels: None })
    }

    /// `self ∘ inner`: `inner` acts first.
    pub fn after(&self, inner: &Channel) -> Result<Channel> {
        if inner.outputs != self.inputs {
            return Err(Error::size(self.inputs, inner.outputs));
        }
        let matrix = (0..self.outputs)
            .map(|z| {
                (0..inner.inputs)
                    .map(|x| (0..self.inputs).map(|y| self.matrix[z][y] * inner.matrix[y][x]).sum())
                    .collect()
            })
            .collect();
        Ok(Channel { inputs: inner.inputs, outputs: self.outputs, matrix, name: None })
    }

    /// Convex combination of channels with equal shapes.
    pub fn mixture(parts: &[(f64, &Channel)]) -> Result<Channel> {
        let (_, first) = parts.first().ok_or_else(|| Error::InvalidChannel("empty mixture".into()))?;
        let mut matrix = vec![vec![0.0; first.inputs]; first.outputs];
        for (w, c) in parts {
            if c.inputs != first.inputs || c.outputs != first.outputs {
                return Err(Error::size(first.inputs * first.outputs, c.inputs * c.outputs));
            }
            for (row, crow) in matrix.iter_mut().zip(&c.matrix) {
                for (m, v) in row.iter_mut().zip(crow) {
                    *m += w * v;
                }
            }
        }
        Channel::new(matrix)
    }
}

/// Grouping of outcomes into events.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPartition(pub Partition);

impl EventPartition {
    pub fn new(p: Partition) -> Self {
        EventPartition(p)
    }

    /// `P_B(b) = Σ_{x ∈ B_b} P(x)`.
    pub fn coarse_grain(&self, p: &Dist) -> Result<Dist> {
        if p.len() != self.0.len() {
            return Err(Error::size(self.0.len(), p.len()));
        }
        let mut probs = vec![0.0; self.0.num_classes()];
        for (x, &q) in p.probs.iter().enumerate() {
            probs[self.0.class(x)] += q;
        }
        Ok(Dist { probs, outcome_labels: None })
    }

    /// Events given by the first bit of a two-bit outcome.
    pub fn first_bit() -> Self {
        EventPartition(Partition::bits(2, &[1]).expect("two-bit layout"))
    }

    /// Events given by the second bit of a two-bit outcome.
    pub fn second_bit() -> Self {
        EventPartition(Partition::bits(2, &[2]).expect("two-bit layout"))
    }
}

#[inline]
fn idx(first: usize, second: usize) -> usize {
    2 * first + second
}

fn two_bit_box(p: impl Fn(usize, usize, usize, usize) -> f64) -> Channel {
    let mut matrix = vec![vec![0.0; 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    matrix[idx(x, y)][idx(a, b)] = p(a, b, x, y);
                }
            }
        }
    }
    Channel { inputs: 4, outputs: 4, matrix, name: None }
}

/// `P(xy|ab) = ½ [x ⊕ y = a·b]`.
pub fn pr_box() -> Channel {
    two_bit_box(|a, b, x, y| if x ^ y == a & b { 0.5 } else { 0.0 }).named("pr_box")
}

/// `P(xy|ab) = δ(x,b) δ(y,a)`.
pub fn swap_box() -> Channel {
    two_bit_box(|a, b, x, y| f64::from(u8::from(x == b && y == a))).named("swap")
}

/// `x = a`, `y = a ⊕ b`.
pub fn xor_leak_box() -> Channel {
    two_bit_box(|a, b, x, y| f64::from(u8::from(x == a && y == a ^ b))).named("xor_leak")
}

/// Independent coins: `P(xy|ab) = p(x) q(y)` with `P(x=1) = px`, `P(y=1) = py`.
pub fn local_coins(px: f64, py: f64) -> Channel {
    let coin = |p: f64, v: usize| if v == 1 { p } else { 1.0 - p };
    two_bit_box(move |_, _, x, y| coin(px, x) * coin(py, y)).named("local_coins")
}

/// `x = fa[a]`, `y = fb[b]`.
pub fn local_deterministic(fa: [usize; 2], fb: [usize; 2]) -> Channel {
    two_bit_box(move |a, b, x, y| f64::from(u8::from(x == fa[a] && y == fb[b]))).named("local_deterministic")
}

/// Named box fixtures.
pub fn fixture(name: &str) -> Option<Channel> {
    match name {
        "pr_box" => Some(pr_box()),
        "swap" => Some(swap_box()),
        "xor_leak" => Some(xor_leak_box()),
        "local_coins" => Some(local_coins(0.5, 0.5)),
        "identity" => Some(Channel::identity(4)),
        _ => None,
    }
}

pub const FIXTURE_NAMES: [&str; 5] = ["pr_box", "swap", "xor_leak", "local_coins", "identity"];

pub fn set_first(v: usize) -> Channel {
    Channel::deterministic(4, 4, move |i| idx(v, i & 1)).named(format!("set_first:{v}"))
}

pub fn set_second(v: usize) -> Channel {
    Channel::deterministic(4, 4, move |i| idx(i >> 1, v)).named(format!("set_second:{v}"))
}

pub fn flip_first() -> Channel {
    Channel::deterministic(4, 4, |i| i ^ 2).named("flip_first")
}

pub fn flip_second() -> Channel {
    Channel::deterministic(4, 4, |i| i ^ 1).named("flip_second")
}

/// Alice choosing her input: `P(a',b'|a,b) = δ(a',v) δ(b',b)`.
pub fn alice_input_settings() -> Vec<Channel> {
    vec![set_first(0), set_first(1)]
}

pub fn bob_input_settings() -> Vec<Channel> {
    vec![set_second(0), set_second(1)]
}

/// Bob's local post-processing, acting on the second bit only.
pub fn bob_local_posts() -> Vec<Channel> {
    vec![Channel::identity(4), set_second(0), set_second(1), flip_second()]
}

pub fn alice_local_posts() -> Vec<Channel> {
    vec![Channel::identity(4), set_first(0), set_first(1), flip_first()]
}

pub fn point_masses(n: usize) -> Vec<Dist> {
    (0..n).map(|i| Dist::point(n, i).expect("index in range")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GptWitness {
    pub alice_action: String,
    pub inner_post: String,
    pub outer_post: String,
    pub state: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GptVerdict {
    pub holds: bool,
    pub eps: f64,
    pub max_distance: f64,
    pub witness: Option<GptWitness>,
}

/// Extended secrecy for channels: for every state, Alice action `g`, and Bob
/// channels `b`, `b'`, the events of `b·f·b'·g·P` and `b·f·b'·P` are within
/// `eps` in total variation (plus [`TOL`] slack).
pub fn check_gpt_extended_secrecy(
    alice_actions: &[Channel],
    bob_posts: &[Channel],
    f: &Channel,
    bob_events: &EventPartition,
    states: &[Dist],
    eps: f64,
) -> Result<GptVerdict> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::PreconditionFailed(format!("eps must be nonnegative, got {eps}")));
    }
    let id;
    let posts: &[Channel] = if bob_posts.is_empty() {
        id = [Channel::identity(f.inputs)];
        &id
    } else {
        bob_posts
    };
    let mut max_distance: f64 = 0.0;
    let mut witness: Option<GptWitness> = None;
    for outer in posts {
        let outer_f = outer.after(f)?;
        for inner in posts {
            let tail = outer_f.after(inner)?;
            for (si, p) in states.iter().enumerate() {
                let reference = bob_events.coarse_grain(&tail.apply(p)?)?;
                for g in alice_actions {
                    let moved = bob_events.coarse_grain(&tail.apply(&g.apply(p)?)?)?;
                    let d = moved.tv_distance(&reference)?;
                    if d > max_distance {
                        max_distance = d;
                        if d > eps + TOL {
                            witness = Some(GptWitness {
                                alice_action: g.name().into(),
                                inner_post: inner.name().into(),
                                outer_post: outer.name().into(),
                                state: si,
                                distance: d,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(GptVerdict { holds: max_distance <= eps + TOL, eps, max_distance, witness })
}

fn require_two_bit(b: &Channel) -> Result<()> {
    if b.inputs != 4 || b.outputs != 4 {
        return Err(Error::LayoutError(format!(
            "expected a 4×4 two-bit box, got {} inputs and {} outputs",
            b.inputs, b.outputs
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct NsReport {
    /// `P(y|a,b)` does not depend on `a`.
    pub bob_marginal_independent: bool,
    /// `P(x|a,b)` does not depend on `b`.
    pub alice_marginal_independent: bool,
    pub holds: bool,
}

/// Marginal non-signalling conditions in both directions.
pub fn check_traditional_ns(b: &Channel) -> Result<NsReport> {
    require_two_bit(b)?;
    let marginal_y = |a: usize, bb: usize, y: usize| (0..2).map(|x| b.entry(idx(x, y), idx(a, bb))).sum::<f64>();
    let marginal_x = |a: usize, bb: usize, x: usize| (0..2).map(|y| b.entry(idx(x, y), idx(a, bb))).sum::<f64>();
    let mut bob_ok = true;
    let mut alice_ok = true;
    for s in 0..2 {
        for v in 0..2 {
            bob_ok &= (marginal_y(0, s, v) - marginal_y(1, s, v)).abs() <= TOL;
            alice_ok &= (marginal_x(s, 0, v) - marginal_x(s, 1, v)).abs() <= TOL;
        }
    }
    Ok(NsReport { bob_marginal_independent: bob_ok, alice_marginal_independent: alice_ok, holds: bob_ok && alice_ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PostProcessing {
    /// Post-processing acts on the observer's own bit only.
    #[default]
    Local,
    /// Adds non-local post-processing (copy and swap of the two bits); no
    /// equivalence with the marginal conditions is claimed in this mode.
    Unrestricted,
}

fn posts_for(second: bool, mode: PostProcessing) -> Vec<Channel> {
    let mut posts = if second { bob_local_posts() } else { alice_local_posts() };
    if mode == PostProcessing::Unrestricted {
        if second {
            posts.push(Channel::deterministic(4, 4, |i| idx(i >> 1, i >> 1)).named("copy_first"));
        } else {
            posts.push(Channel::deterministic(4, 4, |i| idx(i & 1, i & 1)).named("copy_second"));
        }
        posts.push(Channel::deterministic(4, 4, |i| idx(i & 1, i >> 1)).named("swap_bits"));
    }
    posts
}

#[derive(Debug, Clone, Serialize)]
pub struct SecrecyNs {
    pub alice_to_bob: GptVerdict,
    pub bob_to_alice: GptVerdict,
    pub holds: bool,
}

/// Non-signalling as mutual extended secrecy: input-setting actions on one
/// side, post-processing on the other, point-mass input states.
pub fn check_secrecy_ns(b: &Channel, mode: PostProcessing) -> Result<SecrecyNs> {
    require_two_bit(b)?;
    let states = point_masses(4);
    let alice_to_bob = check_gpt_extended_secrecy(
        &alice_input_settings(),
        &posts_for(true, mode),
        b,
        &EventPartition::second_bit(),
        &states,
        0.0,
    )?;
    let bob_to_alice = check_gpt_extended_secrecy(
        &bob_input_settings(),
        &posts_for(false, mode),
        b,
        &EventPartition::first_bit(),
        &states,
        0.0,
    )?;
    let holds = alice_to_bob.holds && bob_to_alice.holds;
    Ok(SecrecyNs { alice_to_bob, bob_to_alice, holds })
}

/// Random mixture of PR, swap, product and local deterministic boxes.
pub fn random_box(rng: &mut impl Rng) -> Channel {
    let count = rng.gen_range(1..=3);
    let parts: Vec<(f64, Channel)> = (0..count)
        .map(|_| {
            let c = match rng.gen_range(0..4) {
                0 => pr_box(),
                1 => swap_box(),
                2 => local_coins(rng.gen(), rng.gen()),
                _ => local_deterministic(
                    [rng.gen_range(0..2), rng.gen_range(0..2)],
                    [rng.gen_range(0..2), rng.gen_range(0..2)],
                ),
            };
            (rng.gen_range(0.05..1.0), c)
        })
        .collect();
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    let weighted: Vec<(f64, &Channel)> = parts.iter().map(|(w, c)| (w / total, c)).collect();
    let names: Vec<&str> = parts.iter().map(|(_, c)| c.name()).collect();
    Channel::mixture(&weighted).expect("mixture of valid boxes").named(format!("mix[{}]", names.join("+")))
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceSample {
    pub label: String,
    pub traditional: bool,
    pub secrecy: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub samples: usize,
    pub agreements: usize,
    pub mode: PostProcessing,
    pub disagreements: Vec<EquivalenceSample>,
    pub named: Vec<EquivalenceSample>,
}

/// Compares the marginal non-signalling conditions with mutual extended
/// secrecy on the given box, the named fixtures, and `trials` seeded random
/// boxes. With local post-processing any disagreement is an invariant
/// violation.
pub fn check_ns_equivalence(
    b: Option<&Channel>,
    trials: usize,
    seed: u64,
    mode: PostProcessing,
) -> Result<EquivalenceReport> {
    let mut boxes: Vec<Channel> = Vec::new();
    if let Some(b) = b {
        boxes.push(b.clone());
    }
    boxes.extend(["pr_box", "swap", "xor_leak", "local_coins"].iter().filter_map(|n| fixture(n)));
    let named_count = boxes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    boxes.extend((0..trials).map(|_| random_box(&mut rng)));

    let mut report =
        EquivalenceReport { samples: 0, agreements: 0, mode, disagreements: Vec::new(), named: Vec::new() };
    for (i, bx) in boxes.iter().enumerate() {
        let traditional = check_traditional_ns(bx)?.holds;
        let secrecy = check_secrecy_ns(bx, mode)?.holds;
        let sample = EquivalenceSample { label: format!("{}#{i}", bx.name()), traditional, secrecy };
        report.samples += 1;
        if traditional == secrecy {
            report.agreements += 1;
        } else {
            report.disagreements.push(sample.clone());
        }
        if i < named_count {
            report.named.push(sample);
        }
    }
    if mode == PostProcessing::Local && !report.disagreements.is_empty() {
        let labels: Vec<_> = report.disagreements.iter().map(|s| s.label.clone()).collect();
        return Err(Error::InvariantViolation(format!("conditions disagree on {labels:?}")));
    }
    Ok(report)
}

/// Finite transformation structure generated by square channels acting on
/// distributions: the states are all distributions reachable from the seeds.
///
/// Channels in `single_use` model resources that can be consumed once (a
/// shared box, say). Each state carries the set of consumed resources; a
/// consumed resource acts as the identity. Repeated use of a box like the PR
/// box would otherwise generate infinitely many distributions.
#[derive(Debug, Clone)]
pub struct DiscreteEmbedding {
    pub states: Vec<Dist>,
    /// Bitmask of consumed single-use resources, per state.
    pub consumed: Vec<u32>,
    /// Reusable channels first, then single-use resources, in input order.
    pub transforms: Vec<Transform>,
}

pub fn embed_discrete(
    seeds: &[Dist],
    channels: &[Channel],
    single_use: &[Channel],
    cap: usize,
) -> Result<DiscreteEmbedding> {
    let n = seeds.first().map(Dist::len).ok_or_else(|| Error::InvalidDist("no seed states".into()))?;
    if single_use.len() > 32 {
        return Err(Error::PreconditionFailed("at most 32 single-use resources".into()));
    }
    let all: Vec<&Channel> = channels.iter().chain(single_use).collect();
    if let Some(c) = all.iter().find(|c| c.inputs != n || c.outputs != n) {
        return Err(Error::size(n, c.inputs.max(c.outputs)));
    }
    let mut index: HashMap<(Vec<i64>, u32), usize> = HashMap::new();
    let mut states: Vec<Dist> = Vec::new();
    let mut consumed: Vec<u32> = Vec::new();
    for s in seeds {
        if s.len() != n {
            return Err(Error::size(n, s.len()));
        }
        if let std::collections::hash_map::Entry::Vacant(e) = index.entry((s.key(), 0)) {
            e.insert(states.len());
            states.push(s.clone());
            consumed.push(0);
        }
    }
    let mut tables: Vec<Vec<usize>> = vec![Vec::new(); all.len()];
    let mut next = 0;
    while next < states.len() {
        for (ci, c) in all.iter().enumerate() {
            let mask = consumed[next];
            let (image, mask) = match ci.checked_sub(channels.len()) {
                None => (c.apply(&states[next])?, mask),
                Some(r) if mask & (1 << r) != 0 => (states[next].clone(), mask),
                Some(r) => (c.apply(&states[next])?, mask | (1 << r)),
            };
            let key = (image.key(), mask);
            let target = match index.get(&key) {
                Some(&t) => t,
                None => {
                    if states.len() >= cap {
                        return Err(Error::CapExceeded(states.len() + 1));
                    }
                    index.insert(key, states.len());
                    states.push(image);
                    consumed.push(mask);
                    states.len() - 1
                }
            };
            tables[ci].push(target);
        }
        next += 1;
    }
    let transforms = tables
        .into_iter()
        .zip(all)
        .map(|(t, c)| Transform::new(t).map(|t| t.named(c.name())))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteEmbedding { states, consumed, transforms })
}

impl DiscreteEmbedding {
    pub fn size(&self) -> usize {
        self.states.len()
    }

    /// Distributions are equivalent when their coarse-grainings agree; the
    /// consumed flags are not observable.
    pub fn perspective(&self, events: &EventPartition) -> Result<Partition> {
        let keys = self.states.iter().map(|s| events.coarse_grain(s).map(|d| d.key())).collect::<Result<Vec<_>>>()?;
        Partition::from_keys(keys)
    }

    pub fn transform(&self, i: usize) -> Result<&Transform> {
        self.transforms.get(i).ok_or(Error::IndexOutOfRange { index: i, size: self.transforms.len() })
    }

    pub fn monoid(&self, transform_indices: &[usize]) -> Result<GeneratedMonoid> {
        let gens = transform_indices.iter().map(|&i| self.transform(i).cloned()).collect::<Result<Vec<_>>>()?;
        GeneratedMonoid::new(self.size(), gens)
    }
}
