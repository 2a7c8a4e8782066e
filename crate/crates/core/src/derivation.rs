//! Constructing agents from transformations alone.
//!
//! The perspective induced by a monoid `T` identifies states that `T` can
//! drive to a common state, closed under transitivity. Two states whose
//! orbits intersect lie in one weakly connected component of the generator
//! graph (edges `{x, g(x)}`), and every edge is itself such an intersection
//! (`g(x) = id(g(x))`), so the transitive closure is exactly the weak
//! component partition. That replaces monoid enumeration with one union-find
//! pass over `|Ω| · |generators|` edges.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{Partition, UnionFind};
use crate::secrecy::{check_extended_secrecy, check_secrecy, is_congruence, Agent, Mode};
use crate::state::{check_commute, compose, GeneratedMonoid, StateIndex, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    WeakComponents,
    FixpointGeneral,
}

#[derive(Debug, Clone, Serialize)]
pub struct InducedPerspective {
    pub partition: Partition,
    /// Generator names of the monoid the perspective is insensitive to.
    pub source_ops: Vec<String>,
    pub method: Method,
}

pub fn induced_perspective(ops: &GeneratedMonoid) -> InducedPerspective {
    let mut uf = UnionFind::new(ops.size());
    for g in ops.generators() {
        for x in 0..ops.size() {
            uf.union(x, g.apply(x));
        }
    }
    InducedPerspective {
        partition: uf.into_partition(),
        source_ops: ops.generator_names(),
        method: Method::WeakComponents,
    }
}

fn require_commute(ta: &GeneratedMonoid, tb: &GeneratedMonoid) -> Result<()> {
    let v = check_commute(ta, tb)?;
    match v.witness {
        None => Ok(()),
        Some(w) => Err(Error::NotCommuting(format!(
            "{} ∘ {} maps state {} to {}, {} ∘ {} maps it to {}",
            w.left, w.right, w.state, w.left_after_right, w.right, w.left, w.right_after_left
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct DerivedAgents {
    /// `(perspective induced by tb, ta)`
    pub alice: Agent,
    /// `(perspective induced by ta, tb)`
    pub bob: Agent,
    pub alice_secret_towards_bob: bool,
    pub bob_secret_towards_alice: bool,
    pub verification_mode: Mode,
}

impl DerivedAgents {
    pub fn mutually_secret(&self) -> bool {
        self.alice_secret_towards_bob && self.bob_secret_towards_alice
    }
}

/// Builds mutually secret agents from two commuting monoids and re-verifies
/// secrecy in both directions.
pub fn derive_secret_agents(ta: &GeneratedMonoid, tb: &GeneratedMonoid, cap: usize) -> Result<DerivedAgents> {
    require_commute(ta, tb)?;
    let alice = Agent::new("alice", induced_perspective(tb).partition, ta.clone())?;
    let bob = Agent::new("bob", induced_perspective(ta).partition, tb.clone())?;
    let a_to_b = check_secrecy(ta, &bob, cap)?;
    let b_to_a = check_secrecy(tb, &alice, cap)?;
    if !(a_to_b.holds && b_to_a.holds) {
        return Err(Error::InvariantViolation("agents derived from commuting monoids are not mutually secret".into()));
    }
    let verification_mode =
        if a_to_b.mode == Mode::Exhaustive || b_to_a.mode == Mode::Exhaustive { Mode::Exhaustive } else { a_to_b.mode };
    Ok(DerivedAgents {
        alice,
        bob,
        alice_secret_towards_bob: a_to_b.holds,
        bob_secret_towards_alice: b_to_a.holds,
        verification_mode,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub minimal: bool,
    pub induced: Partition,
    /// Partition of the induced quotient whose quotient is the agent's own.
    pub factor: Partition,
}

/// Any agent whose operations commute with `ta` and towards whom `ta` is
/// secret sees a coarse-graining of the perspective induced by `ta`.
pub fn check_minimality(b: &Agent, ta: &GeneratedMonoid, cap: usize) -> Result<MinimalityReport> {
    if !check_secrecy(ta, b, cap)?.holds {
        return Err(Error::PreconditionFailed(format!("operations are not secret towards {}", b.name)));
    }
    if !check_commute(ta, &b.ops)?.commute {
        return Err(Error::PreconditionFailed(format!("operations do not commute with those of {}", b.name)));
    }
    let induced = induced_perspective(ta).partition;
    if !induced.refines(&b.perspective)? {
        return Err(Error::InvariantViolation(format!(
            "induced perspective does not refine the perspective of {}",
            b.name
        )));
    }
    let factor = induced.factor(&b.perspective)?;
    Ok(MinimalityReport { minimal: true, induced, factor })
}

/// The perspective induced by `ta` is preserved by every commuting `tb`.
pub fn check_operationality(ta: &GeneratedMonoid, tb: &GeneratedMonoid) -> Result<bool> {
    require_commute(ta, tb)?;
    let induced = induced_perspective(ta).partition;
    if !is_congruence(&induced, tb) {
        return Err(Error::InvariantViolation("induced perspective is not preserved by commuting operations".into()));
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerceivedWitness {
    pub left: String,
    pub right: String,
    pub state: StateIndex,
    pub class_left_after_right: usize,
    pub class_right_after_left: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerceivedCommutation {
    pub commute: bool,
    pub mode: Mode,
    pub witness: Option<PerceivedWitness>,
}

fn first_perceived_violation(left: &[Transform], right: &[Transform], p: &Partition) -> Option<PerceivedWitness> {
    for f in left {
        for g in right {
            for x in 0..p.len() {
                let lr = p.class(f.apply(g.apply(x)));
                let rl = p.class(g.apply(f.apply(x)));
                if lr != rl {
                    return Some(PerceivedWitness {
                        left: f.name().into(),
                        right: g.name().into(),
                        state: x,
                        class_left_after_right: lr,
                        class_right_after_left: rl,
                    });
                }
            }
        }
    }
    None
}

/// Whether the two monoids commute as seen through `p`:
/// `[f ∘ g (x)] = [g ∘ f (x)]` for all elements and states.
///
/// Generators decide the question when `p` is a congruence for both monoids
/// (both then act on the quotient); otherwise the closures are enumerated.
pub fn perceived_commutation(
    ta: &GeneratedMonoid,
    tb: &GeneratedMonoid,
    p: &Partition,
    cap: usize,
) -> Result<PerceivedCommutation> {
    if ta.size() != tb.size() {
        return Err(Error::size(ta.size(), tb.size()));
    }
    if p.len() != ta.size() {
        return Err(Error::size(ta.size(), p.len()));
    }
    if let Some(w) = first_perceived_violation(ta.generators(), tb.generators(), p) {
        return Ok(PerceivedCommutation { commute: false, mode: Mode::Generators, witness: Some(w) });
    }
    if is_congruence(p, ta) && is_congruence(p, tb) {
        return Ok(PerceivedCommutation { commute: true, mode: Mode::GeneratorCongruence, witness: None });
    }
    let ca = ta.closure(cap)?;
    let cb = tb.closure(cap)?;
    let witness = first_perceived_violation(ca.elements(), cb.elements(), p);
    Ok(PerceivedCommutation { commute: witness.is_none(), mode: Mode::Exhaustive, witness })
}

/// Builds the relation towards which `secret_ops` is secret in the presence
/// of `f`, without assuming commutation.
///
/// The base relation relates states whose orbits under `secret_ops`
/// intersect. It is pushed forward once through every element `b` of `tb`
/// (and, when `f` is given, through every `b ∘ f ∘ b'`), and the result is
/// closed transitively. The construction is not iterated to a fixpoint; the
/// result is re-checked against extended secrecy and a failure is reported
/// as an invariant violation.
pub fn derive_secret_general(
    secret_ops: &GeneratedMonoid,
    tb: &GeneratedMonoid,
    f: Option<&Transform>,
    cap: usize,
) -> Result<InducedPerspective> {
    let n = secret_ops.size();
    if tb.size() != n {
        return Err(Error::size(n, tb.size()));
    }
    if let Some(f) = f {
        if f.len() != n {
            return Err(Error::size(n, f.len()));
        }
    }
    let closure = tb.closure(cap)?;

    // States related by the base relation share a common reachable state z;
    // for each z, linking every preimage to one representative is enough
    // since only the transitive closure is kept.
    let mut reached_from: Vec<Vec<StateIndex>> = vec![Vec::new(); n];
    for x in 0..n {
        for z in secret_ops.orbit(x)? {
            reached_from[z].push(x);
        }
    }

    let mut pushes: Vec<Transform> = closure.elements().to_vec();
    if let Some(f) = f {
        let mut seen: std::collections::HashSet<Transform> = pushes.iter().cloned().collect();
        for outer in closure.elements() {
            let outer_f = compose(outer, f)?;
            for inner in closure.elements() {
                let h = compose(&outer_f, inner)?;
                if seen.insert(h.clone()) {
                    pushes.push(h);
                }
            }
        }
    }

    let mut uf = UnionFind::new(n);
    for group in reached_from.iter().filter(|g| g.len() > 1) {
        let rep = group[0];
        for &x in &group[1..] {
            for h in &pushes {
                uf.union(h.apply(x), h.apply(rep));
            }
        }
    }
    let partition = uf.into_partition();

    let result_agent = Agent::new("derived", partition.clone(), tb.clone())?;
    let id = Transform::identity(n);
    let verdict = check_extended_secrecy(secret_ops, &result_agent, f.unwrap_or(&id), cap)?;
    if !verdict.holds {
        let w = verdict.witness.map(|w| w.chain_names()).unwrap_or_default();
        return Err(Error::InvariantViolation(format!(
            "constructed relation is not secret in the presence of the global map; chain {w:?}"
        )));
    }
    Ok(InducedPerspective { partition, source_ops: secret_ops.generator_names(), method: Method::FixpointGeneral })
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// DOT rendering of the generator graph, nodes filled by partition class.
pub fn generator_graph_dot(ops: &GeneratedMonoid, p: &Partition, labels: &dyn Fn(StateIndex) -> String) -> String {
    let mut out = String::from("digraph generators {\n  node [style=filled, fontcolor=white];\n");
    for x in 0..ops.size() {
        let color = PALETTE[p.class(x) % PALETTE.len()];
        let _ = writeln!(out, "  s{x} [label=\"{}\", fillcolor=\"{color}\"];", labels(x));
    }
    for g in ops.generators() {
        for x in 0..ops.size() {
            let y = g.apply(x);
            if x != y {
                let _ = writeln!(out, "  s{x} -> s{y} [label=\"{}\"];", g.name());
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::bits::{flip_bit, sequence, set_bit, swap_bits, xor_mask};
    use crate::DEFAULT_CAP;

    fn gm(gens: Vec<Transform>) -> GeneratedMonoid {
        GeneratedMonoid::new(8, gens).unwrap()
    }

    fn not(pos: u32) -> Transform {
        flip_bit(3, pos).unwrap().named(format!("not{pos}"))
    }

    fn pair_a() -> Transform {
        sequence(3, &[xor_mask(3, 4).unwrap(), set_bit(3, 3, false).unwrap()]).unwrap().named("a")
    }

    fn pair_b() -> Transform {
        sequence(3, &[xor_mask(3, 2).unwrap(), xor_mask(3, 1).unwrap()]).unwrap().named("b")
    }

    #[test]
    fn induced_perspective_examples() {
        let p = induced_perspective(&gm(vec![not(3)])).partition;
        assert_eq!(p.classes(), vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
        assert!(induced_perspective(&GeneratedMonoid::trivial(8)).partition.is_discrete());
        let constant = Transform::new(vec![0; 8]).unwrap();
        assert!(induced_perspective(&gm(vec![constant])).partition.is_trivial());
    }

    #[test]
    fn derive_from_xor_flips() {
        let d = derive_secret_agents(&gm(vec![not(1)]), &gm(vec![not(2)]), DEFAULT_CAP).unwrap();
        assert!(d.mutually_secret());
        assert!((0..8).all(|x| d.alice.perspective.equivalent(x, x ^ 2)));
        assert!((0..8).all(|x| d.bob.perspective.equivalent(x, x ^ 4)));
        assert_eq!(d.alice.perspective.num_classes(), 4);

        let t = GeneratedMonoid::trivial(8);
        let d = derive_secret_agents(&t, &t, DEFAULT_CAP).unwrap();
        assert!(d.alice.perspective.is_discrete() && d.bob.perspective.is_discrete());

        assert!(matches!(
            derive_secret_agents(&gm(vec![pair_a()]), &gm(vec![pair_b()]), DEFAULT_CAP),
            Err(Error::NotCommuting(_))
        ));
    }

    #[test]
    fn minimality_examples() {
        let ta = gm(vec![not(3)]);
        let b = Agent::new("b", Partition::bits(3, &[1]).unwrap(), gm(vec![not(1)])).unwrap();
        let r = check_minimality(&b, &ta, DEFAULT_CAP).unwrap();
        assert!(r.minimal);
        assert_eq!(r.factor.num_classes(), 2);
        assert_eq!(r.factor.len(), 4);

        let own = Agent::new("own", induced_perspective(&ta).partition, gm(vec![not(1)])).unwrap();
        let r = check_minimality(&own, &ta, DEFAULT_CAP).unwrap();
        assert!(r.factor.is_discrete());

        let fine = Agent::new("fine", Partition::discrete(8), GeneratedMonoid::trivial(8)).unwrap();
        assert!(matches!(check_minimality(&fine, &ta, DEFAULT_CAP), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn operationality_examples() {
        assert!(check_operationality(&gm(vec![not(3)]), &gm(vec![not(1), not(2)])).unwrap());
        assert!(check_operationality(&GeneratedMonoid::trivial(8), &gm(vec![pair_a()])).unwrap());
        assert!(check_operationality(&gm(vec![not(3)]), &gm(vec![pair_b()])).unwrap());
    }

    #[test]
    fn perceived_commutation_examples() {
        let (ta, tb) = (gm(vec![pair_a()]), gm(vec![pair_b()]));
        let v = perceived_commutation(&ta, &tb, &Partition::bits(3, &[1, 2]).unwrap(), DEFAULT_CAP).unwrap();
        assert!(v.commute);
        let v = perceived_commutation(&ta, &tb, &Partition::discrete(8), DEFAULT_CAP).unwrap();
        assert!(!v.commute);
        assert_eq!(v.witness.unwrap().state, 0);
        let v = perceived_commutation(&ta, &tb, &Partition::trivial(8), DEFAULT_CAP).unwrap();
        assert!(v.commute);
    }

    #[test]
    fn general_construction_examples() {
        let (ta, tb) = (gm(vec![not(1)]), gm(vec![not(2)]));
        let g = derive_secret_general(&ta, &tb, None, DEFAULT_CAP).unwrap();
        assert_eq!(g.partition, induced_perspective(&ta).partition);
        assert_eq!(g.method, Method::FixpointGeneral);

        let g = derive_secret_general(&GeneratedMonoid::trivial(8), &gm(vec![pair_a()]), Some(&not(3)), DEFAULT_CAP)
            .unwrap();
        assert!(g.partition.is_discrete());

        let swap = gm(vec![swap_bits(3, 1, 2).unwrap()]);
        let g = derive_secret_general(&ta, &swap, None, DEFAULT_CAP).unwrap();
        let induced = induced_perspective(&ta).partition;
        assert!(induced.refines(&g.partition).unwrap());
        assert!(g.partition.num_classes() < induced.num_classes());
        assert_eq!(g.partition, Partition::bits(3, &[3]).unwrap());
    }

    #[test]
    fn dot_output_lists_edges() {
        let ops = gm(vec![not(3)]);
        let p = induced_perspective(&ops).partition;
        let dot = generator_graph_dot(&ops, &p, &|x| crate::state::bits::bit_string(x, 3));
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("s0 -> s1 [label=\"not3\"]"));
        assert!(dot.contains("label=\"101\""));
    }
}
