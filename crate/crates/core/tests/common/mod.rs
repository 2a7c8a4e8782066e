#![allow(dead_code)]

use oplocal_core::partition::Partition;
use oplocal_core::secrecy::Agent;
use oplocal_core::state::bits::{flip_bit, set_bit, swap_bits, xor_mask};
use oplocal_core::state::{GeneratedMonoid, Transform};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn not(nbits: u32, pos: u32) -> Transform {
    flip_bit(nbits, pos).unwrap().named(format!("not{pos}"))
}

pub fn monoid(size: usize, gens: Vec<Transform>) -> GeneratedMonoid {
    GeneratedMonoid::new(size, gens).unwrap()
}

pub fn agent(name: &str, perspective: Partition, ops: GeneratedMonoid) -> Agent {
    Agent::new(name, perspective, ops).unwrap()
}

/// Alice flips bit 1, Bob flips and sees bit 2, on three bits.
pub fn threebit() -> (GeneratedMonoid, Agent) {
    let ta = monoid(8, vec![not(3, 1)]);
    let bob = agent("bob", Partition::bits(3, &[2]).unwrap(), monoid(8, vec![not(3, 2)]));
    (ta, bob)
}

pub fn random_transform(rng: &mut impl Rng, n: usize) -> Transform {
    Transform::new((0..n).map(|_| rng.gen_range(0..n)).collect()).unwrap()
}

pub fn random_partition(rng: &mut impl Rng, n: usize) -> Partition {
    let k = rng.gen_range(1..=n);
    Partition::from_keys((0..n).map(|_| rng.gen_range(0..k))).unwrap()
}

/// Random monoid on `n` states with the given number of generators, mixing
/// permutations and arbitrary maps.
pub fn random_monoid(rng: &mut impl Rng, n: usize, ngens: usize) -> GeneratedMonoid {
    let gens = (0..ngens)
        .map(|_| {
            if rng.gen_bool(0.5) {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(rng);
                Transform::new(p).unwrap()
            } else {
                random_transform(rng, n)
            }
        })
        .collect();
    monoid(n, gens)
}

/// Bit operation acting only inside `support` (1-based positions).
fn supported_op(rng: &mut impl Rng, nbits: u32, support: &[u32], allow_set: bool) -> Transform {
    let choice = rng.gen_range(0..if allow_set { 3 } else { 2 });
    if choice == 1 && support.len() >= 2 {
        let mut s = support.to_vec();
        s.shuffle(rng);
        return swap_bits(nbits, s[0], s[1]).unwrap();
    }
    if choice == 2 {
        let pos = *support.choose(rng).unwrap();
        return set_bit(nbits, pos, rng.gen()).unwrap();
    }
    let mut mask = 0;
    while mask == 0 {
        for &p in support {
            if rng.gen() {
                mask |= 1 << (nbits - p);
            }
        }
    }
    xor_mask(nbits, mask).unwrap()
}

/// Two generator sets on `nbits` bits acting on disjoint bit supports, so
/// their generated monoids commute.
pub fn commuting_pair(rng: &mut impl Rng, nbits: u32, allow_set: bool) -> (GeneratedMonoid, GeneratedMonoid) {
    let mut positions: Vec<u32> = (1..=nbits).collect();
    positions.shuffle(rng);
    let split = rng.gen_range(1..nbits as usize);
    let end = rng.gen_range(split + 1..=nbits as usize);
    let (sa, sb) = (&positions[..split], &positions[split..end]);
    let size = 1usize << nbits;
    let ga = (0..rng.gen_range(1..=2)).map(|_| supported_op(rng, nbits, sa, allow_set)).collect();
    let gb = (0..rng.gen_range(1..=2)).map(|_| supported_op(rng, nbits, sb, allow_set)).collect();
    (monoid(size, ga), monoid(size, gb))
}

/// Literal reading of the induced relation: enumerate the monoid, relate
/// states whose images meet, close transitively with Warshall's algorithm.
pub fn literal_induced_oracle(m: &GeneratedMonoid, cap: usize) -> Partition {
    let n = m.size();
    let closure = m.closure(cap).unwrap();
    let images: Vec<Vec<bool>> = (0..n)
        .map(|x| {
            let mut seen = vec![false; n];
            for e in closure.iter() {
                seen[e.apply(x)] = true;
            }
            seen
        })
        .collect();
    let mut rel = vec![vec![false; n]; n];
    for x in 0..n {
        for y in 0..n {
            rel[x][y] = (0..n).any(|z| images[x][z] && images[y][z]);
        }
    }
    for k in 0..n {
        for i in 0..n {
            if rel[i][k] {
                for j in 0..n {
                    if rel[k][j] {
                        rel[i][j] = true;
                    }
                }
            }
        }
    }
    let first: Vec<usize> = (0..n).map(|x| (0..n).find(|&y| rel[x][y]).unwrap()).collect();
    Partition::from_keys(first).unwrap()
}

/// Every partition of `n` states, as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Partition>) {
        if prefix.len() == n {
            out.push(Partition::from_keys(prefix.iter().copied()).unwrap());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for c in 0..=next {
            prefix.push(c);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

/// All-pairs shortest paths by Floyd–Warshall on unit edges.
pub fn floyd_warshall(adj: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = adj.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for &j in &adj[i] {
            d[i][j] = 1.0;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Radius-1 cellular automaton with fixed zero boundaries, given by an
/// elementary rule number (bit `4l + 2c + r` of `rule` is the new cell).
pub fn elementary_ca(ncells: u32, rule: u8) -> Transform {
    let n = ncells as i64;
    let cell = |x: usize, c: i64| -> usize {
        if (0..n).contains(&c) {
            (x >> (n - 1 - c)) & 1
        } else {
            0
        }
    };
    Transform::from_fn(1 << ncells, |x| {
        let mut y = 0;
        for c in 0..n {
            let idx = 4 * cell(x, c - 1) + 2 * cell(x, c) + cell(x, c + 1);
            if (rule >> idx) & 1 == 1 {
                y |= 1 << (n - 1 - c);
            }
        }
        y
    })
    .unwrap()
    .named(format!("rule{rule}"))
}
