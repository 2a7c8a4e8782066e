//! Distances from signalling and position reconstruction.
//!
//! Two agents are at distance `speed · T` when `T` is the first tick of a
//! global dynamics at which one of them stops being secret towards the other.
//! Hop counts on a signalling graph give a coarser distance. Either kind of
//! matrix can be embedded in Euclidean space by classical MDS or by stress
//! majorization (SMACOF) and scored against known positions with Procrustes
//! alignment.

use std::collections::VecDeque;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::secrecy::{check_extended_secrecy, Agent};
use crate::state::bits::flip_cell;
use crate::state::{GeneratedMonoid, Transform};

pub const TOL: f64 = 1e-9;
pub const SMACOF_MAX_ITERS: usize = 500;
pub const SMACOF_REL_TOL: f64 = 1e-9;

/// Global time evolution `u_t = step^t`.
#[derive(Debug, Clone)]
pub struct DynamicsFamily {
    pub step: Transform,
}

impl DynamicsFamily {
    pub fn new(step: Transform) -> Self {
        DynamicsFamily { step }
    }

    pub fn at(&self, t: usize) -> Transform {
        self.step.power(t)
    }
}

/// Smallest `t ≤ t_max` at which extended secrecy of `a_ops` towards `b` in
/// the presence of `u_t` fails.
pub fn first_signalling_time(
    a_ops: &GeneratedMonoid,
    b: &Agent,
    dynamics: &DynamicsFamily,
    t_max: usize,
    cap: usize,
) -> Result<Option<usize>> {
    if dynamics.step.len() != b.size() {
        return Err(Error::size(b.size(), dynamics.step.len()));
    }
    let mut u = Transform::identity(b.size());
    for t in 0..=t_max {
        if t > 0 {
            u = dynamics.step.after(&u)?.named(format!("{}^{t}", dynamics.step.name()));
        }
        if !check_extended_secrecy(a_ops, b, &u, cap)?.holds {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Agent sitting at one cell of a line of bits: it can flip its cell and
/// sees only that cell's value.
pub fn cell_agent(ncells: u32, cell: u32) -> Result<Agent> {
    let ops = GeneratedMonoid::new(1 << ncells, vec![flip_cell(ncells, cell)?])?;
    let perspective = Partition::bits(ncells, &[cell + 1])?;
    Agent::new(format!("cell{cell}"), perspective, ops)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Asymmetry {
    pub i: usize,
    pub j: usize,
    pub forward: Option<usize>,
    pub backward: Option<usize>,
}

/// Symmetric matrix with zero diagonal; `+∞` marks pairs that never signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    #[serde(serialize_with = "serialize_distances")]
    d: Vec<Vec<f64>>,
    pub asymmetries: Vec<Asymmetry>,
}

fn serialize_distances<S: serde::Serializer>(d: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(d.len()))?;
    for row in d {
        let row: Vec<Option<f64>> = row.iter().map(|v| v.is_finite().then_some(*v)).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl DistanceMatrix {
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let n = d.len();
        for (i, row) in d.iter().enumerate() {
            if row.len() != n {
                return Err(Error::size(n, row.len()));
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidDistances(format!("nonzero diagonal at {i}")));
            }
            for (j, &v) in row.iter().enumerate() {
                if v.is_nan() || v < 0.0 {
                    return Err(Error::InvalidDistances(format!("entry ({i},{j}) = {v}")));
                }
                let w = d[j][i];
                let symmetric = if v.is_finite() { (v - w).abs() <= TOL } else { v == w };
                if !symmetric {
                    return Err(Error::InvalidDistances(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(DistanceMatrix { d, asymmetries: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn is_finite(&self) -> bool {
        self.d.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest set of indices with all pairwise distances finite, found by
    /// repeatedly dropping the index with the most infinite entries (lowest
    /// index on ties), with the submatrix.
    pub fn finite_part(&self) -> (Vec<usize>, DistanceMatrix) {
        let mut keep: Vec<usize> = (0..self.n()).collect();
        loop {
            let counts: Vec<usize> =
                keep.iter().map(|&i| keep.iter().filter(|&&j| !self.d[i][j].is_finite()).count()).collect();
            let worst = counts.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)));
            match worst {
                Some((pos, &c)) if c > 0 => {
                    keep.remove(pos);
                }
                _ => break,
            }
        }
        if keep.len() < self.n() {
            let dropped: Vec<usize> = (0..self.n()).filter(|i| !keep.contains(i)).collect();
            warn!("excluding unreachable agents {dropped:?} from the embedding");
        }
        let d = keep.iter().map(|&i| keep.iter().map(|&j| self.d[i][j]).collect()).collect();
        (keep, DistanceMatrix { d, asymmetries: Vec::new() })
    }
}

/// `d[i][j] = speed · min(T(i→j), T(j→i))`, `+∞` when neither direction
/// signals within `t_max`. Each entry is `(ops, agent)`: `ops` acts when the
/// agent is the sender, the agent itself when it is the receiver.
pub fn distance_matrix(
    agents: &[(GeneratedMonoid, Agent)],
    dynamics: &DynamicsFamily,
    t_max: usize,
    speed: f64,
    cap: usize,
) -> Result<DistanceMatrix> {
    if agents.len() < 2 {
        return Err(Error::PreconditionFailed("need at least two agents".into()));
    }
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::PreconditionFailed(format!("speed must be positive, got {speed}")));
    }
    let n = agents.len();
    let mut d = vec![vec![0.0; n]; n];
    let mut asymmetries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let forward = first_signalling_time(&agents[i].0, &agents[j].1, dynamics, t_max, cap)?;
            let backward = first_signalling_time(&agents[j].0, &agents[i].1, dynamics, t_max, cap)?;
            if forward != backward {
                asymmetries.push(Asymmetry { i, j, forward, backward });
            }
            let t = match (forward, backward) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            let v = t.map_or(f64::INFINITY, |t| speed * t as f64);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut m = DistanceMatrix::new(d)?;
    m.asymmetries = asymmetries;
    Ok(m)
}

/// Breadth-first all-pairs hop counts of an undirected graph.
pub fn hop_distances(adjacency: &[Vec<usize>]) -> Result<DistanceMatrix> {
    let n = adjacency.len();
    if let Some(&v) = adjacency.iter().flatten().find(|&&v| v >= n) {
        return Err(Error::IndexOutOfRange { index: v, size: n });
    }
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (s, row) in d.iter_mut().enumerate() {
        row[s] = 0.0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if row[v].is_infinite() {
                    row[v] = row[u] + 1.0;
                    queue.push_back(v);
                }
            }
        }
    }
    DistanceMatrix::new(d).map_err(|_| Error::InvalidDistances("graph is not undirected".into()))
}

pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Vec<Vec<usize>>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::IndexOutOfRange { index: u.max(v), size: n });
        }
        if u != v && !adj[u].contains(&v) {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    Ok(adj)
}

/// `n` uniform points in the unit square (x then y per point from a
/// ChaCha8 stream), joined when their distance is at most `radius`.
pub fn unit_disk_graph(n: usize, radius: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if euclid(&points[i], &points[j]) <= radius {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    (points, adj)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbedMethod {
    #[default]
    ClassicalMds,
    StressMajorization,
}

#[derive(Debug, Clone, Serialize)]
pub struct Embedding {
    pub method: EmbedMethod,
    pub coords: Vec<Vec<f64>>,
    /// Raw stress `Σ_{i<j} (‖x_i − x_j‖ − d_ij)²`.
    pub stress: f64,
    /// Top-k eigenvalues of the double-centred matrix, before clipping.
    pub eigenvalues: Vec<f64>,
    /// Selected eigenvalues that were negative and clipped to zero.
    pub clipped_eigenvalues: Vec<f64>,
    pub iterations: usize,
    pub stress_history: Vec<f64>,
    pub alignment_rmse: Option<f64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }
}

pub fn raw_stress(coords: &[Vec<f64>], d: &DistanceMatrix) -> f64 {
    let n = coords.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = euclid(&coords[i], &coords[j]) - d.get(i, j);
            s += r * r;
        }
    }
    s
}

pub fn embed(d: &DistanceMatrix, k: usize, method: EmbedMethod) -> Result<Embedding> {
    let n = d.n();
    if k == 0 || k + 1 > n {
        return Err(Error::PreconditionFailed(format!("dimension {k} outside 1..={}", n.saturating_sub(1))));
    }
    if !d.is_finite() {
        return Err(Error::InvalidDistances("matrix has unreachable pairs".into()));
    }
    if d.rows().iter().flatten().all(|&v| v == 0.0) {
        return Err(Error::DegenerateMatrix("all distances are zero".into()));
    }
    let mut e = classical_mds(d, k);
    if method == EmbedMethod::StressMajorization {
        smacof(d, &mut e);
    }
    Ok(e)
}

fn classical_mds(d: &DistanceMatrix, k: usize) -> Embedding {
    let n = d.n();
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j) * d.get(i, j));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let total = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + total));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let mut coords = vec![vec![0.0; k]; n];
    let mut eigenvalues = Vec::with_capacity(k);
    let mut clipped = Vec::new();
    for (c, &col) in order.iter().take(k).enumerate() {
        let lambda = eig.eigenvalues[col];
        eigenvalues.push(lambda);
        if lambda < 0.0 {
            clipped.push(lambda);
        }
        let v = eig.eigenvectors.column(col);
        let pivot = (0..n).fold(0, |best, i| if v[i].abs() > v[best].abs() + TOL { i } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = lambda.max(0.0).sqrt() * sign;
        for (i, row) in coords.iter_mut().enumerate() {
            row[c] = v[i] * scale;
        }
    }
    if !clipped.is_empty() {
        warn!("clipped negative eigenvalues {clipped:?} to zero");
    }
    let stress = raw_stress(&coords, d);
    Embedding {
        method: EmbedMethod::ClassicalMds,
        coords,
        stress,
        eigenvalues,
        clipped_eigenvalues: clipped,
        iterations: 0,
        stress_history: vec![stress],
        alignment_rmse: None,
    }
}

/// Guttman-transform iterations with unit weights, starting from `e`.
fn smacof(d: &DistanceMatrix, e: &mut Embedding) {
    let n = d.n();
    let k = e.dim();
    let mut x = e.coords.clone();
    let mut stress = e.stress;
    let mut iterations = 0;
    // Points closer than this are treated as coincident, so the update does
    // not amplify rounding noise between points with identical distance rows.
    let coincident = 1e-12 * d.rows().iter().flatten().fold(0.0, |m: f64, &v| m.max(v));
    while iterations < SMACOF_MAX_ITERS && stress > 0.0 {
        // Guttman transform with unit weights: x_i' = (1/n) Σ_j (δ_ij / d_ij(X)) (x_i − x_j).
        let mut next = vec![vec![0.0; k]; n];
        for i in 0..n {
            for j in 0..n {
                let dist = euclid(&x[i], &x[j]);
                if i == j || dist <= coincident {
                    continue;
                }
                let ratio = d.get(i, j) / dist / n as f64;
                for c in 0..k {
                    next[i][c] += ratio * (x[i][c] - x[j][c]);
                }
            }
        }
        let new_stress = raw_stress(&next, d);
        iterations += 1;
        let improvement = (stress - new_stress) / stress;
        x = next;
        stress = new_stress;
        e.stress_history.push(stress);
        if improvement < SMACOF_REL_TOL {
            break;
        }
    }
    e.method = EmbedMethod::StressMajorization;
    e.coords = x;
    e.stress = stress;
    e.iterations = iterations;
}

/// RMSE between `truth` and `coords` after the best translation,
/// rotation/reflection and uniform scaling of `coords`.
pub fn procrustes_rmse(coords: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    let n = coords.len();
    if truth.len() != n {
        return Err(Error::size(n, truth.len()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let k = coords[0].len();
    if let Some(r) = coords.iter().chain(truth).find(|r| r.len() != k) {
        return Err(Error::size(k, r.len()));
    }
    let centred = |pts: &[Vec<f64>]| {
        let mut m = DMatrix::from_fn(n, k, |i, c| pts[i][c]);
        for c in 0..k {
            let mean = m.column(c).mean();
            m.column_mut(c).add_scalar_mut(-mean);
        }
        m
    };
    let x = centred(coords);
    let y = centred(truth);
    let norm_x = x.norm_squared();
    let aligned = if norm_x > 0.0 {
        let svd = (x.transpose() * &y).svd(true, true);
        let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
        let scale = svd.singular_values.sum() / norm_x;
        &x * (u * v_t) * scale
    } else {
        DMatrix::zeros(n, k)
    };
    Ok(((y - aligned).norm_squared() / n as f64).sqrt())
}
