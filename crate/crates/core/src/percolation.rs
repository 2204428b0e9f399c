//! Bond percolation on boxes `[0, L)^d`.
//!
//! Vertex `x` has index `v = Σ x_i L^{d−1−i}` (last axis fastest); the edge
//! from `v` to `v + e_axis` has id `v·d + axis`. An edge is open iff
//! `uniform(seed, id) < p`, so samples at `p₁ ≤ p₂` with one seed are
//! coupled: every edge open at `p₁` is open at `p₂`.

use std::io::{Read, Write};

use serde::Serialize;

use crate::counter_rng::uniform;
use crate::error::{invalid, Error, Result};
use crate::metric_spaces::{default_budget, DiscreteSpace, Graph, GraphOrigin, SpaceKind};

const MAGIC: &[u8; 8] = b"DOSPERC1";

#[derive(Clone, Debug)]
pub struct PercolationSample {
    pub dim: usize,
    pub side: usize,
    pub p: f64,
    pub seed: u64,
    open: Vec<u64>,
    labels: Vec<u32>,
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

fn vertex_count(dim: usize, side: usize) -> Option<usize> {
    side.checked_pow(dim as u32)
}

impl PercolationSample {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.vertex_count() * self.dim
    }

    pub fn coords(&self, v: usize) -> Vec<i64> {
        let mut x = vec![0i64; self.dim];
        let mut r = v;
        for i in (0..self.dim).rev() {
            x[i] = (r % self.side) as i64;
            r /= self.side;
        }
        x
    }

    fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    /// Other endpoint of edge `(v, axis)`, or `None` at the box boundary.
    pub fn edge_target(&self, v: usize, axis: usize) -> Option<usize> {
        let s = self.stride(axis);
        ((v / s) % self.side + 1 < self.side).then_some(v + s)
    }

    pub fn is_open(&self, v: usize, axis: usize) -> bool {
        let id = v * self.dim + axis;
        self.open[id / 64] >> (id % 64) & 1 == 1
    }

    pub fn open_edge_count(&self) -> usize {
        self.open.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Cluster representative of every vertex.
    pub fn cluster_labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn open_mask(&self) -> &[u64] {
        &self.open
    }

    fn open_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |v| {
            (0..self.dim).filter_map(move |a| if self.is_open(v, a) { self.edge_target(v, a).map(|u| (v, u)) } else { None })
        })
    }

    fn label_clusters(&mut self) {
        let mut uf = UnionFind::new(self.vertex_count());
        let edges: Vec<(usize, usize)> = self.open_edges().collect();
        for (a, b) in edges {
            uf.union(a as u32, b as u32);
        }
        self.labels = (0..self.vertex_count() as u32).map(|v| uf.find(v)).collect();
    }

    /// Writes the header and the open-edge bitmask.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        let p_fixed = (self.p * 4294967296.0).round() as u64;
        for field in [self.dim as u64, self.side as u64, p_fixed, self.seed] {
            out.write_all(&field.to_le_bytes())?;
        }
        let bytes = self.edge_count().div_ceil(8);
        let mut buf = Vec::with_capacity(bytes);
        for w in &self.open {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        buf.truncate(bytes);
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return invalid("not a percolation sample file");
        }
        let mut fields = [0u64; 4];
        for f in &mut fields {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            *f = u64::from_le_bytes(b);
        }
        let [dim, side, p_fixed, seed] = fields;
        let (dim, side) = (dim as usize, side as usize);
        let n = vertex_count(dim, side).ok_or_else(|| Error::Invalid("sample header overflows".into()))?;
        let edges = n * dim;
        let mut buf = vec![0u8; edges.div_ceil(8)];
        input.read_exact(&mut buf)?;
        buf.resize(edges.div_ceil(64) * 8, 0);
        let open = buf.chunks(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
        let mut s = PercolationSample {
            dim,
            side,
            p: p_fixed as f64 / 4294967296.0,
            seed,
            open,
            labels: vec![0; n],
        };
        s.label_clusters();
        Ok(s)
    }
}

pub fn percolate_bonds(dim: usize, side: usize, p: f64, seed: u64) -> Result<PercolationSample> {
    percolate_bonds_with_budget(dim, side, p, seed, default_budget())
}

pub fn percolate_bonds_with_budget(dim: usize, side: usize, p: f64, seed: u64, budget: usize) -> Result<PercolationSample> {
    if dim < 1 || side < 1 {
        return invalid("need d ≥ 1 and L ≥ 1");
    }
    if !(0.0..=1.0).contains(&p) {
        return invalid("p must lie in [0, 1]");
    }
    let n = vertex_count(dim, side).filter(|n| n.checked_mul(dim).is_some_and(|e| e <= budget));
    let Some(n) = n else {
        return Err(Error::BudgetExceeded {
            budget,
            what: format!("bond percolation on [0,{side})^{dim}"),
        });
    };
    let mut s = PercolationSample {
        dim,
        side,
        p,
        seed,
        open: vec![0; (n * dim).div_ceil(64)],
        labels: vec![0; n],
    };
    for v in 0..n {
        for a in 0..dim {
            if s.edge_target(v, a).is_some() {
                let id = v * dim + a;
                if uniform(seed, id as u64) < p {
                    s.open[id / 64] |= 1 << (id % 64);
                }
            }
        }
    }
    s.label_clusters();
    Ok(s)
}

/// Largest cluster (ties: smallest representative) with the chemical
/// distance; the base point is the cluster vertex closest to the box centre
/// in Euclidean distance, ties broken lexicographically by coordinates.
pub fn largest_cluster(sample: &PercolationSample) -> Result<DiscreteSpace> {
    let n = sample.vertex_count();
    let mut sizes = vec![0u32; n];
    for &l in &sample.labels {
        sizes[l as usize] += 1;
    }
    let root = (0..n).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap() as u32;
    let members: Vec<usize> = (0..n).filter(|&v| sample.labels[v] == root).collect();
    let centre = (sample.side - 1) as i64;
    let offcentre = |v: usize| -> i64 { sample.coords(v).iter().map(|&x| (2 * x - centre).pow(2)).sum() };
    let base = *members
        .iter()
        .min_by(|&&a, &&b| offcentre(a).cmp(&offcentre(b)).then_with(|| sample.coords(a).cmp(&sample.coords(b))))
        .unwrap();
    let mut index = vec![u32::MAX; n];
    for (i, &v) in members.iter().enumerate() {
        index[v] = i as u32;
    }
    let edges: Vec<(u32, u32)> = sample
        .open_edges()
        .filter(|&(a, _)| sample.labels[a] == root)
        .map(|(a, b)| (index[a], index[b]))
        .collect();
    let coords: Vec<i64> = members.iter().flat_map(|&v| sample.coords(v)).collect();
    let graph = Graph::from_edges(
        members.iter().map(|&v| v as u64).collect(),
        edges,
        Some((sample.dim, coords)),
    );
    DiscreteSpace::from_graph(
        &graph,
        base as u64,
        GraphOrigin::Percolation {
            dim: sample.dim,
            side: sample.side,
            p: sample.p,
            seed: sample.seed,
        },
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub t: u32,
    pub ball_count: u64,
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    /// `(max − min)/mean` of the normalized counts over `t ∈ [t_max/2, t_max]`.
    pub plateau: f64,
    pub plateau_mean: f64,
}

/// `|B(x₀, t)|` in the chemical distance for `1 ≤ t ≤ t_max`. On percolation
/// clusters `t_max` may not exceed `L/2`, so that balls stay clear of the box
/// boundary.
pub fn chemical_ball_growth(cluster: &DiscreteSpace, t_max: u32) -> Result<GrowthTable> {
    let SpaceKind::Graph(gs) = cluster.kind() else {
        return invalid("chemical balls need a graph space");
    };
    if t_max < 2 {
        return invalid("t_max must be at least 2");
    }
    let dim = match gs.origin {
        GraphOrigin::Percolation { dim, side, .. } => {
            if t_max as usize > side / 2 {
                return invalid(format!("t_max {t_max} exceeds half the box side {side}"));
            }
            dim
        }
        _ => gs.graph.embedding_dim().unwrap_or(1),
    };
    let mut shells = vec![0u64; t_max as usize + 1];
    for i in 0..gs.graph.node_count() {
        let d = gs.base_distance(i);
        if d <= t_max {
            shells[d as usize] += 1;
        }
    }
    let mut count = shells[0];
    let rows: Vec<GrowthRow> = (1..=t_max)
        .map(|t| {
            count += shells[t as usize];
            GrowthRow {
                t,
                ball_count: count,
                normalized: count as f64 / (t as f64).powi(dim as i32),
            }
        })
        .collect();
    let tail: Vec<f64> = rows.iter().filter(|r| r.t >= t_max / 2).map(|r| r.normalized).collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GrowthTable {
        rows,
        plateau: (hi - lo) / mean,
        plateau_mean: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_spaces::Point;

    #[test]
    fn extremes() {
        let closed = percolate_bonds(2, 10, 0.0, 3).unwrap();
        assert_eq!(closed.open_edge_count(), 0);
        let labels = closed.cluster_labels();
        assert!((0..100).all(|v| labels[v] == v as u32));
        let c = largest_cluster(&closed).unwrap();
        assert_eq!(c.graph_space().unwrap().graph.node_count(), 1);

        let full = percolate_bonds(2, 10, 1.0, 3).unwrap();
        assert_eq!(full.open_edge_count(), 180);
        let c = largest_cluster(&full).unwrap();
        let g = c.graph_space().unwrap();
        assert_eq!(g.graph.node_count(), 100);
        // base is the lexicographically first of the four central vertices
        assert_eq!(c.base_point(), &Point::Node(44));
        for i in 0..100 {
            let x = g.graph.coords(i).unwrap();
            assert_eq!(g.base_distance(i) as i64, (x[0] - 4).abs() + (x[1] - 4).abs());
        }
    }

    #[test]
    fn full_grid_growth() {
        let full = percolate_bonds(2, 41, 1.0, 0).unwrap();
        let t = chemical_ball_growth(&largest_cluster(&full).unwrap(), 20).unwrap();
        for row in &t.rows {
            let k = row.t as u64;
            assert_eq!(row.ball_count, 2 * k * k + 2 * k + 1);
        }
        assert!(chemical_ball_growth(&largest_cluster(&full).unwrap(), 21).is_err());
    }

    #[test]
    fn monotone_coupling_and_reproducibility() {
        let a = percolate_bonds(2, 30, 0.4, 11).unwrap();
        let b = percolate_bonds(2, 30, 0.7, 11).unwrap();
        let again = percolate_bonds(2, 30, 0.4, 11).unwrap();
        assert_eq!(a.open_mask(), again.open_mask());
        for (x, y) in a.open_mask().iter().zip(b.open_mask()) {
            assert_eq!(x & !y, 0);
        }
        assert_ne!(a.open_mask(), percolate_bonds(2, 30, 0.4, 12).unwrap().open_mask());
    }

    #[test]
    fn binary_round_trip() {
        let s = percolate_bonds(3, 7, 0.55, 99).unwrap();
        let mut bytes = Vec::new();
        s.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 40 + (7 * 7 * 7 * 3usize).div_ceil(8));
        let r = PercolationSample::read_from(bytes.as_slice()).unwrap();
        assert_eq!((r.dim, r.side, r.seed), (3, 7, 99));
        assert!((r.p - 0.55).abs() < 1e-9);
        assert_eq!(r.open_mask(), s.open_mask());
        assert_eq!(r.cluster_labels(), s.cluster_labels());
        assert!(PercolationSample::read_from(&b"NOTMAGIC"[..]).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            percolate_bonds_with_budget(3, 100, 0.5, 0, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
