//! Countable discrete metric spaces with a base point.
//!
//! Three families are supported: integer lattices ℤᵈ with an ℓ_p metric,
//! finite connected graphs with the path metric (edge lists, half-lines and
//! percolation clusters), and the Cayley graph of the free group on two
//! generators. Every ball is finite, and enumeration is ordered by
//! `(distance, canonical point order)` so that downstream matrices are
//! reproducible.

use std::collections::{HashMap, VecDeque};
use std::io::BufRead;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_POINT_BUDGET: usize = 50_000_000;
pub const BUDGET_ENV: &str = "DOSLAB_BUDGET";

/// Radii closer than this (relative) are the same radius for non-integer `p`.
pub const RADIUS_TOLERANCE: f64 = 1e-9;

/// Point budget from `DOSLAB_BUDGET`, falling back to [`DEFAULT_POINT_BUDGET`].
pub fn default_budget() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_POINT_BUDGET)
}

/// Letters of the free group: `a, a⁻¹, b, b⁻¹` as `0, 1, 2, 3`.
/// The inverse of letter `l` is `l ^ 1`.
pub type Letter = u8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Lattice(Vec<i64>),
    Node(u64),
    /// Reduced word in the free group.
    Word(Vec<Letter>),
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Point::Lattice(c) => {
                write!(f, "(")?;
                for (i, x) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Point::Node(id) => write!(f, "{id}"),
            Point::Word(w) if w.is_empty() => write!(f, "e"),
            Point::Word(w) => {
                for l in w {
                    let c = ['a', 'A', 'b', 'B'][*l as usize];
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PNorm {
    L1,
    L2,
    LInf,
    /// General `1 < p < ∞`, other than 2.
    P(f64),
}

/// Radius key: exact integers for p ∈ {1, 2, ∞} (ℓ₂ uses the squared norm),
/// otherwise `Σ|x_i|^p` as a float.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
enum RadiusKey {
    Exact(u64),
    Approx(f64),
}

impl PNorm {
    pub fn from_index(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(PNorm::LInf)
        } else if p == 1.0 {
            Ok(PNorm::L1)
        } else if p == 2.0 {
            Ok(PNorm::L2)
        } else if p > 1.0 && p.is_finite() {
            Ok(PNorm::P(p))
        } else {
            invalid(format!("p-norm index must lie in [1, ∞], got {p}"))
        }
    }

    pub fn index(&self) -> f64 {
        match self {
            PNorm::L1 => 1.0,
            PNorm::L2 => 2.0,
            PNorm::LInf => f64::INFINITY,
            PNorm::P(p) => *p,
        }
    }

    fn key(&self, v: &[i64]) -> RadiusKey {
        match self {
            PNorm::L1 => RadiusKey::Exact(v.iter().map(|x| x.unsigned_abs()).sum()),
            PNorm::L2 => RadiusKey::Exact(v.iter().map(|x| x.unsigned_abs().pow(2)).sum()),
            PNorm::LInf => RadiusKey::Exact(v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)),
            PNorm::P(p) => {
                // sorted summation keeps the key invariant under coordinate permutations
                let mut a: Vec<u64> = v.iter().map(|x| x.unsigned_abs()).collect();
                a.sort_unstable();
                RadiusKey::Approx(a.iter().map(|&x| (x as f64).powf(*p)).sum())
            }
        }
    }

    fn key_radius(&self, key: RadiusKey) -> f64 {
        match (self, key) {
            (PNorm::L2, RadiusKey::Exact(k)) => (k as f64).sqrt(),
            (_, RadiusKey::Exact(k)) => k as f64,
            (PNorm::P(p), RadiusKey::Approx(s)) => s.powf(1.0 / p),
            (_, RadiusKey::Approx(s)) => s,
        }
    }

    pub fn norm(&self, v: &[i64]) -> f64 {
        self.key_radius(self.key(v))
    }
}

/// Finite undirected graph in adjacency-list (CSR) form. Nodes are indexed
/// `0..n`; each carries an external label and optionally lattice coordinates.
#[derive(Clone, Debug)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    labels: Vec<u64>,
    label_index: HashMap<u64, u32>,
    coords: Option<(usize, Vec<i64>)>,
}

impl Graph {
    /// Builds a graph on `labels.len()` nodes. Duplicate edges and self-loops
    /// are dropped.
    pub fn from_edges(
        labels: Vec<u64>,
        edges: impl IntoIterator<Item = (u32, u32)>,
        coords: Option<(usize, Vec<i64>)>,
    ) -> Self {
        let n = labels.len();
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (u, v) in edges {
            if u != v {
                pairs.push((u, v));
                pairs.push((v, u));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &pairs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let neighbors = pairs.into_iter().map(|(_, v)| v).collect();
        let label_index = labels.iter().enumerate().map(|(i, &l)| (l, i as u32)).collect();
        Graph {
            offsets,
            neighbors,
            labels,
            label_index,
            coords,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn label(&self, i: usize) -> u64 {
        self.labels[i]
    }

    pub fn index_of(&self, label: u64) -> Option<usize> {
        self.label_index.get(&label).map(|&i| i as usize)
    }

    pub fn coords(&self, i: usize) -> Option<&[i64]> {
        self.coords.as_ref().map(|(d, c)| &c[i * d..(i + 1) * d])
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.coords.as_ref().map(|(d, _)| *d)
    }

    /// Breadth-first distances from `source`, `u32::MAX` where unreached.
    pub fn bfs(&self, source: usize, max_depth: Option<u32>) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            if max_depth.is_some_and(|m| du >= m) {
                continue;
            }
            for &v in self.neighbors(u) {
                let v = v as usize;
                if dist[v] == u32::MAX {
                    dist[v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Subgraph induced on the connected component of `source`, relabelled
    /// compactly with labels and coordinates carried over.
    pub fn component(&self, source: usize) -> Graph {
        let dist = self.bfs(source, None);
        let keep: Vec<usize> = (0..self.node_count()).filter(|&i| dist[i] != u32::MAX).collect();
        let mut new_index = vec![u32::MAX; self.node_count()];
        for (j, &i) in keep.iter().enumerate() {
            new_index[i] = j as u32;
        }
        let labels = keep.iter().map(|&i| self.labels[i]).collect();
        let mut edges = Vec::new();
        for &i in &keep {
            for &v in self.neighbors(i) {
                if (i as u32) < v {
                    edges.push((new_index[i], new_index[v as usize]));
                }
            }
        }
        let coords = self.coords.as_ref().map(|(d, _)| {
            let mut c = Vec::with_capacity(keep.len() * d);
            for &i in &keep {
                c.extend_from_slice(self.coords(i).unwrap());
            }
            (*d, c)
        });
        Graph::from_edges(labels, edges, coords)
    }
}

/// Where a graph space came from; only used for descriptors and guards.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum GraphOrigin {
    EdgeList,
    HalfLine,
    Percolation { dim: usize, side: usize, p: f64, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct GraphSpace {
    pub graph: Arc<Graph>,
    pub base_index: usize,
    base_distances: Arc<Vec<u32>>,
    pub origin: GraphOrigin,
}

impl GraphSpace {
    pub fn base_distance(&self, i: usize) -> u32 {
        self.base_distances[i]
    }

    pub fn eccentricity(&self) -> u32 {
        self.base_distances.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub enum SpaceKind {
    Lattice { dim: usize, norm: PNorm },
    Graph(GraphSpace),
    CayleyF2,
}

/// Serializable summary of a space, embedded in reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceDescriptor {
    pub kind: &'static str,
    pub base_point: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generators: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_side: Option<usize>,
}

/// Points of a ball in enumeration order, with distances and ladder levels
/// (level 0 is the base point, level k the k-th realized radius).
#[derive(Clone, Debug)]
pub struct Ball {
    pub points: Vec<Point>,
    pub distances: Vec<f64>,
    pub levels: Vec<usize>,
    /// `level_radii[k]` is the radius of level `k`; `level_radii[0] = 0`.
    pub level_radii: Vec<f64>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points at level `≤ k`.
    pub fn count_within_level(&self, k: usize) -> usize {
        self.levels.partition_point(|&l| l <= k)
    }

    pub fn index_map(&self) -> HashMap<&Point, usize> {
        self.points.iter().enumerate().map(|(i, p)| (p, i)).collect()
    }
}

/// Sorted distinct radii `r_1 < r_2 < …` with cumulative ball counts.
/// The base point alone is level 0 with `N_0 := 1`; it is not an entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiiLadder {
    pub radii: Vec<f64>,
    pub ball_counts: Vec<u64>,
}

impl RadiiLadder {
    pub fn new(radii: Vec<f64>, ball_counts: Vec<u64>) -> Result<Self> {
        if radii.len() != ball_counts.len() {
            return invalid("ladder radii and counts differ in length");
        }
        for k in 0..radii.len() {
            let (prev_r, prev_n) = if k == 0 { (0.0, 1) } else { (radii[k - 1], ball_counts[k - 1]) };
            if radii[k] <= prev_r || ball_counts[k] <= prev_n {
                return invalid(format!("ladder not strictly increasing at entry {}", k + 1));
            }
        }
        Ok(RadiiLadder { radii, ball_counts })
    }

    /// Ladder built from shell counts `S_1, S_2, …` at radii `1, 2, …`.
    pub fn from_shells(shells: &[u64]) -> Result<Self> {
        let mut total = 1u64;
        let mut counts = Vec::with_capacity(shells.len());
        for &s in shells {
            total = total
                .checked_add(s)
                .ok_or_else(|| Error::Invalid("ball count overflow".into()))?;
            counts.push(total);
        }
        Self::new((1..=shells.len()).map(|k| k as f64).collect(), counts)
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// `N_k` with the convention `N_0 = 1`.
    pub fn level_count(&self, k: usize) -> u64 {
        if k == 0 {
            1
        } else {
            self.ball_counts[k - 1]
        }
    }

    /// `r_k` with `r_0 = 0`.
    pub fn level_radius(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.radii[k - 1]
        }
    }

    pub fn truncated(&self, k_max: usize) -> RadiiLadder {
        let k = k_max.min(self.len());
        RadiiLadder {
            radii: self.radii[..k].to_vec(),
            ball_counts: self.ball_counts[..k].to_vec(),
        }
    }

    /// Ratios `ρ_k = N_{k+1}/N_k`, for `k = 1 .. K-1`.
    pub fn ratios(&self) -> Vec<f64> {
        self.ball_counts.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect()
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteSpace {
    kind: SpaceKind,
    base: Point,
    budget: usize,
}

impl DiscreteSpace {
    pub fn lattice(dim: usize, norm: PNorm) -> Result<Self> {
        Self::lattice_at(norm, vec![0; dim])
    }

    pub fn lattice_at(norm: PNorm, base: Vec<i64>) -> Result<Self> {
        if base.is_empty() {
            return invalid("lattice dimension must be at least 1");
        }
        Ok(DiscreteSpace {
            kind: SpaceKind::Lattice { dim: base.len(), norm },
            base: Point::Lattice(base),
            budget: default_budget(),
        })
    }

    pub fn cayley_f2() -> Self {
        DiscreteSpace {
            kind: SpaceKind::CayleyF2,
            base: Point::Word(Vec::new()),
            budget: default_budget(),
        }
    }

    /// The connected component of `base_label` in `graph`.
    pub fn from_graph(graph: &Graph, base_label: u64, origin: GraphOrigin) -> Result<Self> {
        let source = graph.index_of(base_label).ok_or(Error::MissingBaseNode(base_label))?;
        let component = graph.component(source);
        let base_index = component.index_of(base_label).expect("base survives component extraction");
        let base_distances = Arc::new(component.bfs(base_index, None));
        Ok(DiscreteSpace {
            kind: SpaceKind::Graph(GraphSpace {
                graph: Arc::new(component),
                base_index,
                base_distances,
                origin,
            }),
            base: Point::Node(base_label),
            budget: default_budget(),
        })
    }

    /// `{1, …, n}` with `d(x, y) = |x − y|` and base point 1.
    pub fn half_line(n: u64) -> Result<Self> {
        if n == 0 {
            return invalid("half-line needs at least one point");
        }
        if n > u32::MAX as u64 {
            return invalid("half-line too long");
        }
        let labels: Vec<u64> = (1..=n).collect();
        let edges = (0..n as u32 - 1).map(|i| (i, i + 1));
        let graph = Graph::from_edges(labels, edges, None);
        Self::from_graph(&graph, 1, GraphOrigin::HalfLine)
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn base_point(&self) -> &Point {
        &self.base
    }

    pub fn lattice_dim(&self) -> Option<usize> {
        match &self.kind {
            SpaceKind::Lattice { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    pub fn graph_space(&self) -> Option<&GraphSpace> {
        match &self.kind {
            SpaceKind::Graph(g) => Some(g),
            _ => None,
        }
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        let mut d = SpaceDescriptor {
            kind: "lattice",
            base_point: self.base.to_string(),
            dim: None,
            p: None,
            generators: None,
            nodes: None,
            box_side: None,
        };
        match &self.kind {
            SpaceKind::Lattice { dim, norm } => {
                d.dim = Some(*dim);
                d.p = Some(norm.index());
            }
            SpaceKind::CayleyF2 => {
                d.kind = "cayley_f2";
                d.generators = Some(2);
            }
            SpaceKind::Graph(g) => {
                d.nodes = Some(g.graph.node_count());
                match &g.origin {
                    GraphOrigin::Percolation { dim, side, .. } => {
                        d.kind = "percolation_cluster";
                        d.dim = Some(*dim);
                        d.box_side = Some(*side);
                    }
                    _ => d.kind = "graph",
                }
            }
        }
        d
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        let ok = match (&self.kind, x) {
            (SpaceKind::Lattice { dim, .. }, Point::Lattice(c)) => c.len() == *dim,
            (SpaceKind::Graph(g), Point::Node(id)) => g.graph.index_of(*id).is_some(),
            (SpaceKind::CayleyF2, Point::Word(w)) => is_reduced(w),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("point {x} does not belong to this space"))
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(match (&self.kind, x, y) {
            (SpaceKind::Lattice { norm, .. }, Point::Lattice(a), Point::Lattice(b)) => {
                let diff: Vec<i64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
                norm.norm(&diff)
            }
            (SpaceKind::Graph(g), Point::Node(a), Point::Node(b)) => {
                let (ia, ib) = (g.graph.index_of(*a).unwrap(), g.graph.index_of(*b).unwrap());
                if ia == g.base_index {
                    g.base_distances[ib] as f64
                } else if ib == g.base_index {
                    g.base_distances[ia] as f64
                } else {
                    g.graph.bfs(ia, None)[ib] as f64
                }
            }
            (SpaceKind::CayleyF2, Point::Word(a), Point::Word(b)) => {
                let common = a.iter().zip(b).take_while(|(p, q)| p == q).count();
                (a.len() + b.len() - 2 * common) as f64
            }
            _ => unreachable!("checked above"),
        })
    }

    /// Distance from the base point.
    pub fn base_distance(&self, x: &Point) -> Result<f64> {
        self.distance(&self.base, x)
    }

    /// Points with `d(x₀, x) ≤ radius` in enumeration order.
    pub fn ball_points(&self, radius: f64) -> Result<Vec<(Point, f64)>> {
        let ball = self.ball(radius)?;
        Ok(ball.points.into_iter().zip(ball.distances).collect())
    }

    /// Enumerates `B(x₀, radius)` with ladder levels.
    pub fn ball(&self, radius: f64) -> Result<Ball> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return invalid(format!("radius must be finite and nonnegative, got {radius}"));
        }
        match &self.kind {
            SpaceKind::Lattice { dim, norm } => self.lattice_ball(*dim, *norm, radius),
            SpaceKind::Graph(g) => self.graph_ball(g, radius),
            SpaceKind::CayleyF2 => self.f2_ball(radius),
        }
    }

    fn lattice_ball(&self, dim: usize, norm: PNorm, radius: f64) -> Result<Ball> {
        let Point::Lattice(base) = &self.base else { unreachable!() };
        let mut entries: Vec<(RadiusKey, Vec<i64>)> = Vec::new();
        for_each_box_point(dim, radius, self.budget, "lattice ball", |offset| {
            if within(norm.norm(offset), radius) {
                entries.push((norm.key(offset), offset.to_vec()));
            }
        })?;
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
        let mut ball = Ball {
            points: Vec::with_capacity(entries.len()),
            distances: Vec::with_capacity(entries.len()),
            levels: Vec::with_capacity(entries.len()),
            level_radii: vec![0.0],
        };
        let mut level = 0usize;
        let mut level_key: Option<RadiusKey> = None;
        for (key, offset) in entries {
            let r = norm.key_radius(key);
            match level_key {
                None => level_key = Some(key),
                Some(prev) if !same_radius(norm, prev, key) => {
                    level += 1;
                    level_key = Some(key);
                    ball.level_radii.push(r);
                }
                _ => {}
            }
            let point: Vec<i64> = offset.iter().zip(base).map(|(o, b)| o + b).collect();
            ball.points.push(Point::Lattice(point));
            ball.distances.push(r);
            ball.levels.push(level);
        }
        Ok(ball)
    }

    fn graph_ball(&self, g: &GraphSpace, radius: f64) -> Result<Ball> {
        let depth = radius_floor(radius);
        let mut entries: Vec<(u32, u64)> = g
            .base_distances
            .iter()
            .enumerate()
            .filter(|(_, &d)| (d as u64) <= depth)
            .map(|(i, &d)| (d, g.graph.label(i)))
            .collect();
        if entries.len() > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
                what: "graph ball".into(),
            });
        }
        entries.sort_unstable();
        let max_level = entries.last().map(|e| e.0).unwrap_or(0);
        Ok(Ball {
            distances: entries.iter().map(|e| e.0 as f64).collect(),
            levels: entries.iter().map(|e| e.0 as usize).collect(),
            points: entries.into_iter().map(|e| Point::Node(e.1)).collect(),
            level_radii: (0..=max_level).map(|k| k as f64).collect(),
        })
    }

    fn f2_ball(&self, radius: f64) -> Result<Ball> {
        let depth = radius_floor(radius) as usize;
        let count = f2_ball_count(depth);
        if count.is_none_or(|c| c > self.budget as u64) {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
                what: "free-group ball".into(),
            });
        }
        // BFS over reduced words, layer by layer
        let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
        let mut ball = Ball {
            points: Vec::new(),
            distances: Vec::new(),
            levels: Vec::new(),
            level_radii: Vec::new(),
        };
        for k in 0..=depth {
            layer.sort();
            ball.level_radii.push(k as f64);
            for w in &layer {
                ball.points.push(Point::Word(w.clone()));
                ball.distances.push(k as f64);
                ball.levels.push(k);
            }
            if k == depth {
                break;
            }
            let mut next = Vec::with_capacity(layer.len() * 4);
            for w in &layer {
                for l in 0..4u8 {
                    if w.last().is_some_and(|&last| last == l ^ 1) {
                        continue;
                    }
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
            layer = next;
        }
        Ok(ball)
    }

    /// First `k_max` distinct realized radii with cumulative counts.
    pub fn radii_ladder(&self, k_max: usize) -> Result<RadiiLadder> {
        if k_max == 0 {
            return invalid("k_max must be at least 1");
        }
        match &self.kind {
            SpaceKind::Lattice { dim, norm } => {
                let mut radius = 8.0f64;
                loop {
                    let levels = match lattice_level_counts(*dim, *norm, radius, self.budget) {
                        Ok(levels) => levels,
                        Err(Error::BudgetExceeded { .. }) => {
                            let prefix = lattice_level_counts(*dim, *norm, radius / 2.0, self.budget)?;
                            return Err(partial(ladder_from_levels(&prefix, usize::MAX), k_max, "point budget exceeded"));
                        }
                        Err(e) => return Err(e),
                    };
                    if levels.len() > k_max {
                        return Ok(ladder_from_levels(&levels, k_max));
                    }
                    radius *= 2.0;
                }
            }
            SpaceKind::Graph(g) => {
                let mut shells = vec![0u64; k_max];
                for &d in g.base_distances.iter() {
                    if d >= 1 && (d as usize) <= k_max {
                        shells[d as usize - 1] += 1;
                    }
                }
                let realized = shells.iter().take_while(|&&s| s > 0).count();
                let ladder = RadiiLadder::from_shells(&shells[..realized])?;
                if realized < k_max {
                    return Err(partial(ladder, k_max, "graph exhausted"));
                }
                Ok(ladder)
            }
            SpaceKind::CayleyF2 => {
                let shells = f2_shell_counts(k_max);
                let ladder = RadiiLadder::from_shells(&shells)?;
                if shells.len() < k_max {
                    return Err(partial(ladder, k_max, "ball count overflows 64 bits"));
                }
                Ok(ladder)
            }
        }
    }

    /// All realized radii `0 < r ≤ radius`.
    pub fn ladder_to_radius(&self, radius: f64) -> Result<RadiiLadder> {
        match &self.kind {
            SpaceKind::Lattice { dim, norm } => {
                let levels = lattice_level_counts(*dim, *norm, radius, self.budget)?;
                Ok(ladder_from_levels(&levels, usize::MAX))
            }
            _ => {
                let k = radius_floor(radius) as usize;
                if k == 0 {
                    return RadiiLadder::new(vec![], vec![]);
                }
                match self.radii_ladder(k) {
                    Ok(l) => Ok(l),
                    Err(Error::PartialLadder { completed, .. }) if matches!(self.kind, SpaceKind::Graph(_)) => {
                        Ok(*completed)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }
}

fn partial(ladder: RadiiLadder, requested: usize, reason: &str) -> Error {
    Error::PartialLadder {
        completed: Box::new(ladder),
        requested,
        reason: reason.into(),
    }
}

fn radius_floor(radius: f64) -> u64 {
    (radius * (1.0 + RADIUS_TOLERANCE)).floor() as u64
}

fn within(distance: f64, radius: f64) -> bool {
    distance <= radius + RADIUS_TOLERANCE * radius.max(1.0)
}

fn same_radius(norm: PNorm, a: RadiusKey, b: RadiusKey) -> bool {
    match (a, b) {
        (RadiusKey::Exact(x), RadiusKey::Exact(y)) => x == y,
        _ => {
            let (ra, rb) = (norm.key_radius(a), norm.key_radius(b));
            (ra - rb).abs() <= RADIUS_TOLERANCE * ra.max(rb).max(1.0)
        }
    }
}

fn is_reduced(w: &[Letter]) -> bool {
    w.iter().all(|&l| l < 4) && w.windows(2).all(|p| p[1] != p[0] ^ 1)
}

/// `|B(e, k)| = 2·3^k − 1` if it fits in 64 bits.
fn f2_ball_count(k: usize) -> Option<u64> {
    3u64.checked_pow(k as u32)?.checked_mul(2).map(|c| c - 1)
}

/// Shell sizes of the free-group Cayley graph, counted by last letter: a
/// reduced word ending in `l` extends by any letter except `l⁻¹`.
fn f2_shell_counts(k_max: usize) -> Vec<u64> {
    let mut by_last = [1u64; 4];
    let mut shells = Vec::with_capacity(k_max);
    let mut total = 1u64;
    for k in 1..=k_max {
        if k > 1 {
            let mut next = [0u64; 4];
            for (l, slot) in next.iter_mut().enumerate() {
                for (m, &c) in by_last.iter().enumerate() {
                    if m != l ^ 1 {
                        *slot = match slot.checked_add(c) {
                            Some(v) => v,
                            None => return shells,
                        };
                    }
                }
            }
            by_last = next;
        }
        let shell = by_last.iter().try_fold(0u64, |a, &c| a.checked_add(c));
        match shell.and_then(|s| total.checked_add(s).map(|t| (s, t))) {
            Some((s, t)) => {
                shells.push(s);
                total = t;
            }
            None => return shells,
        }
    }
    shells
}

/// Visits every offset in the box `[−⌊R⌋, ⌊R⌋]^dim`.
fn for_each_box_point(
    dim: usize,
    radius: f64,
    budget: usize,
    what: &str,
    mut f: impl FnMut(&[i64]),
) -> Result<()> {
    let half = radius_floor(radius) as i64;
    let side = (2 * half + 1) as f64;
    if side.powi(dim as i32) > budget as f64 {
        return Err(Error::BudgetExceeded {
            budget,
            what: what.to_string(),
        });
    }
    let mut offset = vec![-half; dim];
    loop {
        f(&offset);
        let mut axis = 0;
        loop {
            if axis == dim {
                return Ok(());
            }
            if offset[axis] < half {
                offset[axis] += 1;
                break;
            }
            offset[axis] = -half;
            axis += 1;
        }
    }
}

/// `(radius, count)` for each realized level `0 ≤ r ≤ radius`, level 0 first.
fn lattice_level_counts(dim: usize, norm: PNorm, radius: f64, budget: usize) -> Result<Vec<(f64, u64)>> {
    let mut keys: Vec<RadiusKey> = Vec::new();
    for_each_box_point(dim, radius, budget, "lattice ladder", |offset| {
        if within(norm.norm(offset), radius) {
            keys.push(norm.key(offset));
        }
    })?;
    keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut levels: Vec<(f64, u64)> = Vec::new();
    let mut prev: Option<RadiusKey> = None;
    for key in keys {
        match prev {
            Some(p) if same_radius(norm, p, key) => levels.last_mut().unwrap().1 += 1,
            _ => {
                levels.push((norm.key_radius(key), 1));
                prev = Some(key);
            }
        }
    }
    Ok(levels)
}

fn ladder_from_levels(levels: &[(f64, u64)], k_max: usize) -> RadiiLadder {
    let mut radii = Vec::new();
    let mut counts = Vec::new();
    let mut total = levels.first().map(|l| l.1).unwrap_or(1);
    for &(r, c) in levels.iter().skip(1).take(k_max) {
        total += c;
        radii.push(r);
        counts.push(total);
    }
    RadiiLadder { radii, ball_counts: counts }
}

/// Reads a whitespace-separated undirected edge list (`u v` per line; blank
/// lines and `#` comments ignored) and returns the component of `base_node`.
pub fn ingest_graph(source: impl BufRead, base_node: u64) -> Result<DiscreteSpace> {
    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut labels: Vec<u64> = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |id: u64, labels: &mut Vec<u64>| -> u32 {
        *index.entry(id).or_insert_with(|| {
            labels.push(id);
            (labels.len() - 1) as u32
        })
    };
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected two node ids, found {} fields", fields.len()),
            });
        }
        let mut ids = [0u64; 2];
        for (slot, field) in ids.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("`{field}` is not a nonnegative integer"),
            })?;
        }
        let u = intern(ids[0], &mut labels);
        let v = intern(ids[1], &mut labels);
        edges.push((u, v));
    }
    let graph = Graph::from_edges(labels, edges, None);
    DiscreteSpace::from_graph(&graph, base_node, GraphOrigin::EdgeList)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Finite-sample diagnostic for `N_{k+1}/N_k → 1`.
#[derive(Clone, Debug, Serialize)]
pub struct CRatioReport {
    /// `ρ_k` for `k = 1 .. K-1`.
    pub ratios: Vec<f64>,
    /// Ladder indices `[k₀, K−1]` of the ratios in the tail window.
    pub tail_window: (usize, usize),
    pub max_tail_deviation: f64,
    pub min_tail_deviation: f64,
    /// Last ratio `ρ_{K−1}`.
    pub tail_ratio: f64,
    /// Max deviation over `(K/8, K/4]`, `(K/4, K/2]`, `(K/2, K−1]`.
    pub subwindow_max: [f64; 3],
    pub threshold: f64,
    pub tail_fraction: f64,
    pub verdict: Verdict,
}

/// Minimum ladder length accepted by [`condition_c_report`].
pub const MIN_LADDER_FOR_C: usize = 10;

/// Pass iff the tail deviations `|ρ_k − 1|` stay below `threshold` and the
/// maxima over three dyadic sub-windows are non-increasing. Fail iff every
/// tail deviation is above `threshold` and the last sub-window keeps at
/// least half of the previous one's maximum (no visible decay). Otherwise
/// inconclusive.
pub fn condition_c_report(ladder: &RadiiLadder, tail_fraction: f64, threshold: f64) -> Result<CRatioReport> {
    if ladder.len() < MIN_LADDER_FOR_C {
        return invalid(format!(
            "condition (C) needs at least {MIN_LADDER_FOR_C} ladder entries, got {}",
            ladder.len()
        ));
    }
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return invalid("tail fraction must lie in (0, 1)");
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return invalid("threshold must lie in (0, 1)");
    }
    let ratios = ladder.ratios();
    let m = ratios.len();
    let dev = |k: usize| (ratios[k - 1] - 1.0).abs();
    let tail_len = ((tail_fraction * m as f64).ceil() as usize).clamp(1, m);
    let k0 = m - tail_len + 1;
    let tail: Vec<f64> = (k0..=m).map(dev).collect();
    let max_tail = tail.iter().copied().fold(0.0, f64::max);
    let min_tail = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let kk = ladder.len();
    let bounds = [(kk / 8, kk / 4), (kk / 4, kk / 2), (kk / 2, m)];
    let mut sub = [0.0f64; 3];
    for (slot, &(lo, hi)) in sub.iter_mut().zip(&bounds) {
        *slot = ((lo + 1).max(1)..=hi.min(m)).map(dev).fold(0.0, f64::max);
    }
    let trend_ok = sub[0] >= sub[1] && sub[1] >= sub[2];
    let verdict = if max_tail <= threshold && trend_ok {
        Verdict::Pass
    } else if min_tail > threshold && sub[2] >= 0.5 * sub[1] {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Ok(CRatioReport {
        tail_ratio: ratios[m - 1],
        ratios,
        tail_window: (k0, m),
        max_tail_deviation: max_tail,
        min_tail_deviation: min_tail,
        subwindow_max: sub,
        threshold,
        tail_fraction,
        verdict,
    })
}

/// Shell counts `S_k = N_k − N_{k−1}` for `k = 1..K`, with `N_0 := 1`
/// (the base point alone), so `S_1 = N_1 − 1`.
pub fn coordination_sequence(ladder: &RadiiLadder) -> Vec<u64> {
    (1..=ladder.len())
        .map(|k| ladder.level_count(k) - ladder.level_count(k - 1))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiPolyFit {
    pub period: usize,
    pub degree: usize,
    /// `coefficients[r][j]` multiplies `k^j` for `k ≡ r (mod period)`.
    pub coefficients: Vec<Vec<f64>>,
    /// Inclusive range of `k` used in the fit (and in the residual).
    pub fit_range: (usize, usize),
    pub max_residual: f64,
}

impl QuasiPolyFit {
    pub fn eval(&self, k: usize) -> f64 {
        self.coefficients[k % self.period]
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * k as f64 + c)
    }
}

/// Least-squares quasi-polynomial fit of `coord[k-1] = S_k`. The first
/// `period·(degree+1)` terms are treated as transient and skipped.
pub fn quasi_poly_fit(coord: &[f64], period: usize, degree: usize) -> Result<QuasiPolyFit> {
    if period == 0 {
        return invalid("period must be at least 1");
    }
    if coord.len() < period * (degree + 2) {
        return invalid(format!(
            "need at least {} terms for period {period}, degree {degree}",
            period * (degree + 2)
        ));
    }
    let start = period * (degree + 1) + 1;
    let end = coord.len();
    let scale = end as f64;
    let mut coefficients = Vec::with_capacity(period);
    let mut max_residual = 0.0f64;
    for r in 0..period {
        let ks: Vec<usize> = (start..=end).filter(|k| k % period == r).collect();
        if ks.len() < degree + 1 {
            return invalid(format!("residue class {r} has {} points, degree {degree} needs {}", ks.len(), degree + 1));
        }
        let a = DMatrix::from_fn(ks.len(), degree + 1, |i, j| (ks[i] as f64 / scale).powi(j as i32));
        let b = DVector::from_iterator(ks.len(), ks.iter().map(|&k| coord[k - 1]));
        let svd = a.svd(true, true);
        let x = svd
            .solve(&b, 1e-12)
            .map_err(|e| Error::Invalid(format!("least squares failed: {e}")))?;
        let c: Vec<f64> = (0..=degree).map(|j| x[j] / scale.powi(j as i32)).collect();
        for &k in &ks {
            let fitted = c.iter().rev().fold(0.0, |acc, &cj| acc * k as f64 + cj);
            max_residual = max_residual.max((coord[k - 1] - fitted).abs());
        }
        coefficients.push(c);
    }
    Ok(QuasiPolyFit {
        period,
        degree,
        coefficients,
        fit_range: (start, end),
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(d: usize, norm: PNorm) -> DiscreteSpace {
        DiscreteSpace::lattice(d, norm).unwrap()
    }

    #[test]
    fn z1_ball_of_radius_three() {
        let pts = z(1, PNorm::L2).ball_points(3.0).unwrap();
        assert_eq!(pts.len(), 7);
        assert_eq!(pts[0], (Point::Lattice(vec![0]), 0.0));
        assert_eq!(pts[1].0, Point::Lattice(vec![-1]));
        assert_eq!(pts[2].0, Point::Lattice(vec![1]));
    }

    #[test]
    fn z2_l1_ball_matches_brute_force() {
        let space = z(2, PNorm::L1);
        for r in 0i64..6 {
            let brute = (-r..=r)
                .flat_map(|x| (-r..=r).map(move |y| (x, y)))
                .filter(|(x, y)| x.abs() + y.abs() <= r)
                .count();
            assert_eq!(space.ball_points(r as f64).unwrap().len(), brute);
        }
        assert_eq!(space.ball_points(1.0).unwrap().len(), 5);
    }

    #[test]
    fn f2_ball_has_two_three_to_the_k_minus_one_points() {
        let space = DiscreteSpace::cayley_f2();
        for k in 0..6 {
            assert_eq!(space.ball_points(k as f64).unwrap().len(), 2 * 3usize.pow(k) - 1);
        }
        assert_eq!(space.ball_points(2.0).unwrap().len(), 17);
    }

    #[test]
    fn ladders_of_small_lattices() {
        let l = z(2, PNorm::L2).radii_ladder(4).unwrap();
        assert_eq!(l.ball_counts, vec![5, 9, 13, 21]);
        let expected = [1.0, 2f64.sqrt(), 2.0, 5f64.sqrt()];
        for (r, e) in l.radii.iter().zip(expected) {
            assert!((r - e).abs() < 1e-15);
        }
        let l = z(1, PNorm::L2).radii_ladder(3).unwrap();
        assert_eq!((l.radii, l.ball_counts), (vec![1.0, 2.0, 3.0], vec![3, 5, 7]));
        let l = z(2, PNorm::L1).radii_ladder(3).unwrap();
        assert_eq!(l.ball_counts, vec![5, 13, 25]);
    }

    #[test]
    fn ladder_counts_agree_with_ball_enumeration() {
        let spaces = [
            z(2, PNorm::L2),
            z(2, PNorm::LInf),
            z(3, PNorm::L1),
            z(2, PNorm::P(3.0)),
            DiscreteSpace::cayley_f2(),
        ];
        for space in spaces {
            let ladder = space.radii_ladder(6).unwrap();
            for k in 1..=6 {
                let n = space.ball_points(ladder.level_radius(k)).unwrap().len() as u64;
                assert_eq!(n, ladder.level_count(k), "{:?} level {k}", space.descriptor());
            }
        }
    }

    #[test]
    fn general_p_levels_merge_permutations() {
        let space = z(2, PNorm::P(3.0));
        let ball = space.ball(2.0).unwrap();
        // (1,2) and (2,1) share a radius; so do all sign flips.
        let r12 = ball.points.iter().position(|p| *p == Point::Lattice(vec![1, 2]));
        assert!(r12.is_none(), "|(1,2)|_3 = 9^(1/3) > 2");
        let ball = space.ball(2.1).unwrap();
        let levels: Vec<usize> = ball
            .points
            .iter()
            .zip(&ball.levels)
            .filter(|(p, _)| matches!(p, Point::Lattice(c) if c.iter().map(|x| x.abs()).sum::<i64>() == 3 && c.iter().all(|x| *x != 0)))
            .map(|(_, l)| *l)
            .collect();
        assert_eq!(levels.len(), 8);
        assert!(levels.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn coordination_sequences() {
        let s = coordination_sequence(&z(2, PNorm::L1).radii_ladder(10).unwrap());
        assert_eq!(s, (1..=10).map(|k| 4 * k).collect::<Vec<u64>>());
        let s = coordination_sequence(&z(1, PNorm::L2).radii_ladder(10).unwrap());
        assert!(s.iter().all(|&x| x == 2));
        let s = coordination_sequence(&DiscreteSpace::cayley_f2().radii_ladder(10).unwrap());
        assert_eq!(s, (1..=10).map(|k| 4 * 3u64.pow(k - 1)).collect::<Vec<u64>>());
    }

    #[test]
    fn f2_ladder_overflow_is_a_partial_ladder() {
        match DiscreteSpace::cayley_f2().radii_ladder(60) {
            Err(Error::PartialLadder { completed, requested, .. }) => {
                assert_eq!(requested, 60);
                assert!(completed.len() > 30);
            }
            other => panic!("expected partial ladder, got {other:?}"),
        }
    }

    #[test]
    fn condition_c_verdicts() {
        let r = condition_c_report(&z(1, PNorm::L2).radii_ladder(500).unwrap(), 0.2, 0.01).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = condition_c_report(&DiscreteSpace::cayley_f2().radii_ladder(20).unwrap(), 0.2, 0.01).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!((r.tail_ratio - 3.0).abs() < 1e-6);
        assert!(r.ratios.iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn condition_c_rejects_short_ladders_and_bad_thresholds() {
        let l = z(1, PNorm::L2).radii_ladder(9).unwrap();
        assert!(condition_c_report(&l, 0.2, 0.01).is_err());
        let l = z(1, PNorm::L2).radii_ladder(20).unwrap();
        assert!(condition_c_report(&l, 0.2, 1.5).is_err());
        assert!(condition_c_report(&l, 0.0, 0.1).is_err());
    }

    #[test]
    fn quasi_polynomial_fits() {
        let s: Vec<f64> = (1..=40).map(|k| 4.0 * k as f64).collect();
        let fit = quasi_poly_fit(&s, 1, 1).unwrap();
        assert!((fit.coefficients[0][1] - 4.0).abs() < 1e-9);
        assert!(fit.coefficients[0][0].abs() < 1e-9);
        assert!(fit.max_residual < 1e-9);

        let s: Vec<f64> = (1..=40).map(|k| (2 * k + (k % 2)) as f64).collect();
        let fit = quasi_poly_fit(&s, 2, 1).unwrap();
        assert!(fit.max_residual < 1e-9);
        assert!((fit.eval(41) - 83.0).abs() < 1e-8);

        let s: Vec<f64> = (1..=20).map(|k| 3f64.powi(k)).collect();
        let fit = quasi_poly_fit(&s, 1, 2).unwrap();
        assert!(fit.max_residual > 1e6);
    }

    #[test]
    fn quasi_polynomial_fit_errors_when_underdetermined() {
        let s: Vec<f64> = (1..=5).map(|k| k as f64).collect();
        assert!(quasi_poly_fit(&s, 2, 1).is_err());
        assert!(quasi_poly_fit(&s, 0, 1).is_err());
    }

    #[test]
    fn ingest_edge_lists() {
        let path = ingest_graph("0 1\n1 2\n2 3\n".as_bytes(), 0).unwrap();
        assert_eq!(path.ball_points(2.0).unwrap().len(), 3);

        let cycle = ingest_graph("0 1\n1 2\n2 3\n3 0\n0 1\n".as_bytes(), 0).unwrap();
        let l = cycle.radii_ladder(2).unwrap();
        assert_eq!((l.radii, l.ball_counts), (vec![1.0, 2.0], vec![3, 4]));

        let two = ingest_graph("0 1\n1 2\n10 11\n".as_bytes(), 11).unwrap();
        assert_eq!(two.graph_space().unwrap().graph.node_count(), 2);
    }

    #[test]
    fn ingest_reports_errors() {
        match ingest_graph("0 1\n1 x\n".as_bytes(), 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match ingest_graph("0 1 2\n".as_bytes(), 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ingest_graph("0 1\n".as_bytes(), 7), Err(Error::MissingBaseNode(7))));
    }

    #[test]
    fn exhausted_graph_gives_partial_ladder() {
        let cycle = ingest_graph("0 1\n1 2\n2 3\n3 0\n".as_bytes(), 0).unwrap();
        match cycle.radii_ladder(5) {
            Err(Error::PartialLadder { completed, .. }) => assert_eq!(completed.ball_counts, vec![3, 4]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn budget_is_enforced() {
        let space = z(2, PNorm::L2).with_budget(100);
        assert!(matches!(space.ball_points(10.0), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(space.radii_ladder(1000), Err(Error::PartialLadder { .. })));
        let f2 = DiscreteSpace::cayley_f2().with_budget(100);
        assert!(matches!(f2.ball_points(5.0), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn half_line_distances() {
        let n = DiscreteSpace::half_line(10).unwrap();
        assert_eq!(n.base_point(), &Point::Node(1));
        assert_eq!(n.distance(&Point::Node(3), &Point::Node(9)).unwrap(), 6.0);
        assert_eq!(n.ball_points(2.0).unwrap().len(), 3);
    }

    #[test]
    fn points_of_other_kinds_are_rejected() {
        let space = z(2, PNorm::L2);
        assert!(space.distance(&Point::Node(0), &Point::Lattice(vec![0, 0])).is_err());
        assert!(space.distance(&Point::Lattice(vec![0]), &Point::Lattice(vec![0, 0])).is_err());
    }
}
