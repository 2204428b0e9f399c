//! Bounded finite-range operators `H = hopping + potential` on enumerated
//! balls, radial weights `w`, and the weak-ℓ₁ certificate for `w`.

use std::borrow::Cow;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::counter_rng::{site_key, uniform};
use crate::error::{invalid, Error, Result};
use crate::metric_spaces::{Ball, DiscreteSpace, Letter, PNorm, Point, RadiiLadder, SpaceKind};
use crate::reference_models::counterexample_lambda;
use crate::spectral_core::matrix::{SparseSym, SymMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTerm {
    pub offset: Vec<i64>,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Hopping {
    /// No off-diagonal part.
    None,
    /// Amplitude 1 between nearest neighbours (ℓ₁ neighbours on lattices).
    Adjacency,
    /// `deg − A`, with the degree of the full space.
    Laplacian,
    /// Translation-invariant lattice kernel; must satisfy `a(δ) = a(−δ)`.
    Kernel { terms: Vec<KernelTerm> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Zero,
    /// `values[Σ_i (x_i mod period_i)·stride_i]`, last axis fastest. On graph
    /// spaces a single period applies to the node label.
    Periodic { period: Vec<i64>, values: Vec<f64> },
    /// Independent uniform values on `[low, high]`, a function of `(seed, site)`.
    IidUniform { low: f64, high: f64, seed: u64 },
    /// `values[label]` on graph spaces.
    Table { values: Vec<f64> },
    /// The 0/1 block sequence `λ_n` evaluated at node label `n ≥ 1`.
    Counterexample,
}

/// Hopping plus potential, optionally translated: with `shift = n` the
/// potential is evaluated as `V(x − n)`, i.e. the operator `U_n H U_n*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub hopping: Hopping,
    #[serde(default = "zero_potential")]
    pub potential: Potential,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<i64>>,
}

fn zero_potential() -> Potential {
    Potential::Zero
}

impl HamiltonianSpec {
    pub fn new(hopping: Hopping, potential: Potential) -> Self {
        HamiltonianSpec {
            hopping,
            potential,
            shift: None,
        }
    }

    pub fn adjacency() -> Self {
        Self::new(Hopping::Adjacency, Potential::Zero)
    }

    pub fn zero() -> Self {
        Self::new(Hopping::None, Potential::Zero)
    }

    pub fn shifted(&self, shift: Vec<i64>) -> Self {
        let mut s = self.clone();
        s.shift = Some(shift);
        s
    }

    pub fn validate(&self, space: &DiscreteSpace) -> Result<()> {
        let lattice_dim = space.lattice_dim();
        match &self.hopping {
            Hopping::Kernel { terms } => {
                let Some(d) = lattice_dim else {
                    return invalid("kernel hopping needs a lattice space");
                };
                let mut table: HashMap<&[i64], f64> = HashMap::new();
                for t in terms {
                    if t.offset.len() != d {
                        return invalid(format!("kernel offset {:?} has wrong dimension", t.offset));
                    }
                    if !t.amplitude.is_finite() {
                        return invalid("kernel amplitudes must be finite");
                    }
                    *table.entry(&t.offset).or_insert(0.0) += t.amplitude;
                }
                for (off, amp) in &table {
                    let neg: Vec<i64> = off.iter().map(|x| -x).collect();
                    if table.get(neg.as_slice()) != Some(amp) {
                        return invalid(format!("kernel is not symmetric at offset {off:?}"));
                    }
                }
            }
            Hopping::None | Hopping::Adjacency | Hopping::Laplacian => {}
        }
        match &self.potential {
            Potential::Periodic { period, values } => {
                let expected_len = lattice_dim.unwrap_or(1);
                if period.len() != expected_len || period.iter().any(|&p| p < 1) {
                    return invalid("periodic potential needs one positive period per axis");
                }
                let cells: i64 = period.iter().product();
                if values.len() as i64 != cells {
                    return invalid(format!("periodic potential needs {cells} values, got {}", values.len()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return invalid("potential values must be finite");
                }
                if matches!(space.kind(), SpaceKind::CayleyF2) {
                    return invalid("periodic potentials are not defined on the free group");
                }
            }
            Potential::IidUniform { low, high, .. } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return invalid("iid potential needs finite low ≤ high");
                }
            }
            Potential::Table { values } => {
                if space.graph_space().is_none() {
                    return invalid("table potentials are indexed by node label and need a graph space");
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return invalid("potential values must be finite");
                }
            }
            Potential::Counterexample => {
                if space.graph_space().is_none() {
                    return invalid("the counterexample potential needs a graph space labelled by 1, 2, …");
                }
            }
            Potential::Zero => {}
        }
        if let Some(shift) = &self.shift {
            if lattice_dim != Some(shift.len()) {
                return invalid("shifts are only defined on lattices of matching dimension");
            }
        }
        Ok(())
    }

    /// `V(x)` (after the optional shift).
    pub fn potential_at(&self, point: &Point) -> Result<f64> {
        let shifted;
        let point = match (&self.shift, point) {
            (Some(n), Point::Lattice(x)) => {
                shifted = Point::Lattice(x.iter().zip(n).map(|(a, b)| a - b).collect());
                &shifted
            }
            _ => point,
        };
        Ok(match (&self.potential, point) {
            (Potential::Zero, _) => 0.0,
            (Potential::Periodic { period, values }, Point::Lattice(x)) => {
                let mut idx = 0i64;
                for (xi, pi) in x.iter().zip(period) {
                    idx = idx * pi + xi.rem_euclid(*pi);
                }
                values[idx as usize]
            }
            (Potential::Periodic { period, values }, Point::Node(id)) => values[(*id % period[0] as u64) as usize],
            (Potential::IidUniform { low, high, seed }, p) => {
                let key = match p {
                    Point::Lattice(x) => site_key(x),
                    Point::Node(id) => *id,
                    Point::Word(w) => word_key(w),
                };
                low + (high - low) * uniform(*seed, key)
            }
            (Potential::Table { values }, Point::Node(id)) => *values
                .get(*id as usize)
                .ok_or_else(|| Error::Invalid(format!("table potential has no value for node {id}")))?,
            (Potential::Counterexample, Point::Node(id)) => counterexample_lambda(*id)? as f64,
            (pot, p) => return invalid(format!("potential {pot:?} is not defined at {p}")),
        })
    }
}

fn word_key(w: &[Letter]) -> u64 {
    let coords: Vec<i64> = w.iter().map(|&l| l as i64).collect();
    site_key(&coords) ^ (w.len() as u64).rotate_left(32)
}

/// Radial weight `w(x) = profile[level of d(x₀, x)]`, strictly positive and
/// strictly decreasing in the level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightFunction {
    profile: Vec<f64>,
    pub provenance: WeightProvenance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightProvenance {
    Default,
    LatticePower { dim: usize, p: f64 },
    Custom,
}

impl WeightFunction {
    pub fn from_profile(profile: Vec<f64>, provenance: WeightProvenance) -> Result<Self> {
        if profile.is_empty() {
            return invalid("weight profile is empty");
        }
        if profile.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return invalid("weights must be finite and strictly positive");
        }
        if let Some(k) = profile.windows(2).position(|p| !(p[1] < p[0])) {
            return invalid(format!("weight profile not strictly decreasing at level {}", k + 1));
        }
        Ok(WeightFunction { profile, provenance })
    }

    /// `w_k` for ladder level `k` (0 is the base point).
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn levels(&self) -> usize {
        self.profile.len()
    }

    pub fn at_level(&self, k: usize) -> Result<f64> {
        self.profile
            .get(k)
            .copied()
            .ok_or_else(|| Error::Invalid(format!("weight profile covers {} levels, level {k} requested", self.profile.len())))
    }

    pub fn at_levels(&self, levels: &[usize]) -> Result<Vec<f64>> {
        levels.iter().map(|&k| self.at_level(k)).collect()
    }
}

/// `w_k = 1/(1 + N_k)`, so the base point gets `1/2`.
pub fn default_weight(ladder: &RadiiLadder) -> Result<WeightFunction> {
    let profile = (0..=ladder.len()).map(|k| 1.0 / (1.0 + ladder.level_count(k) as f64)).collect();
    WeightFunction::from_profile(profile, WeightProvenance::Default)
}

/// `w(x) = (1 + ‖x − x₀‖_p)^{−d}` on a lattice.
pub fn lattice_weight(space: &DiscreteSpace, ladder: &RadiiLadder) -> Result<WeightFunction> {
    let SpaceKind::Lattice { dim, norm } = space.kind() else {
        return invalid("lattice weights need a lattice space");
    };
    let profile = (0..=ladder.len())
        .map(|k| (1.0 + ladder.level_radius(k)).powi(-(*dim as i32)))
        .collect();
    WeightFunction::from_profile(
        profile,
        WeightProvenance::LatticePower {
            dim: *dim,
            p: norm.index(),
        },
    )
}

/// Pointwise `(1 + ‖x‖_p)^{−d}`.
pub fn lattice_weight_at(norm: PNorm, x: &[i64]) -> f64 {
    (1.0 + norm.norm(x)).powi(-(x.len() as i32))
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakL1Level {
    pub k: usize,
    pub weight: f64,
    pub count: u64,
    pub product: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakL1Report {
    /// `max_k w_k·N_k`, the best constant `C` in `|{w ≥ t}| ≤ C/t` over the ladder.
    pub c_estimate: f64,
    pub levels: Vec<WeakL1Level>,
    /// Max of `w_k·N_k` over the first half of the levels.
    pub head_max: f64,
    /// Max over the last quarter.
    pub tail_max: f64,
    /// Set when the tail exceeds the head by more than 5%.
    pub growing: bool,
}

/// Weak-ℓ₁ certificate: the distribution function of a radial decreasing
/// weight is a step function with jumps at the weight levels, so
/// `sup_t t·|{w ≥ t}| = max_k w_k·N_k`.
pub fn weak_l1_bound(profile: &[f64], ladder: &RadiiLadder) -> Result<WeakL1Report> {
    if profile.is_empty() {
        return invalid("empty weight profile");
    }
    if profile.len() > ladder.len() + 1 {
        return invalid("ladder does not cover the weight profile");
    }
    if let Some(k) = profile.windows(2).position(|p| !(p[1] <= p[0])) {
        return invalid(format!("weight profile is not monotone at level {}", k + 1));
    }
    let levels: Vec<WeakL1Level> = profile
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let n = ladder.level_count(k);
            WeakL1Level {
                k,
                weight: w,
                count: n,
                product: w * n as f64,
            }
        })
        .collect();
    let max_over = |r: &[WeakL1Level]| r.iter().map(|l| l.product).fold(0.0, f64::max);
    let m = levels.len();
    let head_max = max_over(&levels[..m.div_ceil(2)]);
    let tail_max = max_over(&levels[m - m.div_ceil(4)..]);
    Ok(WeakL1Report {
        c_estimate: max_over(&levels),
        head_max,
        tail_max,
        growing: tail_max > 1.05 * head_max,
        levels,
    })
}

/// `H` restricted to a finite set of sites (plain truncation).
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    points: Vec<Point>,
    distances: Vec<f64>,
    levels: Option<Vec<usize>>,
    outer_radius: Option<f64>,
    matrix: SymMatrix,
    reflection: Option<Vec<usize>>,
    spec: Option<HamiltonianSpec>,
}

impl TruncatedOperator {
    /// Wraps a bare symmetric matrix; sites are labelled `0..n`, each its own level.
    pub fn from_matrix(matrix: SymMatrix) -> Self {
        let n = matrix.dim();
        TruncatedOperator {
            points: (0..n as u64).map(Point::Node).collect(),
            distances: (0..n).map(|i| i as f64).collect(),
            levels: Some((0..n).collect()),
            outer_radius: None,
            matrix,
            reflection: None,
            spec: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn levels(&self) -> Option<&[usize]> {
        self.levels.as_deref()
    }

    pub fn outer_radius(&self) -> Option<f64> {
        self.outer_radius
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn spec(&self) -> Option<&HamiltonianSpec> {
        self.spec.as_ref()
    }

    pub fn reflection(&self) -> Option<&[usize]> {
        self.reflection.as_deref()
    }

    /// Same sites, new matrix (e.g. `g(H)`).
    pub fn with_matrix(&self, matrix: SymMatrix) -> Result<Self> {
        if matrix.dim() != self.dim() {
            return invalid("matrix dimension differs from site count");
        }
        Ok(TruncatedOperator {
            points: self.points.clone(),
            distances: self.distances.clone(),
            levels: self.levels.clone(),
            outer_radius: self.outer_radius,
            matrix,
            reflection: self.reflection.clone(),
            spec: self.spec.clone(),
        })
    }

    /// Site weights `w(x)` for a radial weight function.
    pub fn site_weights(&self, w: &WeightFunction) -> Result<Vec<f64>> {
        let levels = self
            .levels
            .as_ref()
            .ok_or_else(|| Error::Invalid("operator sites carry no ladder levels".into()))?;
        w.at_levels(levels)
    }

    /// The matrix split into reflection sectors when it commutes with the
    /// reflection of the ball, otherwise the matrix itself.
    pub fn structured(&self) -> Cow<'_, SymMatrix> {
        structured_matrix(&self.matrix, self.reflection.as_deref())
    }
}

pub(crate) fn structured_matrix<'a>(m: &'a SymMatrix, reflection: Option<&[usize]>) -> Cow<'a, SymMatrix> {
    if m.is_diagonal() || matches!(m, SymMatrix::Blocked(_)) {
        return Cow::Borrowed(m);
    }
    match reflection.and_then(|s| m.blocked_by(s)) {
        Some(b) => Cow::Owned(b),
        None => Cow::Borrowed(m),
    }
}

/// Offsets and amplitudes of the lattice hopping, plus its on-site part.
fn lattice_terms(hopping: &Hopping, dim: usize) -> (Vec<(Vec<i64>, f64)>, f64) {
    let unit = |axis: usize, s: i64| -> Vec<i64> {
        let mut v = vec![0; dim];
        v[axis] = s;
        v
    };
    match hopping {
        Hopping::None => (Vec::new(), 0.0),
        Hopping::Adjacency => ((0..dim).flat_map(|a| [(unit(a, 1), 1.0), (unit(a, -1), 1.0)]).collect(), 0.0),
        Hopping::Laplacian => (
            (0..dim).flat_map(|a| [(unit(a, 1), -1.0), (unit(a, -1), -1.0)]).collect(),
            2.0 * dim as f64,
        ),
        Hopping::Kernel { terms } => {
            let onsite = terms.iter().filter(|t| t.offset.iter().all(|&x| x == 0)).map(|t| t.amplitude).sum();
            let off = terms
                .iter()
                .filter(|t| t.offset.iter().any(|&x| x != 0))
                .map(|t| (t.offset.clone(), t.amplitude))
                .collect();
            (off, onsite)
        }
    }
}

/// Neighbours of `p` in the full space with hopping amplitudes, and the
/// on-site hopping contribution.
fn neighbours(space: &DiscreteSpace, hopping: &Hopping, lattice: &(Vec<(Vec<i64>, f64)>, f64), p: &Point) -> (Vec<(Point, f64)>, f64) {
    let (amp, diag) = match hopping {
        Hopping::None => return (Vec::new(), 0.0),
        Hopping::Adjacency => (1.0, 0.0),
        Hopping::Laplacian => (-1.0, f64::NAN),
        Hopping::Kernel { .. } => (0.0, 0.0),
    };
    match (space.kind(), p) {
        (SpaceKind::Lattice { .. }, Point::Lattice(x)) => {
            let out = lattice
                .0
                .iter()
                .map(|(d, a)| (Point::Lattice(x.iter().zip(d).map(|(u, v)| u + v).collect()), *a))
                .collect();
            (out, lattice.1)
        }
        (SpaceKind::Graph(g), Point::Node(id)) => {
            let i = g.graph.index_of(*id).expect("ball points are graph nodes");
            let nb = g.graph.neighbors(i);
            let d = if diag.is_nan() { nb.len() as f64 } else { diag };
            (nb.iter().map(|&j| (Point::Node(g.graph.label(j as usize)), amp)).collect(), d)
        }
        (SpaceKind::CayleyF2, Point::Word(w)) => {
            let out = (0..4u8)
                .map(|l| {
                    let mut v = w.clone();
                    if v.last() == Some(&(l ^ 1)) {
                        v.pop();
                    } else {
                        v.push(l);
                    }
                    (Point::Word(v), amp)
                })
                .collect();
            (out, if diag.is_nan() { 4.0 } else { diag })
        }
        _ => unreachable!("point kind matches space kind"),
    }
}

/// Matrix of `⟨δ_x, H δ_y⟩` for `x, y` in `B(x₀, R_outer)`; entries to points
/// outside the ball are dropped.
pub fn build_truncated(space: &DiscreteSpace, spec: &HamiltonianSpec, outer_radius: f64) -> Result<TruncatedOperator> {
    spec.validate(space)?;
    let ball = space.ball(outer_radius)?;
    let mut op = build_on_sites(space, spec, ball.points, ball.distances, Some(ball.levels))?;
    op.outer_radius = Some(outer_radius);
    Ok(op)
}

/// Plain truncation of `H` to an arbitrary finite site list.
pub fn build_on_points(space: &DiscreteSpace, spec: &HamiltonianSpec, points: Vec<Point>) -> Result<TruncatedOperator> {
    spec.validate(space)?;
    let distances = points.iter().map(|p| space.base_distance(p)).collect::<Result<Vec<_>>>()?;
    build_on_sites(space, spec, points, distances, None)
}

fn build_on_sites(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    points: Vec<Point>,
    distances: Vec<f64>,
    levels: Option<Vec<usize>>,
) -> Result<TruncatedOperator> {
    let index: HashMap<&Point, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    if index.len() != points.len() {
        return invalid("duplicate sites");
    }
    let lattice = match space.lattice_dim() {
        Some(d) => lattice_terms(&spec.hopping, d),
        None => (Vec::new(), 0.0),
    };
    let n = points.len();
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let (nb, onsite) = neighbours(space, &spec.hopping, &lattice, p);
        diag.push(spec.potential_at(p)? + onsite);
        for (q, amp) in nb {
            if let Some(&j) = index.get(&q) {
                if j > i {
                    upper.push((i as u32, j as u32, amp));
                }
            }
        }
    }
    let reflection = match (space.kind(), space.base_point()) {
        (SpaceKind::Lattice { .. }, Point::Lattice(base)) => points
            .iter()
            .map(|p| match p {
                Point::Lattice(x) => {
                    let r = Point::Lattice(x.iter().zip(base).map(|(a, b)| 2 * b - a).collect());
                    index.get(&r).copied()
                }
                _ => None,
            })
            .collect::<Option<Vec<usize>>>(),
        _ => None,
    };
    Ok(TruncatedOperator {
        matrix: SymMatrix::Sparse(SparseSym::new(n, diag, upper)?),
        points,
        distances,
        levels,
        outer_radius: None,
        reflection,
        spec: Some(spec.clone()),
    })
}

/// Enumerated ball together with its levels, exposed for pipelines that need
/// both the operator and the ladder radii of its sites.
pub fn ball_of(op: &TruncatedOperator) -> Option<Ball> {
    Some(Ball {
        points: op.points.clone(),
        distances: op.distances.clone(),
        levels: op.levels.clone()?,
        level_radii: Vec::new(),
    })
}
