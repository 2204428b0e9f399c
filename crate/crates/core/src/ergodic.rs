//! Translation equivariance of the DOS on ℤᵈ, Følner sequences, and
//! Følner averages of local diagonals `⟨δ_x, f(H_ξ)δ_x⟩` over random
//! potentials.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::counter_rng::mix;
use crate::dos_dixmier::{dos_approximant, DosEstimate};
use crate::error::{invalid, Error, Result};
use crate::hamiltonians::{build_on_points, lattice_weight_at, HamiltonianSpec, Potential};
use crate::metric_spaces::{DiscreteSpace, PNorm, Point, SpaceKind};
use crate::spectral_core::ScalarFunction;

#[derive(Clone, Debug, Serialize)]
pub struct WeightGapReport {
    /// `|w(x) − w(x − n)|` over `B(0, R)`, nonincreasing.
    #[serde(skip)]
    pub gaps: Vec<f64>,
    /// `sup_k k^{(d+1)/d} δ_k`, `k ≥ 1`.
    pub statistic: f64,
    /// Index `k` where the supremum is attained.
    pub argmax: usize,
    pub radius: f64,
    pub points: usize,
}

/// Decreasing rearrangement of `x ↦ |w(x) − w(x−n)|` for
/// `w = (1 + ‖x‖₂)^{−d}`, and its weak `ℓ_{d/(d+1),∞}` quasinorm over the ball.
pub fn shift_weight_gap(space: &DiscreteSpace, shift: &[i64], radius: f64) -> Result<WeightGapReport> {
    let Some(d) = space.lattice_dim() else {
        return invalid("weight gaps are defined on lattices");
    };
    if shift.len() != d {
        return invalid("shift dimension differs from the lattice");
    }
    let base = match space.base_point() {
        Point::Lattice(b) => b.clone(),
        _ => unreachable!(),
    };
    let ball = DiscreteSpace::lattice_at(PNorm::L2, base.clone())?
        .with_budget(space.budget())
        .ball_points(radius)?;
    let mut gaps: Vec<f64> = ball
        .iter()
        .map(|(p, _)| {
            let Point::Lattice(x) = p else { unreachable!() };
            let rel: Vec<i64> = x.iter().zip(&base).map(|(a, b)| a - b).collect();
            let moved: Vec<i64> = rel.iter().zip(shift).map(|(a, s)| a - s).collect();
            (lattice_weight_at(PNorm::L2, &rel) - lattice_weight_at(PNorm::L2, &moved)).abs()
        })
        .collect();
    gaps.sort_by(|a, b| b.total_cmp(a));
    let power = (d as f64 + 1.0) / d as f64;
    let (argmax, statistic) = gaps
        .iter()
        .enumerate()
        .map(|(i, &g)| (i + 1, ((i + 1) as f64).powf(power) * g))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(WeightGapReport {
        points: gaps.len(),
        gaps,
        statistic,
        argmax,
        radius,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceRow {
    pub radius: f64,
    pub original: f64,
    pub shifted: f64,
    pub difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceReport {
    pub shift: Vec<i64>,
    pub rows: Vec<EquivarianceRow>,
    pub max_difference: f64,
    /// Whether the differences are nonincreasing in the radius.
    pub decreasing: bool,
}

/// `|ν_k(H) − ν_k(U_n H U_n*)|` per radius, where the translated operator
/// evaluates the potential at `x − n`.
pub fn equivariance_check(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    shift: &[i64],
    g: &ScalarFunction,
    radii: &[f64],
    margin: f64,
) -> Result<EquivarianceReport> {
    if space.lattice_dim() != Some(shift.len()) {
        return invalid("equivariance needs a lattice space and a shift of matching dimension");
    }
    let shifted = spec.shifted(shift.to_vec());
    let (a, b): (Result<DosEstimate>, Result<DosEstimate>) = rayon::join(
        || dos_approximant(space, spec, g, radii, margin),
        || dos_approximant(space, &shifted, g, radii, margin),
    );
    let (a, b) = (a?, b?);
    let rows: Vec<EquivarianceRow> = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| EquivarianceRow {
            radius: x.radius,
            original: x.value,
            shifted: y.value,
            difference: (x.value - y.value).abs(),
        })
        .collect();
    Ok(EquivarianceReport {
        shift: shift.to_vec(),
        max_difference: rows.iter().map(|r| r.difference).fold(0.0, f64::max),
        decreasing: rows.windows(2).all(|w| w[1].difference <= w[0].difference),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum FolnerShape {
    /// `[−N, N]^d`.
    Cube,
    /// `{x : ‖x‖_p ≤ N}`, `p` as an index in `[1, ∞]`.
    Ball { p: f64 },
    /// `[0, N)` in ℤ.
    Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FolnerSequence {
    pub dim: usize,
    #[serde(flatten)]
    pub shape: FolnerShape,
    /// Size parameter `N` of each `F_n`.
    pub schedule: Vec<u64>,
}

impl FolnerSequence {
    pub fn cubes(dim: usize, schedule: Vec<u64>) -> Self {
        FolnerSequence {
            dim,
            shape: FolnerShape::Cube,
            schedule,
        }
    }

    pub fn balls(dim: usize, p: f64, schedule: Vec<u64>) -> Self {
        FolnerSequence {
            dim,
            shape: FolnerShape::Ball { p },
            schedule,
        }
    }

    pub fn dyadic_intervals(n_max: u32) -> Self {
        FolnerSequence {
            dim: 1,
            shape: FolnerShape::Interval,
            schedule: (0..=n_max).map(|n| 1u64 << n).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.schedule.is_empty() {
            return invalid("Følner sequence needs d ≥ 1 and a nonempty schedule");
        }
        if matches!(self.shape, FolnerShape::Interval) && (self.dim != 1 || self.schedule.contains(&0)) {
            return invalid("intervals [0, N) need d = 1 and N ≥ 1");
        }
        if let FolnerShape::Ball { p } = self.shape {
            PNorm::from_index(p)?;
        }
        Ok(())
    }

    /// The set `F_n`, in lexicographic order.
    pub fn set(&self, n: usize, budget: usize) -> Result<Vec<Vec<i64>>> {
        let size = *self
            .schedule
            .get(n)
            .ok_or_else(|| Error::Invalid(format!("schedule has no entry {n}")))?;
        let size_i = size as i64;
        let mut pts = match self.shape {
            FolnerShape::Cube => {
                let count = (2 * size + 1).checked_pow(self.dim as u32).filter(|&c| c as usize <= budget);
                if count.is_none() {
                    return Err(Error::BudgetExceeded {
                        budget,
                        what: format!("cube of half-width {size} in dimension {}", self.dim),
                    });
                }
                box_points(&vec![-size_i; self.dim], &vec![size_i; self.dim])
            }
            FolnerShape::Ball { p } => DiscreteSpace::lattice(self.dim, PNorm::from_index(p)?)?
                .with_budget(budget)
                .ball_points(size as f64)?
                .into_iter()
                .map(|(pt, _)| match pt {
                    Point::Lattice(x) => x,
                    _ => unreachable!(),
                })
                .collect(),
            FolnerShape::Interval => {
                if size as usize > budget {
                    return Err(Error::BudgetExceeded {
                        budget,
                        what: format!("interval of length {size}"),
                    });
                }
                (0..size_i).map(|x| vec![x]).collect()
            }
        };
        pts.sort();
        Ok(pts)
    }
}

/// All integer points of the box `lo ≤ x ≤ hi`, lexicographic.
fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(lo.len())];
    for (&a, &b) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (a..=b).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FolnerRow {
    pub n: usize,
    pub size: usize,
    /// `|F_n Δ (F_n + e_i)| / |F_n|` per generator `e_i`.
    pub deviations: Vec<f64>,
    /// `|∪_{k≤n} (F_{n+1} − F_k)| / |F_{n+1}|`, absent for the last set.
    pub temper_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FolnerReport {
    pub rows: Vec<FolnerRow>,
    pub tempered_constant: f64,
    pub nested: bool,
}

/// Exact set arithmetic for the Følner deviations and the Lindenstrauss
/// temperedness ratio. When the sets are nested the union reduces to
/// `F_{n+1} − F_n`.
pub fn folner_tempered_check(seq: &FolnerSequence, n_max: usize, budget: usize) -> Result<FolnerReport> {
    seq.validate()?;
    if n_max < 3 || n_max >= seq.schedule.len() {
        return invalid(format!("need 3 ≤ n_max < {}", seq.schedule.len()));
    }
    let sets: Vec<Vec<Vec<i64>>> = (0..=n_max).map(|n| seq.set(n, budget)).collect::<Result<_>>()?;
    let lookup: Vec<HashSet<&[i64]>> = sets.iter().map(|s| s.iter().map(|v| v.as_slice()).collect()).collect();
    let nested = (0..n_max).all(|n| sets[n].iter().all(|x| lookup[n + 1].contains(x.as_slice())));
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut constant = 0.0f64;
    for n in 0..=n_max {
        let f = &sets[n];
        let deviations = (0..seq.dim)
            .map(|axis| {
                // |F Δ (F+e)| = 2|F \ (F+e)|, and x ∈ F \ (F+e) iff x − e ∉ F
                let missing = f
                    .iter()
                    .filter(|x| {
                        let mut y = (*x).clone();
                        y[axis] -= 1;
                        !lookup[n].contains(y.as_slice())
                    })
                    .count();
                2.0 * missing as f64 / f.len() as f64
            })
            .collect();
        let temper_ratio = (n < n_max)
            .then(|| {
                let target = &sets[n + 1];
                let ks: Vec<usize> = if nested { vec![n] } else { (0..=n).collect() };
                let pairs: usize = ks.iter().map(|&k| sets[k].len()).sum::<usize>() * target.len();
                if pairs > budget.saturating_mul(8) {
                    return Err(Error::BudgetExceeded {
                        budget,
                        what: format!("difference set of {pairs} pairs"),
                    });
                }
                let mut diff: HashSet<Vec<i64>> = HashSet::new();
                for &k in &ks {
                    for a in &sets[k] {
                        for b in target {
                            diff.insert(b.iter().zip(a).map(|(u, v)| u - v).collect());
                        }
                    }
                }
                Ok(diff.len() as f64 / target.len() as f64)
            })
            .transpose()?;
        if let Some(r) = temper_ratio {
            constant = constant.max(r);
        }
        rows.push(FolnerRow {
            n,
            size: f.len(),
            deviations,
            temper_ratio,
        });
    }
    Ok(FolnerReport {
        rows,
        tempered_constant: constant,
        nested,
    })
}

pub const MIN_ERGODIC_MARGIN: i64 = 4;

/// `⟨δ_x, f(H)δ_x⟩` for each site, from local truncations: sites are grouped
/// into blocks of side `block`, and each block is solved on its bounding box
/// widened by `margin` in every direction. Returns the values and the block
/// index of every site.
pub fn local_diagonal(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    f: &ScalarFunction,
    sites: &[Vec<i64>],
    margin: i64,
    block: i64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let Some(d) = space.lattice_dim() else {
        return invalid("local diagonals need a lattice space");
    };
    if margin < MIN_ERGODIC_MARGIN {
        return invalid(format!("margin {margin} is below the minimum {MIN_ERGODIC_MARGIN}"));
    }
    if block < 1 || sites.iter().any(|s| s.len() != d) {
        return invalid("bad block size or site dimension");
    }
    let mut groups: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, s) in sites.iter().enumerate() {
        groups.entry(s.iter().map(|c| c.div_euclid(block)).collect()).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let solved: Vec<Result<Vec<(usize, f64)>>> = groups
        .par_iter()
        .map(|members| {
            let lo: Vec<i64> = (0..d).map(|a| members.iter().map(|&i| sites[i][a]).min().unwrap() - margin).collect();
            let hi: Vec<i64> = (0..d).map(|a| members.iter().map(|&i| sites[i][a]).max().unwrap() + margin).collect();
            let window = box_points(&lo, &hi);
            let extent: Vec<i64> = lo.iter().zip(&hi).map(|(a, b)| b - a + 1).collect();
            let op = build_on_points(space, spec, window.into_iter().map(Point::Lattice).collect())?;
            let dec = op.structured().decompose()?;
            if let Some((a, b)) = dec.spectral_range() {
                f.check_domain(a, b)?;
            }
            let diag = dec.diagonal_of(|t| f.eval(t));
            Ok(members
                .iter()
                .map(|&i| {
                    let idx = (0..d).fold(0i64, |acc, a| acc * extent[a] + (sites[i][a] - lo[a]));
                    (i, diag[idx as usize])
                })
                .collect())
        })
        .collect();
    let mut values = vec![0.0; sites.len()];
    let mut group_of = vec![0; sites.len()];
    for (g, r) in solved.into_iter().enumerate() {
        for (i, v) in r? {
            values[i] = v;
            group_of[i] = g;
        }
    }
    Ok((values, group_of))
}

/// Mean and batch-means standard error, batches given by `group_of`.
pub fn batch_mean_sem(values: &[f64], group_of: &[usize]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let groups = group_of.iter().copied().max().map_or(0, |g| g + 1);
    let mut sums = vec![0.0; groups];
    let mut counts = vec![0usize; groups];
    for (&v, &g) in values.iter().zip(group_of) {
        sums[g] += v;
        counts[g] += 1;
    }
    let b = counts.iter().filter(|&&c| c > 0).count() as f64;
    if b < 2.0 {
        return (mean, f64::NAN);
    }
    let nbar = n / b;
    let ss: f64 = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&s, &c)| {
            let frac = c as f64 / nbar;
            frac * frac * (s / c as f64 - mean).powi(2)
        })
        .sum();
    (mean, (ss / (b * (b - 1.0))).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationRow {
    pub index: usize,
    pub seed: u64,
    pub average: f64,
    /// Batch-means standard error of the Følner average.
    pub sem: f64,
    /// `(average − mean) / √(sem² + sem_of_mean²)`.
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicReport {
    pub realizations: Vec<RealizationRow>,
    pub mean: f64,
    pub sem_of_mean: f64,
    pub within_3_sem: usize,
    pub sites: usize,
    pub margin: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicOptions {
    pub margin: i64,
    pub block: i64,
}

impl ErgodicOptions {
    pub fn for_dim(d: usize) -> Self {
        let (margin, block) = match d {
            1 => (30, 100),
            2 => (12, 10),
            _ => (6, 4),
        };
        ErgodicOptions { margin, block }
    }
}

/// Seed of realization `r`.
pub fn realization_seed(seed: u64, r: usize) -> u64 {
    mix(seed, r as u64)
}

fn with_seed(spec: &HamiltonianSpec, seed: u64) -> Result<HamiltonianSpec> {
    let mut s = spec.clone();
    match &mut s.potential {
        Potential::IidUniform { seed: sd, .. } => *sd = seed,
        _ => return invalid("ergodic averages need an iid potential"),
    }
    Ok(s)
}

/// Følner average of `⟨δ_x, f(H_ξ)δ_x⟩` over `sites` for one realization.
pub fn realization_average(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    f: &ScalarFunction,
    sites: &[Vec<i64>],
    options: &ErgodicOptions,
) -> Result<(f64, f64)> {
    let (values, groups) = local_diagonal(space, spec, f, sites, options.margin, options.block)?;
    Ok(batch_mean_sem(&values, &groups))
}

pub fn ergodic_average(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    f: &ScalarFunction,
    sites: &[Vec<i64>],
    realizations: usize,
    seed: u64,
    options: &ErgodicOptions,
) -> Result<ErgodicReport> {
    if realizations < 2 {
        return invalid("need at least two realizations");
    }
    if !matches!(space.kind(), SpaceKind::Lattice { .. }) {
        return invalid("ergodic averages need a lattice space");
    }
    let rows: Vec<(u64, f64, f64)> = (0..realizations)
        .map(|r| {
            let s = realization_seed(seed, r);
            let (avg, sem) = realization_average(space, &with_seed(spec, s)?, f, sites, options)?;
            Ok((s, avg, sem))
        })
        .collect::<Result<_>>()?;
    let m = rows.len() as f64;
    let mean = rows.iter().map(|r| r.1).sum::<f64>() / m;
    let var = rows.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let sem_of_mean = (var / m).sqrt();
    let realizations: Vec<RealizationRow> = rows
        .into_iter()
        .enumerate()
        .map(|(index, (seed, average, sem))| {
            let scale = (sem * sem + sem_of_mean * sem_of_mean).sqrt();
            let z = if scale > 0.0 { (average - mean) / scale } else { 0.0 };
            RealizationRow {
                index,
                seed,
                average,
                sem,
                z,
            }
        })
        .collect();
    Ok(ErgodicReport {
        within_3_sem: realizations.iter().filter(|r| r.z.abs() <= 3.0).count(),
        realizations,
        mean,
        sem_of_mean,
        sites: sites.len(),
        margin: options.margin,
    })
}

/// [`ergodic_average`] over the set `F_n` of a Følner sequence.
pub fn ergodic_average_folner(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    f: &ScalarFunction,
    folner: &FolnerSequence,
    n: usize,
    realizations: usize,
    seed: u64,
    options: &ErgodicOptions,
) -> Result<ErgodicReport> {
    folner.validate()?;
    if space.lattice_dim() != Some(folner.dim) {
        return invalid("Følner sets and space differ in dimension");
    }
    let sites = folner.set(n, space.budget())?;
    ergodic_average(space, spec, f, &sites, realizations, seed, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::Hopping;

    fn z1() -> DiscreteSpace {
        DiscreteSpace::lattice(1, PNorm::L2).unwrap()
    }

    #[test]
    fn zero_shift_has_zero_gaps() {
        let r = shift_weight_gap(&z1(), &[0], 100.0).unwrap();
        assert!(r.gaps.iter().all(|&g| g == 0.0));
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn unit_shift_gap_decays_like_k_to_minus_two() {
        let r = shift_weight_gap(&z1(), &[1], 1000.0).unwrap();
        assert!(r.statistic > 0.5 && r.statistic < 8.0);
        let r2 = shift_weight_gap(&z1(), &[1], 2000.0).unwrap();
        assert!(r2.statistic <= r.statistic * 1.05);
    }

    #[test]
    fn cube_deviation_is_exact() {
        let seq = FolnerSequence::cubes(2, (0..6).collect());
        let rep = folner_tempered_check(&seq, 5, 1 << 20).unwrap();
        assert!(rep.nested);
        for row in &rep.rows {
            let side = 2.0 * row.n as f64 + 1.0;
            for &dev in &row.deviations {
                assert!((dev - 2.0 / side).abs() < 1e-15);
            }
        }
        // F_3 − F_2 is the cube of half-width 5
        assert_eq!(rep.rows[2].temper_ratio.unwrap(), 121.0 / 49.0);
    }

    #[test]
    fn dyadic_intervals() {
        let rep = folner_tempered_check(&FolnerSequence::dyadic_intervals(8), 7, 1 << 20).unwrap();
        for row in &rep.rows {
            assert_eq!(row.deviations[0], 2.0 / row.size as f64);
        }
        // [0,2^{n+1}) − [0,2^n) has 3·2^n − 1 points
        let n = 5;
        assert_eq!(rep.rows[n].temper_ratio.unwrap(), (3.0 * 32.0 - 1.0) / 64.0);
    }

    #[test]
    fn constant_potential_gives_deterministic_averages() {
        let spec = HamiltonianSpec::new(Hopping::Adjacency, Potential::IidUniform { low: 0.3, high: 0.3, seed: 0 });
        let sites: Vec<Vec<i64>> = (-150..=150).map(|x| vec![x]).collect();
        let f = ScalarFunction::gaussian(0.0, 1.0);
        let rep = ergodic_average(&z1(), &spec, &f, &sites, 3, 9, &ErgodicOptions::for_dim(1)).unwrap();
        let first = rep.realizations[0].average;
        for r in &rep.realizations {
            assert_eq!(r.average, first);
            assert!(r.sem < 1e-12);
        }
        assert_eq!(rep.sem_of_mean, 0.0);
    }

    #[test]
    fn local_diagonal_matches_a_large_truncation() {
        let spec = HamiltonianSpec::new(Hopping::Adjacency, Potential::IidUniform { low: 0.0, high: 1.0, seed: 5 });
        let f = ScalarFunction::gaussian(0.5, 0.7);
        let sites: Vec<Vec<i64>> = (-40..=40).map(|x| vec![x]).collect();
        let (local, _) = local_diagonal(&z1(), &spec, &f, &sites, 30, 20).unwrap();
        let big: Vec<Point> = (-200..=200).map(|x| Point::Lattice(vec![x])).collect();
        let op = build_on_points(&z1(), &spec, big).unwrap();
        let diag = op.structured().decompose().unwrap().diagonal_of(|t| f.eval(t));
        for (i, v) in local.iter().enumerate() {
            assert!((v - diag[i + 160]).abs() < 1e-10);
        }
    }
}
