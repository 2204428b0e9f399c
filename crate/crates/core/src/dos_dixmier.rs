//! Density-of-states approximants `Tr(g(H)χ_B)/|B|`, Dixmier approximants of
//! `g(H)M_w`, and the comparison of both sides of the DOS trace formula.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::hamiltonians::{build_truncated, weak_l1_bound, HamiltonianSpec, TruncatedOperator, WeakL1Report, WeightFunction};
use crate::metric_spaces::{condition_c_report, CRatioReport, DiscreteSpace, RadiiLadder, Verdict, RADIUS_TOLERANCE};
use crate::spectral_core::cesaro::{default_window, Neumaier};
use crate::spectral_core::{
    apply_decomposed, log_cesaro, modulated_gap, product_eigenvalues_with, slope_dixmier_estimate, CesaroSeries,
    Decomposition, EigenSequence, ModulatedGap, ScalarFunction, SlopeFit, SymMatrix,
};

pub const DEFAULT_MARGIN: f64 = 50.0;
pub const GAP_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct DosRow {
    pub radius: f64,
    pub ball_count: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DosEstimate {
    pub rows: Vec<DosRow>,
    /// Mean of the values over the last quarter of the radii.
    pub tail_mean: f64,
    /// `max − min` over the same rows.
    pub tail_spread: f64,
    pub margin: f64,
    pub outer_radius: f64,
    pub warnings: Vec<String>,
}

/// Averages of `diag` over the initial segments `{i : distances[i] ≤ r}`,
/// for sites sorted by distance.
pub fn ball_averages(distances: &[f64], diag: &[f64], radii: &[f64]) -> Result<Vec<DosRow>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("radii must be strictly increasing");
    }
    let mut rows = Vec::with_capacity(radii.len());
    let mut acc = Neumaier::default();
    let mut i = 0;
    for &r in radii {
        while i < distances.len() && distances[i] <= r + RADIUS_TOLERANCE {
            acc.add(diag[i]);
            i += 1;
        }
        if i == 0 {
            return invalid(format!("ball of radius {r} is empty"));
        }
        rows.push(DosRow {
            radius: r,
            ball_count: i,
            value: acc.value() / i as f64,
        });
    }
    Ok(rows)
}

fn tail_stats(values: &[f64]) -> (f64, f64) {
    let start = values.len() - values.len().div_ceil(4);
    let tail = &values[start..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    (mean, hi - lo)
}

impl DosEstimate {
    pub fn from_diagonal(op: &TruncatedOperator, diag: &[f64], radii: &[f64], margin: f64) -> Result<Self> {
        if radii.is_empty() {
            return invalid("no radii requested");
        }
        let outer = op.outer_radius().unwrap_or(f64::INFINITY);
        let r_max = radii[radii.len() - 1];
        if r_max + margin > outer + RADIUS_TOLERANCE {
            return invalid(format!("radius {r_max} plus margin {margin} exceeds the truncation radius {outer}"));
        }
        let rows = ball_averages(op.distances(), diag, radii)?;
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let (tail_mean, tail_spread) = tail_stats(&values);
        let mut warnings = Vec::new();
        if margin == 0.0 && !op.matrix().is_diagonal() {
            warnings.push("margin 0: ball averages include truncation-boundary sites".to_string());
        }
        Ok(DosEstimate {
            rows,
            tail_mean,
            tail_spread,
            margin,
            outer_radius: outer,
            warnings,
        })
    }
}

fn decompose(op: &TruncatedOperator) -> Result<Decomposition> {
    op.structured().decompose()
}

/// Diagonal of `g(H)` from a decomposition, after the domain check.
fn diagonal_of(dec: &Decomposition, g: &ScalarFunction) -> Result<Vec<f64>> {
    if let Some((lo, hi)) = dec.spectral_range() {
        g.check_domain(lo, hi)?;
    }
    Ok(dec.diagonal_of(|t| g.eval(t)))
}

/// `ν_k = Tr(g(H_R)χ_{B(x₀,r_k)})/|B(x₀,r_k)|` with `R = r_max + margin`.
pub fn dos_approximant(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    g: &ScalarFunction,
    radii: &[f64],
    margin: f64,
) -> Result<DosEstimate> {
    if !(margin >= 0.0) || radii.is_empty() {
        return invalid("need margin ≥ 0 and at least one radius");
    }
    let op = build_truncated(space, spec, radii[radii.len() - 1] + margin)?;
    let diag = diagonal_of(&decompose(&op)?, g)?;
    DosEstimate::from_diagonal(&op, &diag, radii, margin)
}

/// Same as [`dos_approximant`] for several functions sharing one eigensolve.
pub fn dos_approximants(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    gs: &[ScalarFunction],
    radii: &[f64],
    margin: f64,
) -> Result<Vec<DosEstimate>> {
    if !(margin >= 0.0) || radii.is_empty() {
        return invalid("need margin ≥ 0 and at least one radius");
    }
    let op = build_truncated(space, spec, radii[radii.len() - 1] + margin)?;
    let dec = decompose(&op)?;
    gs.iter()
        .map(|g| DosEstimate::from_diagonal(&op, &diagonal_of(&dec, g)?, radii, margin))
        .collect()
}

/// DOS values along the superlevel sets `{w ≥ ε}` of a radial weight, one row
/// per distinct weight value `ε`, largest first.
pub fn dos_along_weight_levels(diag: &[f64], w: &[f64]) -> Result<Vec<(f64, usize, f64)>> {
    if diag.len() != w.len() {
        return invalid("diagonal and weights differ in length");
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| w[j].total_cmp(&w[i]));
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    let mut acc = Neumaier::default();
    for (pos, &i) in order.iter().enumerate() {
        acc.add(diag[i]);
        let next_differs = order.get(pos + 1).is_none_or(|&j| w[j] != w[i]);
        if next_differs {
            out.push((w[i], pos + 1, acc.value() / (pos + 1) as f64));
        }
    }
    Ok(out)
}

/// Empirical integrated density of states: sorted eigenvalues of `H` on a ball.
#[derive(Clone, Debug, Serialize)]
pub struct IdsTable {
    pub energies: Vec<f64>,
}

impl IdsTable {
    pub fn new(mut energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() || energies.iter().any(|e| e.is_nan()) {
            return invalid("IDS needs a nonempty finite spectrum");
        }
        energies.sort_by(f64::total_cmp);
        Ok(IdsTable { energies })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Fraction of eigenvalues `≤ e`.
    pub fn fraction(&self, e: f64) -> f64 {
        self.energies.partition_point(|&x| x <= e) as f64 / self.len() as f64
    }

    /// `(E_i, (i+1)/n)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.len() as f64;
        self.energies.iter().enumerate().map(move |(i, &e)| (e, (i + 1) as f64 / n))
    }

    /// `sup |F_n(E) − N(E)|` over `E ∈ [lo, hi]`, using both one-sided limits
    /// at every jump and the window endpoints. `oracle` must be continuous.
    pub fn sup_distance(&self, oracle: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let n = self.len() as f64;
        let mut sup = (self.fraction(lo) - oracle(lo)).abs().max((self.fraction(hi) - oracle(hi)).abs());
        let start = self.energies.partition_point(|&x| x < lo);
        for (i, &e) in self.energies.iter().enumerate().skip(start) {
            if e > hi {
                break;
            }
            let o = oracle(e);
            sup = sup.max((i as f64 / n - o).abs()).max(((i + 1) as f64 / n - o).abs());
        }
        sup
    }
}

/// Eigenvalue counting for `H` on `B(x₀, r)`.
pub fn ids_histogram(space: &DiscreteSpace, spec: &HamiltonianSpec, r: f64) -> Result<IdsTable> {
    let op = build_truncated(space, spec, r)?;
    IdsTable::new(op.structured().eigenvalues()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurability {
    Strong,
    Weak,
    NotEstablished,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasurabilityRecord {
    pub verdict: Measurability,
    pub slope: f64,
    pub slope_drift: f64,
    pub residual_growth: f64,
    pub scale: f64,
    pub strong_threshold: f64,
    pub weak_threshold: f64,
}

pub const STRONG_FRACTION: f64 = 0.05;
pub const WEAK_FRACTION: f64 = 0.15;

/// Strong: the slope is stable across the window halves and the residuals
/// of `S(n) − c·log(2+n)` show no trend. Weak: stable slope, trending
/// residuals. Both thresholds are fractions of `max(|c|, max|Λ|)`.
pub fn measurability_diagnostic(fit: &SlopeFit, series: &CesaroSeries) -> MeasurabilityRecord {
    let (lo, hi) = fit.window;
    let lam_max = series
        .grid
        .iter()
        .zip(&series.lambda)
        .filter(|(n, _)| (lo..=hi).contains(*n))
        .map(|(_, l)| l.abs())
        .fold(0.0, f64::max);
    let scale = fit.slope.abs().max(lam_max).max(1e-12);
    let strong = STRONG_FRACTION * scale;
    let weak = WEAK_FRACTION * scale;
    let verdict = if fit.slope_drift <= strong && fit.residual_growth.abs() <= strong {
        Measurability::Strong
    } else if fit.slope_drift <= weak {
        Measurability::Weak
    } else {
        Measurability::NotEstablished
    };
    MeasurabilityRecord {
        verdict,
        slope: fit.slope,
        slope_drift: fit.slope_drift,
        residual_growth: fit.residual_growth,
        scale,
        strong_threshold: strong,
        weak_threshold: weak,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DixmierEstimate {
    pub fit: SlopeFit,
    pub series: CesaroSeries,
    pub measurability: MeasurabilityRecord,
    pub dimension: usize,
}

impl DixmierEstimate {
    pub fn from_values(values: &[f64], window: Option<(usize, usize)>) -> Result<Self> {
        let series = log_cesaro(values)?;
        Self::from_series(series, window)
    }

    pub fn from_series(series: CesaroSeries, window: Option<(usize, usize)>) -> Result<Self> {
        let fit = slope_dixmier_estimate(&series, window)?;
        let measurability = measurability_diagnostic(&fit, &series);
        Ok(DixmierEstimate {
            dimension: series.len,
            fit,
            series,
            measurability,
        })
    }

    pub fn value(&self) -> f64 {
        self.fit.slope
    }
}

/// Refuses weights whose weak-ℓ₁ constant trends upward over the ladder.
fn certify_weight(w: &WeightFunction, ladder: &RadiiLadder) -> Result<WeakL1Report> {
    let levels = w.levels().min(ladder.len() + 1);
    let report = weak_l1_bound(&w.profile()[..levels], ladder)?;
    if report.growing {
        return Err(Error::Hypothesis(format!(
            "weight does not look weak-ℓ₁: w_k·N_k grows from {} to {}",
            report.head_max, report.tail_max
        )));
    }
    Ok(report)
}

/// Number of leading eigenvalues of the truncated `T·M_w` that resolve the
/// infinite-volume sequence: those with `|λ| ≥ max|g| · w(R_outer − margin)`.
/// Smaller eigenvalues come from weights of sites near the truncation
/// boundary, and for `g` of small support the truncated spectrum collapses to
/// zero well before the last index.
pub fn reliable_prefix(eig: &EigenSequence, g_max: f64, w_inner: f64) -> usize {
    if g_max == 0.0 {
        return eig.len();
    }
    let tau = g_max * w_inner * (1.0 - 1e-12);
    eig.values.partition_point(|v| v.abs() >= tau)
}

fn inner_weight(op: &TruncatedOperator, sites: &[f64], inner_radius: f64) -> Result<f64> {
    op.distances()
        .iter()
        .zip(sites)
        .filter(|(d, _)| **d <= inner_radius + RADIUS_TOLERANCE)
        .map(|(_, w)| *w)
        .reduce(f64::min)
        .ok_or_else(|| Error::Invalid(format!("no sites within radius {inner_radius}")))
}

fn g_max(dec: &Decomposition, g: &ScalarFunction) -> f64 {
    dec.eigenvalues().iter().map(|&t| g.eval(t).abs()).fold(0.0, f64::max)
}

/// Dixmier approximant of `g(H)M_w` on `B(x₀, R_outer)`, fitted over the
/// eigenvalues that do not depend on sites within `margin` of the boundary.
pub fn dixmier_lhs(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    g: &ScalarFunction,
    w: &WeightFunction,
    outer_radius: f64,
    margin: f64,
) -> Result<DixmierEstimate> {
    let ladder = space.ladder_to_radius(outer_radius)?;
    certify_weight(w, &ladder)?;
    let op = build_truncated(space, spec, outer_radius)?;
    let dec = decompose(&op)?;
    let gh = apply_decomposed(&dec, g)?;
    let sites = op.site_weights(w)?;
    let eig = product_eigenvalues_with(&structured(&op, gh), &sites)?;
    let margin = if op.matrix().is_diagonal() { 0.0 } else { margin };
    let cap = reliable_prefix(&eig, g_max(&dec, g), inner_weight(&op, &sites, outer_radius - margin)?);
    DixmierEstimate::from_values(&eig.values[..cap.max(1)], None)
}

fn structured(op: &TruncatedOperator, m: SymMatrix) -> SymMatrix {
    match op.reflection() {
        Some(s) if !m.is_diagonal() && !matches!(m, SymMatrix::Blocked(_)) => m.blocked_by(s).unwrap_or(m),
        _ => m,
    }
}

/// `S(n)` for the diagonal operator `M_w`, `n < len`: eigenvalue `w_k` with
/// multiplicity equal to the `k`-th shell count. `None` takes the whole ladder.
pub fn weight_partial_sums(w: &WeightFunction, ladder: &RadiiLadder, len: Option<usize>) -> Result<CesaroSeries> {
    let levels = ladder.len() + 1;
    if w.levels() < levels {
        return invalid(format!("weight covers {} levels, ladder has {levels}", w.levels()));
    }
    let total = ladder.level_count(ladder.len()) as usize;
    let len = len.unwrap_or(total);
    if len == 0 || len > total {
        return invalid(format!("series length {len} outside 1..={total}"));
    }
    let profile = w.profile();
    let mut level = 0usize;
    let mut done = Neumaier::default();
    let mut prev_count = 0u64;
    Ok(CesaroSeries::from_partial_sums(len, |n| {
        // grid points arrive in increasing order
        while ladder.level_count(level) <= n as u64 {
            let c = ladder.level_count(level);
            done.add(profile[level] * (c - prev_count) as f64);
            prev_count = c;
            level += 1;
        }
        done.value() + profile[level] * (n as u64 + 1 - prev_count) as f64
    }))
}

pub fn weight_dixmier_trace(w: &WeightFunction, ladder: &RadiiLadder, window: Option<(usize, usize)>) -> Result<SlopeFit> {
    let series = weight_partial_sums(w, ladder, None)?;
    slope_dixmier_estimate(&series, window)
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCheckOptions {
    pub margin: f64,
    pub c_tail_fraction: f64,
    pub c_threshold: f64,
    /// Largest tolerated `max − min` of the DOS values over the tail radii.
    pub dos_spread_threshold: f64,
    pub window: Option<(usize, usize)>,
}

impl Default for TheoremCheckOptions {
    fn default() -> Self {
        TheoremCheckOptions {
            margin: DEFAULT_MARGIN,
            c_tail_fraction: 0.2,
            c_threshold: 0.01,
            dos_spread_threshold: 0.01,
            window: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCheck {
    pub function: ScalarFunction,
    /// Dixmier slope of `g(H)M_w`.
    pub lhs: f64,
    /// Dixmier slope of `M_w` over the same window.
    pub weight_trace: f64,
    /// Tail mean of the DOS approximants.
    pub rhs_limit: f64,
    pub rhs_spread: f64,
    pub product: f64,
    pub relative_gap: f64,
    pub window: (usize, usize),
    /// Leading eigenvalues used for the fits.
    pub reliable_eigenvalues: usize,
    pub outer_radius: f64,
    pub margin: f64,
    pub dos_radii: (f64, f64),
    pub condition_c: Verdict,
    pub measurability: MeasurabilityRecord,
    pub weak_l1_constant: f64,
    pub modulated_gap: ModulatedGap,
    #[serde(skip)]
    pub lhs_fit: SlopeFit,
    #[serde(skip)]
    pub weight_fit: SlopeFit,
    #[serde(skip)]
    pub dos: DosEstimate,
    #[serde(skip)]
    pub eigenvalues: EigenSequence,
}

pub fn main_theorem_check(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    g: &ScalarFunction,
    w: &WeightFunction,
    outer_radius: f64,
    options: &TheoremCheckOptions,
) -> Result<TheoremCheck> {
    let mut out = main_theorem_checks(space, spec, std::slice::from_ref(g), w, outer_radius, options)?;
    Ok(out.remove(0))
}

/// Runs the check for several `g`, sharing the eigendecomposition of `H`.
pub fn main_theorem_checks(
    space: &DiscreteSpace,
    spec: &HamiltonianSpec,
    gs: &[ScalarFunction],
    w: &WeightFunction,
    outer_radius: f64,
    options: &TheoremCheckOptions,
) -> Result<Vec<TheoremCheck>> {
    let ladder = space.ladder_to_radius(outer_radius)?;
    let c = condition_c(&ladder, options)?;
    if c.verdict == Verdict::Fail {
        return Err(Error::Hypothesis(format!(
            "condition (C) fails on this space (tail ratio {:.4}); the trace formula does not apply",
            c.tail_ratio
        )));
    }
    let weak = certify_weight(w, &ladder)?;
    let op = build_truncated(space, spec, outer_radius)?;
    let sites = op.site_weights(w)?;
    let dos_radii: Vec<f64> = ladder
        .radii
        .iter()
        .copied()
        .filter(|&r| r + options.margin <= outer_radius + RADIUS_TOLERANCE)
        .collect();
    if dos_radii.len() < 4 {
        return invalid("margin leaves fewer than four DOS radii");
    }
    let w_inner = inner_weight(&op, &sites, outer_radius - options.margin)?;
    let dec = decompose(&op)?;
    let mut out = Vec::with_capacity(gs.len());
    for g in gs {
        let gh = apply_decomposed(&dec, g)?;
        let diag = gh.diagonal();
        let (eig, dos) = rayon::join(
            || product_eigenvalues_with(&structured(&op, gh.clone()), &sites),
            || DosEstimate::from_diagonal(&op, &diag, &dos_radii, options.margin),
        );
        let (eig, dos) = (eig?, dos?);
        if dos.tail_spread > options.dos_spread_threshold {
            return Err(Error::DosLimit {
                spread: dos.tail_spread,
                threshold: options.dos_spread_threshold,
            });
        }
        let cap = reliable_prefix(&eig, g_max(&dec, g), w_inner);
        if cap == 0 {
            return invalid("no eigenvalue of g(H)M_w clears the boundary threshold");
        }
        let weight_series = weight_partial_sums(w, &ladder, Some(cap))?;
        let window = match options.window {
            Some(win) => win,
            None => default_window(&weight_series)?,
        };
        let weight_fit = slope_dixmier_estimate(&weight_series, Some(window))?;
        let est = DixmierEstimate::from_values(&eig.values[..cap], Some(window))?;
        let product = weight_fit.slope * dos.tail_mean;
        let relative_gap = (est.fit.slope - product).abs() / product.abs().max(GAP_FLOOR);
        let head = EigenSequence {
            values: eig.values[..cap].to_vec(),
            source: eig.source.clone(),
        };
        let mut order: Vec<usize> = (0..sites.len()).collect();
        order.sort_by(|&i, &j| sites[j].total_cmp(&sites[i]));
        order.truncate(cap);
        let head_diag: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let head_w: Vec<f64> = order.iter().map(|&i| sites[i]).collect();
        out.push(TheoremCheck {
            function: g.clone(),
            lhs: est.fit.slope,
            weight_trace: weight_fit.slope,
            rhs_limit: dos.tail_mean,
            rhs_spread: dos.tail_spread,
            product,
            relative_gap,
            window: est.fit.window,
            reliable_eigenvalues: cap,
            outer_radius,
            margin: options.margin,
            dos_radii: (dos_radii[0], dos_radii[dos_radii.len() - 1]),
            condition_c: c.verdict,
            measurability: est.measurability,
            weak_l1_constant: weak.c_estimate,
            modulated_gap: modulated_gap(&head, &head_diag, &head_w)?,
            lhs_fit: est.fit,
            weight_fit,
            dos,
            eigenvalues: eig,
        });
    }
    Ok(out)
}

fn condition_c(ladder: &RadiiLadder, options: &TheoremCheckOptions) -> Result<CRatioReport> {
    condition_c_report(ladder, options.c_tail_fraction, options.c_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{lattice_weight, Hopping, Potential};
    use crate::metric_spaces::PNorm;

    fn z1() -> DiscreteSpace {
        DiscreteSpace::lattice(1, PNorm::L2).unwrap()
    }

    #[test]
    fn zero_hamiltonian_dos_is_g_at_zero() {
        let g = ScalarFunction::gaussian(0.5, 1.0);
        let est = dos_approximant(&z1(), &HamiltonianSpec::zero(), &g, &[1.0, 2.0, 5.0], 2.0).unwrap();
        for row in &est.rows {
            assert!((row.value - g.eval(0.0)).abs() < 1e-15);
        }
        assert_eq!(est.rows[2].ball_count, 11);
    }

    #[test]
    fn weight_levels_reproduce_ball_averages() {
        let diag: Vec<f64> = (0..9).map(|i| (i * i) as f64).collect();
        let distances = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0];
        let w: Vec<f64> = distances.iter().map(|d| 1.0 / (1.0 + d)).collect();
        let rows = ball_averages(&distances, &diag, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let lv = dos_along_weight_levels(&diag, &w).unwrap();
        assert_eq!(rows.len(), lv.len());
        for (r, l) in rows.iter().zip(&lv) {
            assert_eq!(r.ball_count, l.1);
            assert_eq!(r.value, l.2);
        }
    }

    #[test]
    fn ids_of_zero_is_a_step() {
        let ids = ids_histogram(&z1(), &HamiltonianSpec::zero(), 3.0).unwrap();
        assert_eq!(ids.fraction(-1e-9), 0.0);
        assert_eq!(ids.fraction(0.0), 1.0);
    }

    #[test]
    fn harmonic_is_strongly_measurable() {
        let h: Vec<f64> = (0..1 << 16).map(|k| 1.0 / (k + 1) as f64).collect();
        let est = DixmierEstimate::from_values(&h, None).unwrap();
        assert_eq!(est.measurability.verdict, Measurability::Strong);
    }

    #[test]
    fn weight_trace_on_z1() {
        let space = z1();
        let ladder = space.radii_ladder(1 << 14).unwrap();
        let w = lattice_weight(&space, &ladder).unwrap();
        let fit = weight_dixmier_trace(&w, &ladder, None).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.02, "{}", fit.slope);
        // partial sums agree with direct summation of the spectrum
        let mut ev = vec![1.0];
        for k in 1..=(1 << 14) {
            ev.extend([1.0 / (1.0 + k as f64); 2]);
        }
        let direct = log_cesaro(&ev).unwrap();
        let fast = weight_partial_sums(&w, &ladder, None).unwrap();
        for (a, b) in direct.partial_sums.iter().zip(&fast.partial_sums) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn theorem_check_for_zero_hamiltonian() {
        let space = z1();
        let ladder = space.ladder_to_radius(600.0).unwrap();
        let w = lattice_weight(&space, &ladder).unwrap();
        let g = ScalarFunction::gaussian(0.0, 2.0);
        let opts = TheoremCheckOptions {
            margin: 10.0,
            ..Default::default()
        };
        let chk = main_theorem_check(&space, &HamiltonianSpec::zero(), &g, &w, 600.0, &opts).unwrap();
        assert_eq!(chk.rhs_limit, 1.0);
        assert!(chk.relative_gap < 1e-12);
        assert!((chk.lhs - chk.weight_trace).abs() < 1e-12);
    }

    #[test]
    fn theorem_check_refuses_exponential_growth() {
        let f2 = DiscreteSpace::cayley_f2();
        let ladder = f2.radii_ladder(12).unwrap();
        let w = crate::hamiltonians::default_weight(&ladder).unwrap();
        let r = main_theorem_check(&f2, &HamiltonianSpec::adjacency(), &ScalarFunction::constant(1.0), &w, 12.0, &Default::default());
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn period_two_dos_is_stable_under_margin_doubling() {
        let spec = HamiltonianSpec::new(
            Hopping::Adjacency,
            Potential::Periodic {
                period: vec![2],
                values: vec![0.0, 1.0],
            },
        );
        let g = ScalarFunction::bump(0.5, 1.5);
        let radii: Vec<f64> = (1..=100).map(|r| r as f64).collect();
        let a = dos_approximant(&z1(), &spec, &g, &radii, 40.0).unwrap();
        let b = dos_approximant(&z1(), &spec, &g, &radii, 80.0).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.value - y.value).abs() < 1e-6);
        }
    }
}
