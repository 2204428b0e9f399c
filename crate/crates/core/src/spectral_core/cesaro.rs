//! Log-Cesàro partial sums, slope fits, and weighted Cesàro (Toeplitz) means.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Minimum number of grid points in a slope-fit window.
pub const MIN_WINDOW_POINTS: usize = 8;

/// `{0} ∪ {2^j ≤ len−1} ∪ {len−1}`, ascending.
pub fn dyadic_grid(len: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let last = len - 1;
    let mut grid = vec![0];
    let mut p = 1usize;
    while p <= last {
        grid.push(p);
        p = match p.checked_mul(2) {
            Some(q) => q,
            None => break,
        };
    }
    if *grid.last().unwrap() != last {
        grid.push(last);
    }
    grid
}

/// Compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `S(n) = Σ_{k≤n} λ(k)` and `Λ(n) = S(n)/log(2+n)` on the dyadic grid.
#[derive(Clone, Debug, Serialize)]
pub struct CesaroSeries {
    pub len: usize,
    pub grid: Vec<usize>,
    pub partial_sums: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl CesaroSeries {
    /// Builds the series from a function returning `S(n)` at grid points.
    pub fn from_partial_sums(len: usize, mut s: impl FnMut(usize) -> f64) -> Self {
        let grid = dyadic_grid(len);
        let partial_sums: Vec<f64> = grid.iter().map(|&n| s(n)).collect();
        let lambda = grid.iter().zip(&partial_sums).map(|(&n, &v)| v / log2p(n)).collect();
        CesaroSeries {
            len,
            grid,
            partial_sums,
            lambda,
        }
    }

    pub fn final_lambda(&self) -> f64 {
        *self.lambda.last().unwrap_or(&0.0)
    }

    /// `(n, S(n), Λ(n))` rows.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.grid
            .iter()
            .zip(&self.partial_sums)
            .zip(&self.lambda)
            .map(|((&n, &s), &l)| (n, s, l))
    }
}

fn log2p(n: usize) -> f64 {
    (2.0 + n as f64).ln()
}

pub fn log_cesaro(values: &[f64]) -> Result<CesaroSeries> {
    if values.is_empty() {
        return invalid("log-Cesàro series of an empty sequence");
    }
    let grid = dyadic_grid(values.len());
    let mut acc = Neumaier::default();
    let mut sums = Vec::with_capacity(grid.len());
    let mut g = grid.iter().peekable();
    for (k, &v) in values.iter().enumerate() {
        acc.add(v);
        if g.peek() == Some(&&k) {
            sums.push(acc.value());
            g.next();
        }
    }
    let mut it = sums.into_iter();
    Ok(CesaroSeries::from_partial_sums(values.len(), |_| it.next().unwrap()))
}

#[derive(Clone, Debug, Serialize)]
pub struct FitPoint {
    pub n: usize,
    pub log_n: f64,
    pub partial_sum: f64,
    pub residual: f64,
}

/// Least-squares line `S(n) ≈ c·log(2+n) + b` over a window of grid points.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub window: (usize, usize),
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<FitPoint>,
    pub max_abs_residual: f64,
    /// Slope of `|r_n|` against `log(2+n)`.
    pub residual_growth: f64,
    /// Slopes fitted separately on the first and second half of the window.
    pub half_slopes: (f64, f64),
    pub slope_drift: f64,
}

/// `(slope, intercept)` of the least-squares line through `(x, y)`.
pub fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let c = sxy / sxx;
    (c, my - c * mx)
}

/// Default window: grid points with `n ≥ √n_max`, widened to at least
/// [`MIN_WINDOW_POINTS`] points.
pub fn default_window(series: &CesaroSeries) -> Result<(usize, usize)> {
    let g = &series.grid;
    if g.len() < MIN_WINDOW_POINTS {
        return invalid(format!(
            "series of length {} has {} grid points, need {MIN_WINDOW_POINTS}",
            series.len,
            g.len()
        ));
    }
    let last = *g.last().unwrap();
    let cut = (last as f64).sqrt();
    let first = g.iter().position(|&n| n as f64 >= cut).unwrap();
    let first = first.min(g.len() - MIN_WINDOW_POINTS);
    Ok((g[first], last))
}

pub fn slope_dixmier_estimate(series: &CesaroSeries, window: Option<(usize, usize)>) -> Result<SlopeFit> {
    let (lo, hi) = match window {
        Some(w) => w,
        None => default_window(series)?,
    };
    let idx: Vec<usize> = (0..series.grid.len())
        .filter(|&i| (lo..=hi).contains(&series.grid[i]))
        .collect();
    if idx.len() < MIN_WINDOW_POINTS {
        return invalid(format!(
            "window [{lo}, {hi}] holds {} grid points, need {MIN_WINDOW_POINTS}",
            idx.len()
        ));
    }
    let x: Vec<f64> = idx.iter().map(|&i| log2p(series.grid[i])).collect();
    let y: Vec<f64> = idx.iter().map(|&i| series.partial_sums[i]).collect();
    let (slope, intercept) = line_fit(&x, &y);
    let points: Vec<FitPoint> = idx
        .iter()
        .zip(x.iter().zip(&y))
        .map(|(&i, (&lx, &s))| FitPoint {
            n: series.grid[i],
            log_n: lx,
            partial_sum: s,
            residual: s - slope * lx - intercept,
        })
        .collect();
    let abs_r: Vec<f64> = points.iter().map(|p| p.residual.abs()).collect();
    let (residual_growth, _) = line_fit(&x, &abs_r);
    let h = x.len() / 2;
    let (c1, _) = line_fit(&x[..h], &y[..h]);
    let (c2, _) = line_fit(&x[h..], &y[h..]);
    Ok(SlopeFit {
        window: (series.grid[idx[0]], series.grid[*idx.last().unwrap()]),
        slope,
        intercept,
        max_abs_residual: abs_r.iter().copied().fold(0.0, f64::max),
        residual_growth,
        half_slopes: (c1, c2),
        slope_drift: (c1 - c2).abs(),
        points,
    })
}

/// Running ratios `Σ_{k≤n} c_k z_k / Σ_{k≤n} c_k`; NaN while the denominator
/// is still zero.
pub fn toeplitz_mean(c: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    if c.len() != z.len() {
        return invalid("weights and values differ in length");
    }
    if c.iter().any(|&v| !(v >= 0.0)) {
        return invalid("Toeplitz weights must be nonnegative");
    }
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    Ok(c.iter()
        .zip(z)
        .map(|(&ck, &zk)| {
            num.add(ck * zk);
            den.add(ck);
            let d = den.value();
            if d > 0.0 {
                num.value() / d
            } else {
                f64::NAN
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightedMeans {
    pub ratios: Vec<f64>,
    /// `max_k (k+1)·a_k` over the input.
    pub sup_k_ak: f64,
    /// `b_n = Σ_{k≤n} a_k` at the end of the input.
    pub total_weight: f64,
}

fn check_weights(a: &[f64], x: &[f64]) -> Result<()> {
    if a.len() != x.len() || a.is_empty() {
        return invalid("weights and values must be nonempty and equally long");
    }
    if a.iter().any(|&v| !(v > 0.0)) {
        return invalid("weights must be positive");
    }
    if let Some(k) = a.windows(2).position(|w| w[1] > w[0]) {
        return invalid(format!("weights increase at index {}", k + 1));
    }
    Ok(())
}

/// `Σ_{k≤n} a_k x_k / Σ_{k≤n} a_k` for nonincreasing positive `a`.
pub fn weighted_cesaro(a: &[f64], x: &[f64]) -> Result<WeightedMeans> {
    check_weights(a, x)?;
    let ratios = toeplitz_mean(a, x)?;
    Ok(WeightedMeans {
        ratios,
        sup_k_ak: a.iter().enumerate().map(|(k, &v)| (k + 1) as f64 * v).fold(0.0, f64::max),
        total_weight: a.iter().sum(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundedDeviation {
    /// `(n, Σ_{k≤n} a_k x_k − L·Σ_{k≤n} a_k)` on the dyadic grid.
    pub table: Vec<(usize, f64)>,
    pub max_deviation: f64,
    /// Slope of the deviation against `log(2+n)` over the upper half of the grid.
    pub growth_slope: f64,
    /// `Σ a_k |σ_k − L|`, σ the running means; finite-sample check of the hypothesis.
    pub hypothesis_sum: f64,
}

pub fn weighted_cesaro_bounded(a: &[f64], x: &[f64], limit: f64) -> Result<BoundedDeviation> {
    check_weights(a, x)?;
    let grid = dyadic_grid(a.len());
    let mut g = grid.iter().peekable();
    let mut dev = Neumaier::default();
    let mut run = Neumaier::default();
    let mut hyp = Neumaier::default();
    let mut table = Vec::with_capacity(grid.len());
    for (k, (&ak, &xk)) in a.iter().zip(x).enumerate() {
        dev.add(ak * (xk - limit));
        run.add(xk);
        hyp.add(ak * (run.value() / (k + 1) as f64 - limit).abs());
        if g.peek() == Some(&&k) {
            table.push((k, dev.value()));
            g.next();
        }
    }
    let upper: Vec<&(usize, f64)> = table.iter().skip(table.len() / 2).collect();
    let lx: Vec<f64> = upper.iter().map(|(n, _)| log2p(*n)).collect();
    let ly: Vec<f64> = upper.iter().map(|(_, d)| *d).collect();
    Ok(BoundedDeviation {
        max_deviation: table.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max),
        growth_slope: line_fit(&lx, &ly).0,
        hypothesis_sum: hyp.value(),
        table,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsequenceReport {
    /// `(k_i, mean over 1..k_i)`.
    pub subsequence_means: Vec<(usize, f64)>,
    /// Largest `|b_n − b_{k(n)}|` over `n` in the upper half of `[k_1, k_last]`,
    /// where `k(n)` is the last subsequence index not exceeding `n`.
    pub max_tail_discrepancy: f64,
    /// Largest `k_{i+1}/k_i` over the tail.
    pub max_tail_ratio: f64,
    pub warning: Option<String>,
}

/// Compares the Cesàro means `b_n = (1/n) Σ_{k=1}^n a_k` along all `n` with
/// those along the subsequence `k_i`. `values[k−1] = a_k`.
pub fn subsequence_equivalence_check(values: &[f64], indices: &[usize]) -> Result<SubsequenceReport> {
    if indices.is_empty() || indices[0] == 0 {
        return invalid("subsequence indices must be positive");
    }
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("subsequence indices must be strictly increasing");
    }
    let last = *indices.last().unwrap();
    if last > values.len() {
        return invalid(format!("index {last} exceeds the {} values", values.len()));
    }
    let mut means = Vec::with_capacity(last);
    let mut acc = Neumaier::default();
    for (i, &v) in values[..last].iter().enumerate() {
        acc.add(v);
        means.push(acc.value() / (i + 1) as f64);
    }
    let b = |n: usize| means[n - 1];
    let tail_start = (indices[0] + last) / 2;
    let mut disc = 0.0f64;
    let mut j = 0;
    for n in indices[0]..=last {
        while j + 1 < indices.len() && indices[j + 1] <= n {
            j += 1;
        }
        if n >= tail_start {
            disc = disc.max((b(n) - b(indices[j])).abs());
        }
    }
    let max_tail_ratio = indices
        .windows(2)
        .filter(|w| w[1] >= tail_start)
        .map(|w| w[1] as f64 / w[0] as f64)
        .fold(1.0, f64::max);
    let half = last / 2;
    let amax = |s: &[f64]| s.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let warning = if half > 0 && amax(&values[half..last]) > 4.0 * amax(&values[..half]).max(f64::MIN_POSITIVE) {
        Some("values grow over the sample; boundedness hypothesis looks violated".to_string())
    } else {
        None
    };
    Ok(SubsequenceReport {
        subsequence_means: indices.iter().map(|&k| (k, b(k))).collect(),
        max_tail_discrepancy: disc,
        max_tail_ratio,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        assert_eq!(dyadic_grid(1), vec![0]);
        assert_eq!(dyadic_grid(9), vec![0, 1, 2, 4, 8]);
        assert_eq!(dyadic_grid(10), vec![0, 1, 2, 4, 8, 9]);
    }

    #[test]
    fn zero_and_harmonic() {
        let s = log_cesaro(&vec![0.0; 100]).unwrap();
        assert!(s.lambda.iter().all(|&v| v == 0.0));
        let h: Vec<f64> = (0..1 << 20).map(|k| 1.0 / (k + 1) as f64).collect();
        let s = log_cesaro(&h).unwrap();
        // H(n+1)/log(n+2) = 1 + γ/log n + …
        let expected = (1..=1u64 << 20).map(|k| 1.0 / k as f64).sum::<f64>() / ((1u64 << 20) as f64 + 1.0).ln();
        assert!((s.final_lambda() - expected).abs() < 1e-12);
        let fit = slope_dixmier_estimate(&s, None).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-3, "{}", fit.slope);
        assert!((fit.intercept - 0.5772156649).abs() < 1e-2);
        assert!(fit.residual_growth.abs() < 1e-3);
    }

    #[test]
    fn alternating_harmonic_has_zero_slope() {
        let a: Vec<f64> = (0..1 << 16).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / (k + 1) as f64).collect();
        let fit = slope_dixmier_estimate(&log_cesaro(&a).unwrap(), None).unwrap();
        assert!(fit.slope.abs() < 1e-3);
    }

    #[test]
    fn short_windows_are_refused() {
        let s = log_cesaro(&[1.0; 30]).unwrap();
        assert!(slope_dixmier_estimate(&s, None).is_err());
        let s = log_cesaro(&[1.0; 5000]).unwrap();
        assert!(slope_dixmier_estimate(&s, Some((1000, 4999))).is_err());
    }

    #[test]
    fn weighted_means() {
        let a: Vec<f64> = (0..1000).map(|k| 1.0 / (k + 1) as f64).collect();
        let r = weighted_cesaro(&a, &vec![2.5; 1000]).unwrap();
        assert!(r.ratios.iter().all(|&v| (v - 2.5).abs() < 1e-12));
        assert_eq!(r.sup_k_ak, 1.0);
        let mut bad = a.clone();
        bad[10] = 1.0;
        assert!(weighted_cesaro(&bad, &vec![0.0; 1000]).is_err());
        let alt: Vec<f64> = (0..100_000).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a: Vec<f64> = (0..100_000).map(|k| 1.0 / (k + 1) as f64).collect();
        let r = weighted_cesaro(&a, &alt).unwrap();
        assert!(r.ratios.last().unwrap().abs() < 0.1);
    }

    #[test]
    fn bounded_deviation_of_constant_is_zero() {
        let a: Vec<f64> = (0..1000).map(|k| 1.0 / (k + 1) as f64).collect();
        let r = weighted_cesaro_bounded(&a, &vec![0.75; 1000], 0.75).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert_eq!(r.hypothesis_sum, 0.0);
    }

    #[test]
    fn subsequence_of_constant() {
        let r = subsequence_equivalence_check(&vec![3.0; 400], &[1, 4, 9, 16, 100, 400]).unwrap();
        assert!(r.max_tail_discrepancy < 1e-14);
        assert!(r.warning.is_none());
        assert!(subsequence_equivalence_check(&[1.0; 4], &[2, 2]).is_err());
        assert!(subsequence_equivalence_check(&[1.0; 4], &[0, 2]).is_err());
    }

    #[test]
    fn toeplitz_means_skip_leading_zero_weights() {
        let r = toeplitz_mean(&[0.0, 1.0, 1.0], &[5.0, 1.0, 3.0]).unwrap();
        assert!(r[0].is_nan());
        assert_eq!(&r[1..], &[1.0, 2.0]);
        assert!(toeplitz_mean(&[-1.0], &[0.0]).is_err());
    }
}
