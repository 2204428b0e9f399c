//! Closed-form reference values: the 0/1 block sequence without a density of
//! states, unit-ball volumes, and the one-dimensional band models.

use serde::Serialize;

use crate::error::{invalid, Result};

/// `λ_1 = 1`; `λ_n = 0` on `[2^{2m}+1, 2^{2m+1}]` and `λ_n = 1` on
/// `[2^{2m−1}+1, 2^{2m}]`.
pub fn counterexample_lambda(n: u64) -> Result<u8> {
    if n == 0 {
        return invalid("the block sequence starts at n = 1");
    }
    if n == 1 {
        return Ok(1);
    }
    // n lies in (2^j, 2^{j+1}] with j = ⌊log₂(n−1)⌋
    let j = 63 - (n - 1).leading_zeros();
    Ok((j % 2) as u8)
}

/// `Σ_{k≤n} λ_k`, exactly.
pub fn counterexample_prefix_sum(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut total = 1u64;
    let mut lo = 1u64; // block (lo, 2lo]
    let mut j = 0u32;
    while lo < n {
        let hi = (2 * lo).min(n);
        if j % 2 == 1 {
            total += hi - lo;
        }
        lo *= 2;
        j += 1;
    }
    total
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CounterexampleRow {
    pub m: u32,
    pub n: u64,
    /// `Σ_{k≤n} λ_k`.
    pub ones: u64,
    pub cesaro: f64,
    /// `(1/log n) Σ_{k≤n} λ_k/k`.
    pub log_cesaro: f64,
}

pub const COUNTEREXAMPLE_MAX_M: u32 = 14;

/// Rows at `n = 2^{2m}` and `n = 2^{2m+1}` for `1 ≤ m ≤ m_max`.
pub fn counterexample_report(m_max: u32) -> Result<Vec<CounterexampleRow>> {
    if m_max == 0 || m_max > COUNTEREXAMPLE_MAX_M {
        return invalid(format!("m_max must lie in 1..={COUNTEREXAMPLE_MAX_M}"));
    }
    let targets: Vec<(u32, u64)> = (1..=m_max).flat_map(|m| [(m, 1u64 << (2 * m)), (m, 1u64 << (2 * m + 1))]).collect();
    let mut rows = Vec::with_capacity(targets.len());
    // Harmonic sums over the ones-blocks, accumulated block by block.
    let mut weighted = 1.0f64;
    let mut done = 1u64;
    for (m, n) in targets {
        while done < n {
            let hi = 2 * done;
            if counterexample_lambda(hi)? == 1 {
                let mut block = 0.0;
                for k in (done + 1..=hi).rev() {
                    block += 1.0 / k as f64;
                }
                weighted += block;
            }
            done = hi;
        }
        let ones = counterexample_prefix_sum(n);
        rows.push(CounterexampleRow {
            m,
            n,
            ones,
            cesaro: ones as f64 / n as f64,
            log_cesaro: weighted / (n as f64).ln(),
        });
    }
    Ok(rows)
}

/// Volume of the unit ball of `ℓ_p(ℝᵈ)`: `2^d Γ(1+1/p)^d / Γ(1+d/p)`.
pub fn vp_volume(d: usize, p: f64) -> Result<f64> {
    if d == 0 || !(p >= 1.0) {
        return invalid("need d ≥ 1 and p ≥ 1");
    }
    let d_f = d as f64;
    if p.is_infinite() {
        return Ok(2f64.powi(d as i32));
    }
    let ln = d_f * (2f64.ln() + libm::lgamma(1.0 + 1.0 / p)) - libm::lgamma(1.0 + d_f / p);
    Ok(ln.exp())
}

/// Integrated density of states of the adjacency operator on ℤ.
pub fn arcsine_ids(e: f64) -> f64 {
    if e <= -2.0 {
        0.0
    } else if e >= 2.0 {
        1.0
    } else {
        0.5 + (e / 2.0).asin() / std::f64::consts::PI
    }
}

const QUADRATURE_NODES: usize = 20_000;

/// `∫ g dν` for the adjacency operator on ℤ: `(1/π) ∫₀^π g(2 cos θ) dθ`.
pub fn arcsine_dos_integral(g: impl Fn(f64) -> f64) -> f64 {
    let n = QUADRATURE_NODES;
    let h = std::f64::consts::PI / n as f64;
    (0..n).map(|i| g(2.0 * ((i as f64 + 0.5) * h).cos())).sum::<f64>() / n as f64
}

/// `∫ g dν` for adjacency plus the period-2 potential `(a, b)` on ℤ:
/// bands `(a+b)/2 ± √(((a−b)/2)² + 2 + 2cos k)`, averaged over `k` and
/// over the two sites of the cell.
pub fn two_band_dos_integral(a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
    let n = QUADRATURE_NODES;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let (mid, half) = ((a + b) / 2.0, (a - b) / 2.0);
    let total: f64 = (0..n)
        .map(|i| {
            let k = (i as f64 + 0.5) * h;
            let r = (half * half + 2.0 + 2.0 * k.cos()).sqrt();
            g(mid + r) + g(mid - r)
        })
        .sum();
    total / (2.0 * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_values() {
        assert_eq!(counterexample_lambda(1).unwrap(), 1);
        assert_eq!(counterexample_lambda(2).unwrap(), 0);
        assert_eq!(counterexample_lambda(5).unwrap(), 0);
        assert_eq!(counterexample_lambda(8).unwrap(), 0);
        assert_eq!(counterexample_lambda(9).unwrap(), 1);
        assert_eq!(counterexample_lambda(10).unwrap(), 1);
        assert_eq!(counterexample_lambda(16).unwrap(), 1);
        assert_eq!(counterexample_lambda(17).unwrap(), 0);
        assert!(counterexample_lambda(0).is_err());
    }

    #[test]
    fn prefix_sums_match_direct_counting() {
        let mut s = 0u64;
        for n in 1..=(1u64 << 20) {
            s += counterexample_lambda(n).unwrap() as u64;
            if n.is_power_of_two() || n % 997 == 0 {
                assert_eq!(counterexample_prefix_sum(n), s, "n = {n}");
            }
        }
        assert_eq!(counterexample_prefix_sum(4), 3);
        assert_eq!(counterexample_prefix_sum(8), 3);
    }

    #[test]
    fn report_rows() {
        let rows = counterexample_report(3).unwrap();
        assert_eq!(rows[0].n, 4);
        assert_eq!(rows[0].cesaro, 0.75);
        assert_eq!(rows[1].n, 8);
        assert_eq!(rows[1].cesaro, 0.375);
        let direct: f64 = (1..=8u64).map(|k| counterexample_lambda(k).unwrap() as f64 / k as f64).sum::<f64>() / 8f64.ln();
        assert!((rows[1].log_cesaro - direct).abs() < 1e-14);
        assert!(counterexample_report(15).is_err());
    }

    #[test]
    fn volumes() {
        assert!((vp_volume(1, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((vp_volume(1, 3.5).unwrap() - 2.0).abs() < 1e-13);
        assert!((vp_volume(2, 2.0).unwrap() - std::f64::consts::PI).abs() < 1e-13);
        assert!((vp_volume(2, 1.0).unwrap() - 2.0).abs() < 1e-13);
        assert_eq!(vp_volume(3, f64::INFINITY).unwrap(), 8.0);
        assert!((vp_volume(3, 2.0).unwrap() - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn arcsine() {
        assert_eq!(arcsine_ids(0.0), 0.5);
        assert_eq!(arcsine_ids(2.0), 1.0);
        assert_eq!(arcsine_ids(-3.0), 0.0);
        assert!((arcsine_ids(1.0) - 2.0 / 3.0).abs() < 1e-15);
        // second moment of the arcsine law is 2
        assert!((arcsine_dos_integral(|t| t * t) - 2.0).abs() < 1e-10);
        assert!((arcsine_dos_integral(|_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_band_reduces_to_arcsine() {
        let g = |t: f64| (-(t - 0.3).powi(2)).exp();
        assert!((two_band_dos_integral(0.0, 0.0, g) - arcsine_dos_integral(g)).abs() < 1e-10);
        // mean of the potential over the cell
        assert!((two_band_dos_integral(0.0, 1.5, |t| t) - 0.75).abs() < 1e-12);
    }
}
