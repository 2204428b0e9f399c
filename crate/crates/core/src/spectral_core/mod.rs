//! Eigenvalue sequences of truncated operators, functional calculus, and the
//! log-Cesàro machinery used to estimate Dixmier traces.

pub mod cesaro;
pub mod functions;
pub mod matrix;

use serde::Serialize;

pub use cesaro::{
    dyadic_grid, line_fit, log_cesaro, slope_dixmier_estimate, subsequence_equivalence_check, toeplitz_mean,
    weighted_cesaro, weighted_cesaro_bounded, BoundedDeviation, CesaroSeries, SlopeFit, SubsequenceReport,
    WeightedMeans, MIN_WINDOW_POINTS,
};
pub use functions::{ScalarFunction, WeightedTerm};
pub use matrix::{Decomposition, SparseSym, SymMatrix, MAX_DENSE_DIM};

use crate::error::{invalid, Error, Result};
use crate::hamiltonians::{TruncatedOperator, WeightFunction};

/// Eigenvalues ordered by non-increasing `|λ|`; equal magnitudes put the
/// larger signed value first, then keep input order.
#[derive(Clone, Debug, Serialize)]
pub struct EigenSequence {
    pub values: Vec<f64>,
    pub source: String,
}

impl EigenSequence {
    pub fn new(mut values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Eigensolver("NaN eigenvalue".into()));
        }
        values.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
        Ok(EigenSequence {
            values,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cesaro(&self) -> Result<CesaroSeries> {
        log_cesaro(&self.values)
    }
}

/// Order in which [`EigenSequence`] lists `values`, as indices into `values`.
pub fn eigen_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (values[i], values[j]);
        b.abs().total_cmp(&a.abs()).then(b.total_cmp(&a))
    });
    idx
}

pub fn symmetric_eigenvalues(op: &TruncatedOperator) -> Result<EigenSequence> {
    EigenSequence::new(op.structured().eigenvalues()?, "symmetric")
}

/// `g(H)` on the same sites.
pub fn apply_function(op: &TruncatedOperator, g: &ScalarFunction) -> Result<TruncatedOperator> {
    let dec = op.structured().decompose()?;
    op.with_matrix(apply_decomposed(&dec, g)?)
}

pub fn apply_decomposed(dec: &Decomposition, g: &ScalarFunction) -> Result<SymMatrix> {
    if let Some((lo, hi)) = dec.spectral_range() {
        g.check_domain(lo, hi)?;
    } else {
        g.validate()?;
    }
    Ok(dec.apply(|t| g.eval(t)))
}

fn check_positive(w: &[f64]) -> Result<()> {
    match w.iter().position(|&v| !(v > 0.0)) {
        Some(i) => invalid(format!("weight at site {i} is not positive")),
        None => Ok(()),
    }
}

/// Eigenvalues of `T·M_w`, computed from the similar symmetric matrix
/// `M_w^{1/2} T M_w^{1/2}`.
pub fn product_eigenvalues(op: &TruncatedOperator, w: &WeightFunction) -> Result<EigenSequence> {
    let sites = op.site_weights(w)?;
    product_eigenvalues_with(&op.structured(), &sites)
}

pub fn product_eigenvalues_with(t: &SymMatrix, w: &[f64]) -> Result<EigenSequence> {
    check_positive(w)?;
    if let SymMatrix::Sparse(s) = t {
        if s.upper_entries().is_empty() {
            if w.len() != s.dim {
                return invalid("weight length differs from dimension");
            }
            return EigenSequence::new(s.diag.iter().zip(w).map(|(d, x)| d * x).collect(), "weighted product");
        }
    }
    let root: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    EigenSequence::new(t.scaled(&root)?.eigenvalues()?, "weighted product")
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulatedProfile {
    pub t: Vec<f64>,
    /// `t^{1/2}·‖T(1 + t M_V)^{−1}‖_HS`.
    pub values: Vec<f64>,
    pub running_sup: Vec<f64>,
}

impl ModulatedProfile {
    pub fn sup(&self) -> f64 {
        *self.running_sup.last().unwrap_or(&0.0)
    }
}

pub fn modulated_norm_profile(op: &TruncatedOperator, v: &WeightFunction, t_grid: &[f64]) -> Result<ModulatedProfile> {
    let sites = op.site_weights(v)?;
    modulated_norm_profile_with(op.matrix(), &sites, t_grid)
}

/// The resolvent `(1 + tV)^{−1}` is diagonal, so
/// `‖T(1+tV)^{−1}‖²_HS = Σ_j (Σ_i T_ij²)/(1 + t V_j)²`.
pub fn modulated_norm_profile_with(t: &SymMatrix, v: &[f64], t_grid: &[f64]) -> Result<ModulatedProfile> {
    check_positive(v)?;
    if v.len() != t.dim() {
        return invalid("potential length differs from dimension");
    }
    if t_grid.iter().any(|&s| !(s > 0.0)) {
        return invalid("t grid must be positive");
    }
    let cols = t.column_square_sums();
    let values: Vec<f64> = t_grid
        .iter()
        .map(|&s| {
            let hs: f64 = cols.iter().zip(v).map(|(c, vj)| c / (1.0 + s * vj).powi(2)).sum();
            (s * hs).sqrt()
        })
        .collect();
    let mut sup = 0.0f64;
    let running_sup = values
        .iter()
        .map(|&x| {
            sup = sup.max(x);
            sup
        })
        .collect();
    Ok(ModulatedProfile {
        t: t_grid.to_vec(),
        values,
        running_sup,
    })
}

/// Gap between eigenvalue partial sums of `T·W` and diagonal partial sums
/// `Σ ⟨e_k, T e_k⟩ w_k`, sites ordered by decreasing `w`.
#[derive(Clone, Debug, Serialize)]
pub struct ModulatedGap {
    /// `(n, |Σ_{k≤n} λ(k, TW) − Σ_{k≤n} diag_k w_k|)` on the dyadic grid.
    pub table: Vec<(usize, f64)>,
    pub growth_slope: f64,
    /// `max_n |Σ_{k≤n} λ(k, TW)|`.
    pub scale: f64,
    pub relative_growth: f64,
}

pub fn modulated_gap(eigen: &EigenSequence, diag: &[f64], w: &[f64]) -> Result<ModulatedGap> {
    if diag.len() != w.len() || eigen.len() != w.len() {
        return invalid("diagonal, weights and eigenvalues must have equal length");
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| w[j].total_cmp(&w[i]));
    let diag_terms: Vec<f64> = order.iter().map(|&i| diag[i] * w[i]).collect();
    let eig = log_cesaro(&eigen.values)?;
    let dia = log_cesaro(&diag_terms)?;
    let table: Vec<(usize, f64)> = eig
        .grid
        .iter()
        .zip(eig.partial_sums.iter().zip(&dia.partial_sums))
        .map(|(&n, (a, b))| (n, (a - b).abs()))
        .collect();
    let gap_series = CesaroSeries {
        len: eig.len,
        grid: eig.grid.clone(),
        partial_sums: table.iter().map(|&(_, g)| g).collect(),
        lambda: Vec::new(),
    };
    let (lo, hi) = cesaro::default_window(&gap_series)?;
    let pts: Vec<&(usize, f64)> = table.iter().filter(|(n, _)| (lo..=hi).contains(n)).collect();
    let x: Vec<f64> = pts.iter().map(|(n, _)| (2.0 + *n as f64).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|(_, g)| *g).collect();
    let growth_slope = line_fit(&x, &y).0;
    let scale = eig.partial_sums.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(ModulatedGap {
        relative_growth: if scale > 0.0 { growth_slope.abs() / scale } else { 0.0 },
        table,
        growth_slope,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_truncated, default_weight, lattice_weight, HamiltonianSpec};
    use crate::metric_spaces::{DiscreteSpace, PNorm};

    fn diag_op(d: &[f64]) -> TruncatedOperator {
        TruncatedOperator::from_matrix(SymMatrix::diagonal_matrix(d.to_vec()))
    }

    #[test]
    fn ordering_rules() {
        let e = symmetric_eigenvalues(&diag_op(&[3.0, -1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, -1.0]);
        let e = symmetric_eigenvalues(&diag_op(&[-1.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, -1.0]);
        assert_eq!(eigen_order(&[-1.0, 1.0, 0.5]), vec![1, 0, 2]);
    }

    #[test]
    fn path_spectrum() {
        let z1 = DiscreteSpace::lattice(1, PNorm::L2).unwrap();
        let op = build_truncated(&z1, &HamiltonianSpec::adjacency(), 2.0).unwrap();
        let e = symmetric_eigenvalues(&op).unwrap();
        let expected = EigenSequence::new(
            (1..=5).map(|j| 2.0 * (std::f64::consts::PI * j as f64 / 6.0).cos()).collect(),
            "",
        )
        .unwrap();
        for (a, b) in e.values.iter().zip(&expected.values) {
            assert!((a.abs() - b.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn functional_calculus() {
        let z1 = DiscreteSpace::lattice(1, PNorm::L2).unwrap();
        let op = build_truncated(&z1, &HamiltonianSpec::adjacency(), 30.0).unwrap();
        let h = op.matrix().to_dense();
        let id = apply_function(&op, &ScalarFunction::identity()).unwrap().matrix().to_dense();
        let one = apply_function(&op, &ScalarFunction::constant(1.0)).unwrap().matrix().to_dense();
        let sq = apply_function(
            &op,
            &ScalarFunction::Polynomial {
                coefficients: vec![0.0, 0.0, 1.0],
            },
        )
        .unwrap()
        .matrix()
        .to_dense();
        let hh = &h * &h;
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                assert!((id[(i, j)] - h[(i, j)]).abs() < 1e-10);
                assert!((one[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
                assert!((sq[(i, j)] - hh[(i, j)]).abs() < 1e-9);
                assert_eq!(sq[(i, j)], sq[(j, i)]);
            }
        }
        let table = ScalarFunction::Table {
            points: vec![[-1.0, 0.0], [1.0, 1.0]],
        };
        assert!(apply_function(&op, &table).is_err());
    }

    #[test]
    fn identity_times_weight() {
        let z1 = DiscreteSpace::lattice(1, PNorm::L2).unwrap();
        let op = build_truncated(&z1, &HamiltonianSpec::zero(), 2.0).unwrap();
        let one = apply_function(&op, &ScalarFunction::constant(1.0)).unwrap();
        let w = lattice_weight(&z1, &z1.radii_ladder(2).unwrap()).unwrap();
        let e = product_eigenvalues(&one, &w).unwrap();
        assert_eq!(e.values, vec![1.0, 0.5, 0.5, 1.0 / 3.0, 1.0 / 3.0]);
        let zero = product_eigenvalues(&op, &w).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        assert!(product_eigenvalues_with(op.matrix(), &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn modulated_profile_of_zero_and_of_the_weight() {
        let z1 = DiscreteSpace::lattice(1, PNorm::L2).unwrap();
        let ladder = z1.radii_ladder(400).unwrap();
        let w = default_weight(&ladder).unwrap();
        let grid: Vec<f64> = (0..=12).map(|j| 10f64.powf(j as f64 / 2.0)).collect();
        let op = build_truncated(&z1, &HamiltonianSpec::zero(), 400.0).unwrap();
        let p = modulated_norm_profile(&op, &w, &grid).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
        let sites = op.site_weights(&w).unwrap();
        let mv = SymMatrix::diagonal_matrix(sites.clone());
        let sup = modulated_norm_profile_with(&mv, &sites, &grid).unwrap().sup();
        // t·v²/(1+tv)² ≤ 1/4 per site, summed over ~2/v sites at each level
        assert!(sup.is_finite() && sup < 2.0);
    }
}
