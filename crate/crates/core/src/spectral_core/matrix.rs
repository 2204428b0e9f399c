//! Real symmetric matrices in three storage forms and their
//! eigendecompositions.
//!
//! Operators built on balls start sparse (finite-range hopping). A matrix
//! that commutes with an involutive site permutation σ (the point reflection
//! of a lattice ball) is split into its even and odd sectors, each a dense
//! block of roughly half the size. Every spectral quantity computed here
//! (eigenvalues, `g(T)`, diagonals, weighted similarity transforms) is
//! computed blockwise and mapped back to sites.

use faer::{Mat, Side};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense eigensolves above this dimension are refused.
pub const MAX_DENSE_DIM: usize = 20_000;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug)]
pub struct SparseSym {
    pub(crate) dim: usize,
    pub(crate) diag: Vec<f64>,
    /// Strictly upper entries `(i, j, v)` with `i < j`, sorted.
    pub(crate) upper: Vec<(u32, u32, f64)>,
}

impl SparseSym {
    pub fn new(dim: usize, diag: Vec<f64>, mut upper: Vec<(u32, u32, f64)>) -> Result<Self> {
        if diag.len() != dim {
            return Err(Error::Invalid("diagonal length differs from dimension".into()));
        }
        for e in &mut upper {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
            if e.0 == e.1 || e.1 as usize >= dim {
                return Err(Error::Invalid(format!("bad off-diagonal entry ({}, {})", e.0, e.1)));
            }
        }
        upper.sort_by_key(|a| (a.0, a.1));
        // merge duplicates
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(upper.len());
        for e in upper {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (e.0, e.1) => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        Ok(SparseSym { dim, diag, upper: merged })
    }

    pub fn upper_entries(&self) -> &[(u32, u32, f64)] {
        &self.upper
    }

    /// Visits every stored entry in both triangles, diagonal once.
    fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        for (i, &d) in self.diag.iter().enumerate() {
            if d != 0.0 {
                f(i, i, d);
            }
        }
        for &(i, j, v) in &self.upper {
            f(i as usize, j as usize, v);
            f(j as usize, i as usize, v);
        }
    }
}

/// Unit vector of a sector basis: a single site, or the symmetric or
/// antisymmetric combination of a reflected pair `(i, σ(i))`, `i < σ(i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisVector {
    Site(u32),
    Even(u32, u32),
    Odd(u32, u32),
}

impl BasisVector {
    fn components(self) -> ([(usize, f64); 2], usize) {
        match self {
            BasisVector::Site(i) => ([(i as usize, 1.0), (0, 0.0)], 1),
            BasisVector::Even(i, j) => ([(i as usize, FRAC_1_SQRT_2), (j as usize, FRAC_1_SQRT_2)], 2),
            BasisVector::Odd(i, j) => ([(i as usize, FRAC_1_SQRT_2), (j as usize, -FRAC_1_SQRT_2)], 2),
        }
    }

    fn first_site(self) -> usize {
        match self {
            BasisVector::Site(i) | BasisVector::Even(i, _) | BasisVector::Odd(i, _) => i as usize,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Block {
    pub basis: Vec<BasisVector>,
    pub matrix: Mat<f64>,
}

#[derive(Clone, Debug)]
pub struct BlockDiagonal {
    pub(crate) dim: usize,
    pub blocks: Vec<Block>,
}

#[derive(Clone, Debug)]
pub enum SymMatrix {
    Sparse(SparseSym),
    Dense(Mat<f64>),
    Blocked(BlockDiagonal),
}

fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn check_dense_dim(n: usize) -> Result<()> {
    if n > MAX_DENSE_DIM {
        return Err(Error::BudgetExceeded {
            budget: MAX_DENSE_DIM,
            what: format!("dense eigensolve of dimension {n}"),
        });
    }
    Ok(())
}

fn dense_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    check_dense_dim(m.nrows())?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?} (dimension {})", m.nrows())))
}

fn dense_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    check_dense_dim(m.nrows())?;
    if m.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?} (dimension {})", m.nrows())))?;
    let s = evd.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

impl SymMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SymMatrix::Sparse(s) => s.dim,
            SymMatrix::Dense(m) => m.nrows(),
            SymMatrix::Blocked(b) => b.dim,
        }
    }

    pub fn from_dense(mut m: Mat<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Invalid("matrix is not square".into()));
        }
        symmetrize(&mut m);
        Ok(SymMatrix::Dense(m))
    }

    pub fn diagonal_matrix(diag: Vec<f64>) -> Self {
        SymMatrix::Sparse(SparseSym {
            dim: diag.len(),
            diag,
            upper: Vec::new(),
        })
    }

    pub fn is_diagonal(&self) -> bool {
        match self {
            SymMatrix::Sparse(s) => s.upper.is_empty(),
            SymMatrix::Dense(m) => {
                let n = m.nrows();
                (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == 0.0))
            }
            SymMatrix::Blocked(_) => false,
        }
    }

    /// Diagonal entries `⟨e_i, T e_i⟩` in the site basis.
    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            SymMatrix::Sparse(s) => s.diag.clone(),
            SymMatrix::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)]).collect(),
            SymMatrix::Blocked(b) => {
                let mut d = vec![0.0; b.dim];
                for block in &b.blocks {
                    for (a, v) in block.basis.iter().enumerate() {
                        let (comps, n) = v.components();
                        for &(i, c) in &comps[..n] {
                            d[i] += c * c * block.matrix[(a, a)];
                        }
                    }
                }
                d
            }
        }
    }

    /// `Σ_i T_ij²` for every column `j`, i.e. the site diagonal of `T²`.
    pub fn column_square_sums(&self) -> Vec<f64> {
        match self {
            SymMatrix::Sparse(s) => {
                let mut out = vec![0.0; s.dim];
                s.for_each_entry(|_, j, v| out[j] += v * v);
                out
            }
            SymMatrix::Dense(m) => (0..m.ncols()).map(|j| m.col(j).iter().map(|v| v * v).sum()).collect(),
            SymMatrix::Blocked(b) => {
                let mut out = vec![0.0; b.dim];
                for block in &b.blocks {
                    for (a, v) in block.basis.iter().enumerate() {
                        let sq: f64 = block.matrix.col(a).iter().map(|x| x * x).sum();
                        let (comps, n) = v.components();
                        for &(i, c) in &comps[..n] {
                            out[i] += c * c * sq;
                        }
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            SymMatrix::Dense(m) => m.clone(),
            SymMatrix::Sparse(s) => {
                let mut m = Mat::zeros(s.dim, s.dim);
                s.for_each_entry(|i, j, v| m[(i, j)] = v);
                m
            }
            SymMatrix::Blocked(b) => {
                let mut m = Mat::<f64>::zeros(b.dim, b.dim);
                for block in &b.blocks {
                    for (bi, vb) in block.basis.iter().enumerate() {
                        let (cb, nb) = vb.components();
                        for (ai, va) in block.basis.iter().enumerate() {
                            let (ca, na) = va.components();
                            let x = block.matrix[(ai, bi)];
                            for &(i, ci) in &ca[..na] {
                                for &(j, cj) in &cb[..nb] {
                                    m[(i, j)] += ci * cj * x;
                                }
                            }
                        }
                    }
                }
                symmetrize(&mut m);
                m
            }
        }
    }

    /// `S T S` for the diagonal matrix `S = diag(s)`.
    pub fn scaled(&self, s: &[f64]) -> Result<SymMatrix> {
        if s.len() != self.dim() {
            return Err(Error::Invalid("scaling vector length differs from dimension".into()));
        }
        Ok(match self {
            SymMatrix::Sparse(m) => SymMatrix::Sparse(SparseSym {
                dim: m.dim,
                diag: m.diag.iter().zip(s).map(|(d, x)| d * x * x).collect(),
                upper: m
                    .upper
                    .iter()
                    .map(|&(i, j, v)| (i, j, v * s[i as usize] * s[j as usize]))
                    .collect(),
            }),
            SymMatrix::Dense(m) => {
                let n = m.nrows();
                SymMatrix::Dense(Mat::from_fn(n, n, |i, j| m[(i, j)] * s[i] * s[j]))
            }
            SymMatrix::Blocked(b) => {
                let consistent = b.blocks.iter().all(|block| {
                    block.basis.iter().all(|v| match *v {
                        BasisVector::Site(_) => true,
                        BasisVector::Even(i, j) | BasisVector::Odd(i, j) => s[i as usize] == s[j as usize],
                    })
                });
                if !consistent {
                    return SymMatrix::Dense(self.to_dense()).scaled(s);
                }
                let blocks = b
                    .blocks
                    .iter()
                    .map(|block| {
                        let f: Vec<f64> = block.basis.iter().map(|v| s[v.first_site()]).collect();
                        let n = f.len();
                        Block {
                            basis: block.basis.clone(),
                            matrix: Mat::from_fn(n, n, |a, c| block.matrix[(a, c)] * f[a] * f[c]),
                        }
                    })
                    .collect();
                SymMatrix::Blocked(BlockDiagonal { dim: b.dim, blocks })
            }
        })
    }

    /// Splits into even/odd sectors of the involution `sigma` if the matrix
    /// commutes with it exactly; `None` otherwise.
    pub fn blocked_by(&self, sigma: &[usize]) -> Option<SymMatrix> {
        let n = self.dim();
        if sigma.len() != n || (0..n).any(|i| sigma[i] >= n || sigma[sigma[i]] != i) {
            return None;
        }
        if sigma.iter().enumerate().all(|(i, &s)| s == i) {
            return None;
        }
        let invariant = match self {
            SymMatrix::Sparse(s) => {
                (0..n).all(|i| s.diag[i] == s.diag[sigma[i]])
                    && s.upper.iter().all(|&(i, j, v)| {
                        let (a, b) = (sigma[i as usize] as u32, sigma[j as usize] as u32);
                        let key = (a.min(b), a.max(b));
                        s.upper
                            .binary_search_by(|e| (e.0, e.1).cmp(&key))
                            .is_ok_and(|pos| s.upper[pos].2 == v)
                    })
            }
            SymMatrix::Dense(m) => (0..n).all(|j| (0..n).all(|i| m[(i, j)] == m[(sigma[i], sigma[j])])),
            SymMatrix::Blocked(_) => return None,
        };
        if !invariant {
            return None;
        }
        // membership: site -> (basis index, coefficient) in each sector
        let mut even_basis = Vec::new();
        let mut odd_basis = Vec::new();
        let mut even_of = vec![(0usize, 0.0f64); n];
        let mut odd_of = vec![(usize::MAX, 0.0f64); n];
        for i in 0..n {
            let j = sigma[i];
            if j == i {
                even_of[i] = (even_basis.len(), 1.0);
                even_basis.push(BasisVector::Site(i as u32));
            } else if i < j {
                even_of[i] = (even_basis.len(), FRAC_1_SQRT_2);
                even_of[j] = (even_basis.len(), FRAC_1_SQRT_2);
                even_basis.push(BasisVector::Even(i as u32, j as u32));
                odd_of[i] = (odd_basis.len(), FRAC_1_SQRT_2);
                odd_of[j] = (odd_basis.len(), -FRAC_1_SQRT_2);
                odd_basis.push(BasisVector::Odd(i as u32, j as u32));
            }
        }
        let mut even = Mat::<f64>::zeros(even_basis.len(), even_basis.len());
        let mut odd = Mat::<f64>::zeros(odd_basis.len(), odd_basis.len());
        let mut add = |i: usize, j: usize, v: f64| {
            let ((a, ca), (b, cb)) = (even_of[i], even_of[j]);
            even[(a, b)] += ca * cb * v;
            let ((a, ca), (b, cb)) = (odd_of[i], odd_of[j]);
            if a != usize::MAX && b != usize::MAX {
                odd[(a, b)] += ca * cb * v;
            }
        };
        match self {
            SymMatrix::Sparse(s) => s.for_each_entry(&mut add),
            SymMatrix::Dense(m) => {
                for j in 0..n {
                    for i in 0..n {
                        let v = m[(i, j)];
                        if v != 0.0 {
                            add(i, j, v);
                        }
                    }
                }
            }
            SymMatrix::Blocked(_) => unreachable!(),
        }
        symmetrize(&mut even);
        symmetrize(&mut odd);
        let mut blocks = vec![Block {
            basis: even_basis,
            matrix: even,
        }];
        if !odd_basis.is_empty() {
            blocks.push(Block {
                basis: odd_basis,
                matrix: odd,
            });
        }
        Some(SymMatrix::Blocked(BlockDiagonal { dim: n, blocks }))
    }

    /// All eigenvalues, unordered.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            SymMatrix::Sparse(s) if s.upper.is_empty() => Ok(s.diag.clone()),
            SymMatrix::Sparse(s) => {
                check_dense_dim(s.dim)?;
                dense_eigenvalues(&self.to_dense())
            }
            SymMatrix::Dense(m) => dense_eigenvalues(m),
            SymMatrix::Blocked(b) => {
                let parts: Vec<Result<Vec<f64>>> = b.blocks.par_iter().map(|blk| dense_eigenvalues(&blk.matrix)).collect();
                let mut all = Vec::with_capacity(b.dim);
                for p in parts {
                    all.extend(p?);
                }
                Ok(all)
            }
        }
    }

    pub fn decompose(&self) -> Result<Decomposition> {
        match self {
            SymMatrix::Sparse(s) if s.upper.is_empty() => Ok(Decomposition::Diagonal(s.diag.clone())),
            SymMatrix::Blocked(b) => {
                let parts: Vec<Result<(Vec<f64>, Mat<f64>)>> =
                    b.blocks.par_iter().map(|blk| dense_eigen(&blk.matrix)).collect();
                let mut blocks = Vec::with_capacity(parts.len());
                for (blk, p) in b.blocks.iter().zip(parts) {
                    let (values, vectors) = p?;
                    blocks.push(BlockEigen {
                        basis: blk.basis.clone(),
                        values,
                        vectors,
                    });
                }
                Ok(Decomposition::Blocks { dim: b.dim, blocks })
            }
            _ => {
                check_dense_dim(self.dim())?;
                let dense = match self {
                    SymMatrix::Dense(m) => std::borrow::Cow::Borrowed(m),
                    _ => std::borrow::Cow::Owned(self.to_dense()),
                };
                let n = dense.nrows();
                let (values, vectors) = dense_eigen(&dense)?;
                Ok(Decomposition::Blocks {
                    dim: n,
                    blocks: vec![BlockEigen {
                        basis: (0..n as u32).map(BasisVector::Site).collect(),
                        values,
                        vectors,
                    }],
                })
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockEigen {
    pub basis: Vec<BasisVector>,
    pub values: Vec<f64>,
    /// Columns are orthonormal eigenvectors in the block basis.
    pub vectors: Mat<f64>,
}

/// Spectral decomposition `T = Σ λ_j v_j v_jᵀ`, blockwise.
#[derive(Clone, Debug)]
pub enum Decomposition {
    Diagonal(Vec<f64>),
    Blocks { dim: usize, blocks: Vec<BlockEigen> },
}

impl Decomposition {
    pub fn dim(&self) -> usize {
        match self {
            Decomposition::Diagonal(d) => d.len(),
            Decomposition::Blocks { dim, .. } => *dim,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        match self {
            Decomposition::Diagonal(d) => d.clone(),
            Decomposition::Blocks { blocks, .. } => blocks.iter().flat_map(|b| b.values.iter().copied()).collect(),
        }
    }

    pub fn spectral_range(&self) -> Option<(f64, f64)> {
        let ev = self.eigenvalues();
        let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (!ev.is_empty()).then_some((lo, hi))
    }

    /// `g(T) = U g(Λ) Uᵀ`, blockwise and exactly symmetric.
    pub fn apply(&self, g: impl Fn(f64) -> f64 + Sync) -> SymMatrix {
        match self {
            Decomposition::Diagonal(d) => SymMatrix::diagonal_matrix(d.iter().map(|&x| g(x)).collect()),
            Decomposition::Blocks { dim, blocks } => {
                let out = blocks
                    .par_iter()
                    .map(|b| {
                        let n = b.values.len();
                        let gv: Vec<f64> = b.values.iter().map(|&x| g(x)).collect();
                        let scaled = Mat::from_fn(n, n, |i, j| b.vectors[(i, j)] * gv[j]);
                        let mut m = &scaled * b.vectors.transpose();
                        symmetrize(&mut m);
                        Block {
                            basis: b.basis.clone(),
                            matrix: m,
                        }
                    })
                    .collect::<Vec<_>>();
                if out.len() == 1 && out[0].basis.iter().enumerate().all(|(i, v)| *v == BasisVector::Site(i as u32)) {
                    SymMatrix::Dense(out.into_iter().next().unwrap().matrix)
                } else {
                    SymMatrix::Blocked(BlockDiagonal { dim: *dim, blocks: out })
                }
            }
        }
    }

    /// Site diagonal of `g(T)` without forming the matrix.
    pub fn diagonal_of(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        match self {
            Decomposition::Diagonal(d) => d.iter().map(|&x| g(x)).collect(),
            Decomposition::Blocks { dim, blocks } => {
                let mut out = vec![0.0; *dim];
                for b in blocks {
                    let n = b.values.len();
                    let mut in_basis = vec![0.0; n];
                    for j in 0..n {
                        let gj = g(b.values[j]);
                        if gj == 0.0 {
                            continue;
                        }
                        let col = b.vectors.col(j);
                        for (a, slot) in in_basis.iter_mut().enumerate() {
                            let u = col[a];
                            *slot += u * u * gj;
                        }
                    }
                    for (a, v) in b.basis.iter().enumerate() {
                        let (comps, k) = v.components();
                        for &(i, c) in &comps[..k] {
                            out[i] += c * c * in_basis[a];
                        }
                    }
                }
                out
            }
        }
    }
}
