//! Random embeddings and column-sampling schemes.
//!
//! Every family produces the pair `C = A·X`, `W = Xᵀ·A·X` from a
//! [`SketchSpec`]. The embedding `X` is `n × s` and is always materialized
//! densely, including the SRTT (which is applied as a dense orthonormal DCT).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matcore::{symmetrize, SymMatrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SketchFamily {
    Gaussian,
    Srtt,
    Sparse,
    ColUniform,
    ColLeverage,
    ColKmeanspp,
}

impl SketchFamily {
    pub const ALL: [SketchFamily; 6] = [
        SketchFamily::Gaussian,
        SketchFamily::Srtt,
        SketchFamily::Sparse,
        SketchFamily::ColUniform,
        SketchFamily::ColLeverage,
        SketchFamily::ColKmeanspp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SketchFamily::Gaussian => "gaussian",
            SketchFamily::Srtt => "srtt",
            SketchFamily::Sparse => "sparse",
            SketchFamily::ColUniform => "col_uniform",
            SketchFamily::ColLeverage => "col_leverage",
            SketchFamily::ColKmeanspp => "col_kmeanspp",
        }
    }

    pub fn is_column_sampling(self) -> bool {
        matches!(
            self,
            SketchFamily::ColUniform | SketchFamily::ColLeverage | SketchFamily::ColKmeanspp
        )
    }
}

impl fmt::Display for SketchFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SketchFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SketchFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown sketch family {s:?}")))
    }
}

/// Description of one embedding draw.
#[derive(Debug, Clone)]
pub struct SketchSpec {
    pub family: SketchFamily,
    pub n: usize,
    pub s: usize,
    pub seed: u64,
    /// Nonzeros per row of `X` (sparse family). Defaults to `min(s, 8)`.
    pub sparsity: Option<usize>,
    /// Rank of the eigenvector block that defines leverage scores.
    pub leverage_rank: Option<usize>,
    /// Point set, one row per point, for k-means++ seeding.
    pub data_points: Option<Arc<DMatrix<f64>>>,
}

impl SketchSpec {
    pub fn new(family: SketchFamily, n: usize, s: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            s,
            seed,
            sparsity: None,
            leverage_rank: None,
            data_points: None,
        }
    }

    pub fn with_sparsity(mut self, xi: usize) -> Self {
        self.sparsity = Some(xi);
        self
    }

    pub fn with_leverage_rank(mut self, r: usize) -> Self {
        self.leverage_rank = Some(r);
        self
    }

    pub fn with_points(mut self, points: Arc<DMatrix<f64>>) -> Self {
        self.data_points = Some(points);
        self
    }

    pub fn effective_sparsity(&self) -> usize {
        self.sparsity.unwrap_or(self.s.min(8))
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.s > self.n {
            return Err(Error::arg(format!(
                "sketch size must satisfy 1 <= s <= n, got s={} n={}",
                self.s, self.n
            )));
        }
        if self.family == SketchFamily::Sparse {
            let xi = self.effective_sparsity();
            if xi == 0 || xi > self.s {
                return Err(Error::arg(format!(
                    "sparsity must satisfy 1 <= xi <= s, got xi={xi} s={}",
                    self.s
                )));
            }
        }
        Ok(())
    }

    fn rng(&self) -> seed::Rng {
        seed::rng(seed::substream(self.seed, self.family.as_str()))
    }
}

/// The realized sketch of one matrix.
#[derive(Debug, Clone)]
pub struct SketchResult {
    /// `A·X`, `n × s`.
    pub c: DMatrix<f64>,
    /// `Xᵀ·A·X`, symmetrized.
    pub w: DMatrix<f64>,
    pub x: Option<DMatrix<f64>>,
    pub column_indices: Option<Vec<usize>>,
}

impl SketchResult {
    /// Sketches `a` with an explicit embedding.
    pub fn from_embedding(a: &SymMatrix, x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != a.n() {
            return Err(Error::arg(format!(
                "embedding has {} rows, matrix dimension is {}",
                x.nrows(),
                a.n()
            )));
        }
        let c = a.matrix() * &x;
        let w = symmetrize(&(x.transpose() * &c));
        Ok(Self {
            c,
            w,
            x: Some(x),
            column_indices: None,
        })
    }

    /// Column sampling: `C = A(:, idx)`, `W = A(idx, idx)`, no rescaling.
    pub fn from_columns(a: &SymMatrix, indices: Vec<usize>) -> Result<Self> {
        let n = a.n();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::arg(format!("column index {bad} out of range for n={n}")));
        }
        let c = a.matrix().select_columns(indices.iter());
        let w = symmetrize(&a.principal_submatrix(&indices));
        let mut x = DMatrix::zeros(n, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            x[(i, j)] = 1.0;
        }
        Ok(Self {
            c,
            w,
            x: Some(x),
            column_indices: Some(indices),
        })
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn s(&self) -> usize {
        self.c.ncols()
    }
}

/// i.i.d. `N(0, 1/s)` entries.
pub fn gaussian_sketch(spec: &SketchSpec) -> Result<DMatrix<f64>> {
    expect_family(spec, SketchFamily::Gaussian)?;
    spec.validate()?;
    let mut rng = spec.rng();
    Ok(gaussian_matrix(&mut rng, spec.n, spec.s, 1.0 / (spec.s as f64).sqrt()))
}

/// `n × m` matrix of i.i.d. `N(0, scale²)` entries, filled column by column.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, scale: f64) -> DMatrix<f64> {
    let data: Vec<f64> = (0..n * m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect();
    DMatrix::from_vec(n, m, data)
}

/// Orthonormal DCT-II basis: column `k` is `α_k cos(π(2i+1)k / 2n)`.
///
/// With this `F`, `Fᵀ v` is the orthonormal DCT-II of `v`.
pub fn dct_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, k| dct_entry(n, i, k))
}

fn dct_entry(n: usize, i: usize, k: usize) -> f64 {
    let nf = n as f64;
    let alpha = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
    alpha * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos()
}

/// `X = sqrt(n/s) · D · F · Rᵀ` with random signs `D`, orthonormal DCT `F`
/// and a uniform without-replacement restriction `R`.
pub fn srtt_sketch(spec: &SketchSpec) -> Result<DMatrix<f64>> {
    expect_family(spec, SketchFamily::Srtt)?;
    spec.validate()?;
    let (n, s) = (spec.n, spec.s);
    let mut rng = spec.rng();
    let signs: Vec<f64> = (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let cols = index::sample(&mut rng, n, s).into_vec();
    let scale = (n as f64 / s as f64).sqrt();
    Ok(DMatrix::from_fn(n, s, |i, j| {
        scale * signs[i] * dct_entry(n, i, cols[j])
    }))
}

/// Each row of `X` holds exactly `ξ` entries `±1/√ξ` at distinct uniform positions.
pub fn sparse_sketch(spec: &SketchSpec) -> Result<DMatrix<f64>> {
    expect_family(spec, SketchFamily::Sparse)?;
    spec.validate()?;
    let (n, s, xi) = (spec.n, spec.s, spec.effective_sparsity());
    let mut rng = spec.rng();
    let val = 1.0 / (xi as f64).sqrt();
    let mut x = DMatrix::zeros(n, s);
    for i in 0..n {
        for j in index::sample(&mut rng, s, xi).into_iter() {
            x[(i, j)] = if rng.random::<bool>() { val } else { -val };
        }
    }
    Ok(x)
}

/// Draws column indices for the column-sampling families and sketches `a`.
pub fn column_sampler(spec: &SketchSpec, a: &SymMatrix) -> Result<SketchResult> {
    if !spec.family.is_column_sampling() {
        return Err(Error::arg(format!(
            "{} is not a column-sampling family",
            spec.family
        )));
    }
    if spec.n != a.n() {
        return Err(Error::arg(format!(
            "spec is for n={}, matrix has n={}",
            spec.n,
            a.n()
        )));
    }
    if spec.s == 0 || (spec.s > spec.n && spec.family != SketchFamily::ColLeverage) {
        return Err(Error::arg(format!(
            "cannot draw {} distinct columns out of {}",
            spec.s, spec.n
        )));
    }
    let mut rng = spec.rng();
    let indices = match spec.family {
        SketchFamily::ColUniform => index::sample(&mut rng, spec.n, spec.s).into_vec(),
        SketchFamily::ColLeverage => {
            let k = spec
                .leverage_rank
                .ok_or_else(|| Error::arg("col_leverage needs leverage_rank"))?;
            let p = leverage_scores(a, k)?;
            let dist = WeightedIndex::new(&p)
                .map_err(|e| Error::arg(format!("leverage scores unusable: {e}")))?;
            (0..spec.s).map(|_| dist.sample(&mut rng)).collect()
        }
        SketchFamily::ColKmeanspp => {
            let pts = spec
                .data_points
                .as_ref()
                .ok_or_else(|| Error::arg("col_kmeanspp needs data_points"))?;
            if pts.nrows() != spec.n {
                return Err(Error::arg(format!(
                    "{} data points for an n={} matrix",
                    pts.nrows(),
                    spec.n
                )));
            }
            kmeanspp_seeds(pts, spec.s, &mut rng)
        }
        _ => unreachable!(),
    };
    SketchResult::from_columns(a, indices)
}

/// `p_i = ‖V_k(i,:)‖² / k` from the exact top-`k` eigenvector block.
pub fn leverage_scores(a: &SymMatrix, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > a.n() {
        return Err(Error::arg(format!("leverage rank {k} out of range")));
    }
    let v = &a.eig()?.vectors;
    Ok((0..a.n())
        .map(|i| (0..k).map(|j| v[(i, j)] * v[(i, j)]).sum::<f64>() / k as f64)
        .collect())
}

/// Standard k-means++ seeding on the rows of `points`; returns `k` row indices.
pub fn kmeanspp_seeds<R: Rng + ?Sized>(points: &DMatrix<f64>, k: usize, rng: &mut R) -> Vec<usize> {
    let m = points.nrows();
    let dist2 = |a: usize, b: usize| -> f64 {
        (0..points.ncols())
            .map(|c| {
                let d = points[(a, c)] - points[(b, c)];
                d * d
            })
            .sum()
    };
    let mut chosen = Vec::with_capacity(k);
    let first = rng.random_range(0..m);
    chosen.push(first);
    let mut d2: Vec<f64> = (0..m).map(|i| dist2(i, first)).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            WeightedIndex::new(&d2)
                .expect("non-negative weights with positive total")
                .sample(rng)
        } else {
            // every remaining point coincides with a centre
            let rest: Vec<usize> = (0..m).filter(|i| !chosen.contains(i)).collect();
            rest[rng.random_range(0..rest.len())]
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(i, next));
        }
    }
    chosen
}

/// Draws the embedding named by `spec` and sketches `a` with it.
pub fn apply_sketch(a: &SymMatrix, spec: &SketchSpec) -> Result<SketchResult> {
    if spec.n != a.n() {
        return Err(Error::arg(format!(
            "spec is for n={}, matrix has n={}",
            spec.n,
            a.n()
        )));
    }
    let x = match spec.family {
        SketchFamily::Gaussian => gaussian_sketch(spec)?,
        SketchFamily::Srtt => srtt_sketch(spec)?,
        SketchFamily::Sparse => sparse_sketch(spec)?,
        _ => return column_sampler(spec, a),
    };
    SketchResult::from_embedding(a, x)
}

fn expect_family(spec: &SketchSpec, family: SketchFamily) -> Result<()> {
    if spec.family != family {
        return Err(Error::arg(format!(
            "expected a {family} spec, got {}",
            spec.family
        )));
    }
    Ok(())
}
