//! Test matrices: synthetic spectra with controlled eigenvectors, indefinite
//! kernel matrices, and standardized samples of tabular data.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::{scale_columns, symmetrize, EigDecomp, SymMatrix};
use crate::seed;
use crate::sketch::gaussian_matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    /// Magnitudes interpolated log-uniformly from `start` to `end` inclusive.
    Geometric { start: f64, end: f64 },
    /// `(count, magnitude)` runs, in order.
    Stepwise(Vec<(usize, f64)>),
}

/// Eigenvalue magnitudes; signs are drawn iid ±1 by [`synth_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub n: usize,
    pub kind: SpectrumKind,
}

impl SpectrumSpec {
    pub fn geometric(n: usize, start: f64, end: f64) -> Self {
        Self {
            n,
            kind: SpectrumKind::Geometric { start, end },
        }
    }

    pub fn stepwise(steps: Vec<(usize, f64)>) -> Self {
        Self {
            n: steps.iter().map(|s| s.0).sum(),
            kind: SpectrumKind::Stepwise(steps),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::arg("spectrum size must be at least 1"));
        }
        match &self.kind {
            SpectrumKind::Geometric { start, end } => {
                if !(start.is_finite() && *end > 0.0 && start >= end) {
                    return Err(Error::arg(format!(
                        "geometric spectrum needs start >= end > 0, got {start} -> {end}"
                    )));
                }
            }
            SpectrumKind::Stepwise(steps) => {
                let total: usize = steps.iter().map(|s| s.0).sum();
                if total != self.n {
                    return Err(Error::arg(format!("step counts sum to {total}, expected {}", self.n)));
                }
                if steps.iter().any(|s| !s.1.is_finite() || s.1 < 0.0) {
                    return Err(Error::arg("step magnitudes must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        match &self.kind {
            SpectrumKind::Geometric { start, end } => {
                if self.n == 1 {
                    return vec![*start];
                }
                let ratio = end / start;
                let last = (self.n - 1) as f64;
                (0..self.n).map(|i| start * ratio.powf(i as f64 / last)).collect()
            }
            SpectrumKind::Stepwise(steps) => steps
                .iter()
                .flat_map(|&(count, mag)| std::iter::repeat_n(mag, count))
                .collect(),
        }
    }
}

/// Eigenvector basis for synthetic matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigvecSpec {
    Haar,
    /// `diag(I_k, U)` with `U` Haar on the remaining `n − k` coordinates.
    BlockCoherent { k: usize },
    /// Coordinate axes; the matrix is diagonal.
    Identity,
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian with `R`'s diagonal
/// made positive.
pub fn haar_orthogonal(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    let mut rng = seed::rng(seed);
    let g = gaussian_matrix(&mut rng, n, n, 1.0);
    let qr = g.qr();
    let signs: Vec<f64> = qr.r().diagonal().iter().map(|d| if *d < 0.0 { -1.0 } else { 1.0 }).collect();
    Ok(scale_columns(&qr.q(), &signs))
}

fn eigenvectors(n: usize, vec: &EigvecSpec, seed: u64) -> Result<DMatrix<f64>> {
    match *vec {
        EigvecSpec::Haar => haar_orthogonal(n, seed),
        EigvecSpec::Identity => Ok(DMatrix::identity(n, n)),
        EigvecSpec::BlockCoherent { k } => {
            if k >= n {
                return Err(Error::arg(format!("coherent block size {k} must be below n={n}")));
            }
            let mut v = DMatrix::identity(n, n);
            v.view_mut((k, k), (n - k, n - k)).copy_from(&haar_orthogonal(n - k, seed)?);
            Ok(v)
        }
    }
}

/// `A = V diag(λ) Vᵀ` with the spectrum's magnitudes and iid ±1 signs.
/// The returned matrix carries its exact eigendecomposition.
pub fn synth_matrix(spec: &SpectrumSpec, vec: &EigvecSpec, seed: u64) -> Result<SymMatrix> {
    spec.validate()?;
    let mut sign_rng = seed::rng(seed::substream(seed, "signs"));
    let lambda: Vec<f64> = spec
        .magnitudes()
        .into_iter()
        .map(|m| if sign_rng.random::<bool>() { m } else { -m })
        .collect();
    let v = eigenvectors(spec.n, vec, seed::substream(seed, "eigvecs"))?;
    let a = symmetrize(&(scale_columns(&v, &lambda) * v.transpose()));
    SymMatrix::with_eig(
        a,
        EigDecomp {
            values: DVector::from_vec(lambda),
            vectors: v,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Epanechnikov,
    Multiquadric,
    ThinPlateSpline,
    Sigmoid,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [
        Kernel::Epanechnikov,
        Kernel::Multiquadric,
        Kernel::ThinPlateSpline,
        Kernel::Sigmoid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Multiquadric => "multiquadric",
            Kernel::ThinPlateSpline => "thin_plate_spline",
            Kernel::Sigmoid => "sigmoid",
        }
    }

    /// Kernel value as a function of the squared distance.
    pub fn eval_sq(self, d2: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => (1.0 - d2).max(0.0),
            Kernel::Multiquadric => (1.0 + d2).sqrt(),
            Kernel::ThinPlateSpline => {
                if d2 == 0.0 {
                    0.0
                } else {
                    d2 * d2.ln()
                }
            }
            Kernel::Sigmoid => (1.0 + d2).tanh(),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thin_plate" | "thin-plate" | "tps" => return Ok(Kernel::ThinPlateSpline),
            _ => {}
        }
        Kernel::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown kernel {s:?}")))
    }
}

/// `K_ij = k(x_i, x_j)` over the rows of `points` (`m × d`).
pub fn kernel_matrix(kernel: Kernel, points: &DMatrix<f64>) -> Result<SymMatrix> {
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("kernel points must be finite"));
    }
    let m = points.nrows();
    let mut k = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..=j {
            let d2 = (points.row(i) - points.row(j)).norm_squared();
            let v = kernel.eval_sq(d2);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    SymMatrix::new(k)
}

/// Reads a numeric CSV into an `m × d` matrix. Parse errors report 1-based
/// file line and column.
pub fn read_points_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let offset = usize::from(has_header) + 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ri, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(ci, cell)| {
                cell.parse::<f64>().map_err(|e| Error::Parse {
                    row: ri + offset,
                    col: ci + 1,
                    msg: format!("{cell:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let d = rows.first().map_or(0, |r| r.len());
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

/// Centers each column and scales it to unit population variance.
/// Constant columns become zero.
pub fn standardize(points: &DMatrix<f64>) -> DMatrix<f64> {
    let m = points.nrows() as f64;
    let mut out = points.clone();
    for mut col in out.column_iter_mut() {
        let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo == hi {
            col.fill(0.0);
            continue;
        }
        let mean = col.sum() / m;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / m).sqrt();
        col /= sd;
    }
    out
}

/// Uniform sample of `m` rows without replacement, standardized.
pub fn load_standardize_sample(path: impl AsRef<Path>, m: usize, seed: u64, has_header: bool) -> Result<DMatrix<f64>> {
    let all = read_points_csv(path.as_ref(), has_header)?;
    sample_rows_standardized(&all, m, seed)
}

pub fn sample_rows_standardized(all: &DMatrix<f64>, m: usize, seed: u64) -> Result<DMatrix<f64>> {
    if all.nrows() < m {
        return Err(Error::arg(format!("requested {m} rows but only {} available", all.nrows())));
    }
    let mut rng = seed::rng(seed::substream(seed, "rows"));
    let mut idx = rand::seq::index::sample(&mut rng, all.nrows(), m).into_vec();
    idx.sort_unstable();
    Ok(standardize(&all.select_rows(idx.iter())))
}

/// Writes `rows × cols` Gaussian features with per-column offsets and scales,
/// for exercising the dataset pipeline without external data.
pub fn write_synthetic_csv(path: impl AsRef<Path>, rows: usize, cols: usize, seed: u64, header: bool) -> Result<()> {
    let path = path.as_ref();
    let mut rng = seed::rng(seed);
    let g = gaussian_matrix(&mut rng, rows, cols, 1.0);
    let shift: Vec<f64> = (0..cols).map(|_| rng.random_range(-5.0..5.0)).collect();
    let scale: Vec<f64> = (0..cols).map(|_| rng.random_range(0.1..10.0)).collect();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    if header {
        let names: Vec<String> = (0..cols).map(|j| format!("f{j}")).collect();
        writeln!(w, "{}", names.join(",")).map_err(|e| Error::io(path, e))?;
    }
    for i in 0..rows {
        let line: Vec<String> = (0..cols).map(|j| format!("{:e}", shift[j] + scale[j] * g[(i, j)])).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
