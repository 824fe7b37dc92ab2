//! Dense symmetric linear algebra: magnitude-ordered eigendecomposition,
//! best rank-r approximation, truncated pseudoinverses and the three
//! unitarily invariant norms used throughout the crate.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative cutoff below which an eigenvalue counts as an exact zero for the
/// plain pseudoinverse: `1e2 · ε_mach · σ_max`.
pub const MACHINE_CUTOFF: f64 = 1e2 * f64::EPSILON;

/// Dense symmetric `n × n` matrix with a lazily cached eigendecomposition.
///
/// Construction symmetrizes, so `entries[i][j] == entries[j][i]` holds bitwise.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    data: DMatrix<f64>,
    eig: OnceLock<EigDecomp>,
}

impl SymMatrix {
    /// Symmetrizes `m` via `(M + Mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::arg(format!(
                "matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::arg("matrix dimension must be at least 1"));
        }
        let data = symmetrize(&m);
        Ok(Self {
            data,
            eig: OnceLock::new(),
        })
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    /// Builds `A` together with a known eigendecomposition, skipping the solver.
    /// `eig` is re-sorted into magnitude order; the caller vouches that it
    /// decomposes `m`.
    pub fn with_eig(m: DMatrix<f64>, eig: EigDecomp) -> Result<Self> {
        let a = Self::new(m)?;
        if eig.values.len() != a.n() || eig.vectors.nrows() != a.n() {
            return Err(Error::arg("eigendecomposition does not match matrix size"));
        }
        let _ = a.eig.set(eig.sorted());
        Ok(a)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Cached magnitude-ordered eigendecomposition.
    pub fn eig(&self) -> Result<&EigDecomp> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = eig_sym(&self.data)?;
        let _ = self.eig.set(e);
        Ok(self.eig.get().expect("just set"))
    }

    /// `σ_i(A) = |λ_i(A)|`, non-increasing.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.values.iter().map(|v| v.abs()).collect())
    }

    /// `A + δ·I`.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut m = self.data.clone();
        for i in 0..self.n() {
            m[(i, i)] += delta;
        }
        Self {
            data: m,
            eig: OnceLock::new(),
        }
    }

    /// Principal submatrix `A(idx, idx)`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.data[(idx[i], idx[j])])
    }
}

/// Eigendecomposition ordered by non-increasing `|λ|`.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigDecomp {
    /// Reorders by `|λ|` descending; ties go to the positive eigenvalue first,
    /// then keep their incoming order.
    pub fn sorted(self) -> Self {
        let order = magnitude_order(self.values.as_slice());
        let values = DVector::from_iterator(order.len(), order.iter().map(|&i| self.values[i]));
        let vectors = self.vectors.select_columns(order.iter());
        Self { values, vectors }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = scale_columns(&self.vectors, self.values.as_slice());
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    /// Sum of `|λ_i|` for `i ≥ k` (0-based), i.e. the nuclear-norm tail.
    pub fn tail_nuclear(&self, k: usize) -> f64 {
        self.values.iter().skip(k).map(|v| v.abs()).sum()
    }
}

/// Indices that sort `values` by `|λ|` descending, positive first on ties.
pub fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (values[i], values[j]);
        match b.abs().total_cmp(&a.abs()) {
            Ordering::Equal => (b > 0.0).cmp(&(a > 0.0)),
            o => o,
        }
    });
    order
}

/// Symmetric eigendecomposition of `a` (assumed symmetric), magnitude ordered.
pub fn eig_sym(a: &DMatrix<f64>) -> Result<EigDecomp> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::arg("eig_sym needs a square matrix"));
    }
    let max_iter = 1000 * n.max(1);
    let e = SymmetricEigen::try_new(a.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::EigenFailure { dim: n })?;
    Ok(EigDecomp {
        values: e.eigenvalues,
        vectors: e.eigenvectors,
    }
    .sorted())
}

/// Eigenvalues only, magnitude ordered. Much cheaper than [`eig_sym`].
pub fn eigvals_sym(a: &DMatrix<f64>) -> Vec<f64> {
    let v = a.clone().symmetric_eigenvalues();
    magnitude_order(v.as_slice())
        .into_iter()
        .map(|i| v[i])
        .collect()
}

/// Best rank-`r` approximation `V_r Λ_r V_rᵀ` and its nuclear error `Σ_{i>r} |λ_i|`.
pub fn best_rank_r(a: &SymMatrix, r: usize) -> Result<(DMatrix<f64>, f64)> {
    if r > a.n() {
        return Err(Error::arg(format!("rank {r} exceeds dimension {}", a.n())));
    }
    let e = a.eig()?;
    let v = e.vectors.columns(0, r);
    let scaled = scale_columns(&v.into_owned(), &e.values.as_slice()[..r]);
    let approx = symmetrize(&(scaled * v.transpose()));
    Ok((approx, e.tail_nuclear(r)))
}

/// How a core matrix is truncated before inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankTruncation {
    /// Keep the `r` largest-magnitude eigenvalues, whatever their size.
    Rank(usize),
    /// Keep eigenvalues with `|λ| > ε`.
    Tolerance(f64),
}

/// Pseudoinverse of a truncation of the symmetric matrix `w`.
///
/// Rank mode inverts every kept eigenvalue that is not exactly zero; there is
/// no hidden relative floor.
pub fn pinv_truncated(w: &DMatrix<f64>, t: RankTruncation) -> Result<DMatrix<f64>> {
    let e = eig_sym(&symmetrize(w))?;
    pinv_from_eig(&e, t)
}

pub(crate) fn pinv_from_eig(e: &EigDecomp, t: RankTruncation) -> Result<DMatrix<f64>> {
    let dim = e.len();
    let keep: Vec<usize> = match t {
        RankTruncation::Rank(r) => {
            if r > dim {
                return Err(Error::arg(format!("truncation rank {r} exceeds core size {dim}")));
            }
            (0..r).filter(|&i| e.values[i] != 0.0).collect()
        }
        RankTruncation::Tolerance(eps) => {
            if eps.is_nan() || eps < 0.0 {
                return Err(Error::arg("tolerance must be non-negative"));
            }
            (0..dim).filter(|&i| e.values[i].abs() > eps).collect()
        }
    };
    if keep.is_empty() {
        return Err(Error::SingularCore);
    }
    let v = e.vectors.select_columns(keep.iter());
    let inv: Vec<f64> = keep.iter().map(|&i| 1.0 / e.values[i]).collect();
    Ok(symmetrize(&(scale_columns(&v, &inv) * v.transpose())))
}

/// Pseudoinverse with only the machine-level cutoff `1e2·ε_mach·σ_max`.
pub fn pinv_machine(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = eig_sym(&symmetrize(w))?;
    let smax = e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if smax == 0.0 {
        return Err(Error::SingularCore);
    }
    pinv_from_eig(&e, RankTruncation::Tolerance(MACHINE_CUTOFF * smax))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub nuclear: f64,
    pub spectral: f64,
    pub frobenius: f64,
}

/// Nuclear, spectral and Frobenius norms of any real matrix, via the SVD.
pub fn norms(m: &DMatrix<f64>) -> Norms {
    if m.is_empty() {
        return Norms {
            nuclear: 0.0,
            spectral: 0.0,
            frobenius: 0.0,
        };
    }
    let sv = m.clone().singular_values();
    Norms {
        nuclear: sv.iter().sum(),
        spectral: sv.iter().fold(0.0_f64, |a, &b| a.max(b)),
        frobenius: m.norm(),
    }
}

/// The same three norms for a symmetric matrix, from its eigenvalues only.
pub fn sym_norms(m: &DMatrix<f64>) -> Norms {
    let ev = eigvals_sym(m);
    Norms {
        nuclear: ev.iter().map(|v| v.abs()).sum(),
        spectral: ev.first().map_or(0.0, |v| v.abs()),
        frobenius: m.norm(),
    }
}

/// `(M + Mᵀ)/2`; exactly symmetric.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, m.ncols(), |i, j| {
        if i == j {
            m[(i, i)]
        } else {
            // same operands in the same order for (i,j) and (j,i)
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            0.5 * (m[(lo, hi)] + m[(hi, lo)])
        }
    })
}

/// `M · diag(d)`.
pub fn scale_columns(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, &dj) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(dj);
    }
    out
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Reads a square matrix from headerless row-major CSV and symmetrizes it.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ri, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(ci, cell)| {
                cell.parse::<f64>().map_err(|e| Error::Parse {
                    row: ri + 1,
                    col: ci + 1,
                    msg: format!("{cell:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::arg(format!(
            "{}: row {} has {} entries, expected {n} for a square matrix",
            path.display(),
            i + 1,
            r.len()
        )));
    }
    SymMatrix::from_fn(n, |i, j| rows[i][j])
}

/// Writes `m` as headerless row-major CSV with round-trip float formatting.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for i in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn random_sym(n: usize, s: u64) -> SymMatrix {
        let mut rng = seed::rng(s);
        let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        SymMatrix::new(g).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    #[test]
    fn eig_of_diagonal_is_magnitude_ordered() {
        let a = SymMatrix::from_diagonal(&[1.0, -2.0, 3.0]).unwrap();
        let e = a.eig().unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, -2.0, 1.0]);
        // signed permutation of I
        for j in 0..3 {
            let col = e.vectors.column(j);
            let nz: Vec<f64> = col.iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nz.len(), 1);
            assert_eq!(nz[0].abs(), 1.0);
        }
        let expected_rows = [2, 1, 0];
        for (j, &row) in expected_rows.iter().enumerate() {
            assert_eq!(e.vectors[(row, j)].abs(), 1.0);
        }
    }

    #[test]
    fn eig_of_identity() {
        let e = eig_sym(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn eig_reconstructs_random_matrix() {
        let a = random_sym(8, 11);
        let e = a.eig().unwrap();
        let rel = (e.reconstruct() - a.matrix()).norm() / a.matrix().norm();
        assert!(rel < 1e-8, "{rel}");
        let orth = e.vectors.transpose() * &e.vectors - DMatrix::identity(8, 8);
        assert!(max_abs(&orth) < 1e-10);
        for i in 0..7 {
            assert!(e.values[i].abs() >= e.values[i + 1].abs());
        }
    }

    #[test]
    fn ties_prefer_positive() {
        let order = magnitude_order(&[-1.0, 1.0, 2.0, -2.0]);
        assert_eq!(order, vec![2, 3, 1, 0]);
    }

    #[test]
    fn best_rank_r_examples() {
        let a = SymMatrix::from_diagonal(&[3.0, -2.0, 1.0]).unwrap();
        let (approx, err) = best_rank_r(&a, 1).unwrap();
        assert_eq!(err, 3.0);
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.0, 0.0]));
        assert!(max_abs(&(approx - expected)) < 1e-15);

        let swap = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let (_, err) = best_rank_r(&swap, 1).unwrap();
        assert!((err - 1.0).abs() < 1e-14);

        let b = random_sym(6, 3);
        let (full, err) = best_rank_r(&b, 6).unwrap();
        assert_eq!(err, 0.0);
        assert!((full - b.matrix()).norm() < 1e-12);

        assert!(matches!(best_rank_r(&b, 7), Err(Error::Argument(_))));
    }

    #[test]
    fn best_rank_r_error_non_increasing_and_zero_at_rank() {
        // rank-4 matrix in dimension 7
        let mut rng = seed::rng(5);
        let g = DMatrix::<f64>::from_fn(7, 4, |_, _| StandardNormal.sample(&mut rng));
        let d = [2.0, -1.0, 0.5, -3.0];
        let a = SymMatrix::new(scale_columns(&g, &d) * g.transpose()).unwrap();
        let errs: Vec<f64> = (0..=7).map(|r| best_rank_r(&a, r).unwrap().1).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(errs[4] < 1e-10 * errs[0]);
    }

    #[test]
    fn eckart_young_spot_check() {
        let a = random_sym(10, 21);
        let r = 3;
        let (_, best) = best_rank_r(&a, r).unwrap();
        let mut rng = seed::rng(99);
        for _ in 0..20 {
            let g = DMatrix::<f64>::from_fn(10, r, |_, _| StandardNormal.sample(&mut rng));
            let d: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
            let m = scale_columns(&g, &d) * g.transpose();
            let err = norms(&(a.matrix() - m)).nuclear;
            assert!(best <= err + 1e-12);
        }
    }

    #[test]
    fn pinv_rank_mode_has_no_floor() {
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1e-20]));
        let p = pinv_truncated(&w, RankTruncation::Rank(1)).unwrap();
        assert_eq!(p[(0, 0)], 0.25);
        assert_eq!(p[(1, 1)], 0.0);
        let p2 = pinv_truncated(&w, RankTruncation::Rank(2)).unwrap();
        assert!((p2[(1, 1)] - 1e20).abs() < 1e6);
    }

    #[test]
    fn pinv_tolerance_mode() {
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, -2.0, 1e-16]));
        let p = pinv_truncated(&w, RankTruncation::Tolerance(1e-14)).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, -0.5, 0.0]));
        assert!(max_abs(&(p - expected)) < 1e-15);
    }

    #[test]
    fn pinv_singular_core() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert!(matches!(pinv_truncated(&z, RankTruncation::Rank(2)), Err(Error::SingularCore)));
        assert!(matches!(pinv_machine(&z), Err(Error::SingularCore)));
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        assert!(matches!(pinv_truncated(&w, RankTruncation::Rank(3)), Err(Error::Argument(_))));
    }

    #[test]
    fn full_rank_pinv_gives_range_projector() {
        // oracle: orthogonal projector from the eigenvectors with nonzero eigenvalues
        let a = random_sym(6, 8);
        let w = a.matrix();
        let p = pinv_truncated(w, RankTruncation::Rank(6)).unwrap();
        let proj = w * p;
        let e = eig_sym(w).unwrap();
        let oracle = &e.vectors * e.vectors.transpose();
        assert!(max_abs(&(proj - oracle)) < 1e-8);
    }

    #[test]
    fn truncated_pinv_rank_bound() {
        let a = random_sym(9, 4);
        for r in 0..=9 {
            match pinv_truncated(a.matrix(), RankTruncation::Rank(r)) {
                Ok(p) => assert!(numerical_rank(&p, 1e-12) <= r),
                Err(Error::SingularCore) => assert_eq!(r, 0),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn norm_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -2.0, 1.0]));
        let n = norms(&d);
        assert!((n.nuclear - 6.0).abs() < 1e-14);
        assert!((n.spectral - 3.0).abs() < 1e-14);
        assert!((n.frobenius - 14f64.sqrt()).abs() < 1e-14);

        let z = norms(&DMatrix::zeros(4, 3));
        assert_eq!((z.nuclear, z.spectral, z.frobenius), (0.0, 0.0, 0.0));

        let u = DVector::from_vec(vec![0.6, 0.8]);
        let v = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let n = norms(&(u * v.transpose()));
        for x in [n.nuclear, n.spectral, n.frobenius] {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn construction_symmetrizes_exactly() {
        let m = DMatrix::from_fn(5, 5, |i, j| (i * 3 + j * 7) as f64 * 0.1);
        let a = SymMatrix::new(m).unwrap();
        assert_eq!(a.matrix(), &a.matrix().transpose());
        assert!(SymMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn matrix_csv_round_trip() {
        let a = random_sym(5, 17);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_matrix_csv(&p, a.matrix()).unwrap();
        let b = read_matrix_csv(&p).unwrap();
        assert_eq!(a.matrix(), b.matrix());

        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_matrix_csv(&p).is_err());
        std::fs::write(&p, "1,x\n2,3\n").unwrap();
        assert!(matches!(read_matrix_csv(&p), Err(Error::Parse { row: 1, col: 2, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn nuclear_norm_matches_eigenvalues(n in 1usize..12, s in any::<u64>()) {
            let a = random_sym(n, s);
            let ev: f64 = a.eig().unwrap().values.iter().map(|v| v.abs()).sum();
            let nuc = norms(a.matrix()).nuclear;
            prop_assert!((ev - nuc).abs() <= 1e-10 * nuc.max(1e-300));
            let sn = sym_norms(a.matrix());
            prop_assert!((sn.nuclear - nuc).abs() <= 1e-10 * nuc.max(1e-300));
        }
    }
}
