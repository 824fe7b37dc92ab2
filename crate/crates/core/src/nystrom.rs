//! Nyström variants for symmetric, possibly indefinite, matrices.
//!
//! | variant | core |
//! |---|---|
//! | [`plain_nystrom`] | `W⁺` with only a machine-level cutoff |
//! | [`truncated_core_nystrom`] | `⌊W⌋_r⁺`, truncating `s − r` eigenvalues unconditionally |
//! | [`truncated_output_nystrom`] | `⌊C W⁺ Cᵀ⌋_r`, truncated after forming the approximation |
//! | [`stabilized_nystrom`] | `W⁺_ε`, dropping eigenvalues with `|λ| ≤ ε` |
//! | [`sms_nystrom`] | plain Nyström of `A + δI`, then shifted back by `δ` |

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matcore::{
    eig_sym, eigvals_sym, pinv_machine, pinv_truncated, scale_columns, symmetrize, RankTruncation,
    SymMatrix, MACHINE_CUTOFF,
};
use crate::seed;
use crate::sketch::{apply_sketch, SketchFamily, SketchResult, SketchSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Plain,
    TruncatedCore,
    TruncatedOutput,
    Stabilized,
    Sms,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Plain,
        Method::TruncatedCore,
        Method::TruncatedOutput,
        Method::Stabilized,
        Method::Sms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::TruncatedCore => "truncated_core",
            Method::TruncatedOutput => "truncated_output",
            Method::Stabilized => "stabilized",
            Method::Sms => "sms",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown Nyström method {s:?}")))
    }
}

/// Eigendecomposition `U₁ · diag(Σ) · U₁ᵀ` of an approximation, `U₁` orthonormal.
#[derive(Debug, Clone)]
pub struct ApproxEig {
    pub u1: DMatrix<f64>,
    pub sigma: DVector<f64>,
}

impl ApproxEig {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        symmetrize(&(scale_columns(&self.u1, self.sigma.as_slice()) * self.u1.transpose()))
    }
}

/// A factored Nyström approximation `C · core_pinv · Cᵀ`.
///
/// Output-truncated and shifted variants cannot be written through `C` alone;
/// for those `eig` carries the final factored form and takes precedence.
#[derive(Debug, Clone)]
pub struct NystromApprox {
    pub method: Method,
    pub c: DMatrix<f64>,
    pub core_pinv: DMatrix<f64>,
    pub eig: Option<ApproxEig>,
    /// Target rank (`s` for plain, kept rank for stabilized).
    pub r: usize,
    pub s: usize,
    /// Eigenvalue shift `δ` (SMS only).
    pub shift: f64,
}

impl NystromApprox {
    /// Dense `n × n` approximation, exactly symmetric.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        match &self.eig {
            Some(e) => e.reconstruct(),
            None => symmetrize(&(&self.c * &self.core_pinv * self.c.transpose())),
        }
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }
}

fn check_sketch(a: &SymMatrix, sk: &SketchResult) -> Result<()> {
    if sk.c.nrows() != a.n() || sk.w.nrows() != sk.c.ncols() || !sk.w.is_square() {
        return Err(Error::arg("sketch does not belong to this matrix"));
    }
    Ok(())
}

fn check_rank(r: usize, s: usize) -> Result<()> {
    if r == 0 || r > s {
        return Err(Error::arg(format!("target rank must satisfy 1 <= r <= s, got r={r} s={s}")));
    }
    Ok(())
}

/// `C · W⁺ · Cᵀ`, zeroing only eigenvalues of `W` below `1e2·ε_mach·σ_max(W)`.
pub fn plain_nystrom(a: &SymMatrix, sk: &SketchResult) -> Result<NystromApprox> {
    check_sketch(a, sk)?;
    let s = sk.s();
    Ok(NystromApprox {
        method: Method::Plain,
        c: sk.c.clone(),
        core_pinv: pinv_machine(&sk.w)?,
        eig: None,
        r: s,
        s,
        shift: 0.0,
    })
}

/// `C · ⌊W⌋_r⁺ · Cᵀ`: the `s − r` smallest-magnitude eigenvalues of the core
/// are dropped whatever their size.
pub fn truncated_core_nystrom(a: &SymMatrix, sk: &SketchResult, r: usize) -> Result<NystromApprox> {
    check_sketch(a, sk)?;
    let s = sk.s();
    check_rank(r, s)?;
    Ok(NystromApprox {
        method: Method::TruncatedCore,
        c: sk.c.clone(),
        core_pinv: pinv_truncated(&sk.w, RankTruncation::Rank(r))?,
        eig: None,
        r,
        s,
        shift: 0.0,
    })
}

/// `⌊C W⁺ Cᵀ⌋_r`, computed from the thin QR of `C` and an `s × s` eigenproblem.
pub fn truncated_output_nystrom(a: &SymMatrix, sk: &SketchResult, r: usize) -> Result<NystromApprox> {
    let plain = plain_nystrom(a, sk)?;
    check_rank(r, plain.s)?;
    let mut e = factored_eig(&plain.c, &plain.core_pinv)?;
    let keep = r.min(e.rank());
    e.u1 = e.u1.columns(0, keep).into_owned();
    e.sigma = e.sigma.rows(0, keep).into_owned();
    Ok(NystromApprox {
        method: Method::TruncatedOutput,
        r,
        eig: Some(e),
        ..plain
    })
}

/// `C · W⁺_ε · Cᵀ`, keeping eigenvalues of `W` with `|λ| > ε`.
pub fn stabilized_nystrom(a: &SymMatrix, sk: &SketchResult, eps: f64) -> Result<NystromApprox> {
    check_sketch(a, sk)?;
    let e = eig_sym(&sk.w)?;
    let kept = e.values.iter().filter(|v| v.abs() > eps).count();
    let core_pinv = crate::matcore::pinv_from_eig(&e, RankTruncation::Tolerance(eps))?;
    Ok(NystromApprox {
        method: Method::Stabilized,
        c: sk.c.clone(),
        core_pinv,
        eig: None,
        r: kept,
        s: sk.s(),
        shift: 0.0,
    })
}

/// Parameters of the submatrix-shifted variant.
#[derive(Debug, Clone, Copy)]
pub struct SmsParams {
    pub r: usize,
    /// Size of the principal submatrix that sets the shift.
    pub s1: usize,
    /// Sketch size for the shifted matrix.
    pub s2: usize,
    pub alpha: f64,
    pub family: SketchFamily,
    pub seed: u64,
}

impl SmsParams {
    /// `s1 = r`, `s2 = 2r`, `α = 1.5`.
    pub fn recommended(r: usize, family: SketchFamily, seed: u64) -> Self {
        Self {
            r,
            s1: r,
            s2: 2 * r,
            alpha: 1.5,
            family,
            seed,
        }
    }

    /// Spec of the sketch applied to `A + δI`.
    pub fn sketch_spec(&self, n: usize) -> SketchSpec {
        SketchSpec::new(self.family, n, self.s2, seed::substream(self.seed, "sms-sketch"))
    }
}

/// `δ = α · max(0, −λ_min(A(idx, idx)))` for `s1` uniformly drawn indices.
pub fn sms_shift(a: &SymMatrix, s1: usize, alpha: f64, seed: u64) -> Result<f64> {
    if s1 == 0 || s1 > a.n() {
        return Err(Error::arg(format!("s1={s1} out of range for n={}", a.n())));
    }
    let mut rng = seed::rng(seed::substream(seed, "sms-shift"));
    let idx = rand::seq::index::sample(&mut rng, a.n(), s1).into_vec();
    let sub = a.principal_submatrix(&idx);
    let lmin = sub
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    Ok(alpha * (-lmin).max(0.0))
}

/// Finishes the SMS pipeline from a sketch of `A + δI`: plain Nyström, factored
/// eigendecomposition, subtract `δ` from every nonzero eigenvalue, keep the
/// top `r` by magnitude.
pub fn sms_from_shifted_sketch(sk_shifted: &SketchResult, r: usize, delta: f64) -> Result<NystromApprox> {
    let s = sk_shifted.s();
    check_rank(r, s)?;
    let core_pinv = pinv_machine(&sk_shifted.w)?;
    let e = factored_eig(&sk_shifted.c, &core_pinv)?;
    let shifted: Vec<f64> = e.sigma.iter().map(|v| v - delta).collect();
    let order = crate::matcore::magnitude_order(&shifted);
    let keep: Vec<usize> = order.into_iter().take(r).collect();
    let eig = ApproxEig {
        u1: e.u1.select_columns(keep.iter()),
        sigma: DVector::from_iterator(keep.len(), keep.iter().map(|&i| shifted[i])),
    };
    Ok(NystromApprox {
        method: Method::Sms,
        c: sk_shifted.c.clone(),
        core_pinv,
        eig: Some(eig),
        r,
        s,
        shift: delta,
    })
}

/// Submatrix-shifted Nyström.
pub fn sms_nystrom(a: &SymMatrix, p: &SmsParams) -> Result<NystromApprox> {
    if p.s2 > a.n() {
        return Err(Error::arg(format!("s2={} exceeds n={}", p.s2, a.n())));
    }
    let delta = sms_shift(a, p.s1, p.alpha, p.seed)?;
    let b = a.shifted(delta);
    let sk = apply_sketch(&b, &p.sketch_spec(a.n()))?;
    sms_from_shifted_sketch(&sk, p.r, delta)
}

/// Eigendecomposition of `C · K · Cᵀ` without forming it: `C = QR`,
/// `R K Rᵀ = U Σ Uᵀ`, `U₁ = Q U`. Eigenpairs below the numerical-rank cutoff
/// are dropped.
pub fn factored_eig(c: &DMatrix<f64>, core: &DMatrix<f64>) -> Result<ApproxEig> {
    let qr = c.clone().qr();
    let (q, rf) = (qr.q(), qr.r());
    let m = symmetrize(&(&rf * core * rf.transpose()));
    let e = eig_sym(&m)?;
    let smax = e.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tol = MACHINE_CUTOFF * smax;
    let keep: Vec<usize> = (0..e.len()).filter(|&i| e.values[i].abs() > tol).collect();
    let u = e.vectors.select_columns(keep.iter());
    Ok(ApproxEig {
        u1: q * u,
        sigma: DVector::from_iterator(keep.len(), keep.iter().map(|&i| e.values[i])),
    })
}

/// Eigendecomposition of an approximation at `O(n s² + s³)` cost.
pub fn nystrom_eig(appr: &NystromApprox) -> Result<ApproxEig> {
    match &appr.eig {
        Some(e) => Ok(e.clone()),
        None => factored_eig(&appr.c, &appr.core_pinv),
    }
}

/// Ratio of the worst over- to the worst under-estimate of `σ_i(A)` by `σ_i(W)`, `i ≤ r`.
pub fn kappa_w(a: &SymMatrix, w: &DMatrix<f64>, r: usize) -> Result<f64> {
    if r == 0 || r > w.nrows() || r > a.n() {
        return Err(Error::arg(format!(
            "kappa_w needs 1 <= r <= min(dim W, n), got r={r}"
        )));
    }
    let sa = a.singular_values()?;
    let sw: Vec<f64> = eigvals_sym(&symmetrize(w)).iter().map(|v| v.abs()).collect();
    if sa[r - 1] == 0.0 {
        return Err(Error::DegenerateSpectrum(format!("sigma_{r}(A) = 0")));
    }
    if sw[r - 1] == 0.0 {
        return Err(Error::DegenerateSpectrum(format!("sigma_{r}(W) = 0")));
    }
    let (lo, hi) = (0..r)
        .map(|i| sw[i] / sa[i])
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), q| (lo.min(q), hi.max(q)));
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::numerical_rank;
    use crate::sketch::gaussian_matrix;

    fn swap_matrix() -> SymMatrix {
        SymMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / a.norm()
    }

    /// Random symmetric matrix `G diag(d) Gᵀ` of exact rank `d.len()`.
    fn low_rank(n: usize, d: &[f64], s: u64) -> SymMatrix {
        let mut rng = seed::rng(s);
        let g = gaussian_matrix(&mut rng, n, d.len(), 1.0).qr().q();
        SymMatrix::new(scale_columns(&g, d) * g.transpose()).unwrap()
    }

    fn gauss(a: &SymMatrix, s: usize, seed: u64) -> SketchResult {
        apply_sketch(a, &SketchSpec::new(SketchFamily::Gaussian, a.n(), s, seed)).unwrap()
    }

    #[test]
    fn plain_blows_up_on_two_by_two() {
        let a = swap_matrix();
        let eps = 0.1_f64;
        let x = DMatrix::from_column_slice(2, 1, &[eps, (1.0 - eps * eps).sqrt()]);
        let sk = SketchResult::from_embedding(&a, x).unwrap();
        let approx = plain_nystrom(&a, &sk).unwrap();
        let err = crate::matcore::norms(&(a.matrix() - approx.reconstruct())).nuclear;
        let expected = 1.0 / (2.0 * eps * (1.0 - eps * eps).sqrt());
        assert!((err - expected).abs() / expected < 1e-10);
        assert!((err - 5.025189076296).abs() < 1e-9);
    }

    #[test]
    fn plain_recovers_low_rank_spsd() {
        let a = low_rank(40, &[3.0, 1.0], 2);
        let approx = plain_nystrom(&a, &gauss(&a, 2, 5)).unwrap();
        assert!(rel_frob(a.matrix(), &approx.reconstruct()) < 1e-8);
    }

    #[test]
    fn plain_on_identity_is_projector() {
        let a = SymMatrix::identity(10).unwrap();
        let mut rng = seed::rng(3);
        let x = gaussian_matrix(&mut rng, 10, 4, 1.0).qr().q();
        let sk = SketchResult::from_embedding(&a, x.clone()).unwrap();
        let approx = plain_nystrom(&a, &sk).unwrap().reconstruct();
        assert!((&approx - &x * x.transpose()).abs().max() < 1e-12);
        assert!((&approx * &approx - &approx).abs().max() < 1e-12);
    }

    #[test]
    fn plain_rejects_zero_core() {
        let a = SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let sk = SketchResult::from_embedding(&a, x).unwrap();
        assert!(matches!(plain_nystrom(&a, &sk), Err(Error::SingularCore)));
    }

    #[test]
    fn truncated_core_with_full_rank_is_plain() {
        let a = low_rank(30, &[2.0, -1.0, 0.5, -0.25, 0.1, 3.0], 4);
        let sk = gauss(&a, 6, 9);
        let p = plain_nystrom(&a, &sk).unwrap().reconstruct();
        let t = truncated_core_nystrom(&a, &sk, 6).unwrap().reconstruct();
        assert!((&p - &t).abs().max() <= 1e-12 * p.abs().max());
        assert!(matches!(truncated_core_nystrom(&a, &sk, 7), Err(Error::Argument(_))));
    }

    #[test]
    fn truncated_core_exact_on_rank_r_indefinite() {
        let d = [5.0, -4.0, 3.0, -2.0, 1.0];
        let a = low_rank(60, &d, 1);
        let approx = truncated_core_nystrom(&a, &gauss(&a, 10, 2), 5).unwrap();
        assert!(rel_frob(a.matrix(), &approx.reconstruct()) < 1e-8);
    }

    #[test]
    fn truncated_output_matches_plain_at_full_rank() {
        let a = low_rank(25, &[1.0, -2.0, 0.3, 4.0], 7);
        let sk = gauss(&a, 4, 1);
        let p = plain_nystrom(&a, &sk).unwrap().reconstruct();
        let t = truncated_output_nystrom(&a, &sk, 4).unwrap().reconstruct();
        assert!((&p - &t).abs().max() <= 1e-10 * p.abs().max());
    }

    #[test]
    fn truncated_output_exact_on_rank_r_spsd() {
        let a = low_rank(40, &[3.0, 2.0, 1.0], 8);
        let approx = truncated_output_nystrom(&a, &gauss(&a, 6, 4), 3).unwrap();
        assert!(rel_frob(a.matrix(), &approx.reconstruct()) < 1e-8);
    }

    #[test]
    fn stabilized_drops_tiny_eigenvalues() {
        // W = diag(1, 1e-16) from A = diag(1, 1e-16), X = I
        let a = SymMatrix::from_diagonal(&[1.0, 1e-16]).unwrap();
        let sk = SketchResult::from_embedding(&a, DMatrix::identity(2, 2)).unwrap();
        let st = stabilized_nystrom(&a, &sk, 1e-14).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!((&st.core_pinv - expected).abs().max() < 1e-15);
        assert_eq!(st.r, 1);
    }

    #[test]
    fn stabilized_with_zero_tolerance_is_plain() {
        let a = low_rank(20, &[1.0, -1.0, 2.0, 0.5, -0.7], 3);
        let sk = gauss(&a, 5, 3);
        let p = plain_nystrom(&a, &sk).unwrap().reconstruct();
        let st = stabilized_nystrom(&a, &sk, 0.0).unwrap().reconstruct();
        assert!((&p - &st).abs().max() <= 1e-12 * p.abs().max());
    }

    #[test]
    fn sms_shift_on_small_indefinite() {
        let a = SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        let delta = sms_shift(&a, 2, 1.5, 0).unwrap();
        assert_eq!(delta, 1.5);
    }

    #[test]
    fn sms_on_spsd_equals_truncated_output() {
        // full-rank SPSD: every principal submatrix is positive definite, so δ = 0
        let d: Vec<f64> = (0..30).map(|i| 0.7f64.powi(i)).collect();
        let v = crate::data::haar_orthogonal(30, 5).unwrap();
        let a = SymMatrix::new(crate::matcore::scale_columns(&v, &d) * v.transpose()).unwrap();
        let p = SmsParams::recommended(3, SketchFamily::Gaussian, 42);
        let sms = sms_nystrom(&a, &p).unwrap();
        assert_eq!(sms.shift, 0.0);
        let sk = apply_sketch(&a, &p.sketch_spec(30)).unwrap();
        let t = truncated_output_nystrom(&a, &sk, 3).unwrap().reconstruct();
        let diff = (&sms.reconstruct() - &t).norm() / t.norm();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn nystrom_eig_factored_identity() {
        let a = swap_matrix();
        let eps = 0.1_f64;
        let x = DMatrix::from_column_slice(2, 1, &[eps, (1.0 - eps * eps).sqrt()]);
        let sk = SketchResult::from_embedding(&a, x).unwrap();
        let approx = plain_nystrom(&a, &sk).unwrap();
        let e = nystrom_eig(&approx).unwrap();
        assert_eq!(e.rank(), 1);
        assert!((e.reconstruct() - approx.reconstruct()).abs().max() < 1e-12);
        let orth = e.u1.transpose() * &e.u1 - DMatrix::identity(1, 1);
        assert!(orth.abs().max() < 1e-10);
    }

    #[test]
    fn nystrom_eig_spsd_has_nonnegative_spectrum() {
        for s in 0..5 {
            let mut rng = seed::rng(100 + s);
            let g = gaussian_matrix(&mut rng, 50, 50, 1.0);
            let a = SymMatrix::new(&g * g.transpose()).unwrap();
            let approx = truncated_core_nystrom(&a, &gauss(&a, 15, s), 10).unwrap();
            let e = nystrom_eig(&approx).unwrap();
            let m = e.sigma.abs().max();
            assert!(e.sigma.iter().all(|&v| v >= -1e-10 * m));
            assert!(rel_frob(&approx.reconstruct(), &e.reconstruct()) < 1e-8);
        }
    }

    #[test]
    fn nystrom_eig_sign_pattern_matches_dense() {
        let d = [6.0, -5.0, 4.0, -3.0, 2.5, 1e-6, -1e-6, 1e-7];
        let a = low_rank(80, &d, 12);
        let approx = truncated_core_nystrom(&a, &gauss(&a, 8, 1), 5).unwrap();
        let e = nystrom_eig(&approx).unwrap();
        let dense = eigvals_sym(&approx.reconstruct());
        let count = |v: &mut dyn Iterator<Item = f64>, m: f64| {
            let (mut p, mut n) = (0, 0);
            for x in v {
                if x > 1e-8 * m {
                    p += 1;
                } else if x < -1e-8 * m {
                    n += 1;
                }
            }
            (p, n)
        };
        let m = dense[0].abs();
        assert_eq!(count(&mut e.sigma.iter().copied(), m), count(&mut dense.into_iter(), m));
        assert_eq!(count(&mut e.sigma.iter().copied(), m), (3, 2));
    }

    #[test]
    fn kappa_w_trivial_cases() {
        let a = SymMatrix::from_diagonal(&[5.0, -3.0, 1.0, 0.5]).unwrap();
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![7.0, 2.0, 1.0]));
        assert_eq!(kappa_w(&a, &w, 1).unwrap(), 1.0);
        let scaled = DMatrix::from_diagonal(&DVector::from_vec(vec![-10.0, 6.0, 2.0]));
        assert!((kappa_w(&a, &scaled, 3).unwrap() - 1.0).abs() < 1e-12);
        let z = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(kappa_w(&a, &z, 2), Err(Error::DegenerateSpectrum(_))));
    }

    #[test]
    fn rank_bound_of_truncated_variants() {
        let a = low_rank(40, &[3.0, -2.5, 2.0, -1.5, 1.0, -0.5, 0.25, 0.1, -0.05, 0.01], 6);
        let sk = gauss(&a, 9, 2);
        for approx in [
            truncated_core_nystrom(&a, &sk, 4).unwrap(),
            truncated_output_nystrom(&a, &sk, 4).unwrap(),
            sms_nystrom(&a, &SmsParams::recommended(4, SketchFamily::Gaussian, 1)).unwrap(),
        ] {
            assert!(numerical_rank(&approx.reconstruct(), 1e-10) <= 4, "{}", approx.method);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}
