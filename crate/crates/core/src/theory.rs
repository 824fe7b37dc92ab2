//! Constructive oracle for the relative-error nuclear-norm bound.
//!
//! Given the eigendecomposition `A = [V₁ V₂ V₃] diag(Λ₁, Λ₂, Λ₃) [V₁ V₂ V₃]ᵀ`
//! (blocks of `r`, `(c₁−1)r` and `n − c₁r` columns, magnitude order) and a
//! Gaussian `X ∈ ℝ^{n × c₂r}`, the oracle forms `X_i = V_iᵀX`, an orthonormal
//! basis `Q⊥` of `null(X₂)`, `B = X₃Q⊥(X₁Q⊥)⁺`, the thin QR
//! `(X₁Q⊥)⁺ = Q̂R̂`, and the projector `P = UUᵀ` with `U = Q⊥Q̂`. The error
//! `E = A − AX(PXᵀAXP)⁺XᵀA` is then compared against
//! `(1 + ε_{r,A})·‖A − ⌊A⌋_r‖_*` on the event
//! `Ω_F = {‖|Λ₃|^{1/2}B‖_F² ≤ ½|λ_r|}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::{pinv_machine, sym_norms, symmetrize, SymMatrix};
use crate::seed;
use crate::sketch::{gaussian_matrix, gaussian_sketch, SketchFamily, SketchSpec};

/// Relative threshold under which `|λ_r|` is treated as zero.
pub const TARGET_RANK_FLOOR: f64 = 1e-14;
/// Relative threshold for declaring `X₁Q⊥` rank deficient.
const RANK_FLOOR: f64 = 1e-12;
const MAX_ATTEMPTS: usize = 3;

/// Oversampling parameters. `c₁r` and `c₂r` are stored as integers so that
/// `b = r / ((c₂ − c₁)r − 1)` is a ratio of exact integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoremParams {
    pub r: usize,
    pub c1r: usize,
    pub c2r: usize,
    pub seed: u64,
}

impl TheoremParams {
    /// `c1·r` and `c2·r` must be integers and `1 < c1 < c2`.
    pub fn new(r: usize, c1: f64, c2: f64, seed: u64) -> Result<Self> {
        let to_int = |c: f64, name: &str| -> Result<usize> {
            let x = c * r as f64;
            let k = x.round();
            if (x - k).abs() > 1e-9 || k < 0.0 {
                return Err(Error::arg(format!("{name}·r = {x} is not a non-negative integer")));
            }
            Ok(k as usize)
        };
        Self::from_counts(r, to_int(c1, "c1")?, to_int(c2, "c2")?, seed)
    }

    pub fn from_counts(r: usize, c1r: usize, c2r: usize, seed: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::arg("target rank must be positive"));
        }
        if !(r < c1r && c1r < c2r) {
            return Err(Error::arg(format!(
                "need r < c1·r < c2·r, got r={r} c1·r={c1r} c2·r={c2r}"
            )));
        }
        Ok(Self { r, c1r, c2r, seed })
    }

    pub fn c1(&self) -> f64 {
        self.c1r as f64 / self.r as f64
    }

    pub fn c2(&self) -> f64 {
        self.c2r as f64 / self.r as f64
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// `(c₂ − c₁)r − 1`.
    fn b_denominator(&self) -> i64 {
        self.c2r as i64 - self.c1r as i64 - 1
    }

    /// `b = r / ((c₂ − c₁)r − 1)`; infinite when the denominator is not positive.
    pub fn b(&self) -> f64 {
        let d = self.b_denominator();
        if d <= 0 {
            f64::INFINITY
        } else {
            self.r as f64 / d as f64
        }
    }

    /// Checks `c₂ < n/r − 1` against a matrix dimension.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        if self.c2r + self.r >= n {
            return Err(Error::arg(format!(
                "need c2 < n/r - 1, got c2·r={} r={} n={n}",
                self.c2r, self.r
            )));
        }
        Ok(())
    }
}

/// Norms of the projected Nyström error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialErrors {
    pub nuclear: f64,
    pub spectral: f64,
    pub frobenius: f64,
}

/// Everything produced by one oracle trial.
#[derive(Debug, Clone)]
pub struct TheoremArtifacts {
    pub x: DMatrix<f64>,
    pub q_perp: DMatrix<f64>,
    pub q_hat: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
    /// `(n − c₁r) × r`.
    pub b_mat: DMatrix<f64>,
    /// `c₂r × r`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// `‖|Λ₃|^{1/2}B‖_F²`.
    pub sb_frob_sq: f64,
    /// `‖|Λ₃|^{1/2}B‖_2²`.
    pub sb_spec_sq: f64,
    pub omega_f: bool,
    pub omega_2: bool,
    pub b: f64,
    pub eps_ra: f64,
    pub bound_nuclear: f64,
    /// Bound under the relaxed event `Ω₂`: `(1 + √r·ε_{r,A})·‖A − ⌊A⌋_r‖_*`.
    pub bound_nuclear_omega2: f64,
    pub best_r_nuclear: f64,
    /// `None` unless requested by the [`ErrorEval`] mode.
    pub errors: Option<TrialErrors>,
    /// Draws consumed, counting retries after rank deficiency.
    pub attempts: usize,
}

/// Whether a trial pays for the dense error evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorEval {
    Always,
    IfOmegaF,
    Never,
}

/// The `B` construction for one draw of the blocks `X₁, X₂, X₃`.
#[derive(Debug, Clone)]
pub struct BDraw {
    pub q_perp: DMatrix<f64>,
    pub x1_qperp: DMatrix<f64>,
    pub q_hat: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
    pub b_mat: DMatrix<f64>,
}

/// Orthonormal basis of `null(M)` for a wide `k × m` matrix of full row rank,
/// from the right singular vectors of `M` padded to `m × m`.
pub fn null_space_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, cols) = m.shape();
    let mut padded = DMatrix::zeros(cols, cols);
    padded.view_mut((0, 0), (k, cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let null_rows: Vec<usize> = order[k..].to_vec();
    DMatrix::from_fn(cols, null_rows.len(), |i, j| v_t[(null_rows[j], i)])
}

/// Builds `Q⊥`, `(X₁Q⊥)⁺ = Q̂R̂` and `B`. Returns `None` if `X₁Q⊥` is
/// numerically rank deficient.
pub fn draw_b(x1: &DMatrix<f64>, x2: &DMatrix<f64>, x3: &DMatrix<f64>) -> Option<BDraw> {
    let q_perp = null_space_basis(x2);
    let x1_qperp = x1 * &q_perp;
    let svd = x1_qperp.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_FLOOR * smax) {
        return None;
    }
    let pinv = svd.pseudo_inverse(0.0).ok()?;
    let b_mat = x3 * (&q_perp * &pinv);
    let qr = pinv.qr();
    let (q_hat, r_hat) = (qr.q(), qr.r());
    Some(BDraw {
        q_perp,
        x1_qperp,
        q_hat,
        r_hat,
        b_mat,
    })
}

fn row_blocks(xv: &DMatrix<f64>, p: &TheoremParams) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = xv.nrows();
    (
        xv.rows(0, p.r).into_owned(),
        xv.rows(p.r, p.c1r - p.r).into_owned(),
        xv.rows(p.c1r, n - p.c1r).into_owned(),
    )
}

fn check_target_rank(sv: &[f64], r: usize) -> Result<()> {
    let (lr, l1) = (sv[r - 1], sv[0]);
    if !(lr > TARGET_RANK_FLOOR * l1) {
        return Err(Error::DegenerateTargetRank {
            lambda_r: lr,
            lambda_1: l1,
        });
    }
    Ok(())
}

/// One oracle trial with the dense error evaluated.
pub fn theorem_trial(a: &SymMatrix, p: &TheoremParams) -> Result<TheoremArtifacts> {
    theorem_trial_with(a, p, ErrorEval::Always)
}

pub fn theorem_trial_with(a: &SymMatrix, p: &TheoremParams, eval: ErrorEval) -> Result<TheoremArtifacts> {
    let n = a.n();
    p.validate_for(n)?;
    if p.b_denominator() < 1 {
        return Err(Error::VarianceUndefined(p.b_denominator()));
    }
    let eig = a.eig()?;
    let sv: Vec<f64> = eig.values.iter().map(|v| v.abs()).collect();
    check_target_rank(&sv, p.r)?;

    let mut found = None;
    for attempt in 0..MAX_ATTEMPTS {
        let draw_seed = seed::derive(p.seed, &[seed::tag_hash("theorem"), attempt as u64]);
        let x = gaussian_sketch(&SketchSpec::new(SketchFamily::Gaussian, n, p.c2r, draw_seed))?;
        let xv = eig.vectors.transpose() * &x;
        let (x1, x2, x3) = row_blocks(&xv, p);
        if let Some(d) = draw_b(&x1, &x2, &x3) {
            found = Some((x, d, attempt + 1));
            break;
        }
    }
    let (x, d, attempts) = found.ok_or(Error::RankDeficient {
        attempts: MAX_ATTEMPTS,
    })?;

    let lambda3 = &sv[p.c1r..];
    let sb = DMatrix::from_fn(d.b_mat.nrows(), p.r, |i, j| lambda3[i].sqrt() * d.b_mat[(i, j)]);
    let sb_frob_sq = sb.norm_squared();
    let sb_spec_sq = {
        let s = sb.singular_values().max();
        s * s
    };
    let half_lr = 0.5 * sv[p.r - 1];
    let omega_f = sb_frob_sq <= half_lr;
    let omega_2 = sb_spec_sq <= half_lr;

    let u = &d.q_perp * &d.q_hat;
    let errors = if eval == ErrorEval::Always || (eval == ErrorEval::IfOmegaF && omega_f) {
        let approx = projected_nystrom(a, &x, &u)?;
        let e = sym_norms(&(a.matrix() - approx));
        Some(TrialErrors {
            nuclear: e.nuclear,
            spectral: e.spectral,
            frobenius: e.frobenius,
        })
    } else {
        None
    };

    let eps_ra = epsilon_r_a_from_spectrum(&sv, p)?;
    let best = tail_sum(&sv, p.r);
    Ok(TheoremArtifacts {
        x,
        q_perp: d.q_perp,
        q_hat: d.q_hat,
        r_hat: d.r_hat,
        b_mat: d.b_mat,
        u,
        sb_frob_sq,
        sb_spec_sq,
        omega_f,
        omega_2,
        b: p.b(),
        eps_ra,
        bound_nuclear: (1.0 + eps_ra) * best,
        bound_nuclear_omega2: (1.0 + (p.r as f64).sqrt() * eps_ra) * best,
        best_r_nuclear: best,
        errors,
        attempts,
    })
}

/// `(AXU)(UᵀXᵀAXU)⁺(AXU)ᵀ`, which equals `AX(PXᵀAXP)⁺XᵀA` for `P = UUᵀ`.
pub fn projected_nystrom(a: &SymMatrix, x: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cu = a.matrix() * (x * u);
    let core = symmetrize(&((x * u).transpose() * &cu));
    let core_pinv = pinv_machine(&core)?;
    Ok(symmetrize(&(&cu * core_pinv * cu.transpose())))
}

fn tail_sum(sv: &[f64], k: usize) -> f64 {
    sv.iter().skip(k).sum()
}

/// `ε_{r,A} = 2b√r (1 + |λ_{c₁r+1}|/|λ_r| + 2/√b) · ‖Λ₃‖_* / (‖Λ₂‖_* + ‖Λ₃‖_*)`.
pub fn epsilon_r_a(a: &SymMatrix, p: &TheoremParams) -> Result<f64> {
    epsilon_r_a_from_spectrum(&a.singular_values()?, p)
}

/// [`epsilon_r_a`] from `σ_i = |λ_i|` sorted non-increasing.
pub fn epsilon_r_a_from_spectrum(sv: &[f64], p: &TheoremParams) -> Result<f64> {
    if p.c1r >= sv.len() {
        return Err(Error::arg(format!("c1·r={} must be below n={}", p.c1r, sv.len())));
    }
    let lr = sv[p.r - 1];
    if lr <= 0.0 {
        return Err(Error::DegenerateTargetRank {
            lambda_r: lr,
            lambda_1: sv[0],
        });
    }
    let tail2: f64 = sv[p.r..p.c1r].iter().sum();
    let tail3 = tail_sum(sv, p.c1r);
    if tail3 == 0.0 {
        return Ok(0.0);
    }
    let b = p.b();
    let r = p.r as f64;
    Ok(2.0 * b * r.sqrt() * (1.0 + sv[p.c1r] / lr + 2.0 / b.sqrt()) * tail3 / (tail2 + tail3))
}

/// Monte-Carlo check of `E‖SB‖_F² = b‖S‖_F²` with `S = |Λ₃|^{1/2}`.
///
/// Each trial redraws the whole `(X, Q⊥, B)` pipeline; rotation invariance of
/// the Gaussian lets the blocks `X₁, X₂, X₃` be drawn directly.
/// Returns `(empirical, predicted)`.
pub fn lemma_expectation_check(lambda3: &[f64], p: &TheoremParams, trials: usize) -> Result<(f64, f64)> {
    if trials < 100 {
        return Err(Error::arg(format!("need at least 100 trials, got {trials}")));
    }
    if p.b_denominator() < 1 {
        return Err(Error::VarianceUndefined(p.b_denominator()));
    }
    let s_frob_sq: f64 = lambda3.iter().map(|v| v.abs()).sum();
    let predicted = p.b() * s_frob_sq;
    let k2 = p.c1r - p.r;
    let mut total = 0.0;
    for t in 0..trials {
        let mut draw = None;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = seed::rng(seed::derive(
                p.seed,
                &[seed::tag_hash("lemma"), t as u64, attempt as u64],
            ));
            let x1 = gaussian_matrix(&mut rng, p.r, p.c2r, 1.0);
            let x2 = gaussian_matrix(&mut rng, k2, p.c2r, 1.0);
            let x3 = gaussian_matrix(&mut rng, lambda3.len(), p.c2r, 1.0);
            if let Some(d) = draw_b(&x1, &x2, &x3) {
                draw = Some(d);
                break;
            }
        }
        let d = draw.ok_or(Error::RankDeficient {
            attempts: MAX_ATTEMPTS,
        })?;
        total += lambda3
            .iter()
            .enumerate()
            .map(|(i, l)| l.abs() * d.b_mat.row(i).norm_squared())
            .sum::<f64>();
    }
    Ok((total / trials as f64, predicted))
}

/// Lower bound on `P(Ω_F)`: `1 − 2t^{−(c₂−c₁)r} − e^{−u²/2}` whenever
/// `½|λ_r| ≥ 2t²(‖Λ₃‖_*·3r/((c₂−c₁)r+1) + ‖Λ₃‖_2·e²(c₂−c₁+1)r/((c₂−c₁)r+1)²·u²)`,
/// and `(0, false)` otherwise.
pub fn omega_f_probability_lower_bound(a: &SymMatrix, p: &TheoremParams, t: f64, u: f64) -> Result<(f64, bool)> {
    if !(t > 0.0 && u > 0.0) {
        return Err(Error::arg("t and u must be positive"));
    }
    let sv = a.singular_values()?;
    if p.c1r >= sv.len() {
        return Err(Error::arg(format!("c1·r={} must be below n={}", p.c1r, sv.len())));
    }
    let r = p.r as f64;
    let gap = (p.c2r - p.c1r) as f64;
    let nuc3 = tail_sum(&sv, p.c1r);
    let spec3 = sv[p.c1r];
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let rhs = 2.0
        * t
        * t
        * (nuc3 * 3.0 * r / (gap + 1.0) + spec3 * e2 * (gap + r) / ((gap + 1.0) * (gap + 1.0)) * u * u);
    let holds = 0.5 * sv[p.r - 1] >= rhs;
    if !holds {
        return Ok((0.0, false));
    }
    let bound = 1.0 - 2.0 * t.powf(-gap) - (-0.5 * u * u).exp();
    Ok((bound.max(0.0), true))
}

/// Conditional bounds on `‖E‖₂` and `‖E‖_F`:
/// `‖A − ⌊A⌋_r‖ + (ε_{r,A}/√r)·‖A − ⌊A⌋_r‖_*` in the respective norm.
pub fn mixed_norm_bounds(a: &SymMatrix, p: &TheoremParams) -> Result<(f64, f64)> {
    let sv = a.singular_values()?;
    let eps = epsilon_r_a_from_spectrum(&sv, p)?;
    let tail_nuc = tail_sum(&sv, p.r);
    let spec = sv.get(p.r).copied().unwrap_or(0.0);
    let frob = sv.iter().skip(p.r).map(|v| v * v).sum::<f64>().sqrt();
    let extra = eps / (p.r as f64).sqrt() * tail_nuc;
    Ok((spec + extra, frob + extra))
}

/// Fraction of `trials` independent draws on which `Ω_F` holds.
pub fn omega_f_frequency(a: &SymMatrix, p: &TheoremParams, trials: usize) -> Result<f64> {
    let mut hits = 0usize;
    for t in 0..trials {
        let pt = p.with_seed(seed::derive(p.seed, &[t as u64]));
        if theorem_trial_with(a, &pt, ErrorEval::Never)?.omega_f {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials.max(1) as f64)
}

/// Aggregate of repeated trials conditioned on `Ω_F` by rejection.
#[derive(Debug, Clone, Default)]
pub struct ConditionalSummary {
    pub trials_run: usize,
    pub kept: usize,
    pub mean_err_nuclear: f64,
    pub mean_err_spectral: f64,
    pub mean_err_frobenius: f64,
    pub bound_nuclear: f64,
    pub bound_spectral: f64,
    pub bound_frobenius: f64,
    /// Kept trials whose individual nuclear error exceeded the bound.
    pub per_trial_violations: usize,
}

impl ConditionalSummary {
    pub fn omega_f_frequency(&self) -> f64 {
        if self.trials_run == 0 {
            0.0
        } else {
            self.kept as f64 / self.trials_run as f64
        }
    }
}

/// Runs trials with seeds derived from `p.seed` until `target_kept` trials
/// satisfy `Ω_F` or `max_trials` have been run.
pub fn conditional_study(
    a: &SymMatrix,
    p: &TheoremParams,
    target_kept: usize,
    max_trials: usize,
) -> Result<ConditionalSummary> {
    let (bound2, bound_f) = mixed_norm_bounds(a, p)?;
    let mut out = ConditionalSummary {
        bound_spectral: bound2,
        bound_frobenius: bound_f,
        ..Default::default()
    };
    while out.kept < target_kept && out.trials_run < max_trials {
        let pt = p.with_seed(seed::derive(p.seed, &[out.trials_run as u64]));
        let art = theorem_trial_with(a, &pt, ErrorEval::IfOmegaF)?;
        out.trials_run += 1;
        out.bound_nuclear = art.bound_nuclear;
        if let (true, Some(e)) = (art.omega_f, art.errors) {
            out.kept += 1;
            out.mean_err_nuclear += e.nuclear;
            out.mean_err_spectral += e.spectral;
            out.mean_err_frobenius += e.frobenius;
            if e.nuclear > art.bound_nuclear {
                out.per_trial_violations += 1;
            }
        }
    }
    if out.kept > 0 {
        let k = out.kept as f64;
        out.mean_err_nuclear /= k;
        out.mean_err_spectral /= k;
        out.mean_err_frobenius /= k;
    }
    Ok(out)
}
