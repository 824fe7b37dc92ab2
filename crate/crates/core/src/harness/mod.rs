//! Seeded experiment sweeps over `(method, r, trial)` with CSV output.

pub mod config;
pub mod record;
pub mod run;

pub use config::{ExperimentConfig, MatrixConfig, MethodConfig, MethodKind, MethodPlan};
pub use record::{emit_csv, read_csv, to_csv_bytes, ExperimentRecord};
pub use run::{cell_seed, run_experiment, run_experiment_filtered, MethodFilter};

use nalgebra::DMatrix;

use crate::data::{synth_matrix, EigvecSpec, SpectrumSpec};
use crate::matcore::SymMatrix;
use crate::nystrom::{self, Method};
use crate::sketch::{gaussian_matrix, SketchResult};
use crate::theory::{lemma_expectation_check, TheoremParams};
use crate::{seed, Result};

/// Outcome of one self-check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs one embedding-based variant on a prepared sketch.
pub fn run_variant(a: &SymMatrix, sk: &SketchResult, method: Method, r: usize) -> Result<DMatrix<f64>> {
    let approx = match method {
        Method::Plain => nystrom::plain_nystrom(a, sk)?,
        Method::TruncatedCore => nystrom::truncated_core_nystrom(a, sk, r)?,
        Method::TruncatedOutput => nystrom::truncated_output_nystrom(a, sk, r)?,
        Method::Stabilized => nystrom::stabilized_nystrom(a, sk, 1e-14)?,
        Method::Sms => {
            let delta = nystrom::sms_shift(a, r, 1.5, sk.s() as u64)?;
            let shifted = a.shifted(delta);
            let x = sk.x.clone().ok_or_else(|| crate::Error::Argument("sketch has no embedding".into()))?;
            nystrom::sms_from_shifted_sketch(&SketchResult::from_embedding(&shifted, x)?, r, delta)?
        }
    };
    Ok(approx.reconstruct())
}

fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm().max(f64::MIN_POSITIVE)
}

/// Quick invariant checks, a few seconds in total.
pub fn selftest() -> Vec<Check> {
    let mut out = Vec::new();

    out.push(check("two_by_two_blowup", || {
        let a = SymMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { 1.0 })?;
        let mut worst = 0.0f64;
        for eps in [0.1f64, 0.01, 1e-4] {
            let x = DMatrix::from_column_slice(2, 1, &[eps, (1.0 - eps * eps).sqrt()]);
            let approx = nystrom::plain_nystrom(&a, &SketchResult::from_embedding(&a, x)?)?;
            let got = crate::matcore::sym_norms(&(a.matrix() - approx.reconstruct())).nuclear;
            let want = 1.0 / (2.0 * eps * (1.0 - eps * eps).sqrt());
            worst = worst.max((got - want).abs() / want);
        }
        Ok((worst <= 1e-10, format!("max relative deviation {worst:.2e}")))
    }));

    out.push(check("rank_r_exactness", || {
        let mut worst = 0.0f64;
        for s in 0..10 {
            let mut mags = vec![0.0; 100];
            for (i, m) in mags.iter_mut().take(5).enumerate() {
                *m = 1.0 / (i as f64 + 1.0);
            }
            let a = synth_matrix(&SpectrumSpec::stepwise(mags.iter().map(|&m| (1, m)).collect()), &EigvecSpec::Haar, s)?;
            let mut rng = seed::rng(s + 100);
            let sk = SketchResult::from_embedding(&a, gaussian_matrix(&mut rng, 100, 10, 0.1))?;
            let approx = nystrom::truncated_core_nystrom(&a, &sk, 5)?;
            worst = worst.max(rel_frob(a.matrix(), &approx.reconstruct()));
        }
        Ok((worst <= 1e-8, format!("max relative Frobenius error {worst:.2e}")))
    }));

    out.push(check("scale_invariance", || {
        let a = synth_matrix(&SpectrumSpec::geometric(80, 1.0, 1e-6), &EigvecSpec::Haar, 3)?;
        let mut rng = seed::rng(4);
        let x = gaussian_matrix(&mut rng, 80, 12, 1.0 / 12f64.sqrt());
        let mut worst = 0.0f64;
        for m in Method::ALL {
            let base = run_variant(&a, &SketchResult::from_embedding(&a, x.clone())?, m, 8)?;
            for c in [-2.0, 0.5, 10.0] {
                let scaled = run_variant(&a, &SketchResult::from_embedding(&a, &x * c)?, m, 8)?;
                worst = worst.max(rel_frob(&base, &scaled));
            }
        }
        Ok((worst <= 1e-10, format!("max relative change {worst:.2e}")))
    }));

    out.push(check("lemma_expectation", || {
        let p = TheoremParams::new(10, 1.5, 2.5, 8)?;
        let (emp, pred) = lemma_expectation_check(&vec![1.0; 85], &p, 200)?;
        let ratio = emp / pred;
        Ok(((0.8..=1.2).contains(&ratio), format!("empirical/predicted {ratio:.4}")))
    }));

    out.push(check("determinism", || {
        let text = |workers: usize| {
            format!(
                "schema_version = 1\nexperiment = \"custom\"\nmaster_seed = 5\ntrials = 2\nr_values = [2, 4]\nworkers = {workers}\n\
                 [matrix]\nsource = \"synthetic\"\nspectrum = {{ kind = \"geometric\", n = 40, start = 1.0, end = 1e-5 }}\n\
                 [[methods]]\nmethod = \"truncated_core\"\n[[methods]]\nmethod = \"plain\"\nsketch = \"srtt\"\n"
            )
        };
        let one = to_csv_bytes(&run_experiment(&ExperimentConfig::from_toml_str(&text(1), ".")?)?)?;
        let three = to_csv_bytes(&run_experiment(&ExperimentConfig::from_toml_str(&text(3), ".")?)?)?;
        Ok((one == three, format!("{} bytes", one.len())))
    }));

    out
}
