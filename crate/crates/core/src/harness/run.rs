use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{ExperimentConfig, MethodKind, MethodPlan};
use super::record::ExperimentRecord;
use crate::error::{Error, Result};
use crate::matcore::{sym_norms, SymMatrix};
use crate::nystrom::{self, kappa_w, Method, NystromApprox, SmsParams};
use crate::seed;
use crate::sketch::{apply_sketch, SketchFamily, SketchSpec};
use crate::theory::{theorem_trial, TheoremParams};

/// Best rank-`r` errors in the three norms.
#[derive(Debug, Clone, Copy)]
struct BestErrors {
    nuclear: f64,
    spectral: f64,
    frobenius: f64,
}

fn best_errors(sv: &[f64], r: usize) -> BestErrors {
    let tail = &sv[r.min(sv.len())..];
    BestErrors {
        nuclear: tail.iter().sum(),
        spectral: tail.first().copied().unwrap_or(0.0),
        frobenius: tail.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Seed of one `(method, r, trial)` cell. It depends on labels, not on
/// positions, so removing a method leaves the other rows unchanged.
pub fn cell_seed(master: u64, experiment: &str, label: &str, r: usize, trial: usize) -> u64 {
    seed::derive(
        master,
        &[seed::tag_hash(experiment), seed::tag_hash(label), r as u64, trial as u64],
    )
}

struct Cell<'a> {
    order: (usize, usize, usize),
    plan: &'a MethodPlan,
    r: usize,
    trial: usize,
}

struct Shared<'a> {
    cfg: &'a ExperimentConfig,
    a: &'a SymMatrix,
    sv: &'a [f64],
    points: Option<Arc<DMatrix<f64>>>,
}

#[derive(Default)]
struct Outcome {
    abs: Option<(f64, f64, f64)>,
    kappa_w: Option<f64>,
    omega_f: Option<bool>,
    eps_ra: Option<f64>,
    bound_nuclear: Option<f64>,
    shift_delta: Option<f64>,
    s: usize,
}

fn run_nystrom(sh: &Shared, plan: &MethodPlan, method: Method, r: usize, s: usize, cell_seed: u64) -> Result<Outcome> {
    let n = sh.a.n();
    let approx: NystromApprox;
    let mut kw = None;
    if method == Method::Sms {
        let p = SmsParams {
            r,
            s1: plan.s1(r).min(n),
            s2: s,
            alpha: plan.alpha,
            family: plan.family,
            seed: cell_seed,
        };
        approx = nystrom::sms_nystrom(sh.a, &p)?;
    } else {
        let mut spec = SketchSpec::new(plan.family, n, s, cell_seed).with_leverage_rank(r.min(n));
        if let Some(xi) = plan.sparsity {
            spec = spec.with_sparsity(xi);
        }
        if let Some(p) = &sh.points {
            spec = spec.with_points(Arc::clone(p));
        }
        let sk = apply_sketch(sh.a, &spec)?;
        kw = kappa_w(sh.a, &sk.w, r).ok();
        approx = match method {
            Method::Plain => nystrom::plain_nystrom(sh.a, &sk)?,
            Method::TruncatedCore => nystrom::truncated_core_nystrom(sh.a, &sk, r)?,
            Method::TruncatedOutput => nystrom::truncated_output_nystrom(sh.a, &sk, r)?,
            Method::Stabilized => nystrom::stabilized_nystrom(sh.a, &sk, plan.epsilon)?,
            Method::Sms => unreachable!(),
        };
    }
    let e = sym_norms(&(sh.a.matrix() - approx.reconstruct()));
    Ok(Outcome {
        abs: Some((e.nuclear, e.spectral, e.frobenius)),
        kappa_w: kw,
        shift_delta: (method == Method::Sms).then_some(approx.shift),
        s,
        ..Default::default()
    })
}

fn run_theorem(sh: &Shared, r: usize, c1: f64, c2: f64, cell_seed: u64) -> Result<Outcome> {
    let p = TheoremParams::new(r, c1, c2, cell_seed)?;
    let art = theorem_trial(sh.a, &p)?;
    let e = art.errors.expect("errors are always evaluated");
    Ok(Outcome {
        abs: Some((e.nuclear, e.spectral, e.frobenius)),
        omega_f: Some(art.omega_f),
        eps_ra: Some(art.eps_ra),
        bound_nuclear: Some(art.bound_nuclear),
        s: p.c2r,
        ..Default::default()
    })
}

fn run_cell(sh: &Shared, cell: &Cell) -> ExperimentRecord {
    let (plan, r, trial) = (cell.plan, cell.r, cell.trial);
    let seed = cell_seed(sh.cfg.master_seed, &sh.cfg.experiment, &plan.label, r, trial);
    let s = plan.sketch_size(r);
    let best = best_errors(sh.sv, r);
    let start = Instant::now();
    let result = match plan.kind {
        MethodKind::Nystrom(m) => run_nystrom(sh, plan, m, r, s, seed),
        MethodKind::Theorem { c1, c2 } => run_theorem(sh, r, c1, c2, seed),
    };
    let wall_ms = sh.cfg.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let family = match plan.kind {
        MethodKind::Theorem { .. } => SketchFamily::Gaussian,
        MethodKind::Nystrom(_) => plan.family,
    };
    let mut rec = ExperimentRecord {
        experiment: sh.cfg.experiment.clone(),
        method: plan.label.clone(),
        sketch_family: family.as_str().to_string(),
        n: sh.a.n(),
        r,
        s,
        trial,
        seed,
        rel_err_nuclear: None,
        rel_err_spectral: None,
        rel_err_frobenius: None,
        abs_err_nuclear: None,
        best_r_nuclear: best.nuclear,
        kappa_w: None,
        omega_f: None,
        eps_ra: None,
        bound_nuclear: None,
        shift_delta: None,
        wall_ms,
        error: None,
    };
    match result {
        Ok(o) => {
            let (nuc, spec, frob) = o.abs.expect("successful runs carry errors");
            rec.s = o.s;
            rec.abs_err_nuclear = Some(nuc);
            rec.rel_err_nuclear = ratio(nuc, best.nuclear);
            rec.rel_err_spectral = ratio(spec, best.spectral);
            rec.rel_err_frobenius = ratio(frob, best.frobenius);
            rec.kappa_w = o.kappa_w;
            rec.omega_f = o.omega_f;
            rec.eps_ra = o.eps_ra;
            rec.bound_nuclear = o.bound_nuclear;
            rec.shift_delta = o.shift_delta;
        }
        Err(e) => rec.error = Some(e.tag().to_string()),
    }
    rec
}

/// Which method kinds a sweep includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodFilter {
    All,
    TheoremOnly,
}

/// Runs every `(method, r, trial)` cell of `cfg` on a pool of `cfg.workers`
/// threads. Records come back sorted by (method position, r, trial) and do
/// not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    run_experiment_filtered(cfg, MethodFilter::All)
}

pub fn run_experiment_filtered(cfg: &ExperimentConfig, filter: MethodFilter) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let plans: Vec<MethodPlan> = cfg
        .plans()?
        .into_iter()
        .filter(|p| filter == MethodFilter::All || matches!(p.kind, MethodKind::Theorem { .. }))
        .collect();
    if plans.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    let built = cfg.build_matrix()?;
    let a = &built.a;
    let n = a.n();
    for &r in &cfg.r_values {
        if r >= n {
            return Err(Error::Config(format!("r={r} must be below n={n}")));
        }
        for p in &plans {
            let s = p.sketch_size(r);
            if s == 0 || s > n {
                return Err(Error::Config(format!("{}: sketch size {s} for r={r} is outside 1..={n}", p.label)));
            }
        }
    }
    let sv = a.singular_values()?;
    let shared = Shared {
        cfg,
        a,
        sv: &sv,
        points: built.points.clone(),
    };
    let mut cells = Vec::new();
    for (mi, plan) in plans.iter().enumerate() {
        for (ri, &r) in cfg.r_values.iter().enumerate() {
            for trial in 0..cfg.trials {
                cells.push(Cell {
                    order: (mi, ri, trial),
                    plan,
                    r,
                    trial,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::arg(e.to_string()))?;
    let mut out: Vec<((usize, usize, usize), ExperimentRecord)> =
        pool.install(|| cells.par_iter().map(|c| (c.order, run_cell(&shared, c))).collect());
    out.sort_by_key(|(k, _)| *k);
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::record::to_csv_bytes;

    fn config(methods: &str, trials: usize, workers: usize) -> ExperimentConfig {
        let text = format!(
            r#"
schema_version = 1
experiment = "custom"
master_seed = 99
trials = {trials}
r_values = [3, 6]
workers = {workers}
[matrix]
source = "synthetic"
seed = 2
spectrum = {{ kind = "geometric", n = 60, start = 1.0, end = 1e-6 }}
{methods}
"#
        );
        ExperimentConfig::from_toml_str(&text, ".").unwrap()
    }

    const ONE: &str = r#"
[[methods]]
method = "truncated_core"
"#;

    const TWO: &str = r#"
[[methods]]
method = "truncated_core"
[[methods]]
label = "plain_sparse"
method = "plain"
sketch = "sparse"
"#;

    #[test]
    fn records_are_sorted_and_complete() {
        let recs = run_experiment(&config(TWO, 3, 1)).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 3);
        assert_eq!(recs[0].method, "truncated_core");
        assert_eq!((recs[0].r, recs[0].s, recs[0].trial), (3, 5, 0));
        assert_eq!(recs.last().unwrap().method, "plain_sparse");
        for r in &recs {
            if let (Some(rel), Some(abs)) = (r.rel_err_nuclear, r.abs_err_nuclear) {
                assert_eq!(rel, abs / r.best_r_nuclear);
            }
            assert!(r.wall_ms.is_none());
        }
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let a = to_csv_bytes(&run_experiment(&config(TWO, 2, 1)).unwrap()).unwrap();
        let b = to_csv_bytes(&run_experiment(&config(TWO, 2, 4)).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn removing_a_method_keeps_other_rows() {
        let both = run_experiment(&config(TWO, 2, 1)).unwrap();
        let only = run_experiment(&config(ONE, 2, 1)).unwrap();
        assert_eq!(only.len(), 4);
        assert_eq!(&both[..4], &only[..]);
    }

    #[test]
    fn failures_become_rows() {
        // W = XᵀAX = 0 for a column sample of a zero matrix block
        let text = r#"
schema_version = 1
experiment = "custom"
trials = 2
r_values = [1]
[matrix]
source = "synthetic"
eigvecs = "identity"
spectrum = { kind = "stepwise", steps = [[1, 1.0], [9, 0.0]] }
[[methods]]
method = "plain"
sketch = "col_uniform"
s_fixed = 1
[[methods]]
method = "truncated_core"
"#;
        let cfg = ExperimentConfig::from_toml_str(text, ".").unwrap();
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs[..2].iter().any(|r| r.error.as_deref() == Some("singular_core")));
        assert!(recs[2..].iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn theorem_rows_carry_bound_fields() {
        let methods = r#"
[[methods]]
method = "theorem"
c1 = 2.0
c2 = 3.0
"#;
        let recs = run_experiment_filtered(&config(methods, 1, 1), MethodFilter::TheoremOnly).unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert_eq!(r.s, 3 * r.r);
            assert!(r.omega_f.is_some() && r.eps_ra.is_some() && r.bound_nuclear.is_some());
        }
        assert!(matches!(
            run_experiment_filtered(&config(TWO, 1, 1), MethodFilter::TheoremOnly),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn best_errors_tail() {
        let b = best_errors(&[3.0, 2.0, 1.0, 0.5], 2);
        assert_eq!((b.nuclear, b.spectral), (1.5, 1.0));
        assert!((b.frobenius - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(best_errors(&[1.0], 1).spectral, 0.0);
    }
}
