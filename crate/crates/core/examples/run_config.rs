//! Runs an experiment config and prints median relative nuclear error per
//! (method, r). Defaults to the shipped truncation config.
//!
//! cargo run --release --example run_config -- crates/core/configs/fig2_truncation.toml

use std::collections::BTreeMap;

use indef_nystrom::harness::{run_experiment, ExperimentConfig};

fn main() -> indef_nystrom::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig2_truncation.toml").to_string());
    let cfg = ExperimentConfig::load(&path)?;
    let records = run_experiment(&cfg)?;
    let mut cells: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for rec in &records {
        let v = rec.rel_err_nuclear.unwrap_or(f64::NAN);
        cells.entry((rec.method.clone(), rec.r)).or_default().push(v);
    }
    for ((method, r), mut v) in cells {
        v.sort_by(f64::total_cmp);
        println!("{method:<20} r={r:<4} median {:>12.4e}  max {:>12.4e}", v[v.len() / 2], v[v.len() - 1]);
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    println!("{} records, {failed} failed runs", records.len());
    Ok(())
}
