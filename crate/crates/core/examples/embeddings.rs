//! Every sketch family applied to the same matrix, with the resulting
//! truncated-core error.

use std::sync::Arc;

use indef_nystrom::data::{kernel_matrix, Kernel};
use indef_nystrom::matcore::sym_norms;
use indef_nystrom::nystrom::truncated_core_nystrom;
use indef_nystrom::seed;
use indef_nystrom::sketch::{apply_sketch, gaussian_matrix};
use indef_nystrom::{SketchFamily, SketchSpec};

fn main() -> indef_nystrom::Result<()> {
    let mut rng = seed::rng(5);
    let points = Arc::new(gaussian_matrix(&mut rng, 400, 2, 1.0));
    let a = kernel_matrix(Kernel::Multiquadric, &points)?;
    let (n, r, s) = (a.n(), 15, 30);
    let best: f64 = a.singular_values()?[r..].iter().sum();
    for family in SketchFamily::ALL {
        let spec = SketchSpec::new(family, n, s, 11)
            .with_leverage_rank(r)
            .with_points(Arc::clone(&points));
        let sk = apply_sketch(&a, &spec)?;
        let approx = truncated_core_nystrom(&a, &sk, r)?;
        let err = sym_norms(&(a.matrix() - approx.reconstruct())).nuclear / best;
        let cols = match &sk.column_indices {
            Some(idx) => format!("{} distinct columns", {
                let mut v = idx.clone();
                v.sort_unstable();
                v.dedup();
                v.len()
            }),
            None => "dense embedding".to_string(),
        };
        println!("{:<14} relative nuclear error {err:>10.4}  ({cols})", family.as_str());
    }
    Ok(())
}
