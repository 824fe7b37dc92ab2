//! Truncated-core Nyström against plain Nyström on a 600x600 indefinite
//! matrix whose eigenvalues decay geometrically from 1 to 1e-8.

use indef_nystrom::data::{synth_matrix, EigvecSpec, SpectrumSpec};
use indef_nystrom::matcore::sym_norms;
use indef_nystrom::nystrom::{nystrom_eig, plain_nystrom, truncated_core_nystrom};
use indef_nystrom::sketch::apply_sketch;
use indef_nystrom::{SketchFamily, SketchSpec};

fn main() -> indef_nystrom::Result<()> {
    let n = 600;
    let a = synth_matrix(&SpectrumSpec::geometric(n, 1.0, 1e-8), &EigvecSpec::Haar, 1)?;
    let sv = a.singular_values()?;
    println!("{:>4} {:>14} {:>14}", "r", "alg1 (1.5r)", "plain (r)");
    for r in (10..=80).step_by(10) {
        let best: f64 = sv[r..].iter().sum();
        let s = (3 * r).div_ceil(2);
        let sk = apply_sketch(&a, &SketchSpec::new(SketchFamily::Gaussian, n, s, r as u64))?;
        let alg1 = truncated_core_nystrom(&a, &sk, r)?;
        let sk_r = apply_sketch(&a, &SketchSpec::new(SketchFamily::Gaussian, n, r, r as u64 + 1000))?;
        let plain = plain_nystrom(&a, &sk_r)?;
        let rel = |m: &nalgebra::DMatrix<f64>| sym_norms(&(a.matrix() - m)).nuclear / best;
        println!("{r:>4} {:>14.4} {:>14.4}", rel(&alg1.reconstruct()), rel(&plain.reconstruct()));
    }

    // the factored eigendecomposition never forms the n x n approximation
    let sk = apply_sketch(&a, &SketchSpec::new(SketchFamily::Gaussian, n, 30, 7))?;
    let e = nystrom_eig(&truncated_core_nystrom(&a, &sk, 20)?)?;
    let lead: Vec<String> = e.sigma.iter().take(5).map(|v| format!("{v:+.4}")).collect();
    println!("leading eigenvalues of the rank-20 approximation: {}", lead.join(" "));
    Ok(())
}
