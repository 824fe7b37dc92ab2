//! κ_W for square versus oversampled Gaussian sketches.

use indef_nystrom::data::{synth_matrix, EigvecSpec, SpectrumSpec};
use indef_nystrom::nystrom::kappa_w;
use indef_nystrom::sketch::apply_sketch;
use indef_nystrom::{SketchFamily, SketchSpec};

fn main() -> indef_nystrom::Result<()> {
    let n = 500;
    let a = synth_matrix(&SpectrumSpec::geometric(n, 1.0, 1e-8), &EigvecSpec::Haar, 3)?;
    println!("{:>4} {:>12} {:>12} {:>12}", "r", "s = r", "s = r + 5", "s = 1.5r");
    for r in (10..=60).step_by(10) {
        let k = |s: usize| -> indef_nystrom::Result<f64> {
            let sk = apply_sketch(&a, &SketchSpec::new(SketchFamily::Gaussian, n, s, (r * 1000 + s) as u64))?;
            kappa_w(&a, &sk.w, r)
        };
        println!("{r:>4} {:>12.3e} {:>12.3e} {:>12.3e}", k(r)?, k(r + 5)?, k((3 * r).div_ceil(2))?);
    }
    Ok(())
}
