//! The five Nyström variants side by side on an Epanechnikov kernel matrix.

use indef_nystrom::data::{kernel_matrix, Kernel};
use indef_nystrom::matcore::sym_norms;
use indef_nystrom::nystrom::{self, SmsParams};
use indef_nystrom::seed;
use indef_nystrom::sketch::{apply_sketch, gaussian_matrix};
use indef_nystrom::{SketchFamily, SketchSpec};

fn main() -> indef_nystrom::Result<()> {
    let mut rng = seed::rng(1);
    let a = kernel_matrix(Kernel::Epanechnikov, &gaussian_matrix(&mut rng, 500, 1, 1.0))?;
    let n = a.n();
    let sv = a.singular_values()?;
    for r in [10, 20, 40] {
        let best: f64 = sv[r..].iter().sum();
        let rel = |m: nalgebra::DMatrix<f64>| sym_norms(&(a.matrix() - m)).nuclear / best;
        let g = |s: usize, family| apply_sketch(&a, &SketchSpec::new(family, n, s, (r + s) as u64));
        let plain = nystrom::plain_nystrom(&a, &g(r, SketchFamily::Gaussian)?)?;
        let core = nystrom::truncated_core_nystrom(&a, &g(2 * r, SketchFamily::Srtt)?, r)?;
        let out = nystrom::truncated_output_nystrom(&a, &g(2 * r, SketchFamily::Gaussian)?, r)?;
        let stab = nystrom::stabilized_nystrom(&a, &g(r, SketchFamily::Srtt)?, 1e-14)?;
        let sms = nystrom::sms_nystrom(&a, &SmsParams::recommended(r, SketchFamily::Gaussian, r as u64))?;
        println!(
            "r={r:<3} plain {:>10.3}  truncated_core {:>8.3}  truncated_output {:>8.3}  stabilized {:>10.3}  sms {:>8.3} (shift {:.3})",
            rel(plain.reconstruct()),
            rel(core.reconstruct()),
            rel(out.reconstruct()),
            rel(stab.reconstruct()),
            rel(sms.reconstruct()),
            sms.shift
        );
    }
    Ok(())
}
