//! Plain Nyström on `[[0, 1], [1, 0]]` with `X = [ε, √(1−ε²)]ᵀ`: the nuclear
//! error grows like `1/(2ε)` while the best rank-1 error stays 1.

use nalgebra::DMatrix;

use indef_nystrom::matcore::sym_norms;
use indef_nystrom::nystrom::plain_nystrom;
use indef_nystrom::{SketchResult, SymMatrix};

fn main() -> indef_nystrom::Result<()> {
    let a = SymMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { 1.0 })?;
    println!("{:>8} {:>16} {:>16}", "eps", "nuclear error", "1/(2e sqrt(1-e^2))");
    for eps in [0.5f64, 0.1, 0.01, 1e-4, 1e-6] {
        let x = DMatrix::from_column_slice(2, 1, &[eps, (1.0 - eps * eps).sqrt()]);
        let approx = plain_nystrom(&a, &SketchResult::from_embedding(&a, x)?)?;
        let err = sym_norms(&(a.matrix() - approx.reconstruct())).nuclear;
        let formula = 1.0 / (2.0 * eps * (1.0 - eps * eps).sqrt());
        println!("{eps:>8.0e} {err:>16.6e} {formula:>16.6e}");
    }
    Ok(())
}
