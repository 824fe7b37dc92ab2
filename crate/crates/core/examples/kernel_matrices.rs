//! Inertia of each indefinite kernel on 1000 standard normal points in R^2.

use indef_nystrom::data::{kernel_matrix, Kernel};
use indef_nystrom::seed;
use indef_nystrom::sketch::gaussian_matrix;

fn main() -> indef_nystrom::Result<()> {
    let mut rng = seed::rng(2718);
    let pts = gaussian_matrix(&mut rng, 1000, 2, 1.0);
    for kernel in Kernel::ALL {
        let a = kernel_matrix(kernel, &pts)?;
        let ev = a.eig()?.values.clone();
        let tol = 1e-10 * ev.amax();
        let pos = ev.iter().filter(|&&v| v > tol).count();
        let neg = ev.iter().filter(|&&v| v < -tol).count();
        println!(
            "{:<18} positive {pos:>4}  negative {neg:>4}  λmax {:>10.4e}  λmin {:>11.4e}",
            kernel.as_str(),
            ev.max(),
            ev.min()
        );
    }
    Ok(())
}
