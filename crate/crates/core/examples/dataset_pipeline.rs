//! CSV features -> uniform sample -> standardization -> kernel matrix ->
//! truncated-core approximation. Pass a CSV path (with header) to use real
//! data; without one a synthetic file is generated in a temp directory.

use std::path::PathBuf;

use indef_nystrom::data::{kernel_matrix, load_standardize_sample, write_synthetic_csv, Kernel};
use indef_nystrom::matcore::sym_norms;
use indef_nystrom::nystrom::truncated_core_nystrom;
use indef_nystrom::sketch::apply_sketch;
use indef_nystrom::{SketchFamily, SketchSpec};

fn main() -> indef_nystrom::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("indef_nystrom_features.csv");
            write_synthetic_csv(&p, 1500, 8, 17, true)?;
            p
        }
    };
    let m = 600;
    let pts = load_standardize_sample(&path, m, 4, true)?;
    println!("sampled {} rows x {} features from {}", pts.nrows(), pts.ncols(), path.display());
    for kernel in [Kernel::ThinPlateSpline, Kernel::Sigmoid, Kernel::Multiquadric] {
        let a = kernel_matrix(kernel, &pts)?;
        let sv = a.singular_values()?;
        let r = 20;
        let sk = apply_sketch(&a, &SketchSpec::new(SketchFamily::Srtt, m, 2 * r, 8))?;
        let err = sym_norms(&(a.matrix() - truncated_core_nystrom(&a, &sk, r)?.reconstruct())).nuclear;
        println!("{:<18} rank {r}: relative nuclear error {:.4}", kernel.as_str(), err / sv[r..].iter().sum::<f64>());
    }
    Ok(())
}
