//! Nyström low-rank approximation for symmetric matrices that may be indefinite.
//!
//! The centrepiece is [`nystrom::truncated_core_nystrom`], which forms
//! `C · pinv(⌊W⌋_r) · Cᵀ` with `C = A·X`, `W = Xᵀ·A·X` and a core truncation
//! count that is proportional to the target rank rather than driven by the
//! magnitude of the core's singular values. Around it sit the competing
//! variants (plain, output-truncated, tolerance-stabilized, submatrix-shifted),
//! the random embeddings that feed them, a constructive oracle for the
//! relative-error nuclear-norm bound, the test-matrix zoo, and a seeded
//! experiment harness that writes CSV.
//!
//! ```
//! use indef_nystrom::{data, nystrom, sketch};
//!
//! let spec = data::SpectrumSpec::geometric(200, 1.0, 1e-8);
//! let a = data::synth_matrix(&spec, &data::EigvecSpec::Haar, 7).unwrap();
//! let r = 10;
//! let sk = sketch::apply_sketch(&a, &sketch::SketchSpec::new(sketch::SketchFamily::Gaussian, 200, 15, 1)).unwrap();
//! let approx = nystrom::truncated_core_nystrom(&a, &sk, r).unwrap();
//! assert_eq!(approx.reconstruct().nrows(), 200);
//! ```

pub mod data;
pub mod error;
pub mod harness;
pub mod matcore;
pub mod nystrom;
pub mod seed;
pub mod sketch;
pub mod theory;

pub use error::{Error, Result};
pub use matcore::{EigDecomp, Norms, RankTruncation, SymMatrix};
pub use nystrom::{ApproxEig, Method, NystromApprox};
pub use sketch::{SketchFamily, SketchResult, SketchSpec};
