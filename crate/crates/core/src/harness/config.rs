//! TOML experiment configuration, `schema_version = 1`.
//!
//! ```toml
//! schema_version = 1
//! experiment = "fig2_truncation"
//! master_seed = 2024
//! trials = 5
//! r_values = [10, 20, 30]
//! workers = 1
//! output = "fig2.csv"
//!
//! [matrix]
//! source = "synthetic"
//! seed = 1
//! eigvecs = "haar"
//! spectrum = { kind = "geometric", n = 1000, start = 1.0, end = 1e-8 }
//!
//! [[methods]]
//! label = "alg1"
//! method = "truncated_core"
//! sketch = "gaussian"
//! s_factor = 1.5
//! ```
//!
//! Relative paths inside `[matrix]` resolve against the config file's
//! directory; `output` resolves against the working directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::data::{self, EigvecSpec, Kernel, SpectrumSpec};
use crate::error::{Error, Result};
use crate::matcore::{read_matrix_csv, SymMatrix};
use crate::nystrom::Method;
use crate::seed;
use crate::sketch::SketchFamily;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: String,
    #[serde(default)]
    pub master_seed: u64,
    pub trials: usize,
    pub r_values: Vec<usize>,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Off by default so that output bytes depend only on the config.
    #[serde(default)]
    pub record_timing: bool,
    pub matrix: MatrixConfig,
    pub methods: Vec<MethodConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> usize {
    1
}

pub const EXPERIMENT_TAGS: [&str; 7] = [
    "fig1_instability",
    "fig2_truncation",
    "fig3_coherent",
    "fig4_theorem",
    "fig5_kernels",
    "fig6_datasets",
    "custom",
];

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixConfig {
    Synthetic {
        spectrum: SpectrumConfig,
        #[serde(default = "haar")]
        eigvecs: String,
        #[serde(default)]
        coherent_block: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
    Kernel {
        kernel: String,
        points: PointsConfig,
    },
    /// Headerless square matrix CSV.
    File { path: PathBuf },
}

fn haar() -> String {
    "haar".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumConfig {
    Geometric { n: usize, start: f64, end: f64 },
    Stepwise { steps: Vec<(usize, f64)> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointsConfig {
    /// `m` iid standard-normal points in `dim` dimensions.
    Normal {
        m: usize,
        #[serde(default = "one")]
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Numeric CSV, optionally sampled to `sample` rows and standardized.
    Csv {
        path: PathBuf,
        #[serde(default)]
        has_header: bool,
        #[serde(default)]
        sample: Option<usize>,
        #[serde(default)]
        standardize: bool,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default)]
    pub label: Option<String>,
    /// A [`Method`] tag or `"theorem"`.
    pub method: String,
    #[serde(default)]
    pub sketch: Option<String>,
    /// `s = ceil(s_factor · r)`.
    #[serde(default)]
    pub s_factor: Option<f64>,
    #[serde(default)]
    pub s_fixed: Option<usize>,
    /// Added to `ceil(s_factor · r)`, e.g. `s = r + 5`.
    #[serde(default)]
    pub s_offset: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub sparsity: Option<usize>,
    #[serde(default)]
    pub s1_factor: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
}

/// Resolved method entry.
#[derive(Debug, Clone)]
pub enum MethodKind {
    Nystrom(Method),
    Theorem { c1: f64, c2: f64 },
}

#[derive(Debug, Clone)]
pub struct MethodPlan {
    pub label: String,
    pub kind: MethodKind,
    pub family: SketchFamily,
    pub s_factor: f64,
    pub s_fixed: Option<usize>,
    pub s_offset: usize,
    pub epsilon: f64,
    pub sparsity: Option<usize>,
    pub s1_factor: f64,
    pub alpha: f64,
}

impl MethodPlan {
    /// Sketch size for target rank `r`: `s_fixed`, else `ceil(s_factor · r) + s_offset`.
    /// For the theorem oracle this is `c₂r`.
    pub fn sketch_size(&self, r: usize) -> usize {
        if let MethodKind::Theorem { c2, .. } = self.kind {
            return (c2 * r as f64).round() as usize;
        }
        self.s_fixed
            .unwrap_or_else(|| (self.s_factor * r as f64 - 1e-9).ceil() as usize + self.s_offset)
    }

    pub fn s1(&self, r: usize) -> usize {
        ((self.s1_factor * r as f64 - 1e-9).ceil() as usize).max(1)
    }
}

impl MethodConfig {
    pub fn plan(&self) -> Result<MethodPlan> {
        let cfg_err = |m: String| Error::Config(m);
        let kind = if self.method == "theorem" {
            MethodKind::Theorem {
                c1: self.c1.ok_or_else(|| cfg_err("theorem method needs c1".into()))?,
                c2: self.c2.ok_or_else(|| cfg_err("theorem method needs c2".into()))?,
            }
        } else {
            MethodKind::Nystrom(self.method.parse().map_err(|_| cfg_err(format!("unknown method {:?}", self.method)))?)
        };
        let family: SketchFamily = match &self.sketch {
            Some(s) => s.parse().map_err(|_| cfg_err(format!("unknown sketch family {s:?}")))?,
            None => SketchFamily::Gaussian,
        };
        let default_factor = match kind {
            MethodKind::Nystrom(Method::Plain | Method::Stabilized) => 1.0,
            MethodKind::Nystrom(Method::Sms) => 2.0,
            _ => 1.5,
        };
        let s_factor = self.s_factor.unwrap_or(default_factor);
        if !(s_factor >= 1.0) {
            return Err(cfg_err(format!("s_factor must be at least 1, got {s_factor}")));
        }
        let epsilon = self.epsilon.unwrap_or(1e-14);
        if !(epsilon >= 0.0) {
            return Err(cfg_err(format!("epsilon must be non-negative, got {epsilon}")));
        }
        Ok(MethodPlan {
            label: self.label.clone().unwrap_or_else(|| self.method.clone()),
            kind,
            family,
            s_factor,
            s_fixed: self.s_fixed,
            s_offset: self.s_offset,
            epsilon,
            sparsity: self.sparsity,
            s1_factor: self.s1_factor.unwrap_or(1.0),
            alpha: self.alpha.unwrap_or(1.5),
        })
    }
}

/// A constructed test matrix, plus the point set when it came from a kernel.
pub struct BuiltMatrix {
    pub a: SymMatrix,
    pub points: Option<Arc<DMatrix<f64>>>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if !EXPERIMENT_TAGS.contains(&self.experiment.as_str()) {
            return Err(Error::Config(format!("unknown experiment tag {:?}", self.experiment)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.r_values.is_empty() || self.r_values.contains(&0) {
            return Err(Error::Config("r_values must be non-empty and positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        let plans = self.plans()?;
        let mut labels: Vec<&str> = plans.iter().map(|p| p.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("method labels must be unique".into()));
        }
        if let Some(n) = self.declared_n() {
            if let Some(r) = self.r_values.iter().find(|&&r| r >= n) {
                return Err(Error::Config(format!("r={r} must be below n={n}")));
            }
        }
        Ok(())
    }

    pub fn plans(&self) -> Result<Vec<MethodPlan>> {
        self.methods.iter().map(MethodConfig::plan).collect()
    }

    /// Matrix dimension when it is known without building the matrix.
    pub fn declared_n(&self) -> Option<usize> {
        match &self.matrix {
            MatrixConfig::Synthetic { spectrum, .. } => Some(self.spectrum_spec(spectrum).n),
            MatrixConfig::Kernel {
                points: PointsConfig::Normal { m, .. },
                ..
            } => Some(*m),
            MatrixConfig::Kernel {
                points: PointsConfig::Csv { sample: Some(m), .. },
                ..
            } => Some(*m),
            _ => None,
        }
    }

    fn spectrum_spec(&self, s: &SpectrumConfig) -> SpectrumSpec {
        match s {
            SpectrumConfig::Geometric { n, start, end } => SpectrumSpec::geometric(*n, *start, *end),
            SpectrumConfig::Stepwise { steps } => SpectrumSpec::stepwise(steps.clone()),
        }
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn build_matrix(&self) -> Result<BuiltMatrix> {
        match &self.matrix {
            MatrixConfig::Synthetic {
                spectrum,
                eigvecs,
                coherent_block,
                seed,
            } => {
                let vec = match (eigvecs.as_str(), coherent_block) {
                    ("haar", _) => EigvecSpec::Haar,
                    ("identity", _) => EigvecSpec::Identity,
                    ("block_coherent", Some(k)) => EigvecSpec::BlockCoherent { k: *k },
                    ("block_coherent", None) => {
                        return Err(Error::Config("block_coherent eigvecs need coherent_block".into()))
                    }
                    (other, _) => return Err(Error::Config(format!("unknown eigvecs {other:?}"))),
                };
                let spec = self.spectrum_spec(spectrum);
                spec.validate().map_err(|e| Error::Config(e.to_string()))?;
                Ok(BuiltMatrix {
                    a: data::synth_matrix(&spec, &vec, *seed)?,
                    points: None,
                })
            }
            MatrixConfig::Kernel { kernel, points } => {
                let k: Kernel = kernel.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
                let pts = self.build_points(points)?;
                Ok(BuiltMatrix {
                    a: data::kernel_matrix(k, &pts)?,
                    points: Some(Arc::new(pts)),
                })
            }
            MatrixConfig::File { path } => Ok(BuiltMatrix {
                a: read_matrix_csv(self.resolve(path))?,
                points: None,
            }),
        }
    }

    fn build_points(&self, p: &PointsConfig) -> Result<DMatrix<f64>> {
        match p {
            PointsConfig::Normal { m, dim, seed } => {
                if *m == 0 || *dim == 0 {
                    return Err(Error::Config("normal points need m >= 1 and dim >= 1".into()));
                }
                let mut rng = seed::rng(*seed);
                Ok(crate::sketch::gaussian_matrix(&mut rng, *m, *dim, 1.0))
            }
            PointsConfig::Csv {
                path,
                has_header,
                sample,
                standardize,
                seed,
            } => {
                let all = data::read_points_csv(self.resolve(path), *has_header)?;
                match (sample, standardize) {
                    (Some(m), _) => data::sample_rows_standardized(&all, *m, *seed),
                    (None, true) => Ok(data::standardize(&all)),
                    (None, false) => Ok(all),
                }
            }
        }
    }
}
