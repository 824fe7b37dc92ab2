use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use indef_nystrom::data::{self, EigvecSpec, Kernel, SpectrumSpec};
use indef_nystrom::harness::{self, ExperimentConfig, MethodFilter};
use indef_nystrom::matcore::write_matrix_csv;
use indef_nystrom::Error;

#[derive(Parser)]
#[command(version, about = "Nyström approximation of symmetric indefinite matrices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment sweep from a TOML config and write CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a synthetic symmetric matrix with a prescribed spectrum.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        /// Dimension (geometric).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        start: f64,
        #[arg(long, default_value_t = 1e-8)]
        end: f64,
        /// Runs as `count:magnitude,...` (stepwise).
        #[arg(long)]
        steps: Option<String>,
        #[arg(long, value_enum, default_value_t = Vectors::Haar)]
        eigvecs: Vectors,
        /// Identity block size for coherent eigenvectors.
        #[arg(long)]
        block: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a kernel matrix from a CSV of points.
    Kernel {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        has_header: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run only the theorem-oracle methods of a config.
    Theorem {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Geometric,
    Stepwise,
}

#[derive(Clone, Copy, ValueEnum)]
enum Vectors {
    Haar,
    Identity,
    BlockCoherent,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Argument(_) | Error::Parse { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_config(path: &Path, workers: Option<usize>, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io { .. } => Failure::Config(e.to_string()),
        other => other.into(),
    })?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep(config: &Path, out: Option<PathBuf>, workers: Option<usize>, seed: Option<u64>, filter: MethodFilter) -> Result<(), Failure> {
    let cfg = load_config(config, workers, seed)?;
    let out = out
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Failure::Config("no output path: pass --out or set `output`".into()))?;
    let records = harness::run_experiment_filtered(&cfg, filter)?;
    harness::emit_csv(&records, &out)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    eprintln!("wrote {} records ({failed} failed runs) to {}", records.len(), out.display());
    Ok(())
}

fn parse_steps(s: &str) -> Result<Vec<(usize, f64)>, Failure> {
    s.split(',')
        .map(|part| {
            let (c, m) = part
                .split_once(':')
                .ok_or_else(|| Failure::Config(format!("step {part:?} is not count:magnitude")))?;
            let c = c.trim().parse().map_err(|_| Failure::Config(format!("bad count in {part:?}")))?;
            let m = m.trim().parse().map_err(|_| Failure::Config(format!("bad magnitude in {part:?}")))?;
            Ok((c, m))
        })
        .collect()
}

fn execute(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run {
            config,
            out,
            workers,
            seed,
        } => sweep(&config, out, workers, seed, MethodFilter::All),
        Cmd::Theorem {
            config,
            out,
            workers,
            seed,
        } => sweep(&config, Some(out), workers, seed, MethodFilter::TheoremOnly),
        Cmd::Synth {
            kind,
            n,
            start,
            end,
            steps,
            eigvecs,
            block,
            seed,
            out,
        } => {
            let spec = match kind {
                SynthKind::Geometric => {
                    SpectrumSpec::geometric(n.ok_or_else(|| Failure::Config("geometric needs --n".into()))?, start, end)
                }
                SynthKind::Stepwise => {
                    let steps = steps.ok_or_else(|| Failure::Config("stepwise needs --steps".into()))?;
                    let spec = SpectrumSpec::stepwise(parse_steps(&steps)?);
                    if n.is_some_and(|n| n != spec.n) {
                        return Err(Failure::Config(format!("--n disagrees with step counts ({})", spec.n)));
                    }
                    spec
                }
            };
            let vec = match eigvecs {
                Vectors::Haar => EigvecSpec::Haar,
                Vectors::Identity => EigvecSpec::Identity,
                Vectors::BlockCoherent => EigvecSpec::BlockCoherent {
                    k: block.ok_or_else(|| Failure::Config("block_coherent needs --block".into()))?,
                },
            };
            let a = data::synth_matrix(&spec, &vec, seed)?;
            write_matrix_csv(&out, a.matrix())?;
            Ok(())
        }
        Cmd::Kernel {
            kernel,
            points,
            has_header,
            out,
        } => {
            let k: Kernel = kernel.parse()?;
            let pts = data::read_points_csv(&points, has_header)?;
            let km = data::kernel_matrix(k, &pts)?;
            write_matrix_csv(&out, km.matrix())?;
            Ok(())
        }
        Cmd::Selftest => {
            let checks = harness::selftest();
            for c in &checks {
                println!("{} {:<20} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(Failure::Runtime("selftest failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
