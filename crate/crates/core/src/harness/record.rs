use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of experiment output. Column order in CSV follows field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub method: String,
    pub sketch_family: String,
    pub n: usize,
    pub r: usize,
    pub s: usize,
    pub trial: usize,
    pub seed: u64,
    /// Empty when the best rank-`r` error is zero or the run failed.
    pub rel_err_nuclear: Option<f64>,
    pub rel_err_spectral: Option<f64>,
    pub rel_err_frobenius: Option<f64>,
    pub abs_err_nuclear: Option<f64>,
    pub best_r_nuclear: f64,
    pub kappa_w: Option<f64>,
    pub omega_f: Option<bool>,
    #[serde(rename = "eps_rA")]
    pub eps_ra: Option<f64>,
    pub bound_nuclear: Option<f64>,
    pub shift_delta: Option<f64>,
    pub wall_ms: Option<f64>,
    /// Error tag for a failed run, empty on success.
    pub error: Option<String>,
}

pub const HEADER: [&str; 20] = [
    "experiment",
    "method",
    "sketch_family",
    "n",
    "r",
    "s",
    "trial",
    "seed",
    "rel_err_nuclear",
    "rel_err_spectral",
    "rel_err_frobenius",
    "abs_err_nuclear",
    "best_r_nuclear",
    "kappa_w",
    "omega_f",
    "eps_rA",
    "bound_nuclear",
    "shift_delta",
    "wall_ms",
    "error",
];

/// Serializes records to CSV bytes with an LF terminator and the header
/// always present.
pub fn to_csv_bytes(records: &[ExperimentRecord]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let into_err = |e: csv::Error| Error::csv("<memory>", e);
    w.write_record(HEADER).map_err(into_err)?;
    for r in records {
        w.serialize(r).map_err(into_err)?;
    }
    w.into_inner().map_err(|e| Error::arg(e.to_string()))
}

pub fn emit_csv(records: &[ExperimentRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_csv_bytes(records)?;
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn from_csv_reader(rdr: impl Read) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(rdr);
    let header = rdr.headers().map_err(|e| Error::csv("<reader>", e))?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::arg(format!("unexpected header: {header:?}")));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::csv("<reader>", e)))
        .collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    from_csv_reader(f).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        other => other,
    })
}
