use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gose::{Branch, EvalCounters, TraceRecord};
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Environment variable consulted when neither `--out` nor `output.dir` is given.
pub const OUT_DIR_ENV: &str = "GOSE_OUT_DIR";

/// Output directory precedence: command line, then config, then environment, then `gose-out`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gose-out"))
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
    file.write_all(bytes)
        .and_then(|()| file.sync_all())
        .map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

/// One JSON object per line.
pub fn jsonl<S: Serialize>(items: &[S]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Flat CSV row of a trace record.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub branch: Branch,
    pub grad_norm: f64,
    pub f: f64,
    pub escaped: bool,
    pub grad_evals: u64,
    pub stoch_grad_evals: u64,
    pub component_grad_evals: u64,
    pub hvp_evals: u64,
    pub fn_evals: u64,
    pub nc_calls: u64,
    pub escape_steps: u64,
    pub small_region_entries: u64,
    pub outer_iters: u64,
    pub epochs_run: u64,
}

impl From<&TraceRecord<f64>> for TraceRow {
    fn from(r: &TraceRecord<f64>) -> Self {
        let EvalCounters {
            grad_evals,
            stoch_grad_evals,
            component_grad_evals,
            hvp_evals,
            fn_evals,
            nc_calls,
            escape_steps,
            small_region_entries,
            outer_iters,
            epochs_run,
        } = r.counters;
        Self {
            iter: r.iter,
            branch: r.branch,
            grad_norm: r.grad_norm,
            f: r.f,
            escaped: r.escaped,
            grad_evals,
            stoch_grad_evals,
            component_grad_evals,
            hvp_evals,
            fn_evals,
            nc_calls,
            escape_steps,
            small_region_entries,
            outer_iters,
            epochs_run,
        }
    }
}

pub fn csv_bytes<S: Serialize>(rows: impl IntoIterator<Item = S>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::io("<csv buffer>", e.into_error()))
}

pub fn trace_csv(trace: &[TraceRecord<f64>]) -> Result<Vec<u8>> {
    if trace.is_empty() {
        // csv only writes the header with the first row
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TRACE_HEADER)?;
        return w
            .into_inner()
            .map_err(|e| HarnessError::io("<csv buffer>", e.into_error()));
    }
    csv_bytes(trace.iter().map(TraceRow::from))
}

pub const TRACE_HEADER: [&str; 15] = [
    "iter",
    "branch",
    "grad_norm",
    "f",
    "escaped",
    "grad_evals",
    "stoch_grad_evals",
    "component_grad_evals",
    "hvp_evals",
    "fn_evals",
    "nc_calls",
    "escape_steps",
    "small_region_entries",
    "outer_iters",
    "epochs_run",
];
