use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gose::{EvalCounters, SolverChoice, StochasticEngine};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{csv_bytes, jsonl, write_atomic};
use crate::runner::{prepare, run_seed, RunSummary};

/// Outcome of one grid cell. A cell whose configuration fails validation carries the
/// error message and no runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub index: usize,
    pub eps: f64,
    pub eps_h: f64,
    pub engine: StochasticEngine,
    pub solver: SolverChoice,
    pub runs: Vec<RunSummary>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn totals(&self) -> EvalCounters {
        self.runs.iter().fold(EvalCounters::default(), |acc, r| {
            let c = &r.counters;
            EvalCounters {
                grad_evals: acc.grad_evals + c.grad_evals,
                stoch_grad_evals: acc.stoch_grad_evals + c.stoch_grad_evals,
                component_grad_evals: acc.component_grad_evals + c.component_grad_evals,
                hvp_evals: acc.hvp_evals + c.hvp_evals,
                fn_evals: acc.fn_evals + c.fn_evals,
                nc_calls: acc.nc_calls + c.nc_calls,
                escape_steps: acc.escape_steps + c.escape_steps,
                small_region_entries: acc.small_region_entries + c.small_region_entries,
                outer_iters: acc.outer_iters + c.outer_iters,
                epochs_run: acc.epochs_run + c.epochs_run,
            }
        })
    }

    pub fn certified(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| r.certified == Some(true))
            .count()
    }
}

#[derive(Serialize)]
struct CellRow<'a> {
    cell: usize,
    eps: f64,
    eps_h: f64,
    engine: StochasticEngine,
    solver: SolverChoice,
    runs: usize,
    certified: usize,
    oracle_units: u64,
    grad_evals: u64,
    stoch_grad_evals: u64,
    component_grad_evals: u64,
    hvp_evals: u64,
    nc_calls: u64,
    escape_steps: u64,
    error: &'a str,
}

#[derive(Serialize)]
struct SweepRun<'a> {
    cell: usize,
    #[serde(flatten)]
    summary: &'a RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub solver: SolverChoice,
    pub engine: StochasticEngine,
    pub cells: usize,
    pub failed_cells: usize,
    pub runs: usize,
    pub certified: usize,
    pub oracle_units: u64,
}

/// Expands the grid of `base` into one configuration per cell.
pub fn cells(base: &ExperimentConfig) -> Result<Vec<ExperimentConfig>> {
    base.check()?;
    let grid = base.grid.clone().unwrap_or_default();
    let eps = grid.eps.unwrap_or_else(|| vec![base.tolerance.eps]);
    let eps_h = grid.eps_h.unwrap_or_else(|| vec![base.tolerance.eps_h]);
    let engines = grid.engine.unwrap_or_else(|| vec![base.options.nc.engine]);
    let solvers = grid.solver.unwrap_or_else(|| vec![base.options.solver]);
    let seeds = grid.seeds.unwrap_or_else(|| base.seeds.clone());
    let mut out = Vec::new();
    for &e in &eps {
        for &eh in &eps_h {
            for &engine in &engines {
                for &solver in &solvers {
                    let mut cfg = base.clone();
                    cfg.grid = None;
                    cfg.seeds = seeds.clone();
                    cfg.tolerance.eps = e;
                    cfg.tolerance.eps_h = eh;
                    cfg.options.nc.engine = engine;
                    cfg.options.solver = solver;
                    out.push(cfg);
                }
            }
        }
    }
    Ok(out)
}

/// Runs every cell of the grid over its seeds and writes `sweep.csv`, `aggregate.csv` and
/// `summary.jsonl` into `out`. Fails only when no cell is valid.
pub fn run_sweep(base: &ExperimentConfig, out: &Path) -> Result<Vec<CellResult>> {
    let mut results = Vec::new();
    for (index, cfg) in cells(base)?.into_iter().enumerate() {
        let mut cell = CellResult {
            index,
            eps: cfg.tolerance.eps,
            eps_h: cfg.tolerance.eps_h,
            engine: cfg.options.nc.engine,
            solver: cfg.options.solver,
            runs: Vec::new(),
            error: None,
        };
        match prepare(&cfg) {
            Ok(prep) => {
                for &seed in &cfg.seeds {
                    cell.runs.push(run_seed(&prep, &cfg, seed)?.1);
                }
            }
            Err(e) if e.exit_code() == 2 => cell.error = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        results.push(cell);
    }
    if results.iter().all(|c| c.error.is_some()) {
        let first = results[0].error.clone().unwrap_or_default();
        return Err(HarnessError::Config(format!(
            "every sweep cell is invalid: {first}"
        )));
    }

    let rows = results.iter().map(|c| {
        let t = c.totals();
        CellRow {
            cell: c.index,
            eps: c.eps,
            eps_h: c.eps_h,
            engine: c.engine,
            solver: c.solver,
            runs: c.runs.len(),
            certified: c.certified(),
            oracle_units: t.oracle_units(),
            grad_evals: t.grad_evals,
            stoch_grad_evals: t.stoch_grad_evals,
            component_grad_evals: t.component_grad_evals,
            hvp_evals: t.hvp_evals,
            nc_calls: t.nc_calls,
            escape_steps: t.escape_steps,
            error: c.error.as_deref().unwrap_or(""),
        }
    });
    write_atomic(&out.join("sweep.csv"), &csv_bytes(rows)?)?;
    write_atomic(&out.join("aggregate.csv"), &csv_bytes(aggregate(&results))?)?;
    let runs: Vec<SweepRun> = results
        .iter()
        .flat_map(|c| {
            c.runs.iter().map(move |summary| SweepRun {
                cell: c.index,
                summary,
            })
        })
        .collect();
    write_atomic(&out.join("summary.jsonl"), &jsonl(&runs)?)?;
    Ok(results)
}

/// Totals per (solver, engine) pair, in a stable order.
pub fn aggregate(results: &[CellResult]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, String), AggregateRow> = BTreeMap::new();
    for c in results {
        let key = (label(&c.solver), label(&c.engine));
        let row = groups.entry(key).or_insert(AggregateRow {
            solver: c.solver,
            engine: c.engine,
            cells: 0,
            failed_cells: 0,
            runs: 0,
            certified: 0,
            oracle_units: 0,
        });
        row.cells += 1;
        row.failed_cells += usize::from(c.error.is_some());
        row.runs += c.runs.len();
        row.certified += c.certified();
        row.oracle_units += c.totals().oracle_units();
    }
    groups.into_values().collect()
}

/// The serialized name of a unit enum variant.
pub fn label<S: Serialize>(v: &S) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn format_table(results: &[CellResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:<18} {:>6} {:>6} {:>6} {:>9} {:>14}",
        "solver", "engine", "cells", "failed", "runs", "certified", "oracle_units"
    );
    for r in aggregate(results) {
        let _ = writeln!(
            s,
            "{:<6} {:<18} {:>6} {:>6} {:>6} {:>9} {:>14}",
            label(&r.solver),
            label(&r.engine),
            r.cells,
            r.failed_cells,
            r.runs,
            r.certified,
            r.oracle_units
        );
    }
    for c in results.iter().filter(|c| c.error.is_some()) {
        let _ = writeln!(
            s,
            "cell {} (eps={}, eps_h={}): {}",
            c.index,
            c.eps,
            c.eps_h,
            c.error.as_deref().unwrap_or_default()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Grid;
    use gose::Mode;

    #[test]
    fn grid_expands_as_a_cross_product() {
        let mut base = ExperimentConfig::new("rosenbrock", Mode::Deterministic);
        base.grid = Some(Grid {
            eps: Some(vec![0.1, 0.01]),
            solver: Some(vec![SolverChoice::Gd, SolverChoice::Agd]),
            seeds: Some(vec![4, 5, 6]),
            ..Default::default()
        });
        let cells = cells(&base).unwrap();
        assert_eq!(cells.len(), 4);
        assert!(cells
            .iter()
            .all(|c| c.seeds == [4, 5, 6] && c.grid.is_none()));
        assert_eq!(cells[1].options.solver, SolverChoice::Agd);
        assert_eq!(cells[2].tolerance.eps, 0.01);
    }
}
