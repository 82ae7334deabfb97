//! Group × controller × period matrix with a per-(group, period) summary of
//! RMSE reductions relative to the nominal controller.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::model::Group;

use super::config::Config;
use super::metrics::{reduction_percent, RunMetrics};
use super::sim::{run_experiment, write_csv};
use super::{ControllerKind, ExperimentSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub group: Group,
    pub controller: ControllerKind,
    pub period: f64,
}

/// Result of one cell: metrics (possibly partial) or the reason it failed.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: SweepCell,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

impl CellResult {
    fn usable(&self) -> Option<&RunMetrics> {
        self.metrics.as_ref().filter(|m| !m.failed && self.error.is_none())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SummaryRow {
    pub group: String,
    pub period: f64,
    pub nominal_position_rmse: Option<f64>,
    pub nominal_attitude_rmse: Option<f64>,
    pub l1_position_rmse: Option<f64>,
    pub l1_attitude_rmse: Option<f64>,
    pub ekf_position_rmse: Option<f64>,
    pub ekf_attitude_rmse: Option<f64>,
    pub pid_position_rmse: Option<f64>,
    pub pid_attitude_rmse: Option<f64>,
    pub l1_position_reduction: Option<f64>,
    pub l1_attitude_reduction: Option<f64>,
    pub ekf_position_reduction: Option<f64>,
    pub ekf_attitude_reduction: Option<f64>,
    /// Controllers whose run failed, `;`-separated.
    pub failed: String,
}

pub fn cells(cfg: &Config) -> Vec<SweepCell> {
    let s = &cfg.sweep;
    let mut out = Vec::new();
    for &group in &s.groups {
        for &period in &s.periods {
            for &controller in &s.controllers {
                out.push(SweepCell { group, controller, period });
            }
        }
    }
    out
}

/// Builds one summary row per (group, period), in first-seen order.
pub fn summarize(results: &[CellResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Group, f64)> = Vec::new();
    for r in results {
        if !keys.contains(&(r.cell.group, r.cell.period)) {
            keys.push((r.cell.group, r.cell.period));
        }
    }
    keys.into_iter()
        .map(|(group, period)| {
            let mut row = SummaryRow { group: group.to_string(), period, ..SummaryRow::default() };
            let mut failed = Vec::new();
            for r in results.iter().filter(|r| r.cell.group == group && r.cell.period == period) {
                let Some(m) = r.usable() else {
                    failed.push(r.cell.controller.name());
                    continue;
                };
                let (p, a) = (Some(m.position_rmse), Some(m.attitude_rmse));
                match r.cell.controller {
                    ControllerKind::Nominal => (row.nominal_position_rmse, row.nominal_attitude_rmse) = (p, a),
                    ControllerKind::L1 => (row.l1_position_rmse, row.l1_attitude_rmse) = (p, a),
                    ControllerKind::Ekf => (row.ekf_position_rmse, row.ekf_attitude_rmse) = (p, a),
                    ControllerKind::Pid => (row.pid_position_rmse, row.pid_attitude_rmse) = (p, a),
                }
            }
            let red = |x: Option<f64>, n: Option<f64>| Some(reduction_percent(x?, n?));
            row.l1_position_reduction = red(row.l1_position_rmse, row.nominal_position_rmse);
            row.l1_attitude_reduction = red(row.l1_attitude_rmse, row.nominal_attitude_rmse);
            row.ekf_position_reduction = red(row.ekf_position_rmse, row.nominal_position_rmse);
            row.ekf_attitude_reduction = red(row.ekf_attitude_rmse, row.nominal_attitude_rmse);
            row.failed = failed.join(";");
            row
        })
        .collect()
}

pub struct SweepOutput {
    pub results: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

impl SweepOutput {
    pub fn any_failed(&self) -> bool {
        self.results.iter().any(|r| r.usable().is_none())
    }
}

/// Runs every cell (in parallel) and, given an output directory, writes
/// `summary.csv` and the per-cell time series there. A failing cell is
/// recorded and the sweep continues.
pub fn run_sweep(cfg: &Config, out_dir: Option<&Path>) -> Result<SweepOutput> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let results: Vec<CellResult> = cells(cfg)
        .into_par_iter()
        .map(|cell| {
            let duration = cfg.sweep.duration.unwrap_or(cell.period);
            let spec = ExperimentSpec {
                seed: cfg.run.seed,
                ..ExperimentSpec::new(cell.group, cell.controller, cell.period, duration)
            };
            let run = run_experiment(&spec, cfg).and_then(|out| {
                if let (Some(dir), true) = (out_dir, cfg.sweep.write_runs) {
                    let file = std::fs::File::create(dir.join(format!("{}.csv", spec.label())))?;
                    write_csv(std::io::BufWriter::new(file), &out, cfg.run.csv_timing)?;
                }
                Ok(out)
            });
            match run {
                Ok(out) => CellResult { cell, metrics: Some(out.metrics), error: out.failure },
                Err(e) => CellResult { cell, metrics: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let summary = summarize(&results);
    if let Some(dir) = out_dir {
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        for row in &summary {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(SweepOutput { results, summary })
}
