use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::HarnessError;

/// One run of one scenario point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    pub seed: u64,
    pub num_tasks: usize,
    pub num_ues: usize,
    pub social_welfare: f64,
    pub success_rate: f64,
    pub mean_latency: f64,
    pub runtime_ms: f64,
    pub iterations_to_converge: usize,
    pub oversupply: u64,
    pub unmet_demand: u64,
    /// The swept quantity of the scenario (task count, UE count, bid, sweep).
    pub param: f64,
    /// Scenario-specific measurement, such as a probe bidder's payoff.
    pub value: Option<f64>,
}

pub const COLUMNS: [&str; 13] = [
    "scenario",
    "seed",
    "num_tasks",
    "num_ues",
    "social_welfare",
    "success_rate",
    "mean_latency",
    "runtime_ms",
    "iterations_to_converge",
    "oversupply",
    "unmet_demand",
    "param",
    "value",
];

pub fn write_rows<W: Write>(rows: &[MetricsRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.seed.to_string(),
            r.num_tasks.to_string(),
            r.num_ues.to_string(),
            r.social_welfare.to_string(),
            r.success_rate.to_string(),
            r.mean_latency.to_string(),
            r.runtime_ms.to_string(),
            r.iterations_to_converge.to_string(),
            r.oversupply.to_string(),
            r.unmet_demand.to_string(),
            r.param.to_string(),
            r.value.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rows` to `path` with a header line.
pub fn emit_csv(rows: &[MetricsRow], path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path)?;
    write_rows(rows, std::io::BufWriter::new(file))
}
