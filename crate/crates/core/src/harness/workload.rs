use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::HarnessError;
use crate::model::{LocalTimeMode, SystemConfig, Task};
use crate::rng::{stream_rng, STREAM_WORKLOAD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadSource {
    Synthetic,
    Trace,
}

/// Requests in arrival order, each with its owner's private value, budget
/// and a cap on the cores it may ask for.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub tasks: Vec<Task>,
    pub valuations: Vec<f64>,
    pub budgets: Vec<f64>,
    pub demand_caps: Vec<u32>,
    pub source: WorkloadSource,
    pub horizon: f64,
}

impl Workload {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo { rng.random_range(lo..=hi) } else { lo }
}

/// Draws everything about a request except its arrival time and size.
fn fill_request(cfg: &SystemConfig, rng: &mut ChaCha8Rng, id: usize, arrival: f64, len: f64) -> (Task, f64, f64) {
    let complexity = uniform(rng, cfg.complexity_min, cfg.complexity_max);
    let deadline = uniform(rng, cfg.deadline_min, cfg.deadline_max);
    let local_time = match cfg.local_time_mode {
        LocalTimeMode::Sampled => Some(uniform(rng, cfg.local_time_min, cfg.local_time_max)),
        LocalTimeMode::Derived => None,
    };
    let owner_ue = rng.random_range(0..cfg.num_ue.max(1));
    let valuation = uniform(rng, cfg.valuation_min, cfg.valuation_max);
    let budget = uniform(rng, cfg.budget_min, cfg.budget_max);
    let task = Task {
        id,
        arrival_time: arrival,
        len,
        complexity,
        deadline,
        split: 0.0,
        owner_ue,
        local_time,
    };
    (task, valuation, budget)
}

/// Poisson arrivals at `cfg.arrival_rate`, stopping at `cfg.num_tasks`
/// requests or at `cfg.horizon` seconds when the horizon is positive.
pub fn generate_workload(cfg: &SystemConfig, seed: u64) -> Workload {
    let mut rng = stream_rng(seed, STREAM_WORKLOAD);
    let gaps = (cfg.arrival_rate.is_finite()).then(|| Exp::new(cfg.arrival_rate).expect("validated positive rate"));
    let mut w = Workload {
        tasks: Vec::new(),
        valuations: Vec::new(),
        budgets: Vec::new(),
        demand_caps: Vec::new(),
        source: WorkloadSource::Synthetic,
        horizon: cfg.horizon,
    };
    let mut t = 0.0;
    while w.tasks.len() < cfg.num_tasks {
        t += gaps.as_ref().map_or(0.0, |g| g.sample(&mut rng));
        if cfg.horizon > 0.0 && t > cfg.horizon {
            break;
        }
        let len = uniform(&mut rng, cfg.task_len_min, cfg.task_len_max);
        let (task, v, b) = fill_request(cfg, &mut rng, w.tasks.len(), t, len);
        w.tasks.push(task);
        w.valuations.push(v);
        w.budgets.push(b);
        w.demand_caps.push(cfg.demand_max);
    }
    if w.horizon <= 0.0 {
        w.horizon = t;
    }
    w
}

/// One job of a trace file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub job_id: u64,
    pub submit_time: f64,
    pub runtime: f64,
    pub num_procs: u32,
}

const TRACE_HEADER: [&str; 4] = ["job_id", "submit_time", "runtime", "num_procs"];

/// How trace jobs become requests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceMapping {
    /// Task size in bits per second of recorded runtime.
    pub bits_per_runtime_second: f64,
    /// Seeds the draws for fields a trace does not record.
    pub seed: u64,
}

impl Default for TraceMapping {
    fn default() -> Self {
        TraceMapping { bits_per_runtime_second: 1e4, seed: 0 }
    }
}

fn row_error(path: &Path, line: u64, reason: impl Into<String>) -> HarnessError {
    HarnessError::TraceRow { path: path.to_path_buf(), line, reason: reason.into() }
}

/// Reads trace records, checking every row.
pub fn read_trace_records(path: &Path) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(row_error(path, 1, format!("expected header {}", TRACE_HEADER.join(","))));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 4 {
            return Err(row_error(path, line, format!("expected 4 fields, found {}", row.len())));
        }
        let field = |k: usize| row.get(k).unwrap_or("");
        let job_id = field(0)
            .parse::<u64>()
            .map_err(|e| row_error(path, line, format!("job_id: {e}")))?;
        let submit_time = field(1)
            .parse::<f64>()
            .map_err(|e| row_error(path, line, format!("submit_time: {e}")))?;
        let runtime = field(2)
            .parse::<f64>()
            .map_err(|e| row_error(path, line, format!("runtime: {e}")))?;
        let num_procs = field(3)
            .parse::<u32>()
            .map_err(|e| row_error(path, line, format!("num_procs: {e}")))?;
        if !submit_time.is_finite() || submit_time < 0.0 {
            return Err(row_error(path, line, "submit_time must be a non-negative number"));
        }
        if !(runtime > 0.0) || !runtime.is_finite() {
            return Err(row_error(path, line, format!("runtime must be positive, got {runtime}")));
        }
        if num_procs < 1 {
            return Err(row_error(path, line, "num_procs must be at least 1"));
        }
        records.push(TraceRecord { job_id, submit_time, runtime, num_procs });
    }
    Ok(records)
}

/// Turns the first `cfg.num_tasks` jobs of a trace into requests ordered by
/// submit time. Runtime scales to task size; processor count caps demand.
pub fn load_trace(path: &Path, cfg: &SystemConfig, mapping: TraceMapping) -> Result<Workload, HarnessError> {
    let mut records = read_trace_records(path)?;
    if records.is_empty() {
        return Err(HarnessError::EmptyTrace(path.to_path_buf()));
    }
    records.truncate(cfg.num_tasks);
    records.sort_by(|a, b| a.submit_time.total_cmp(&b.submit_time));
    let start = records[0].submit_time;
    let mut rng = stream_rng(mapping.seed, STREAM_WORKLOAD);
    let mut w = Workload {
        tasks: Vec::with_capacity(records.len()),
        valuations: Vec::with_capacity(records.len()),
        budgets: Vec::with_capacity(records.len()),
        demand_caps: Vec::with_capacity(records.len()),
        source: WorkloadSource::Trace,
        horizon: 0.0,
    };
    for r in &records {
        let arrival = r.submit_time - start;
        let len = r.runtime * mapping.bits_per_runtime_second;
        let (task, v, b) = fill_request(cfg, &mut rng, w.tasks.len(), arrival, len);
        w.tasks.push(task);
        w.valuations.push(v);
        w.budgets.push(b);
        w.demand_caps.push(r.num_procs.min(cfg.demand_max));
        w.horizon = arrival;
    }
    Ok(w)
}

/// Converts a whitespace-separated archive log (job, submit, wait, runtime,
/// processors, ...; `;` or `#` comment lines) into the four-column trace
/// CSV. Jobs with no recorded runtime or processors are dropped. Returns the
/// number of jobs written.
pub fn convert_archive_log<R: BufRead, W: Write>(input: R, output: W) -> Result<usize, HarnessError> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(TRACE_HEADER)?;
    let mut written = 0;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 5 {
            continue;
        }
        let (Ok(job), Ok(submit), Ok(runtime), Ok(procs)) = (
            cols[0].parse::<u64>(),
            cols[1].parse::<f64>(),
            cols[3].parse::<f64>(),
            cols[4].parse::<i64>(),
        ) else {
            continue;
        };
        if !(runtime > 0.0) || procs < 1 || submit < 0.0 {
            continue;
        }
        w.write_record([job.to_string(), submit.to_string(), runtime.to_string(), procs.to_string()])?;
        written += 1;
    }
    w.flush()?;
    Ok(written)
}

/// Opens `path` and converts it with [`convert_archive_log`].
pub fn convert_archive_file(input: &Path, output: &Path) -> Result<usize, HarnessError> {
    let reader = BufReader::new(File::open(input)?);
    let writer = File::create(output)?;
    convert_archive_log(reader, writer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capped_at_task_count() {
        let mut cfg = SystemConfig::default();
        cfg.arrival_rate = f64::INFINITY;
        cfg.num_tasks = 37;
        let w = generate_workload(&cfg, 1);
        assert_eq!(w.len(), 37);
    }

    #[test]
    fn arrivals_are_ordered_and_reproducible() {
        let cfg = SystemConfig::default();
        let a = generate_workload(&cfg, 5);
        assert_eq!(a, generate_workload(&cfg, 5));
        assert!(a.tasks.windows(2).all(|p| p[0].arrival_time <= p[1].arrival_time));
        assert!(a.tasks.iter().all(Task::is_valid));
    }

    #[test]
    fn horizon_stops_arrivals() {
        let mut cfg = SystemConfig::default();
        cfg.horizon = 10.0;
        let w = generate_workload(&cfg, 3);
        assert!(w.len() < 100);
        assert!(w.tasks.iter().all(|t| t.arrival_time <= 10.0));
    }

    #[test]
    fn archive_conversion_skips_comments_and_cancelled_jobs() {
        let log = "; header comment\n1 0 5 100 4 x\n2 10 0 -1 2\n3 20 1 50 1\n";
        let mut out = Vec::new();
        assert_eq!(convert_archive_log(log.as_bytes(), &mut out).unwrap(), 2);
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "job_id,submit_time,runtime,num_procs\n1,0,100,4\n3,20,50,1\n");
    }
}
