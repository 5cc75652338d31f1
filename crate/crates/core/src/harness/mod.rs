//! Workloads, the slot-by-slot simulation pipeline, experiment scenarios and
//! their CSV output.

mod metrics;
mod scenario;
mod sim;
mod suites;
mod workload;

pub use metrics::{emit_csv, write_rows, MetricsRow, COLUMNS};
pub use scenario::{
    convergence_config, efficiency_instance, probe_bids, run_scenario, scenarios, time_auction, RunOptions, Scenario,
    CONVERGENCE_TASKS, EFFICIENCY_BIDDERS, MAX_SWEEPS, PROBE_TRUE_VALUE, SUCCESS_COUNTS, SUCCESS_WINDOW,
};
pub use sim::{
    build_scene, build_slots, lowest_price_outcome, market_state, run_slots, success_rate, summarize, Mechanism,
    RunSummary, Scene, Slot,
};
pub use suites::{
    brute_force_welfare, envy_suite, incentive_suite, oracle_suite, random_instance, run_suite, truthfulness_suite,
    value_grid, InstanceShape, SuiteReport, INCENTIVE_FACTORS, SUITES,
};
pub use workload::{
    convert_archive_file, convert_archive_log, generate_workload, load_trace, read_trace_records, TraceMapping,
    TraceRecord, Workload, WorkloadSource,
};
