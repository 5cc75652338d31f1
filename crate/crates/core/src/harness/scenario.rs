use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;

use super::metrics::MetricsRow;
use super::sim::{self, Mechanism};
use super::workload::{generate_workload, load_trace, TraceMapping, Workload};
use crate::auction::{
    self, run_auction, run_auction_round, run_to_equilibrium, AuctionInstance, BuyerBid, PairTerms, SellerAsk,
};
use crate::error::HarnessError;
use crate::model::{Placement, SystemConfig, WinnerMode};
use crate::rng::{stream_rng, STREAM_WORKLOAD};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Draw requests from this trace instead of the synthetic generator.
    pub trace: Option<PathBuf>,
    /// Write measured wall-clock time into `runtime_ms`. Off by default so
    /// that repeated runs produce identical files.
    pub record_timings: bool,
}

type RunFn = fn(&SystemConfig, u64, &RunOptions) -> Result<Vec<MetricsRow>, HarnessError>;

pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    run: RunFn,
}

static SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "welfare_vs_tasks",
        about: "social welfare of the auction as the request count grows from 1000 to 10000",
        run: welfare_vs_tasks,
    },
    Scenario {
        name: "lowest_price_vs_tasks",
        about: "the lowest-price greedy baseline on the welfare_vs_tasks sweep",
        run: lowest_price_vs_tasks,
    },
    Scenario {
        name: "welfare_vs_ues",
        about: "social welfare of the auction as the UE count grows from 50 to 300",
        run: welfare_vs_ues,
    },
    Scenario {
        name: "lowest_price_vs_ues",
        about: "the lowest-price greedy baseline on the welfare_vs_ues sweep",
        run: lowest_price_vs_ues,
    },
    Scenario {
        name: "truthfulness",
        about: "payoff of a bidder with true value 150 declaring 30, 40, ..., 300",
        run: truthfulness,
    },
    Scenario {
        name: "rationality",
        about: "smallest buyer (param 0) and seller (param 1) payoff under truthful bidding",
        run: rationality,
    },
    Scenario {
        name: "success_rate",
        about: "share of served requests for 2000 to 8000 requests over a fixed 1000 s window",
        run: success_rate,
    },
    Scenario {
        name: "efficiency",
        about: "auction time for 25, 50, 100 and 200 bidders in greedy mode (needs --timings)",
        run: efficiency,
    },
    Scenario {
        name: "convergence",
        about: "per-sweep welfare and total cost of best-response dynamics with 5000 requests",
        run: convergence,
    },
];

pub fn scenarios() -> &'static [Scenario] {
    SCENARIOS
}

/// Runs scenario `name` once per seed.
pub fn run_scenario(name: &str, cfg: &SystemConfig, seeds: &[u64], opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    let Some(s) = SCENARIOS.iter().find(|s| s.name == name) else {
        let registered = SCENARIOS.iter().map(|s| s.name).collect::<Vec<_>>().join(", ");
        return Err(HarnessError::UnknownScenario { name: name.to_string(), registered });
    };
    let mut rows = Vec::new();
    for &seed in seeds {
        rows.extend((s.run)(cfg, seed, opts)?);
    }
    Ok(rows)
}

fn workload(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Workload, HarnessError> {
    match &opts.trace {
        Some(path) => load_trace(path, cfg, TraceMapping { seed, ..TraceMapping::default() }),
        None => Ok(generate_workload(cfg, seed)),
    }
}

fn millis(d: Duration, opts: &RunOptions) -> f64 {
    if opts.record_timings { d.as_secs_f64() * 1e3 } else { 0.0 }
}

fn pipeline_row(
    name: &str,
    cfg: &SystemConfig,
    seed: u64,
    opts: &RunOptions,
    mechanism: Mechanism,
    param: f64,
) -> Result<MetricsRow, HarnessError> {
    let scene = sim::build_scene(cfg, seed)?;
    let w = workload(cfg, seed, opts)?;
    let slots = sim::build_slots(&scene, &w, cfg);
    let (outcomes, core) = sim::run_slots(&slots, cfg, mechanism)?;
    let s = sim::summarize(&slots, &outcomes, core);
    Ok(MetricsRow {
        scenario: name.to_string(),
        seed,
        num_tasks: w.len(),
        num_ues: scene.topology.num_ue(),
        social_welfare: s.social_welfare,
        success_rate: sim::success_rate(&outcomes, &w),
        mean_latency: s.mean_latency,
        runtime_ms: millis(s.core_time, opts),
        iterations_to_converge: 0,
        oversupply: s.oversupply,
        unmet_demand: s.unmet_demand,
        param,
        value: None,
    })
}

const TASK_COUNTS: [usize; 10] = [1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000];
const UE_COUNTS: [usize; 6] = [50, 100, 150, 200, 250, 300];

fn task_sweep(name: &str, cfg: &SystemConfig, seed: u64, opts: &RunOptions, m: Mechanism) -> Result<Vec<MetricsRow>, HarnessError> {
    TASK_COUNTS
        .iter()
        .map(|&n| {
            let c = SystemConfig { num_tasks: n, horizon: 0.0, ..cfg.clone() };
            pipeline_row(name, &c, seed, opts, m, n as f64)
        })
        .collect()
}

fn ue_sweep(name: &str, cfg: &SystemConfig, seed: u64, opts: &RunOptions, m: Mechanism) -> Result<Vec<MetricsRow>, HarnessError> {
    UE_COUNTS
        .iter()
        .map(|&k| {
            let c = SystemConfig { num_ue: k, placement: Placement::Fixed, ..cfg.clone() };
            pipeline_row(name, &c, seed, opts, m, k as f64)
        })
        .collect()
}

fn welfare_vs_tasks(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    task_sweep("welfare_vs_tasks", cfg, seed, opts, Mechanism::Auction)
}

fn lowest_price_vs_tasks(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    task_sweep("lowest_price_vs_tasks", cfg, seed, opts, Mechanism::LowestPrice)
}

fn welfare_vs_ues(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    ue_sweep("welfare_vs_ues", cfg, seed, opts, Mechanism::Auction)
}

fn lowest_price_vs_ues(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    ue_sweep("lowest_price_vs_ues", cfg, seed, opts, Mechanism::LowestPrice)
}

pub const PROBE_TRUE_VALUE: f64 = 150.0;

/// Declared values 30, 40, ..., 300.
pub fn probe_bids() -> Vec<f64> {
    (3..=30).map(|k| f64::from(k) * 10.0).collect()
}

/// Busiest slot of the run and a bidder in it that can reach a server.
fn probe_slot(slots: &[sim::Slot]) -> Option<(&sim::Slot, usize)> {
    let mut order: Vec<&sim::Slot> = slots.iter().collect();
    order.sort_by_key(|s| std::cmp::Reverse(s.instance.bids.iter().filter(|b| b.participation).count()));
    order.into_iter().find_map(|s| {
        let inst = &s.instance;
        (0..inst.bids.len())
            .find(|&i| (0..inst.asks.len()).any(|j| inst.eligible(i, j)))
            .map(|i| (s, i))
    })
}

fn truthfulness(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    let scene = sim::build_scene(cfg, seed)?;
    let w = workload(cfg, seed, opts)?;
    let slots = sim::build_slots(&scene, &w, cfg);
    let Some((slot, probe)) = probe_slot(&slots) else { return Ok(Vec::new()) };
    let inst = &slot.instance;
    let mut rows = Vec::new();
    for bid in probe_bids() {
        let start = Instant::now();
        let declared = inst_with(inst, probe, bid);
        let out = run_auction(&declared, cfg)?;
        let elapsed = start.elapsed();
        let served = out.assignment[probe].and_then(|j| inst.links[probe][j]);
        let payoff = auction::buyer_payoff(&inst.bids[probe], PROBE_TRUE_VALUE, served, out.payments[probe], cfg);
        rows.push(MetricsRow {
            scenario: "truthfulness".to_string(),
            seed,
            num_tasks: inst.bids.len(),
            num_ues: scene.topology.num_ue(),
            social_welfare: out.social_welfare,
            success_rate: out.winners().count() as f64 / inst.bids.len() as f64,
            mean_latency: 0.0,
            runtime_ms: millis(elapsed, opts),
            iterations_to_converge: 0,
            oversupply: 0,
            unmet_demand: 0,
            param: bid,
            value: Some(payoff),
        });
    }
    Ok(rows)
}

fn inst_with(inst: &AuctionInstance, i: usize, valuation: f64) -> AuctionInstance {
    let mut c = inst.clone();
    c.bids[i].valuation = valuation;
    c
}

fn rationality(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    let scene = sim::build_scene(cfg, seed)?;
    let w = workload(cfg, seed, opts)?;
    let slots = sim::build_slots(&scene, &w, cfg);
    let (outcomes, core) = sim::run_slots(&slots, cfg, Mechanism::Auction)?;
    let s = sim::summarize(&slots, &outcomes, core);
    let mut min_buyer = f64::INFINITY;
    let mut min_seller = f64::INFINITY;
    for (slot, out) in slots.iter().zip(&outcomes) {
        let (b, v) = auction::participant_payoffs(&slot.instance, out, cfg);
        min_buyer = b.into_iter().fold(min_buyer, f64::min);
        min_seller = v.into_iter().fold(min_seller, f64::min);
    }
    let row = |param: f64, value: f64| MetricsRow {
        scenario: "rationality".to_string(),
        seed,
        num_tasks: w.len(),
        num_ues: scene.topology.num_ue(),
        social_welfare: s.social_welfare,
        success_rate: sim::success_rate(&outcomes, &w),
        mean_latency: s.mean_latency,
        runtime_ms: millis(core, opts),
        iterations_to_converge: 0,
        oversupply: s.oversupply,
        unmet_demand: s.unmet_demand,
        param,
        value: value.is_finite().then_some(value),
    };
    Ok(vec![row(0.0, min_buyer), row(1.0, min_seller)])
}

pub const SUCCESS_WINDOW: f64 = 1000.0;
pub const SUCCESS_COUNTS: [usize; 7] = [2000, 3000, 4000, 5000, 6000, 7000, 8000];

fn success_rate(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    SUCCESS_COUNTS
        .iter()
        .map(|&n| {
            let c = SystemConfig {
                num_tasks: n,
                horizon: 0.0,
                arrival_rate: n as f64 / SUCCESS_WINDOW,
                winner_mode: WinnerMode::Greedy,
                ..cfg.clone()
            };
            pipeline_row("success_rate", &c, seed, opts, Mechanism::Auction, n as f64)
        })
        .collect()
}

pub const EFFICIENCY_BIDDERS: [usize; 4] = [25, 50, 100, 200];

/// One auction with `k` bidders who can all reach every server, and enough
/// cores for all of them to win.
pub fn efficiency_instance(cfg: &SystemConfig, k: usize, seed: u64) -> AuctionInstance {
    let mut rng = stream_rng(seed, STREAM_WORKLOAD);
    let m = cfg.num_es.max(1);
    let per_server = (k as u32 * cfg.demand_max).div_ceil(m as u32);
    let bids = (0..k)
        .map(|i| BuyerBid {
            ue_id: i,
            demand: rng.random_range(1..=cfg.demand_max),
            valuation: rng.random_range(cfg.valuation_min..=cfg.valuation_max),
            deadline: rng.random_range(cfg.deadline_min..=cfg.deadline_max),
            budget: f64::INFINITY,
            participation: true,
            offload_prob: 1.0,
            local_latency: cfg.local_time_max,
        })
        .collect();
    let asks = (0..m)
        .map(|j| SellerAsk {
            es_id: j,
            resource: per_server,
            reserve_price: rng.random_range(cfg.reserve_price_min..=cfg.reserve_price_max),
            available: per_server,
            unit_cost: cfg.unit_cost_min,
            participation: true,
        })
        .collect();
    AuctionInstance::fully_linked(bids, asks, PairTerms { offload_latency: 0.0, split: 1.0 })
}

/// Mean wall-clock time of one greedy auction on `instance`, repeated until
/// at least `budget` has elapsed.
pub fn time_auction(instance: &AuctionInstance, cfg: &SystemConfig, budget: Duration) -> Result<Duration, HarnessError> {
    let c = SystemConfig { winner_mode: WinnerMode::Greedy, ..cfg.clone() };
    let start = Instant::now();
    let mut runs = 0u32;
    while runs == 0 || start.elapsed() < budget {
        std::hint::black_box(run_auction(std::hint::black_box(instance), &c)?);
        runs += 1;
    }
    Ok(start.elapsed() / runs)
}

fn efficiency(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    let c = SystemConfig { winner_mode: WinnerMode::Greedy, ..cfg.clone() };
    EFFICIENCY_BIDDERS
        .iter()
        .map(|&k| {
            let inst = efficiency_instance(&c, k, seed);
            let per_run = if opts.record_timings {
                time_auction(&inst, &c, Duration::from_millis(20))?
            } else {
                Duration::ZERO
            };
            let out = run_auction(&inst, &c)?;
            Ok(MetricsRow {
                scenario: "efficiency".to_string(),
                seed,
                num_tasks: k,
                num_ues: k,
                social_welfare: out.social_welfare,
                success_rate: out.winners().count() as f64 / k as f64,
                mean_latency: 0.0,
                runtime_ms: millis(per_run, opts),
                iterations_to_converge: 0,
                oversupply: 0,
                unmet_demand: 0,
                param: k as f64,
                value: None,
            })
        })
        .collect()
}

pub const CONVERGENCE_TASKS: usize = 5000;
pub const MAX_SWEEPS: usize = 200;

/// Table-sized market: fixed UE and server counts and 5000 requests.
pub fn convergence_config(cfg: &SystemConfig) -> SystemConfig {
    SystemConfig { num_tasks: CONVERGENCE_TASKS, horizon: 0.0, placement: Placement::Fixed, ..cfg.clone() }
}

fn convergence(cfg: &SystemConfig, seed: u64, opts: &RunOptions) -> Result<Vec<MetricsRow>, HarnessError> {
    let c = convergence_config(cfg);
    let scene = sim::build_scene(&c, seed)?;
    let w = workload(&c, seed, opts)?;
    let slots = sim::build_slots(&scene, &w, &c);
    let mut state = sim::market_state(&slots, &w, &scene, &c, seed);
    let initial = run_auction_round(&state, &c)?;
    let epsilon = 1e-3 * initial.total_cost.max(f64::MIN_POSITIVE);
    let start = Instant::now();
    let report = run_to_equilibrium(&mut state, &c, epsilon, MAX_SWEEPS)?;
    let elapsed = start.elapsed();
    let served: usize = report.final_round.outcomes.iter().map(|o| o.winners().count()).sum();
    let iterations = report.converged_at.unwrap_or(report.iterations);
    Ok((0..report.cost_trace.len())
        .map(|k| MetricsRow {
            scenario: "convergence".to_string(),
            seed,
            num_tasks: w.len(),
            num_ues: scene.topology.num_ue(),
            social_welfare: report.welfare_trace[k],
            success_rate: if w.is_empty() { 1.0 } else { served as f64 / w.len() as f64 },
            mean_latency: 0.0,
            runtime_ms: millis(elapsed, opts),
            iterations_to_converge: iterations,
            oversupply: 0,
            unmet_demand: 0,
            param: k as f64,
            value: Some(report.cost_trace[k]),
        })
        .collect())
}
