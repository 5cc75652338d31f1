//! Demand-supply cost model and the cost-minimizing matching of tasks to
//! edge servers under capacity and deadline constraints.

use std::io::Write;

use crate::model::{EdgeServer, ExecutionMode, SystemConfig, Task, UserEquipment, WinnerMode};
use crate::radio::{self, Topology};

/// Cores needed to finish `task` on `es` by its deadline, capped at
/// `demand_max` and never below one.
pub fn demand_units(task: &Task, es: &EdgeServer, cfg: &SystemConfig) -> u32 {
    let need = (task.cycles() / (task.deadline * es.speed_per_unit)).ceil();
    (need.max(1.0).min(f64::from(cfg.demand_max))) as u32
}

/// Weighted cost of a task split at `split` given its two latency terms.
pub fn weighted_cost(split: f64, local_latency: f64, offload_latency: f64, demand: u32, price: f64, cfg: &SystemConfig) -> f64 {
    let w1 = cfg.latency_weight;
    let w2 = cfg.price_weight;
    (1.0 - split) * (w1 * local_latency) + split * (w1 * offload_latency + w2 * f64::from(demand) * price)
}

/// Total cost of running `task` with `split` offloaded to `es` over a link of
/// `rate` bits/s, using `demand_units` cores.
pub fn total_cost(
    task: &Task,
    ue: &UserEquipment,
    es: &EdgeServer,
    split: f64,
    demand_units: u32,
    rate: f64,
    cfg: &SystemConfig,
) -> f64 {
    let local = (1.0 - split) * radio::full_local_time(task, ue);
    let offload = if split == 0.0 {
        0.0
    } else {
        let tx = radio::transmission_time(split, task.len, rate).unwrap_or(f64::INFINITY);
        let proc = radio::remote_processing_time(split, task, demand_units, es).unwrap_or(f64::INFINITY);
        tx + proc
    };
    weighted_cost(split, local, offload, demand_units, es.reserve_price, cfg)
}

/// Closed interval of feasible offload fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRange {
    pub lo: f64,
    pub hi: f64,
}

impl SplitRange {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Only the fully local split is feasible.
    pub fn is_local_only(&self) -> bool {
        self.hi <= 0.0
    }
}

/// Seconds per unit of offloaded fraction: `L_offload(x) = slope * x`.
fn offload_slope(task: &Task, es: &EdgeServer, units: u32, rate: f64) -> f64 {
    let tx = if rate > 0.0 { 2.0 * task.len / rate } else { f64::INFINITY };
    let proc = if units > 0 {
        task.cycles() / (f64::from(units) * es.speed_per_unit)
    } else {
        f64::INFINITY
    };
    tx + proc
}

/// Maximal interval of `x` in `[0, 1]` with total latency within the
/// deadline. `None` when even fully local execution misses it.
pub fn feasible_split_range(
    task: &Task,
    ue: &UserEquipment,
    es: &EdgeServer,
    units: u32,
    rate: f64,
    mode: ExecutionMode,
) -> Option<SplitRange> {
    let deadline = task.deadline;
    let a = offload_slope(task, es, units, rate);
    let t = radio::full_local_time(task, ue);
    if deadline.is_infinite() {
        return Some(SplitRange { lo: 0.0, hi: 1.0 });
    }
    let (lo, hi) = match mode {
        // a x <= D and t (1 - x) <= D
        ExecutionMode::Concurrent => {
            let hi = if a.is_finite() { deadline / a } else { 0.0 };
            let lo = if t > 0.0 { 1.0 - deadline / t } else { 0.0 };
            (lo.max(0.0), hi.min(1.0))
        }
        // t + (a - t) x <= D
        ExecutionMode::Sequential => {
            if a.is_infinite() {
                if t <= deadline { (0.0, 0.0) } else { return None; }
            } else {
                let slack = deadline - t;
                let slope = a - t;
                if slope == 0.0 {
                    if slack >= 0.0 { (0.0, 1.0) } else { return None; }
                } else if slope > 0.0 {
                    (0.0, (slack / slope).min(1.0))
                } else {
                    ((slack / slope).max(0.0), 1.0)
                }
            }
        }
    };
    (lo <= hi).then_some(SplitRange { lo, hi })
}

/// One matching instance: tasks, their owners, the servers and the link rate
/// from each task's owner to each server (0 when unreachable).
#[derive(Debug, Clone)]
pub struct MatchingProblem {
    pub tasks: Vec<Task>,
    pub ues: Vec<UserEquipment>,
    pub servers: Vec<EdgeServer>,
    /// `[task][server]` in bits/s.
    pub rates: Vec<Vec<f64>>,
}

impl MatchingProblem {
    /// Rates come from the topology; a task's owner reaches a server only when
    /// inside its coverage disk. Every UE owning a task is taken as transmitting.
    pub fn from_topology(
        tasks: Vec<Task>,
        ues: Vec<UserEquipment>,
        servers: Vec<EdgeServer>,
        topology: &Topology,
        cfg: &SystemConfig,
    ) -> Self {
        let mut transmitting = vec![false; topology.num_ue()];
        for t in &tasks {
            transmitting[t.owner_ue] = true;
        }
        let rates = tasks
            .iter()
            .map(|t| {
                (0..servers.len())
                    .map(|j| {
                        if topology.covers(j, t.owner_ue) {
                            radio::transmission_rate(t.owner_ue, j, topology, cfg, &transmitting)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        MatchingProblem { tasks, ues, servers, rates }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchEntry {
    pub task_id: usize,
    /// Server index, `None` when processed locally.
    pub es: Option<usize>,
    pub split: f64,
    pub demand_units: u32,
    pub cost: f64,
    pub latency: f64,
    /// False when the task ends up running locally past its deadline.
    pub deadline_met: bool,
    /// Cores the task would take with unlimited supply (0 if it prefers local).
    pub wanted_units: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub entries: Vec<MatchEntry>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct MatchOption {
    es: Option<usize>,
    split: f64,
    units: u32,
    cost: f64,
    latency: f64,
}

/// Offload fractions `step, 2 step, ..., 1`.
pub fn split_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round().max(1.0) as usize;
    (1..=n).map(|k| (k as f64 / n as f64).min(1.0)).collect()
}

fn latency_at(task: &Task, ue: &UserEquipment, es: &EdgeServer, units: u32, rate: f64, x: f64, mode: ExecutionMode) -> f64 {
    let offload = x * offload_slope(task, es, units, rate);
    let local = (1.0 - x) * radio::full_local_time(task, ue);
    radio::combine(offload, local, mode)
}

fn task_options(problem: &MatchingProblem, n: usize, cfg: &SystemConfig, grid: &[f64]) -> (Vec<MatchOption>, MatchOption) {
    let task = &problem.tasks[n];
    let ue = &problem.ues[task.owner_ue];
    let local_time = radio::full_local_time(task, ue);
    let local = MatchOption {
        es: None,
        split: 0.0,
        units: 0,
        cost: cfg.latency_weight * local_time,
        latency: local_time,
    };
    let mut options = Vec::new();
    let local_ok = local_time <= task.deadline;
    if local_ok {
        options.push(local);
    }
    for (j, es) in problem.servers.iter().enumerate() {
        let rate = problem.rates[n][j];
        if !es.participation || rate <= 0.0 {
            continue;
        }
        let units = demand_units(task, es, cfg);
        if units > es.available {
            continue;
        }
        let Some(range) = feasible_split_range(task, ue, es, units, rate, cfg.execution_mode) else {
            continue;
        };
        for &x in grid {
            if !range.contains(x) {
                continue;
            }
            options.push(MatchOption {
                es: Some(j),
                split: x,
                units,
                cost: total_cost(task, ue, es, x, units, rate, cfg),
                latency: latency_at(task, ue, es, units, rate, x, cfg.execution_mode),
            });
        }
    }
    options.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    (options, local)
}

/// Depth-first search ordered by (deadline misses, cost). A task may always
/// fall back to running locally past its deadline, counted as a miss.
struct Search<'a> {
    options: &'a [Vec<MatchOption>],
    late_cost: &'a [f64],
    order: &'a [usize],
    suffix_bound: Vec<f64>,
    remaining: Vec<u32>,
    current: Vec<Option<usize>>,
    best: Option<(usize, f64, Vec<Option<usize>>)>,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize, misses: usize, cost: f64) {
        if let Some((m, c, _)) = &self.best {
            if misses > *m || (misses == *m && cost + self.suffix_bound[depth] >= *c) {
                return;
            }
        }
        if depth == self.order.len() {
            self.best = Some((misses, cost, self.current.clone()));
            return;
        }
        let n = self.order[depth];
        for k in 0..self.options[n].len() {
            let opt = self.options[n][k];
            if let Some(j) = opt.es {
                if self.remaining[j] < opt.units {
                    continue;
                }
                self.remaining[j] -= opt.units;
            }
            self.current[n] = Some(k);
            self.dfs(depth + 1, misses, cost + opt.cost);
            if let Some(j) = opt.es {
                self.remaining[j] += opt.units;
            }
        }
        self.current[n] = None;
        self.dfs(depth + 1, misses + 1, cost + self.late_cost[n]);
    }
}

/// Assigns each task to a server and split (or local execution) minimizing
/// the summed weighted cost, subject to server capacity and deadlines. Tasks
/// left without a deadline-feasible option run locally and are flagged; exact
/// mode first minimizes how many tasks that happens to.
pub fn match_demand_supply(problem: &MatchingProblem, cfg: &SystemConfig, mode: WinnerMode) -> Matching {
    let grid = split_grid(cfg.split_step);
    let mut options = Vec::with_capacity(problem.tasks.len());
    let mut fallback = Vec::with_capacity(problem.tasks.len());
    for n in 0..problem.tasks.len() {
        let (opts, local) = task_options(problem, n, cfg, &grid);
        options.push(opts);
        fallback.push(local);
    }
    let capacity: Vec<u32> = problem
        .servers
        .iter()
        .map(|s| if s.participation { s.available } else { 0 })
        .collect();

    let chosen: Vec<Option<usize>> = match mode {
        WinnerMode::Exact => {
            let late: Vec<f64> = fallback.iter().map(|l| l.cost).collect();
            exact_match(&options, &late, &capacity)
        }
        WinnerMode::Greedy => greedy_match(&options, &capacity),
    };

    let entries: Vec<MatchEntry> = (0..problem.tasks.len())
        .map(|n| {
            let opt = chosen[n].map(|k| options[n][k]).unwrap_or(fallback[n]);
            let wanted_units = options[n].first().map(|o| o.units).unwrap_or(0);
            MatchEntry {
                task_id: problem.tasks[n].id,
                es: opt.es,
                split: opt.split,
                demand_units: opt.units,
                cost: opt.cost,
                latency: opt.latency,
                deadline_met: chosen[n].is_some(),
                wanted_units,
            }
        })
        .collect();
    let objective = entries.iter().map(|e| e.cost).sum();
    Matching { entries, objective }
}

fn exact_match(options: &[Vec<MatchOption>], late_cost: &[f64], capacity: &[u32]) -> Vec<Option<usize>> {
    let active: Vec<usize> = (0..options.len()).filter(|&n| !options[n].is_empty()).collect();
    let mut suffix_bound = vec![0.0; active.len() + 1];
    for d in (0..active.len()).rev() {
        suffix_bound[d] = suffix_bound[d + 1] + options[active[d]][0].cost;
    }
    let mut search = Search {
        options,
        late_cost,
        order: &active,
        suffix_bound,
        remaining: capacity.to_vec(),
        current: vec![None; options.len()],
        best: None,
    };
    search.dfs(0, 0, 0.0);
    search.best.map(|(_, _, picks)| picks).unwrap_or_else(|| vec![None; options.len()])
}

fn greedy_match(options: &[Vec<MatchOption>], capacity: &[u32]) -> Vec<Option<usize>> {
    let mut remaining = capacity.to_vec();
    let mut chosen: Vec<Option<usize>> = vec![None; options.len()];
    // most to gain from the cheapest option first
    let mut order: Vec<usize> = (0..options.len()).filter(|&n| !options[n].is_empty()).collect();
    let regret = |n: usize| {
        let worst = options[n].last().map(|o| o.cost).unwrap_or(0.0);
        worst - options[n][0].cost
    };
    order.sort_by(|&a, &b| regret(b).total_cmp(&regret(a)).then(a.cmp(&b)));
    for &n in &order {
        if let Some(k) = options[n]
            .iter()
            .position(|o| o.es.map_or(true, |j| remaining[j] >= o.units))
        {
            if let Some(j) = options[n][k].es {
                remaining[j] -= options[n][k].units;
            }
            chosen[n] = Some(k);
        }
    }
    // single-task moves until none improves
    loop {
        let mut improved = false;
        for &n in &order {
            let Some(cur) = chosen[n] else { continue };
            let cur_opt = options[n][cur];
            for (k, o) in options[n].iter().enumerate() {
                if o.cost >= cur_opt.cost {
                    break;
                }
                let fits = match o.es {
                    None => true,
                    Some(j) => {
                        let freed = if cur_opt.es == Some(j) { cur_opt.units } else { 0 };
                        remaining[j] + freed >= o.units
                    }
                };
                if fits {
                    if let Some(j) = cur_opt.es {
                        remaining[j] += cur_opt.units;
                    }
                    if let Some(j) = o.es {
                        remaining[j] -= o.units;
                    }
                    chosen[n] = Some(k);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    chosen
}

/// Returns a description of every violated constraint (empty when valid).
pub fn check_matching(matching: &Matching, problem: &MatchingProblem) -> Vec<String> {
    let mut violations = Vec::new();
    let mut used = vec![0u32; problem.servers.len()];
    for (n, e) in matching.entries.iter().enumerate() {
        let local_fraction = 1.0 - e.split;
        if !(0.0..=1.0).contains(&e.split) || (local_fraction + e.split - 1.0).abs() > 1e-12 {
            violations.push(format!("task {}: split {} not conserved", e.task_id, e.split));
        }
        if !e.deadline_met && e.es.is_some() {
            violations.push(format!("task {}: flagged late but offloaded", e.task_id));
        }
        if e.es.is_none() && e.split != 0.0 {
            violations.push(format!("task {}: local task with split {}", e.task_id, e.split));
        }
        if let Some(j) = e.es {
            used[j] += e.demand_units;
        }
        if e.deadline_met && e.latency > problem.tasks[n].deadline + 1e-9 {
            violations.push(format!(
                "task {}: latency {} exceeds deadline {}",
                e.task_id, e.latency, problem.tasks[n].deadline
            ));
        }
    }
    for (j, s) in problem.servers.iter().enumerate() {
        let cap = if s.participation { s.available } else { 0 };
        if used[j] > cap {
            violations.push(format!("server {j}: {} units allocated of {cap}", used[j]));
        }
    }
    violations
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BalanceReport {
    pub oversupply: u64,
    pub unmet_demand: u64,
}

/// Unsold supply and the demand of tasks that wanted to offload but ran
/// locally for lack of capacity.
pub fn market_balance_report(matching: &Matching, servers: &[EdgeServer]) -> BalanceReport {
    let mut used = vec![0u64; servers.len()];
    let mut unmet = 0u64;
    for e in &matching.entries {
        match e.es {
            Some(j) => used[j] += u64::from(e.demand_units),
            None => unmet += u64::from(e.wanted_units),
        }
    }
    let oversupply = servers
        .iter()
        .zip(&used)
        .filter(|(s, _)| s.participation)
        .map(|(s, &u)| u64::from(s.available).saturating_sub(u))
        .sum();
    BalanceReport { oversupply, unmet_demand: unmet }
}

/// Writes `task_id,es_id_or_local,split,demand_units,cost_component`.
pub fn write_matching_csv<W: Write>(matching: &Matching, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["task_id", "es_id_or_local", "split", "demand_units", "cost_component"])?;
    for e in &matching.entries {
        w.write_record([
            e.task_id.to_string(),
            e.es.map_or_else(|| "local".to_string(), |j| j.to_string()),
            e.split.to_string(),
            e.demand_units.to_string(),
            e.cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    fn task(deadline: f64, local_time: f64) -> Task {
        Task {
            id: 0,
            arrival_time: 0.0,
            len: 1e6,
            complexity: 100.0,
            deadline,
            split: 0.0,
            owner_ue: 0,
            local_time: Some(local_time),
        }
    }

    fn ue() -> UserEquipment {
        UserEquipment {
            id: 0,
            position: [0.0; 2],
            budget: 100.0,
            local_speed: 1e8,
            offload_prob: 1.0,
            tx_power: 1.0,
            participation: true,
        }
    }

    fn es(available: u32, price: f64) -> EdgeServer {
        EdgeServer {
            id: 0,
            position: [0.0; 2],
            capacity: 32,
            available,
            speed_per_unit: 1e8,
            reserve_price: price,
            unit_cost: 0.0,
            participation: true,
            coverage_radius: 500.0,
        }
    }

    #[test]
    fn cost_extremes() {
        let c = cfg();
        assert_eq!(weighted_cost(0.0, 3.0, 9.0, 2, 1.0, &c), 0.5 * 3.0);
        assert_eq!(weighted_cost(1.0, 3.0, 2.0, 1, 0.5, &c), 1.25);
        let mut c0 = cfg();
        c0.latency_weight = 1.0;
        c0.price_weight = 0.0;
        assert_eq!(
            weighted_cost(0.7, 3.0, 2.0, 4, 0.1, &c0),
            weighted_cost(0.7, 3.0, 2.0, 4, 100.0, &c0)
        );
    }

    #[test]
    fn unconstrained_deadline_gives_unit_interval() {
        let r = feasible_split_range(&task(f64::INFINITY, 5.0), &ue(), &es(4, 0.5), 1, 1e6, ExecutionMode::Concurrent);
        assert_eq!(r, Some(SplitRange { lo: 0.0, hi: 1.0 }));
    }

    #[test]
    fn linear_offload_deadline_bound() {
        // 2 len / rate = 2 s and cycles / speed = 2 s: L_offload(x) = 4x
        let t = Task { complexity: 200.0, ..task(2.0, 0.0) };
        let r = feasible_split_range(&t, &ue(), &es(4, 0.5), 1, 1e6, ExecutionMode::Concurrent).unwrap();
        assert_eq!(r.lo, 0.0);
        assert!((r.hi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn both_extremes_feasible() {
        let r = feasible_split_range(&task(10.0, 3.0), &ue(), &es(4, 0.5), 1, 1e6, ExecutionMode::Concurrent).unwrap();
        assert_eq!(r, SplitRange { lo: 0.0, hi: 1.0 });
    }

    fn problem(tasks: Vec<Task>, servers: Vec<EdgeServer>, rate: f64) -> MatchingProblem {
        let rates = vec![vec![rate; servers.len()]; tasks.len()];
        MatchingProblem { tasks, ues: vec![ue()], servers, rates }
    }

    #[test]
    fn dominant_offload_takes_everything() {
        // local is slow, the link is fast and the price is zero
        let p = problem(vec![task(100.0, 50.0)], vec![es(8, 0.0)], 1e9);
        let m = match_demand_supply(&p, &cfg(), WinnerMode::Exact);
        assert_eq!(m.entries[0].es, Some(0));
        assert_eq!(m.entries[0].split, 1.0);
        assert!(check_matching(&m, &p).is_empty());
    }

    #[test]
    fn no_supply_forces_local() {
        let p = problem(vec![task(100.0, 5.0), task(100.0, 7.0)], vec![es(0, 0.0)], 1e9);
        let c = cfg();
        let m = match_demand_supply(&p, &c, WinnerMode::Exact);
        assert!(m.entries.iter().all(|e| e.es.is_none()));
        assert!((m.objective - c.latency_weight * 12.0).abs() < 1e-12);
    }

    #[test]
    fn short_supply_flags_the_late_task() {
        // local runs take 50 s against a 2 s deadline; one core serves one task
        let p = problem(vec![task(2.0, 50.0), task(2.0, 50.0)], vec![es(1, 0.0)], 1e9);
        for mode in [WinnerMode::Exact, WinnerMode::Greedy] {
            let m = match_demand_supply(&p, &cfg(), mode);
            let met: Vec<bool> = m.entries.iter().map(|e| e.deadline_met).collect();
            assert_eq!(met.iter().filter(|&&b| b).count(), 1, "{mode:?}");
            assert!(check_matching(&m, &p).is_empty());
            assert_eq!(market_balance_report(&m, &p.servers), BalanceReport { oversupply: 0, unmet_demand: 1 });
        }
    }

    #[test]
    fn balance_arithmetic() {
        let servers = vec![es(10, 0.0)];
        let m = Matching {
            entries: vec![MatchEntry {
                task_id: 0,
                es: Some(0),
                split: 1.0,
                demand_units: 7,
                cost: 0.0,
                latency: 0.0,
                deadline_met: true,
                wanted_units: 7,
            }],
            objective: 0.0,
        };
        assert_eq!(market_balance_report(&m, &servers), BalanceReport { oversupply: 3, unmet_demand: 0 });
        let full = Matching {
            entries: vec![MatchEntry { demand_units: 10, wanted_units: 10, ..m.entries[0] }],
            objective: 0.0,
        };
        assert_eq!(market_balance_report(&full, &servers), BalanceReport { oversupply: 0, unmet_demand: 0 });
    }

    #[test]
    fn grid_ends_at_one() {
        let g = split_grid(0.25);
        assert_eq!(g, vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(*split_grid(0.05).last().unwrap(), 1.0);
    }

    #[test]
    fn demand_is_capped() {
        let c = cfg();
        let mut t = task(0.001, 1.0);
        t.len = 8e6;
        assert_eq!(demand_units(&t, &es(4, 0.0), &c), c.demand_max);
        let easy = task(1e6, 1.0);
        assert_eq!(demand_units(&easy, &es(4, 0.0), &c), 1);
    }
}
