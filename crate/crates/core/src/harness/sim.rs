use std::time::{Duration, Instant};

use rand::Rng;

use super::workload::Workload;
use crate::auction::{
    linspace, run_auction, screen_participants, AuctionInstance, AuctionOutcome, BuyerBid, MarketState, PairTerms,
    Player, SellerAsk,
};
use crate::error::HarnessError;
use crate::market;
use crate::model::{EdgeServer, SystemConfig, Task, UserEquipment};
use crate::radio::{self, Topology};
use crate::rng::{stream_rng, STREAM_SERVERS, STREAM_STRATEGY, STREAM_USERS};

/// Placed network with the per-entity attributes drawn for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub topology: Topology,
    pub ues: Vec<UserEquipment>,
    pub servers: Vec<EdgeServer>,
}

pub fn build_scene(cfg: &SystemConfig, seed: u64) -> Result<Scene, HarnessError> {
    let topology = radio::place_entities(cfg, seed)?;
    let mut rng = stream_rng(seed, STREAM_SERVERS);
    let servers = topology
        .es_positions
        .iter()
        .enumerate()
        .map(|(j, &position)| EdgeServer {
            id: j,
            position,
            capacity: cfg.es_capacity,
            available: cfg.es_capacity,
            speed_per_unit: cfg.speed_per_unit,
            reserve_price: rng.random_range(cfg.reserve_price_min..=cfg.reserve_price_max),
            unit_cost: rng.random_range(cfg.unit_cost_min..=cfg.unit_cost_max),
            participation: true,
            coverage_radius: cfg.coverage_radius,
        })
        .collect();
    let mut rng = stream_rng(seed, STREAM_USERS);
    let ues = topology
        .ue_positions
        .iter()
        .enumerate()
        .map(|(k, &position)| UserEquipment {
            id: k,
            position,
            budget: cfg.budget_max,
            local_speed: cfg.local_speed,
            offload_prob: cfg.offload_prob,
            tx_power: cfg.tx_power(),
            participation: rng.random::<f64>() < cfg.offload_prob,
        })
        .collect();
    Ok(Scene { topology, ues, servers })
}

/// One time slot's auction and the workload indices of its bids.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub instance: AuctionInstance,
    pub requests: Vec<usize>,
}

fn fallback_ue(cfg: &SystemConfig) -> UserEquipment {
    UserEquipment {
        id: 0,
        position: [0.0; 2],
        budget: 0.0,
        local_speed: cfg.local_speed,
        offload_prob: 0.0,
        tx_power: 0.0,
        participation: false,
    }
}

/// Lowest-cost grid split on `es` that meets the deadline, if any.
fn best_terms(task: &Task, ue: &UserEquipment, es: &EdgeServer, units: u32, rate: f64, cfg: &SystemConfig) -> Option<PairTerms> {
    if rate <= 0.0 {
        return None;
    }
    let range = market::feasible_split_range(task, ue, es, units, rate, cfg.execution_mode)?;
    let mut best: Option<(f64, f64)> = None;
    for x in market::split_grid(cfg.split_step) {
        if !range.contains(x) {
            continue;
        }
        let cost = market::total_cost(task, ue, es, x, units, rate, cfg);
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((x, cost));
        }
    }
    let (x, _) = best?;
    let tx = radio::transmission_time(x, task.len, rate).ok()?;
    let proc = radio::remote_processing_time(x, task, units, es).ok()?;
    let local = (1.0 - x) * radio::full_local_time(task, ue);
    Some(PairTerms { offload_latency: radio::combine(tx + proc, local, cfg.execution_mode), split: x })
}

/// Groups requests into slots of `cfg.slot_length` seconds and builds each
/// slot's screened auction. Only the owners of a slot's requests transmit.
pub fn build_slots(scene: &Scene, workload: &Workload, cfg: &SystemConfig) -> Vec<Slot> {
    let mut groups: Vec<(u64, Vec<usize>)> = Vec::new();
    for (n, t) in workload.tasks.iter().enumerate() {
        let key = (t.arrival_time / cfg.slot_length).floor() as u64;
        match groups.last_mut() {
            Some((k, v)) if *k == key => v.push(n),
            _ => groups.push((key, vec![n])),
        }
    }
    let fallback = fallback_ue(cfg);
    let num_ue = scene.topology.num_ue();
    groups
        .into_iter()
        .map(|(_, requests)| {
            let owner = |n: usize| (num_ue > 0).then(|| workload.tasks[n].owner_ue % num_ue);
            let mut transmitting = vec![false; num_ue];
            for &n in &requests {
                if let Some(k) = owner(n) {
                    transmitting[k] = true;
                }
            }
            let mut bids = Vec::with_capacity(requests.len());
            let mut links = Vec::with_capacity(requests.len());
            for &n in &requests {
                let task = &workload.tasks[n];
                let ue = owner(n).map_or(&fallback, |k| &scene.ues[k]);
                let demand = scene
                    .servers
                    .first()
                    .map_or(1, |es| market::demand_units(task, es, cfg))
                    .min(workload.demand_caps[n].max(1));
                let row = scene
                    .servers
                    .iter()
                    .enumerate()
                    .map(|(j, es)| {
                        let k = owner(n)?;
                        if !scene.topology.covers(j, k) {
                            return None;
                        }
                        let rate = radio::expected_rate(ue, j, &scene.topology, cfg, &transmitting);
                        best_terms(task, ue, es, demand, rate, cfg)
                    })
                    .collect();
                links.push(row);
                bids.push(BuyerBid {
                    ue_id: ue.id,
                    demand,
                    valuation: workload.valuations[n],
                    deadline: task.deadline,
                    budget: workload.budgets[n],
                    participation: owner(n).is_some() && ue.participation,
                    offload_prob: ue.offload_prob,
                    local_latency: radio::full_local_time(task, ue),
                });
            }
            let asks = scene
                .servers
                .iter()
                .map(|es| SellerAsk {
                    es_id: es.id,
                    resource: es.capacity,
                    reserve_price: es.reserve_price,
                    available: es.available,
                    unit_cost: es.unit_cost,
                    participation: es.participation,
                })
                .collect();
            let mut instance = AuctionInstance { bids, asks, links };
            screen_participants(&mut instance);
            Slot { instance, requests }
        })
        .collect()
}

/// How a slot's requests get matched to servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Auction,
    /// Each request in arrival order takes the cheapest server with room and
    /// pays its posted price.
    LowestPrice,
}

pub fn lowest_price_outcome(instance: &AuctionInstance, cfg: &SystemConfig) -> AuctionOutcome {
    let mut out = AuctionOutcome::empty(instance.bids.len(), instance.asks.len());
    let mut remaining: Vec<u32> = instance.asks.iter().map(|a| a.available).collect();
    for i in 0..instance.bids.len() {
        let d = instance.bids[i].demand;
        let pick = (0..instance.asks.len())
            .filter(|&j| instance.eligible(i, j) && remaining[j] >= d && instance.surplus(i, j) > 0.0)
            .min_by(|&a, &b| {
                instance.asks[a]
                    .reserve_price
                    .total_cmp(&instance.asks[b].reserve_price)
                    .then(a.cmp(&b))
            });
        if let Some(j) = pick {
            remaining[j] -= d;
            out.assignment[i] = Some(j);
            out.payments[i] = f64::from(d) * instance.asks[j].reserve_price;
            out.incomes[j] += out.payments[i];
            out.declared_welfare += instance.bids[i].valuation;
        }
    }
    out.social_welfare = crate::auction::outcome_social_welfare(instance, &out, cfg);
    out
}

/// Aggregates over every slot of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub requests: usize,
    pub served: usize,
    pub social_welfare: f64,
    pub mean_latency: f64,
    pub core_time: Duration,
    pub oversupply: u64,
    pub unmet_demand: u64,
}

pub fn run_slots(slots: &[Slot], cfg: &SystemConfig, mechanism: Mechanism) -> Result<(Vec<AuctionOutcome>, Duration), HarnessError> {
    let mut outcomes = Vec::with_capacity(slots.len());
    let mut core = Duration::ZERO;
    for slot in slots {
        let start = Instant::now();
        let out = match mechanism {
            Mechanism::Auction => run_auction(&slot.instance, cfg)?,
            Mechanism::LowestPrice => lowest_price_outcome(&slot.instance, cfg),
        };
        core += start.elapsed();
        outcomes.push(out);
    }
    Ok((outcomes, core))
}

/// Fraction of requests that were served. Served requests always meet their
/// deadline because only deadline-feasible pairs may trade. An empty
/// workload counts as fully served.
pub fn success_rate(outcomes: &[AuctionOutcome], workload: &Workload) -> f64 {
    if workload.is_empty() {
        return 1.0;
    }
    let served: usize = outcomes.iter().map(|o| o.winners().count()).sum();
    served as f64 / workload.len() as f64
}

pub fn summarize(slots: &[Slot], outcomes: &[AuctionOutcome], core_time: Duration) -> RunSummary {
    let mut s = RunSummary {
        requests: 0,
        served: 0,
        social_welfare: 0.0,
        mean_latency: 0.0,
        core_time,
        oversupply: 0,
        unmet_demand: 0,
    };
    let mut latency = 0.0;
    for (slot, out) in slots.iter().zip(outcomes) {
        let inst = &slot.instance;
        s.requests += inst.bids.len();
        s.social_welfare += out.social_welfare;
        for i in 0..inst.bids.len() {
            match out.assignment[i].and_then(|j| inst.links[i][j]) {
                Some(t) => {
                    s.served += 1;
                    latency += t.offload_latency;
                }
                None => {
                    latency += inst.bids[i].local_latency;
                    let wanted = (0..inst.asks.len()).any(|j| inst.eligible(i, j) && inst.bids[i].valuation > 0.0);
                    if wanted {
                        s.unmet_demand += u64::from(inst.bids[i].demand);
                    }
                }
            }
        }
        let sold = out.units_sold(inst);
        for (j, a) in inst.asks.iter().enumerate() {
            if a.participation {
                s.oversupply += u64::from(a.available.saturating_sub(sold[j]));
            }
        }
    }
    if s.requests > 0 {
        s.mean_latency = latency / s.requests as f64;
    }
    s
}

/// Repeated-game state for the slots: every request becomes a player whose
/// opening bid is its value scaled by a random factor in `[0.5, 1.5]`.
pub fn market_state(slots: &[Slot], workload: &Workload, scene: &Scene, cfg: &SystemConfig, seed: u64) -> MarketState {
    let mut rng = stream_rng(seed, STREAM_STRATEGY);
    let mut players = Vec::new();
    let mut instances = Vec::with_capacity(slots.len());
    for (s, slot) in slots.iter().enumerate() {
        let mut inst = slot.instance.clone();
        for (i, &n) in slot.requests.iter().enumerate() {
            let truth = workload.valuations[n];
            let mut grid = linspace(0.5 * truth, 1.5 * truth, cfg.valuation_grid_points);
            if let Err(k) = grid.binary_search_by(|g| g.total_cmp(&truth)) {
                grid.insert(k, truth);
            }
            inst.bids[i].valuation = truth * rng.random_range(0.5..=1.5);
            players.push(Player { slot: s, bid: i, true_value: truth, grid });
        }
        instances.push(inst);
    }
    MarketState {
        slots: instances,
        players,
        prices: scene.servers.iter().map(|e| e.reserve_price).collect(),
        price_grid: linspace(cfg.reserve_price_min, cfg.reserve_price_max, cfg.price_grid_points),
    }
}
