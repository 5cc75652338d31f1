//! The library against independent exhaustive computations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use offload_auction::auction::{
    best_response_buyer, best_response_seller, buyer_payoff, determine_winners, incentive_payment, run_auction,
    seller_payoff, AuctionInstance, BestResponseGrid,
};
use offload_auction::harness::{random_instance, InstanceShape};
use offload_auction::market::{self, match_demand_supply, MatchingProblem};
use offload_auction::model::{EdgeServer, ExecutionMode, Task, UserEquipment, WinnerMode};
use offload_auction::{radio, SystemConfig};

const SHAPE: InstanceShape = InstanceShape { max_bidders: 5, max_servers: 2, max_capacity: 3, budget_slack: true };

/// Every feasible assignment: `None` or a server index per bidder.
fn assignments(inst: &AuctionInstance, skip: Option<usize>) -> Vec<Vec<Option<usize>>> {
    let k = inst.bids.len();
    let m = inst.asks.len();
    let mut out = Vec::new();
    let mut choice = vec![0usize; k];
    loop {
        let mut used = vec![0u32; m];
        let mut ok = true;
        for i in 0..k {
            if choice[i] == 0 {
                continue;
            }
            let j = choice[i] - 1;
            if Some(i) == skip || !inst.eligible(i, j) {
                ok = false;
                break;
            }
            used[j] += inst.bids[i].demand;
        }
        let fits = used.iter().zip(&inst.asks).all(|(u, a)| *u <= if a.participation { a.available } else { 0 });
        if ok && fits {
            out.push(choice.iter().map(|&c| c.checked_sub(1)).collect());
        }
        let mut pos = 0;
        while pos < k {
            choice[pos] += 1;
            if choice[pos] <= m {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
        if pos == k {
            return out;
        }
    }
}

fn discounted(inst: &AuctionInstance, i: usize, j: usize, lambda: f64) -> f64 {
    (1.0 - lambda * inst.links[i][j].unwrap().split) * inst.bids[i].valuation
}

fn value_of(inst: &AuctionInstance, a: &[Option<usize>], lambda: f64, skip: Option<usize>) -> f64 {
    a.iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .filter_map(|(i, s)| s.map(|j| discounted(inst, i, j, lambda)))
        .sum()
}

fn best_value(inst: &AuctionInstance, lambda: f64, skip: Option<usize>) -> f64 {
    assignments(inst, skip).iter().map(|a| value_of(inst, a, lambda, None)).fold(0.0, f64::max)
}

#[test]
fn clarke_payments_match_exhaustive_pivots() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = SystemConfig::default();
    for _ in 0..400 {
        let inst = random_instance(SHAPE, &mut rng);
        let out = run_auction(&inst, &cfg).unwrap();
        assert_eq!(out.declared_welfare, best_value(&inst, 0.0, None));
        for i in out.winners() {
            let others = value_of(&inst, &out.assignment, 0.0, Some(i));
            let pivot = best_value(&inst, 0.0, Some(i)) - others;
            assert!((out.payments[i] - pivot).abs() < 1e-9, "bidder {i}: {} vs {pivot}", out.payments[i]);
        }
        for i in 0..inst.bids.len() {
            if !out.is_winner(i) {
                assert_eq!(out.payments[i], 0.0);
            }
        }
    }
}

#[test]
fn discounted_payments_match_exhaustive_pivots() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let inst = random_instance(SHAPE, &mut rng);
        let out = determine_winners(&inst, WinnerMode::Exact);
        for lambda in [0.1, 0.25, 0.5, 0.9] {
            for i in out.winners() {
                let pivot = best_value(&inst, lambda, Some(i)) - value_of(&inst, &out.assignment, lambda, Some(i));
                let got = incentive_payment(&inst, &out, i, lambda, WinnerMode::Exact).unwrap();
                assert!((got - pivot).abs() < 1e-9, "lambda {lambda}, bidder {i}: {got} vs {pivot}");
            }
        }
    }
}

#[test]
fn greedy_never_beats_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let shape = InstanceShape { max_bidders: 7, ..SHAPE };
    for _ in 0..400 {
        let inst = random_instance(shape, &mut rng);
        let best = best_value(&inst, 0.0, None);
        let greedy = determine_winners(&inst, WinnerMode::Greedy).declared_welfare;
        assert!(greedy <= best);
        assert_eq!(determine_winners(&inst, WinnerMode::Exact).declared_welfare, best);
    }
}

#[test]
fn best_responses_match_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cfg = SystemConfig::default();
    let values: Vec<f64> = (1..=12).map(|k| f64::from(k) * 10.0).collect();
    let prices = vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let grid = BestResponseGrid::new(values.clone(), prices.clone()).unwrap();
    for _ in 0..100 {
        let inst = random_instance(SHAPE, &mut rng);
        for i in 0..inst.bids.len() {
            let truth = inst.bids[i].valuation;
            let payoff = |v: f64| {
                let mut c = inst.clone();
                c.bids[i].valuation = v;
                let out = run_auction(&c, &cfg).unwrap();
                let served = out.assignment[i].and_then(|j| c.links[i][j]);
                buyer_payoff(&c.bids[i], truth, served, out.payments[i], &cfg)
            };
            let mut expect = values[0];
            let mut top = payoff(values[0]);
            for &v in &values[1..] {
                let p = payoff(v);
                if p > top {
                    top = p;
                    expect = v;
                }
            }
            assert_eq!(best_response_buyer(&inst, i, truth, &grid, &cfg).unwrap(), expect);
        }
        for j in 0..inst.asks.len() {
            let payoff = |p: f64| {
                let mut c = inst.clone();
                c.asks[j].reserve_price = p;
                c.asks[j].participation = c.asks[j].available > 0 && c.asks[j].unit_cost <= p;
                let out = run_auction(&c, &cfg).unwrap();
                seller_payoff(&c.asks[j], out.units_sold(&c)[j], out.incomes[j], &cfg)
            };
            let mut expect = prices[0];
            let mut top = payoff(prices[0]);
            for &p in &prices[1..] {
                let v = payoff(p);
                if v > top {
                    top = v;
                    expect = p;
                }
            }
            assert_eq!(best_response_seller(&inst, j, &grid, &cfg).unwrap(), expect);
        }
    }
}

fn matching_problem(rng: &mut ChaCha8Rng, tasks: usize) -> MatchingProblem {
    let ue = UserEquipment {
        id: 0,
        position: [0.0; 2],
        budget: 100.0,
        local_speed: 1e8,
        offload_prob: 1.0,
        tx_power: 1.0,
        participation: true,
    };
    let servers: Vec<EdgeServer> = (0..2)
        .map(|j| EdgeServer {
            id: j,
            position: [0.0; 2],
            capacity: 8,
            available: rng.random_range(0..=6),
            speed_per_unit: 1e8,
            reserve_price: rng.random_range(0.1..1.0),
            unit_cost: 0.1,
            participation: true,
            coverage_radius: 500.0,
        })
        .collect();
    let tasks: Vec<Task> = (0..tasks)
        .map(|n| Task {
            id: n,
            arrival_time: 0.0,
            len: rng.random_range(1e6..8e6),
            complexity: rng.random_range(50.0..150.0),
            deadline: rng.random_range(1.0..7.5),
            split: 0.0,
            owner_ue: 0,
            local_time: Some(rng.random_range(3.0..8.0)),
        })
        .collect();
    let rates = tasks
        .iter()
        .map(|_| (0..2).map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random_range(1e6..1e8) }).collect())
        .collect();
    MatchingProblem { tasks, ues: vec![ue], servers, rates }
}

/// (misses, cost) of the best assignment, trying every split on a quarter
/// grid and checking deadlines through the latency model directly.
fn exhaustive_matching(p: &MatchingProblem, cfg: &SystemConfig) -> (usize, f64) {
    let ue = &p.ues[0];
    // per task: (server, units, cost, misses)
    let mut choices: Vec<Vec<(Option<usize>, u32, f64, usize)>> = Vec::new();
    for (n, t) in p.tasks.iter().enumerate() {
        let local = radio::full_local_time(t, ue);
        let local_cost = cfg.latency_weight * local;
        let mut c = vec![(None, 0, local_cost, 1)];
        if local <= t.deadline {
            c.push((None, 0, local_cost, 0));
        }
        for (j, es) in p.servers.iter().enumerate() {
            let rate = p.rates[n][j];
            let units = market::demand_units(t, es, cfg);
            if rate <= 0.0 || units > es.available {
                continue;
            }
            for x in [0.25, 0.5, 0.75, 1.0] {
                let task = Task { split: x, ..t.clone() };
                let lat = radio::latency_breakdown(&task, ue, es, units, rate, cfg.execution_mode).unwrap();
                if lat.total <= t.deadline {
                    c.push((Some(j), units, market::total_cost(t, ue, es, x, units, rate, cfg), 0));
                }
            }
        }
        choices.push(c);
    }
    let mut best = (usize::MAX, f64::INFINITY);
    let mut idx = vec![0usize; choices.len()];
    loop {
        let mut used = [0u32; 2];
        let (mut misses, mut cost) = (0, 0.0);
        for (n, &k) in idx.iter().enumerate() {
            let (es, units, c, m) = choices[n][k];
            if let Some(j) = es {
                used[j] += units;
            }
            cost += c;
            misses += m;
        }
        if used.iter().zip(&p.servers).all(|(u, s)| *u <= s.available)
            && (misses < best.0 || (misses == best.0 && cost < best.1))
        {
            best = (misses, cost);
        }
        let mut pos = 0;
        while pos < idx.len() {
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == idx.len() {
            return best;
        }
    }
}

#[test]
fn exact_matching_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for mode in [ExecutionMode::Concurrent, ExecutionMode::Sequential] {
        let cfg = SystemConfig { split_step: 0.25, execution_mode: mode, ..SystemConfig::default() };
        for _ in 0..150 {
            let n = rng.random_range(1..=5);
            let p = matching_problem(&mut rng, n);
            let m = match_demand_supply(&p, &cfg, WinnerMode::Exact);
            let misses = m.entries.iter().filter(|e| !e.deadline_met).count();
            let (want_misses, want_cost) = exhaustive_matching(&p, &cfg);
            assert_eq!(misses, want_misses, "{mode:?}");
            assert!((m.objective - want_cost).abs() <= 1e-9 * want_cost.max(1.0), "{mode:?}: {} vs {want_cost}", m.objective);
            let greedy = match_demand_supply(&p, &cfg, WinnerMode::Greedy);
            assert!(market::check_matching(&greedy, &p).is_empty());
        }
    }
}
