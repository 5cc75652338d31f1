use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use offload_auction::auction::{
    check_outcome, determine_winners, outcome_social_welfare, participant_payoffs, run_auction, AuctionInstance,
};
use offload_auction::harness::{generate_workload, random_instance, InstanceShape};
use offload_auction::market::{self, feasible_split_range};
use offload_auction::model::{validate_config, EdgeServer, ExecutionMode, SellerRevenue, Task, UserEquipment, WinnerMode};
use offload_auction::{radio, SystemConfig};

fn instance(seed: u64, max_bidders: usize, budget_slack: bool) -> AuctionInstance {
    let shape = InstanceShape { max_bidders, max_servers: 3, max_capacity: 4, budget_slack };
    random_instance(shape, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn config(mode: WinnerMode) -> SystemConfig {
    SystemConfig { winner_mode: mode, ..SystemConfig::default() }
}

fn modes() -> impl Strategy<Value = WinnerMode> {
    prop_oneof![Just(WinnerMode::Exact), Just(WinnerMode::Greedy)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn outcomes_are_feasible_and_payments_bounded(seed in any::<u64>(), slack in any::<bool>(), mode in modes()) {
        let inst = instance(seed, 7, slack);
        let out = run_auction(&inst, &config(mode)).unwrap();
        prop_assert!(check_outcome(&inst, &out).is_empty(), "{:?}", check_outcome(&inst, &out));
        for i in 0..inst.bids.len() {
            let pay = out.payments[i];
            prop_assert!(pay >= 0.0);
            prop_assert!(pay <= inst.bids[i].valuation + 1e-9);
            if out.is_winner(i) {
                prop_assert!(pay <= inst.bids[i].budget + 1e-9);
            } else {
                prop_assert_eq!(pay, 0.0);
            }
        }
        let paid: f64 = out.payments.iter().sum();
        let earned: f64 = out.incomes.iter().sum();
        prop_assert!((paid - earned).abs() < 1e-9);
    }

    #[test]
    fn greedy_welfare_never_exceeds_exact(seed in any::<u64>()) {
        let inst = instance(seed, 8, true);
        let exact = determine_winners(&inst, WinnerMode::Exact).declared_welfare;
        let greedy = determine_winners(&inst, WinnerMode::Greedy).declared_welfare;
        prop_assert!(greedy <= exact + 1e-9);
    }

    #[test]
    fn truthful_bidding_is_dominant(seed in any::<u64>(), pick in any::<prop::sample::Index>(), lie in 0.0f64..200.0) {
        let inst = instance(seed, 6, true);
        let cfg = config(WinnerMode::Exact);
        let i = pick.index(inst.bids.len());
        let truth = inst.bids[i].valuation;
        let gain = |inst: &AuctionInstance| {
            let out = run_auction(inst, &cfg).unwrap();
            if out.is_winner(i) { truth - out.payments[i] } else { 0.0 }
        };
        let mut misreport = inst.clone();
        misreport.bids[i].valuation = lie;
        prop_assert!(gain(&misreport) <= gain(&inst) + 1e-9);
    }

    #[test]
    fn participants_never_lose_by_joining(seed in any::<u64>(), mode in modes()) {
        let mut inst = instance(seed, 7, true);
        for b in &mut inst.bids {
            b.offload_prob = 1.0;
        }
        let cfg = SystemConfig { seller_revenue: SellerRevenue::AskPrice, ..config(mode) };
        let out = run_auction(&inst, &cfg).unwrap();
        let (buyers, sellers) = participant_payoffs(&inst, &out, &cfg);
        prop_assert!(buyers.iter().all(|&p| p >= -1e-9), "{:?}", buyers);
        prop_assert!(sellers.iter().all(|&p| p >= -1e-9), "{:?}", sellers);
    }

    #[test]
    fn welfare_ignores_transfers_under_income_revenue(seed in any::<u64>(), shift in -5.0f64..5.0) {
        let mut inst = instance(seed, 7, true);
        for b in &mut inst.bids {
            b.offload_prob = 1.0;
        }
        let cfg = SystemConfig { seller_revenue: SellerRevenue::Income, ..config(WinnerMode::Exact) };
        let out = run_auction(&inst, &cfg).unwrap();
        let mut moved = out.clone();
        for i in out.winners() {
            moved.payments[i] += shift;
            moved.incomes[out.assignment[i].unwrap()] += shift;
        }
        let before = outcome_social_welfare(&inst, &out, &cfg);
        let after = outcome_social_welfare(&inst, &moved, &cfg);
        prop_assert!((before - after).abs() < 1e-9 * before.abs().max(1.0));
    }

    #[test]
    fn auctions_are_deterministic(seed in any::<u64>(), mode in modes()) {
        let inst = instance(seed, 8, false);
        let cfg = config(mode);
        prop_assert_eq!(run_auction(&inst, &cfg).unwrap(), run_auction(&inst, &cfg).unwrap());
    }

    #[test]
    fn more_cores_never_lower_welfare(seed in any::<u64>(), pick in any::<prop::sample::Index>(), extra in 1u32..4) {
        let inst = instance(seed, 7, true);
        let before = determine_winners(&inst, WinnerMode::Exact).declared_welfare;
        let mut bigger = inst.clone();
        let j = pick.index(bigger.asks.len());
        bigger.asks[j].available += extra;
        bigger.asks[j].resource += extra;
        prop_assert!(determine_winners(&bigger, WinnerMode::Exact).declared_welfare >= before);
    }
}

fn ue(local_speed: f64) -> UserEquipment {
    UserEquipment {
        id: 0,
        position: [0.0; 2],
        budget: 10.0,
        local_speed,
        offload_prob: 1.0,
        tx_power: 1.0,
        participation: true,
    }
}

fn server(speed: f64) -> EdgeServer {
    EdgeServer {
        id: 0,
        position: [0.0; 2],
        capacity: 8,
        available: 8,
        speed_per_unit: speed,
        reserve_price: 1.0,
        unit_cost: 0.5,
        participation: true,
        coverage_radius: 100.0,
    }
}

proptest! {
    #[test]
    fn split_range_ends_meet_the_deadline(
        len in 1e5f64..1e7,
        complexity in 10.0f64..200.0,
        deadline in 0.5f64..10.0,
        local in 0.5f64..10.0,
        rate in 1e5f64..1e8,
        speed in 1e7f64..1e9,
        units in 1u32..6,
        sequential in any::<bool>(),
    ) {
        let mode = if sequential { ExecutionMode::Sequential } else { ExecutionMode::Concurrent };
        let task = Task {
            id: 0,
            arrival_time: 0.0,
            len,
            complexity,
            deadline,
            split: 0.0,
            owner_ue: 0,
            local_time: Some(local),
        };
        let (u, es) = (ue(1e8), server(speed));
        let latency = |x: f64| {
            let t = Task { split: x, ..task.clone() };
            radio::latency_breakdown(&t, &u, &es, units, rate, mode).unwrap().total
        };
        match feasible_split_range(&task, &u, &es, units, rate, mode) {
            Some(r) => {
                prop_assert!(0.0 <= r.lo && r.lo <= r.hi && r.hi <= 1.0);
                for x in [r.lo, r.hi, 0.5 * (r.lo + r.hi)] {
                    prop_assert!(latency(x) <= deadline * (1.0 + 1e-9), "x {} gives {}", x, latency(x));
                }
            }
            None => {
                for k in 0..=20 {
                    prop_assert!(latency(f64::from(k) / 20.0) > deadline);
                }
            }
        }
    }

    #[test]
    fn demand_stays_within_bounds(len in 1e3f64..1e9, complexity in 1.0f64..1e3, deadline in 0.01f64..100.0, speed in 1e6f64..1e10) {
        let cfg = SystemConfig::default();
        let task = Task {
            id: 0,
            arrival_time: 0.0,
            len,
            complexity,
            deadline,
            split: 0.0,
            owner_ue: 0,
            local_time: None,
        };
        let d = market::demand_units(&task, &server(speed), &cfg);
        prop_assert!(1 <= d && d <= cfg.demand_max);
        if d < cfg.demand_max {
            prop_assert!(task.cycles() <= f64::from(d) * speed * deadline * (1.0 + 1e-12));
        }
    }

    #[test]
    fn config_survives_a_toml_round_trip(
        num_ue in 1usize..200,
        radius in 50.0f64..500.0,
        lambda in 0.0f64..0.99,
        seq in any::<bool>(),
        greedy in any::<bool>(),
    ) {
        let cfg = SystemConfig {
            num_ue,
            coverage_radius: radius,
            incentive_factor: lambda,
            execution_mode: if seq { ExecutionMode::Sequential } else { ExecutionMode::Concurrent },
            winner_mode: if greedy { WinnerMode::Greedy } else { WinnerMode::Exact },
            ..SystemConfig::default()
        };
        let back = validate_config(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back.to_toml(), cfg.to_toml());
        prop_assert_eq!(back.num_ue, num_ue);
        prop_assert_eq!(back.incentive_factor, lambda);
    }

    #[test]
    fn workloads_arrive_in_order(seed in any::<u64>(), tasks in 1usize..400) {
        let cfg = SystemConfig { num_tasks: tasks, ..SystemConfig::default() };
        let w = generate_workload(&cfg, seed);
        prop_assert_eq!(w.len(), tasks);
        prop_assert!(w.tasks.windows(2).all(|p| p[0].arrival_time <= p[1].arrival_time));
        prop_assert!(w.tasks.iter().all(|t| t.is_valid() && t.deadline >= cfg.deadline_min && t.deadline <= cfg.deadline_max));
        prop_assert_eq!(generate_workload(&cfg, seed), w);
    }
}
