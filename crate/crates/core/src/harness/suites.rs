use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::auction::{
    check_outcome, clarke_payment, determine_winners, incentive_payment, run_auction, sample_sub_allocations,
    verify_envy_free, verify_sharing_incentive, verify_truthfulness, AuctionInstance, BuyerBid, EnvyReading,
    PairTerms, SellerAsk,
};
use crate::error::AuctionError;
use crate::model::{SystemConfig, WinnerMode};
use crate::rng::{stream_rng, STREAM_STRATEGY};

/// Knobs for random small auctions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub max_bidders: usize,
    pub max_servers: usize,
    pub max_capacity: u32,
    /// Budgets large enough never to bind.
    pub budget_slack: bool,
}

/// Values on the grid 10, 20, ..., 100.
pub fn value_grid() -> Vec<f64> {
    (1..=10).map(|k| f64::from(k) * 10.0).collect()
}

/// A random instance whose numbers are all exactly representable, so sums
/// do not depend on evaluation order.
pub fn random_instance(shape: InstanceShape, rng: &mut ChaCha8Rng) -> AuctionInstance {
    let k = rng.random_range(1..=shape.max_bidders);
    let m = rng.random_range(1..=shape.max_servers);
    let grid = value_grid();
    let bids: Vec<BuyerBid> = (0..k)
        .map(|i| BuyerBid {
            ue_id: i,
            demand: rng.random_range(1..=shape.max_capacity.max(1)),
            valuation: grid[rng.random_range(0..grid.len())],
            deadline: f64::from(rng.random_range(1..=4u32)),
            budget: if shape.budget_slack { 1e6 } else { f64::from(rng.random_range(5..=120u32)) },
            participation: rng.random::<f64>() < 0.95,
            offload_prob: 1.0,
            local_latency: 5.0,
        })
        .collect();
    let asks: Vec<SellerAsk> = (0..m)
        .map(|j| {
            let price = f64::from(rng.random_range(0..=8u32)) * 0.5;
            let available = rng.random_range(0..=shape.max_capacity);
            let unit_cost = f64::from(rng.random_range(0..=8u32)) * 0.25;
            SellerAsk {
                es_id: j,
                resource: shape.max_capacity,
                reserve_price: price,
                available,
                unit_cost,
                participation: available > 0 && unit_cost <= price,
            }
        })
        .collect();
    let links = (0..k)
        .map(|_| {
            (0..m)
                .map(|_| {
                    (rng.random::<f64>() < 0.85).then(|| PairTerms {
                        offload_latency: f64::from(rng.random_range(1..=8u32)) * 0.5,
                        split: f64::from(rng.random_range(1..=4u32)) * 0.25,
                    })
                })
                .collect()
        })
        .collect();
    AuctionInstance { bids, asks, links }
}

/// Exhaustive search over every assignment of bidders to servers; the best
/// total declared valuation.
pub fn brute_force_welfare(instance: &AuctionInstance) -> f64 {
    let k = instance.bids.len();
    let m = instance.asks.len();
    let mut choice = vec![0usize; k];
    let mut best = 0.0f64;
    loop {
        let mut used = vec![0u32; m];
        let mut ok = true;
        let mut total = 0.0;
        for i in 0..k {
            if choice[i] == 0 {
                continue;
            }
            let j = choice[i] - 1;
            if !instance.eligible(i, j) {
                ok = false;
                break;
            }
            used[j] += instance.bids[i].demand;
            total += instance.bids[i].valuation;
        }
        if ok && used.iter().zip(&instance.asks).all(|(u, a)| *u <= a.available) {
            best = best.max(total);
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
            return best;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub instances: usize,
    pub violations: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn suite<F>(name: &'static str, instances: usize, seed: u64, shape: InstanceShape, mut check: F) -> Result<SuiteReport, AuctionError>
where
    F: FnMut(&AuctionInstance, &mut ChaCha8Rng, &mut Vec<String>) -> Result<(), AuctionError>,
{
    let mut rng = stream_rng(seed, STREAM_STRATEGY);
    let mut violations = Vec::new();
    for n in 0..instances {
        let inst = random_instance(shape, &mut rng);
        let before = violations.len();
        check(&inst, &mut rng, &mut violations)?;
        for v in &mut violations[before..] {
            *v = format!("instance {n}: {v}");
        }
    }
    Ok(SuiteReport { name, instances, violations })
}

/// Exact winner determination against exhaustive search, plus outcome
/// feasibility and payment sanity.
pub fn oracle_suite(instances: usize, seed: u64) -> Result<SuiteReport, AuctionError> {
    let shape = InstanceShape { max_bidders: 6, max_servers: 2, max_capacity: 3, budget_slack: false };
    let cfg = SystemConfig::default();
    suite("oracle", instances, seed, shape, |inst, _, out| {
        let declared = determine_winners(inst, WinnerMode::Exact).declared_welfare;
        let best = brute_force_welfare(inst);
        if declared != best {
            out.push(format!("declared welfare {declared} but best is {best}"));
        }
        let outcome = run_auction(inst, &cfg)?;
        out.extend(check_outcome(inst, &outcome));
        Ok(())
    })
}

/// No bidder gains by misreporting on the value grid (budget-slack instances).
pub fn truthfulness_suite(instances: usize, seed: u64) -> Result<SuiteReport, AuctionError> {
    let shape = InstanceShape { max_bidders: 4, max_servers: 2, max_capacity: 3, budget_slack: true };
    let cfg = SystemConfig::default();
    let grid = value_grid();
    suite("truthfulness", instances, seed, shape, |inst, _, out| {
        for i in 0..inst.bids.len() {
            if let Some(m) = verify_truthfulness(inst, i, &grid, 0.0, &cfg)? {
                out.push(format!("bidder {i} gains {} by declaring {}", m.gain, m.declared));
            }
        }
        Ok(())
    })
}

/// Envy-freeness and the seller sharing incentive on exact outcomes.
pub fn envy_suite(instances: usize, seed: u64) -> Result<SuiteReport, AuctionError> {
    let shape = InstanceShape { max_bidders: 8, max_servers: 2, max_capacity: 3, budget_slack: true };
    let cfg = SystemConfig::default();
    suite("envy", instances, seed, shape, |inst, rng, out| {
        let outcome = run_auction(inst, &cfg)?;
        if let Some(v) = verify_envy_free(inst, &outcome, EnvyReading::OtherPayment) {
            out.push(format!("bidder {} envies bidder {} by {}", v.envious, v.envied, v.gain));
        }
        let alternatives = sample_sub_allocations(&outcome, 50, rng);
        if let Some((k, j)) = verify_sharing_incentive(inst, &outcome, &alternatives, cfg.seller_revenue)? {
            out.push(format!("server {j} prefers alternative {k}"));
        }
        Ok(())
    })
}

pub const INCENTIVE_FACTORS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

/// The discounted payment equals the Clarke payment at zero discount and
/// does not rise with the discount factor.
pub fn incentive_suite(instances: usize, seed: u64) -> Result<SuiteReport, AuctionError> {
    let shape = InstanceShape { max_bidders: 6, max_servers: 2, max_capacity: 3, budget_slack: true };
    suite("incentive", instances, seed, shape, |inst, _, out| {
        let outcome = determine_winners(inst, WinnerMode::Exact);
        for i in outcome.winners() {
            let clarke = clarke_payment(inst, &outcome, i, WinnerMode::Exact)?;
            let zero = incentive_payment(inst, &outcome, i, 0.0, WinnerMode::Exact)?;
            if clarke.to_bits() != zero.to_bits() {
                out.push(format!("bidder {i}: discount 0 pays {zero}, Clarke pays {clarke}"));
            }
            let mut prev = zero;
            for &lambda in &INCENTIVE_FACTORS[1..] {
                let pay = incentive_payment(inst, &outcome, i, lambda, WinnerMode::Exact)?;
                if pay > prev + 1e-9 {
                    out.push(format!("bidder {i}: payment rises from {prev} to {pay} at discount {lambda}"));
                }
                prev = pay;
            }
        }
        Ok(())
    })
}

/// Runs a suite by its command-line name.
pub fn run_suite(name: &str, instances: usize, seed: u64) -> Option<Result<SuiteReport, AuctionError>> {
    Some(match name {
        "oracle" => oracle_suite(instances, seed),
        "truthfulness" => truthfulness_suite(instances, seed),
        "envy" => envy_suite(instances, seed),
        "incentive" => incentive_suite(instances, seed),
        _ => return None,
    })
}

pub const SUITES: [&str; 4] = ["truthfulness", "envy", "incentive", "oracle"];
