use super::response::{payoff_if_declaring, seller_payoff_at};
use super::{payoff, run_auction, AuctionInstance, AuctionOutcome};
use crate::error::AuctionError;
use crate::model::SystemConfig;

/// A bidder in the repeated game: bid `bid` of slot `slot`, with its private
/// value and the valuations it may declare.
#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    pub slot: usize,
    pub bid: usize,
    pub true_value: f64,
    pub grid: Vec<f64>,
}

/// Independent auctions (one per time slot) sharing the same servers, whose
/// posted prices hold across all slots.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub slots: Vec<AuctionInstance>,
    pub players: Vec<Player>,
    pub prices: Vec<f64>,
    pub price_grid: Vec<f64>,
}

impl MarketState {
    pub fn num_servers(&self) -> usize {
        self.prices.len()
    }

    /// Pushes the current prices into every slot.
    fn apply_prices(&mut self) {
        for slot in &mut self.slots {
            for (a, &p) in slot.asks.iter_mut().zip(&self.prices) {
                a.reserve_price = p;
                a.participation = a.available > 0 && a.unit_cost <= p;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub outcomes: Vec<AuctionOutcome>,
    /// Per player, measured with its true value.
    pub buyer_payoffs: Vec<f64>,
    /// Per server, summed over slots.
    pub seller_payoffs: Vec<f64>,
    pub welfare: f64,
    /// Weighted latency-and-payment cost summed over players; losers bear
    /// their local latency.
    pub total_cost: f64,
}

/// Runs every slot's auction once on the current bids and prices.
pub fn run_auction_round(state: &MarketState, cfg: &SystemConfig) -> Result<RoundResult, AuctionError> {
    let outcomes = state
        .slots
        .iter()
        .map(|inst| run_auction(inst, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(state, outcomes, cfg))
}

fn summarize(state: &MarketState, outcomes: Vec<AuctionOutcome>, cfg: &SystemConfig) -> RoundResult {
    let mut buyer_payoffs = Vec::with_capacity(state.players.len());
    let mut total_cost = 0.0;
    for p in &state.players {
        let inst = &state.slots[p.slot];
        let out = &outcomes[p.slot];
        let bid = &inst.bids[p.bid];
        let served = out.assignment[p.bid].and_then(|j| inst.links[p.bid][j]);
        let pay = out.payments[p.bid];
        buyer_payoffs.push(payoff::buyer_payoff(bid, p.true_value, served, pay, cfg));
        total_cost += match served {
            Some(t) => cfg.latency_weight * t.offload_latency + cfg.price_weight * pay,
            None => cfg.latency_weight * bid.local_latency,
        };
    }
    let mut seller_payoffs = vec![0.0; state.num_servers()];
    for (inst, out) in state.slots.iter().zip(&outcomes) {
        let sold = out.units_sold(inst);
        for (j, a) in inst.asks.iter().enumerate() {
            seller_payoffs[j] += payoff::seller_payoff(a, sold[j], out.incomes[j], cfg);
        }
    }
    let welfare = payoff::social_welfare(&buyer_payoffs, &seller_payoffs);
    RoundResult { outcomes, buyer_payoffs, seller_payoffs, welfare, total_cost }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fulfillment {
    /// Every bidder able to use some server was served.
    pub user_fulfilled: bool,
    /// Every participating server sold all its cores.
    pub server_fulfilled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// Sweeps executed.
    pub iterations: usize,
    /// First sweep in which no player moved.
    pub converged_at: Option<usize>,
    pub converged: bool,
    pub epsilon: f64,
    /// Entry 0 is the starting profile, entry `k` follows sweep `k`.
    pub bid_trace: Vec<f64>,
    pub price_trace: Vec<f64>,
    pub cost_trace: Vec<f64>,
    pub welfare_trace: Vec<f64>,
    /// Largest payoff improvement any single player could find in the sweep.
    pub gain_trace: Vec<f64>,
    pub fulfillment: Fulfillment,
    pub final_round: RoundResult,
}

/// Consecutive quiet sweeps recorded after the fixed point is reached.
const STABLE_SWEEPS: usize = 5;

struct Cache {
    /// Bumped whenever a slot's bids or the prices change.
    slot_version: Vec<u64>,
    price_version: u64,
    /// Per player: ((slot version, price version), chosen value, best gain).
    buyer: Vec<Option<((u64, u64), f64, f64)>>,
    /// Per server: (price version, best price, gain).
    seller: Vec<Option<(u64, f64, f64)>>,
    version: u64,
}

fn buyer_step(
    state: &MarketState,
    p: usize,
    cfg: &SystemConfig,
    epsilon: f64,
) -> Result<(f64, f64), AuctionError> {
    let player = &state.players[p];
    let inst = &state.slots[player.slot];
    let current = inst.bids[player.bid].valuation;
    let now = payoff_if_declaring(inst, player.bid, player.true_value, current, cfg)?;
    let mut best = (current, now);
    let mut top = now;
    for &v in &player.grid {
        let pay = payoff_if_declaring(inst, player.bid, player.true_value, v, cfg)?;
        top = top.max(pay);
        if pay > best.1 + epsilon || (pay > best.1 && best.0 != current) {
            best = (v, pay);
        }
    }
    Ok((best.0, top - now))
}

fn seller_step(state: &MarketState, j: usize, cfg: &SystemConfig, epsilon: f64) -> Result<(f64, f64), AuctionError> {
    let relevant: Vec<&AuctionInstance> = state
        .slots
        .iter()
        .filter(|inst| inst.links.iter().any(|row| row[j].is_some()))
        .collect();
    let total = |price: f64| -> Result<f64, AuctionError> {
        relevant.iter().map(|inst| seller_payoff_at(inst, j, price, cfg)).sum()
    };
    let current = state.prices[j];
    let now = total(current)?;
    let mut best = (current, now);
    let mut top = now;
    for &price in &state.price_grid {
        if price == current {
            continue;
        }
        let pay = total(price)?;
        top = top.max(pay);
        if pay > best.1 + epsilon || (pay > best.1 && best.0 != current) {
            best = (price, pay);
        }
    }
    Ok((best.0, top - now))
}

/// Best-response dynamics: each sweep lets every bidder, then every server,
/// move to the grid strategy that most improves its payoff, provided the
/// improvement exceeds `epsilon`. Stops once a whole sweep passes with no
/// move and the total cost has stayed flat for several sweeps, or after
/// `max_iter` sweeps.
pub fn run_to_equilibrium(
    state: &mut MarketState,
    cfg: &SystemConfig,
    epsilon: f64,
    max_iter: usize,
) -> Result<EquilibriumReport, AuctionError> {
    if max_iter == 0 {
        return Err(AuctionError::Precondition("max_iter must be at least 1"));
    }
    if !(epsilon > 0.0) {
        return Err(AuctionError::Precondition("epsilon must be positive"));
    }
    state.apply_prices();
    let mut cache = Cache {
        slot_version: vec![0; state.slots.len()],
        price_version: 0,
        buyer: vec![None; state.players.len()],
        seller: vec![None; state.num_servers()],
        version: 0,
    };
    let mut round = run_auction_round(state, cfg)?;
    let mut report = EquilibriumReport {
        iterations: 0,
        converged_at: None,
        converged: false,
        epsilon,
        bid_trace: vec![mean_bid(state)],
        price_trace: vec![mean(&state.prices)],
        cost_trace: vec![round.total_cost],
        welfare_trace: vec![round.welfare],
        gain_trace: vec![f64::NAN],
        fulfillment: Fulfillment { user_fulfilled: false, server_fulfilled: false },
        final_round: round.clone(),
    };
    let mut quiet = 0;
    for sweep in 1..=max_iter {
        let mut moved = false;
        let mut max_gain: f64 = 0.0;
        for p in 0..state.players.len() {
            let slot = state.players[p].slot;
            let key = (cache.slot_version[slot], cache.price_version);
            let (value, gain) = match cache.buyer[p] {
                Some((k, v, g)) if k == key => (v, g),
                _ => {
                    let (v, g) = buyer_step(state, p, cfg, epsilon)?;
                    cache.buyer[p] = Some((key, v, g));
                    (v, g)
                }
            };
            max_gain = max_gain.max(gain);
            let bid = state.players[p].bid;
            if value != state.slots[slot].bids[bid].valuation {
                state.slots[slot].bids[bid].valuation = value;
                cache.version += 1;
                cache.slot_version[slot] = cache.version;
                moved = true;
            }
        }
        for j in 0..state.num_servers() {
            let key = cache.version;
            let (price, gain) = match cache.seller[j] {
                Some((k, p, g)) if k == key => (p, g),
                _ => {
                    let (p, g) = seller_step(state, j, cfg, epsilon)?;
                    cache.seller[j] = Some((key, p, g));
                    (p, g)
                }
            };
            max_gain = max_gain.max(gain);
            if price != state.prices[j] {
                state.prices[j] = price;
                state.apply_prices();
                cache.version += 1;
                cache.price_version = cache.version;
                moved = true;
            }
        }
        if moved {
            round = run_auction_round(state, cfg)?;
        }
        let prev_cost = *report.cost_trace.last().expect("trace starts non-empty");
        report.iterations = sweep;
        report.bid_trace.push(mean_bid(state));
        report.price_trace.push(mean(&state.prices));
        report.cost_trace.push(round.total_cost);
        report.welfare_trace.push(round.welfare);
        report.gain_trace.push(max_gain);
        if !moved && report.converged_at.is_none() {
            report.converged_at = Some(sweep);
        }
        if !moved && (round.total_cost - prev_cost).abs() < epsilon {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= STABLE_SWEEPS {
            report.converged = true;
            break;
        }
    }
    report.fulfillment = fulfillment(state, &round);
    report.final_round = round;
    Ok(report)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn mean_bid(state: &MarketState) -> f64 {
    let bids: Vec<f64> = state
        .players
        .iter()
        .map(|p| state.slots[p.slot].bids[p.bid].valuation)
        .collect();
    mean(&bids)
}

fn fulfillment(state: &MarketState, round: &RoundResult) -> Fulfillment {
    let mut user = true;
    let mut server = true;
    for (inst, out) in state.slots.iter().zip(&round.outcomes) {
        for i in 0..inst.bids.len() {
            let usable = (0..inst.asks.len()).any(|j| inst.eligible(i, j) && inst.bids[i].valuation > 0.0);
            if usable && !out.is_winner(i) {
                user = false;
            }
        }
        let sold = out.units_sold(inst);
        for (j, a) in inst.asks.iter().enumerate() {
            if a.participation && sold[j] < a.available {
                server = false;
            }
        }
    }
    Fulfillment { user_fulfilled: user, server_fulfilled: server }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{BuyerBid, PairTerms, SellerAsk};

    fn state(values: &[f64]) -> MarketState {
        let bids = values
            .iter()
            .enumerate()
            .map(|(i, &v)| BuyerBid {
                ue_id: i,
                demand: 1,
                valuation: v,
                deadline: 1.0,
                budget: 1e6,
                participation: true,
                offload_prob: 1.0,
                local_latency: 4.0,
            })
            .collect();
        let ask = SellerAsk {
            es_id: 0,
            resource: 2,
            reserve_price: 1.0,
            available: 2,
            unit_cost: 0.5,
            participation: true,
        };
        let inst = AuctionInstance::fully_linked(bids, vec![ask], PairTerms { offload_latency: 0.2, split: 1.0 });
        let players = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Player { slot: 0, bid: i, true_value: v, grid: vec![v * 0.5, v, v * 1.5] })
            .collect();
        MarketState { slots: vec![inst], players, prices: vec![1.0], price_grid: vec![1.0] }
    }

    #[test]
    fn truthful_profile_is_a_fixed_point() {
        let mut s = state(&[10.0, 7.0, 3.0]);
        let r = run_to_equilibrium(&mut s, &SystemConfig::default(), 1e-6, 50).unwrap();
        assert!(r.converged);
        assert_eq!(r.converged_at, Some(1));
        assert_eq!(r.cost_trace.len(), r.iterations + 1);
    }

    #[test]
    fn zero_sweeps_rejected() {
        let mut s = state(&[10.0]);
        assert!(matches!(
            run_to_equilibrium(&mut s, &SystemConfig::default(), 1e-3, 0),
            Err(AuctionError::Precondition(_))
        ));
    }

    #[test]
    fn round_is_deterministic() {
        let s = state(&[10.0, 7.0, 3.0]);
        let cfg = SystemConfig::default();
        assert_eq!(run_auction_round(&s, &cfg).unwrap(), run_auction_round(&s, &cfg).unwrap());
    }

    #[test]
    fn no_sellers_means_no_welfare() {
        let mut s = state(&[10.0, 7.0]);
        s.slots[0].asks[0].available = 0;
        s.slots[0].asks[0].participation = false;
        let r = run_auction_round(&s, &SystemConfig::default()).unwrap();
        assert_eq!(r.welfare, 0.0);
        assert_eq!(r.outcomes[0].winners().count(), 0);
    }
}
