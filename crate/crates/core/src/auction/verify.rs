use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::response::payoff_if_declaring;
use super::{AuctionInstance, AuctionOutcome};
use crate::error::AuctionError;
use crate::model::{SellerRevenue, SystemConfig};

/// A misreport that pays more than telling the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Misreport {
    pub bidder: usize,
    pub declared: f64,
    pub gain: f64,
}

/// Checks that bidder `i`, whose current bid is its true value, cannot gain
/// more than `slack` by declaring any value in `grid` instead. Returns the
/// most profitable misreport when one exists.
pub fn verify_truthfulness(
    instance: &AuctionInstance,
    i: usize,
    grid: &[f64],
    slack: f64,
    cfg: &SystemConfig,
) -> Result<Option<Misreport>, AuctionError> {
    let truth = instance.bids[i].valuation;
    let honest = payoff_if_declaring(instance, i, truth, truth, cfg)?;
    let mut worst: Option<Misreport> = None;
    for &v in grid {
        let gain = payoff_if_declaring(instance, i, truth, v, cfg)? - honest;
        if gain > slack && worst.is_none_or(|w| gain > w.gain) {
            worst = Some(Misreport { bidder: i, declared: v, gain });
        }
    }
    Ok(worst)
}

/// Whose payment comes with another bidder's bundle when testing for envy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvyReading {
    /// The other bidder's bundle at the price that bidder pays.
    #[default]
    OtherPayment,
    /// The other bidder's bundle at the envious bidder's own price.
    OwnPayment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvyViolation {
    pub envious: usize,
    pub envied: usize,
    pub gain: f64,
}

/// Pairwise bundle-swap check, taking declared values as true. Bidder `i`
/// values `k`'s bundle (a server and `d_k` cores) at its own valuation when it
/// could be served there and `d_k` covers its demand, otherwise at zero.
pub fn verify_envy_free(instance: &AuctionInstance, outcome: &AuctionOutcome, reading: EnvyReading) -> Option<EnvyViolation> {
    let n = instance.bids.len();
    let own = |i: usize| {
        if outcome.is_winner(i) {
            instance.bids[i].valuation - outcome.payments[i]
        } else {
            0.0
        }
    };
    let mut worst: Option<EnvyViolation> = None;
    for i in 0..n {
        let mine = own(i);
        for k in outcome.winners() {
            if k == i {
                continue;
            }
            let j = outcome.assignment[k].expect("winner has a server");
            let fits = instance.eligible(i, j) && instance.bids[k].demand >= instance.bids[i].demand;
            let value = if fits { instance.bids[i].valuation } else { 0.0 };
            let price = match reading {
                EnvyReading::OtherPayment => outcome.payments[k],
                EnvyReading::OwnPayment => outcome.payments[i],
            };
            let gain = value - price - mine;
            let tol = 1e-9 * instance.bids[i].valuation.abs().max(1.0);
            if gain > tol && worst.is_none_or(|w| gain > w.gain) {
                worst = Some(EnvyViolation { envious: i, envied: k, gain });
            }
        }
    }
    worst
}

/// Another way a server could have disposed of its cores.
#[derive(Debug, Clone, PartialEq)]
pub struct Alternative {
    pub assignment: Vec<Option<usize>>,
}

/// Server payoff under `assignment`. With income revenue, pairs the outcome
/// also formed keep their negotiated payment and any other pair is charged
/// the server's posted price. Unit cost stays fixed.
fn seller_value(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    assignment: &[Option<usize>],
    j: usize,
    revenue: SellerRevenue,
) -> f64 {
    let ask = &instance.asks[j];
    let mut total = 0.0;
    for (i, a) in assignment.iter().enumerate() {
        if *a != Some(j) {
            continue;
        }
        let d = f64::from(instance.bids[i].demand);
        let earned = match revenue {
            SellerRevenue::Income if outcome.assignment[i] == Some(j) => outcome.payments[i],
            _ => ask.reserve_price * d,
        };
        total += earned - ask.unit_cost * d;
    }
    total
}

/// Checks every server earns a non-negative payoff in `outcome` and no less
/// than under any of `alternatives`. Returns the first offending
/// `(alternative index, server)`; an alternative index of `usize::MAX` marks
/// a negative payoff in the outcome itself.
pub fn verify_sharing_incentive(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    alternatives: &[Alternative],
    revenue: SellerRevenue,
) -> Result<Option<(usize, usize)>, AuctionError> {
    if alternatives.is_empty() {
        return Err(AuctionError::Precondition("at least one alternative allocation is required"));
    }
    let tol = 1e-9;
    for j in 0..instance.asks.len() {
        let actual = seller_value(instance, outcome, &outcome.assignment, j, revenue);
        if actual < -tol {
            return Ok(Some((usize::MAX, j)));
        }
        for (k, alt) in alternatives.iter().enumerate() {
            if alt.assignment.len() != instance.bids.len() {
                return Err(AuctionError::Precondition("alternative must assign every bidder"));
            }
            if seller_value(instance, outcome, &alt.assignment, j, revenue) > actual + tol {
                return Ok(Some((k, j)));
            }
        }
    }
    Ok(None)
}

/// Random ways for servers to hold back cores they sold in `outcome`:
/// withholding the most recently admitted buyers, rationing a random subset
/// per server, or a lottery over all winners.
pub fn sample_sub_allocations(outcome: &AuctionOutcome, count: usize, rng: &mut ChaCha8Rng) -> Vec<Alternative> {
    let winners: Vec<usize> = outcome.winners().collect();
    let mut out = vec![Alternative { assignment: outcome.assignment.clone() }];
    while out.len() < count {
        let mut assignment = outcome.assignment.clone();
        match out.len() % 3 {
            0 => {
                let mut order = winners.clone();
                order.shuffle(rng);
                let keep = rng.random_range(0..=order.len());
                for &i in &order[keep..] {
                    assignment[i] = None;
                }
            }
            1 => {
                let servers: Vec<usize> = winners.iter().filter_map(|&i| outcome.assignment[i]).collect();
                if let Some(&j) = servers.get(rng.random_range(0..servers.len().max(1))) {
                    for &i in &winners {
                        if outcome.assignment[i] == Some(j) && rng.random::<bool>() {
                            assignment[i] = None;
                        }
                    }
                }
            }
            _ => {
                for &i in &winners {
                    if rng.random::<bool>() {
                        assignment[i] = None;
                    }
                }
            }
        }
        out.push(Alternative { assignment });
    }
    out
}
