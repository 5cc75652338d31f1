use super::winners::{allocate, welfare_of, Valuer};
use super::{payoff, AuctionInstance, AuctionOutcome};
use crate::error::AuctionError;
use crate::model::{PaymentRule, SystemConfig, WinnerMode};

/// The value winner `i`'s presence costs everyone else, under `valuer`.
fn pivot_payment(
    inst: &AuctionInstance,
    outcome: &AuctionOutcome,
    i: usize,
    valuer: Valuer,
    mode: WinnerMode,
) -> Result<f64, AuctionError> {
    if outcome.assignment.get(i).copied().flatten().is_none() {
        return Err(AuctionError::NotAWinner(i));
    }
    let without = allocate(inst, valuer, Some(i), mode).welfare;
    let with = welfare_of(inst, &outcome.assignment, valuer, Some(i));
    let pay = without - with;
    Ok(match mode {
        WinnerMode::Exact => pay,
        // the greedy allocator is not monotone, so the pivot can leave [0, v]
        WinnerMode::Greedy => pay.clamp(0.0, inst.bids[i].valuation),
    })
}

/// Clarke-pivot price of winner `i`.
pub fn clarke_payment(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    i: usize,
    mode: WinnerMode,
) -> Result<f64, AuctionError> {
    pivot_payment(instance, outcome, i, Valuer::PLAIN, mode)
}

/// Clarke pivot with every other bidder's value discounted by
/// `1 - lambda * split`, so bidders pay less for externalities on heavily
/// offloaded tasks.
pub fn incentive_payment(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    i: usize,
    lambda: f64,
    mode: WinnerMode,
) -> Result<f64, AuctionError> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(AuctionError::IncentiveFactor(lambda));
    }
    pivot_payment(instance, outcome, i, Valuer { lambda }, mode)
}

/// Income of each server: the payments of the winners it serves.
pub fn seller_income(instance: &AuctionInstance, outcome: &AuctionOutcome) -> Vec<f64> {
    let mut income = vec![0.0; instance.asks.len()];
    for (i, a) in outcome.assignment.iter().enumerate() {
        if let Some(j) = a {
            income[*j] += outcome.payments[i];
        }
    }
    income
}

fn price_all(inst: &AuctionInstance, outcome: &mut AuctionOutcome, cfg: &SystemConfig) -> Result<(), AuctionError> {
    let lambda = match cfg.payment_rule {
        PaymentRule::Clarke => 0.0,
        PaymentRule::Incentive => cfg.incentive_factor,
    };
    let winners: Vec<usize> = outcome.winners().collect();
    for i in winners {
        outcome.payments[i] = match cfg.payment_rule {
            PaymentRule::Clarke => clarke_payment(inst, outcome, i, cfg.winner_mode)?,
            PaymentRule::Incentive => incentive_payment(inst, outcome, i, lambda, cfg.winner_mode)?,
        };
    }
    Ok(())
}

/// One complete auction: winner determination, payments under the
/// configured rule, removal of winners priced above their budget (repeated
/// until no one is), server incomes and welfare.
pub fn run_auction(instance: &AuctionInstance, cfg: &SystemConfig) -> Result<AuctionOutcome, AuctionError> {
    let mut inst = instance.clone();
    let mut demoted = Vec::new();
    let mut outcome = loop {
        let alloc = allocate(&inst, Valuer::PLAIN, None, cfg.winner_mode);
        let mut outcome = AuctionOutcome {
            assignment: alloc.assign,
            declared_welfare: alloc.welfare,
            ..AuctionOutcome::empty(inst.bids.len(), inst.asks.len())
        };
        price_all(&inst, &mut outcome, cfg)?;
        let over: Vec<usize> = outcome
            .winners()
            .filter(|&i| outcome.payments[i] > inst.bids[i].budget)
            .collect();
        if over.is_empty() {
            break outcome;
        }
        for i in over {
            inst.bids[i].participation = false;
            demoted.push(i);
        }
    };
    demoted.sort_unstable();
    outcome.demoted = demoted;
    outcome.incomes = seller_income(&inst, &outcome);
    outcome.social_welfare = payoff::outcome_welfare(instance, &outcome, cfg);
    Ok(outcome)
}
