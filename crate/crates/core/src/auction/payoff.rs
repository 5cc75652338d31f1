use super::{AuctionInstance, AuctionOutcome, BuyerBid, PairTerms, SellerAsk};
use crate::model::{SellerRevenue, SystemConfig};

/// Risk-adjusted payoff of a bidder whose true value is `true_value`.
/// `served` carries the terms of the server it won, `None` for a loser.
/// The variance term comes from the Bernoulli participation draw.
pub fn buyer_payoff(bid: &BuyerBid, true_value: f64, served: Option<PairTerms>, payment: f64, cfg: &SystemConfig) -> f64 {
    let Some(terms) = served else { return 0.0 };
    if !bid.participation {
        return 0.0;
    }
    let q = bid.offload_prob;
    let utility = q * (true_value - payment);
    let cost = cfg.latency_weight * terms.offload_latency + cfg.price_weight * payment;
    utility - cfg.risk_weight * q * (1.0 - q) * cost * cost
}

/// Seller payoff: revenue on the cores sold less their operating cost.
pub fn seller_payoff(ask: &SellerAsk, units_sold: u32, income: f64, cfg: &SystemConfig) -> f64 {
    if !ask.participation || units_sold == 0 {
        return 0.0;
    }
    let units = f64::from(units_sold);
    let revenue = match cfg.seller_revenue {
        SellerRevenue::Income => income,
        SellerRevenue::AskPrice => ask.reserve_price * units,
    };
    // participation is deterministic for sellers, so the variance term vanishes
    revenue - ask.unit_cost * units
}

pub fn social_welfare(buyer_payoffs: &[f64], seller_payoffs: &[f64]) -> f64 {
    buyer_payoffs.iter().sum::<f64>() + seller_payoffs.iter().sum::<f64>()
}

/// Payoffs of every bidder and server, taking declared values as true.
pub(crate) fn outcome_payoffs(inst: &AuctionInstance, outcome: &AuctionOutcome, cfg: &SystemConfig) -> (Vec<f64>, Vec<f64>) {
    let buyers = inst
        .bids
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let served = outcome.assignment[i].and_then(|j| inst.links[i][j]);
            buyer_payoff(b, b.valuation, served, outcome.payments[i], cfg)
        })
        .collect();
    let sold = outcome.units_sold(inst);
    let sellers = inst
        .asks
        .iter()
        .enumerate()
        .map(|(j, a)| seller_payoff(a, sold[j], outcome.incomes[j], cfg))
        .collect();
    (buyers, sellers)
}

pub(crate) fn outcome_welfare(inst: &AuctionInstance, outcome: &AuctionOutcome, cfg: &SystemConfig) -> f64 {
    let (b, s) = outcome_payoffs(inst, outcome, cfg);
    social_welfare(&b, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bid(q: f64) -> BuyerBid {
        BuyerBid {
            ue_id: 0,
            demand: 1,
            valuation: 10.0,
            deadline: 1.0,
            budget: 100.0,
            participation: true,
            offload_prob: q,
            local_latency: 3.0,
        }
    }

    fn ask(p: f64, c: f64) -> SellerAsk {
        SellerAsk {
            es_id: 0,
            resource: 8,
            reserve_price: p,
            available: 8,
            unit_cost: c,
            participation: c <= p,
        }
    }

    #[test]
    fn deterministic_participation_has_no_risk() {
        let mut cfg = SystemConfig::default();
        cfg.risk_weight = 3.0;
        let terms = PairTerms { offload_latency: 2.0, split: 1.0 };
        assert_eq!(buyer_payoff(&bid(1.0), 10.0, Some(terms), 0.0, &cfg), 10.0);
        assert_eq!(buyer_payoff(&bid(1.0), 10.0, None, 0.0, &cfg), 0.0);
    }

    #[test]
    fn bernoulli_variance_penalty() {
        // C = w1 * 8 = 4 with w1 = 1/2 and no payment
        let mut cfg = SystemConfig::default();
        cfg.risk_weight = 1.0;
        let terms = PairTerms { offload_latency: 8.0, split: 1.0 };
        let p = buyer_payoff(&bid(0.5), 10.0, Some(terms), 0.0, &cfg);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seller_profit() {
        let mut cfg = SystemConfig::default();
        cfg.seller_revenue = SellerRevenue::AskPrice;
        assert_eq!(seller_payoff(&ask(1.0, 0.25), 4, 0.0, &cfg), 3.0);
        assert_eq!(seller_payoff(&ask(1.0, 0.25), 0, 0.0, &cfg), 0.0);
        assert_eq!(seller_payoff(&ask(1.0, 2.0), 4, 4.0, &cfg), 0.0);
    }

    #[test]
    fn transfers_cancel() {
        // buyer value 10 pays 7; seller cost 2 earns 7
        assert_eq!(social_welfare(&[10.0 - 7.0], &[7.0 - 2.0]), 8.0);
        assert_eq!(social_welfare(&[], &[]), 0.0);
    }
}
