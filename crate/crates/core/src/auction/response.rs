use super::{payoff, run_auction, AuctionInstance};
use crate::error::AuctionError;
use crate::model::SystemConfig;

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Finite strategy spaces searched by the best-response steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseGrid {
    pub valuations: Vec<f64>,
    pub prices: Vec<f64>,
}

fn increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

impl BestResponseGrid {
    pub fn new(valuations: Vec<f64>, prices: Vec<f64>) -> Result<Self, AuctionError> {
        if !increasing(&valuations) || !increasing(&prices) {
            return Err(AuctionError::BadGrid);
        }
        Ok(BestResponseGrid { valuations, prices })
    }
}

/// Offload when the summed values cover the summed prices.
pub fn offload_decision(valuations: &[f64], prices: &[f64]) -> bool {
    valuations.iter().sum::<f64>() >= prices.iter().sum::<f64>()
}

/// Payoff to bidder `i`, valuing service at `true_value`, when it declares
/// `declared` and everyone else keeps their bid.
pub(crate) fn payoff_if_declaring(
    instance: &AuctionInstance,
    i: usize,
    true_value: f64,
    declared: f64,
    cfg: &SystemConfig,
) -> Result<f64, AuctionError> {
    let inst = instance.with_valuation(i, declared);
    let out = run_auction(&inst, cfg)?;
    let served = out.assignment[i].and_then(|j| inst.links[i][j]);
    Ok(payoff::buyer_payoff(&inst.bids[i], true_value, served, out.payments[i], cfg))
}

/// Grid valuation maximizing bidder `i`'s payoff with others fixed; ties go
/// to the smallest valuation.
pub fn best_response_buyer(
    instance: &AuctionInstance,
    i: usize,
    true_value: f64,
    grid: &BestResponseGrid,
    cfg: &SystemConfig,
) -> Result<f64, AuctionError> {
    let mut best: Option<(f64, f64)> = None;
    for &v in &grid.valuations {
        let p = payoff_if_declaring(instance, i, true_value, v, cfg)?;
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((v, p));
        }
    }
    Ok(best.map(|(v, _)| v).unwrap_or(grid.valuations[0]))
}

/// `instance` with server `j` posting `price`.
pub(crate) fn with_price(instance: &AuctionInstance, j: usize, price: f64) -> AuctionInstance {
    let mut inst = instance.clone();
    let a = &mut inst.asks[j];
    a.reserve_price = price;
    a.participation = a.available > 0 && a.unit_cost <= price;
    inst
}

pub(crate) fn seller_payoff_at(instance: &AuctionInstance, j: usize, price: f64, cfg: &SystemConfig) -> Result<f64, AuctionError> {
    let inst = with_price(instance, j, price);
    let out = run_auction(&inst, cfg)?;
    let sold = out.units_sold(&inst);
    Ok(payoff::seller_payoff(&inst.asks[j], sold[j], out.incomes[j], cfg))
}

/// Grid price maximizing server `j`'s payoff with everything else fixed;
/// ties go to the lowest price.
pub fn best_response_seller(
    instance: &AuctionInstance,
    j: usize,
    grid: &BestResponseGrid,
    cfg: &SystemConfig,
) -> Result<f64, AuctionError> {
    let mut best: Option<(f64, f64)> = None;
    for &p in &grid.prices {
        let payoff = seller_payoff_at(instance, j, p, cfg)?;
        if best.is_none_or(|(_, bp)| payoff > bp) {
            best = Some((p, payoff));
        }
    }
    Ok(best.map(|(p, _)| p).unwrap_or(grid.prices[0]))
}
