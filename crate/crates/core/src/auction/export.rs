use std::io::Write;

use super::{payoff, AuctionInstance, AuctionOutcome, EquilibriumReport};
use crate::model::SystemConfig;

/// One row per bidder: `ue_id,es_id,demand_units,valuation,payment,payoff`.
/// Losers have an empty `es_id`.
pub fn write_outcome_csv<W: Write>(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    cfg: &SystemConfig,
    out: W,
) -> csv::Result<()> {
    let (buyers, _) = payoff::outcome_payoffs(instance, outcome, cfg);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ue_id", "es_id", "demand_units", "valuation", "payment", "payoff"])?;
    for (i, b) in instance.bids.iter().enumerate() {
        let es = outcome.assignment[i].map(|j| instance.asks[j].es_id.to_string()).unwrap_or_default();
        let units = if outcome.is_winner(i) { b.demand } else { 0 };
        w.write_record([
            b.ue_id.to_string(),
            es,
            units.to_string(),
            b.valuation.to_string(),
            outcome.payments[i].to_string(),
            buyers[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per server: `es_id,units_sold,income,cost,payoff`.
pub fn write_seller_csv<W: Write>(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    cfg: &SystemConfig,
    out: W,
) -> csv::Result<()> {
    let (_, sellers) = payoff::outcome_payoffs(instance, outcome, cfg);
    let sold = outcome.units_sold(instance);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["es_id", "units_sold", "income", "cost", "payoff"])?;
    for (j, a) in instance.asks.iter().enumerate() {
        w.write_record([
            a.es_id.to_string(),
            sold[j].to_string(),
            outcome.incomes[j].to_string(),
            (a.unit_cost * f64::from(sold[j])).to_string(),
            sellers[j].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `iteration,mean_bid,mean_price,total_cost,welfare,max_deviation_gain`.
pub fn write_equilibrium_csv<W: Write>(report: &EquilibriumReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "mean_bid", "mean_price", "total_cost", "welfare", "max_deviation_gain"])?;
    for k in 0..report.cost_trace.len() {
        let gain = report.gain_trace[k];
        w.write_record([
            k.to_string(),
            report.bid_trace[k].to_string(),
            report.price_trace[k].to_string(),
            report.cost_trace[k].to_string(),
            report.welfare_trace[k].to_string(),
            if gain.is_nan() { String::new() } else { gain.to_string() },
        ])?;
    }
    w.flush()?;
    Ok(())
}
