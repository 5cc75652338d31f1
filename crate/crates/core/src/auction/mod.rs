//! The offloading double auction: UEs bid for edge-server cores, servers post
//! reserve prices, winners are chosen to maximize declared valuation and pay
//! Clarke-pivot (optionally incentive-discounted) prices. Reserve prices
//! screen budgets and sellers; they do not enter winner selection.

mod equilibrium;
mod export;
mod payments;
mod payoff;
mod response;
mod verify;
mod winners;

pub use equilibrium::{run_auction_round, run_to_equilibrium, EquilibriumReport, Fulfillment, MarketState, Player, RoundResult};
pub use export::{write_equilibrium_csv, write_outcome_csv, write_seller_csv};
pub use payments::{clarke_payment, incentive_payment, run_auction, seller_income};
pub use payoff::{buyer_payoff, seller_payoff, social_welfare};
pub use response::{best_response_buyer, best_response_seller, linspace, offload_decision, BestResponseGrid};
pub use verify::{
    sample_sub_allocations, verify_envy_free, verify_sharing_incentive, verify_truthfulness, Alternative,
    EnvyReading, EnvyViolation, Misreport,
};
pub use winners::determine_winners;

/// Payoffs of every bidder and every server, taking declared values as true.
pub fn participant_payoffs(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    cfg: &crate::model::SystemConfig,
) -> (Vec<f64>, Vec<f64>) {
    payoff::outcome_payoffs(instance, outcome, cfg)
}

/// Social welfare of `outcome`, taking declared values as true.
pub fn outcome_social_welfare(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    cfg: &crate::model::SystemConfig,
) -> f64 {
    payoff::outcome_welfare(instance, outcome, cfg)
}

/// A UE's sealed bid for one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuyerBid {
    pub ue_id: usize,
    /// Cores requested.
    pub demand: u32,
    /// Declared value for being served.
    pub valuation: f64,
    pub deadline: f64,
    pub budget: f64,
    pub participation: bool,
    pub offload_prob: f64,
    /// Latency if the task stays local; the cost a loser bears.
    pub local_latency: f64,
}

/// An edge server's ask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellerAsk {
    pub es_id: usize,
    /// Total cores installed.
    pub resource: u32,
    /// Posted price per core.
    pub reserve_price: f64,
    /// Cores on sale this round.
    pub available: u32,
    pub unit_cost: f64,
    pub participation: bool,
}

/// What serving a bid on a given server looks like.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms {
    /// Completion latency of the task when served here.
    pub offload_latency: f64,
    /// Offloaded fraction of the task.
    pub split: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionInstance {
    pub bids: Vec<BuyerBid>,
    pub asks: Vec<SellerAsk>,
    /// `links[i][j]` is `None` when bidder `i` cannot reach server `j`.
    pub links: Vec<Vec<Option<PairTerms>>>,
}

impl AuctionInstance {
    /// Every bidder reaches every server with the same terms.
    pub fn fully_linked(bids: Vec<BuyerBid>, asks: Vec<SellerAsk>, terms: PairTerms) -> Self {
        let links = vec![vec![Some(terms); asks.len()]; bids.len()];
        AuctionInstance { bids, asks, links }
    }

    /// Whether server `j` may serve bidder `i` at all, independent of what
    /// the others do.
    pub fn eligible(&self, i: usize, j: usize) -> bool {
        let b = &self.bids[i];
        let a = &self.asks[j];
        let Some(link) = self.links[i][j] else { return false };
        b.participation
            && a.participation
            && link.offload_latency <= b.deadline
            && b.demand <= a.available
            && f64::from(b.demand) * a.reserve_price <= b.budget
    }

    /// What `i` keeps of its declared value after paying `j`'s posted price
    /// for the cores.
    pub fn surplus(&self, i: usize, j: usize) -> f64 {
        self.bids[i].valuation - f64::from(self.bids[i].demand) * self.asks[j].reserve_price
    }

    pub(crate) fn with_valuation(&self, i: usize, valuation: f64) -> Self {
        let mut inst = self.clone();
        inst.bids[i].valuation = valuation;
        inst
    }
}

/// Clears participation flags of bidders with no usable server and of
/// servers with nothing to sell or a price below their cost.
pub fn screen_participants(instance: &mut AuctionInstance) {
    for a in &mut instance.asks {
        if a.available == 0 || a.unit_cost > a.reserve_price {
            a.participation = false;
        }
    }
    for i in 0..instance.bids.len() {
        let any = (0..instance.asks.len()).any(|j| instance.eligible(i, j));
        if !any {
            instance.bids[i].participation = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    /// Server assigned to each bidder, `None` for losers.
    pub assignment: Vec<Option<usize>>,
    pub payments: Vec<f64>,
    pub incomes: Vec<f64>,
    /// Bidders removed because their price exceeded their budget.
    pub demoted: Vec<usize>,
    pub declared_welfare: f64,
    pub social_welfare: f64,
}

impl AuctionOutcome {
    pub fn empty(num_bids: usize, num_asks: usize) -> Self {
        AuctionOutcome {
            assignment: vec![None; num_bids],
            payments: vec![0.0; num_bids],
            incomes: vec![0.0; num_asks],
            demoted: Vec::new(),
            declared_welfare: 0.0,
            social_welfare: 0.0,
        }
    }

    pub fn winners(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment.iter().enumerate().filter_map(|(i, a)| a.map(|_| i))
    }

    pub fn is_winner(&self, i: usize) -> bool {
        self.assignment.get(i).is_some_and(Option::is_some)
    }

    /// Cores sold by each server.
    pub fn units_sold(&self, instance: &AuctionInstance) -> Vec<u32> {
        let mut sold = vec![0; instance.asks.len()];
        for (i, a) in self.assignment.iter().enumerate() {
            if let Some(j) = a {
                sold[*j] += instance.bids[i].demand;
            }
        }
        sold
    }
}

/// Returns a description of every feasibility or accounting rule the outcome
/// breaks (empty when valid).
pub fn check_outcome(instance: &AuctionInstance, outcome: &AuctionOutcome) -> Vec<String> {
    let mut out = Vec::new();
    for (i, a) in outcome.assignment.iter().enumerate() {
        let pay = outcome.payments[i];
        match a {
            Some(j) => {
                if !instance.eligible(i, *j) {
                    out.push(format!("bidder {i} placed on ineligible server {j}"));
                }
                if pay < 0.0 {
                    out.push(format!("bidder {i} pays {pay} < 0"));
                }
                if pay > instance.bids[i].budget {
                    out.push(format!("bidder {i} pays {pay} over budget {}", instance.bids[i].budget));
                }
            }
            None => {
                if pay != 0.0 {
                    out.push(format!("loser {i} charged {pay}"));
                }
            }
        }
    }
    let sold = outcome.units_sold(instance);
    for (j, a) in instance.asks.iter().enumerate() {
        if sold[j] > a.available {
            out.push(format!("server {j} sold {} of {} cores", sold[j], a.available));
        }
        if sold[j] > 0 && !a.participation {
            out.push(format!("non-participating server {j} sold cores"));
        }
    }
    let total_sold: u32 = sold.iter().sum();
    let supply: u32 = instance.asks.iter().filter(|a| a.participation).map(|a| a.available).sum();
    if total_sold > supply {
        out.push(format!("total demand {total_sold} exceeds supply {supply}"));
    }
    let paid: f64 = outcome.payments.iter().sum();
    let earned: f64 = outcome.incomes.iter().sum();
    if (paid - earned).abs() > 1e-9 * paid.abs().max(1.0) {
        out.push(format!("payments {paid} differ from incomes {earned}"));
    }
    out
}
