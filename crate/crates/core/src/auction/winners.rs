use super::{AuctionInstance, AuctionOutcome};
use crate::model::WinnerMode;

/// Per-pair value used by the allocator. Plain valuations, or valuations
/// discounted by the offloaded share of the pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Valuer {
    pub lambda: f64,
}

impl Valuer {
    pub const PLAIN: Valuer = Valuer { lambda: 0.0 };

    /// Value of serving `i` on `j`.
    pub fn value(&self, inst: &AuctionInstance, i: usize, j: usize) -> f64 {
        let split = inst.links[i][j].map_or(0.0, |l| l.split);
        (1.0 - self.lambda * split) * inst.bids[i].valuation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Allocation {
    pub assign: Vec<Option<usize>>,
    pub welfare: f64,
}

/// Sums value over assigned bidders in index order, skipping `skip`.
pub(crate) fn welfare_of(inst: &AuctionInstance, assign: &[Option<usize>], valuer: Valuer, skip: Option<usize>) -> f64 {
    assign
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .filter_map(|(i, a)| a.map(|j| valuer.value(inst, i, j)))
        .sum()
}

struct Candidate {
    bidder: usize,
    demand: u32,
    /// (server, value) by value descending, then offload latency.
    options: Vec<(usize, f64)>,
}

impl Candidate {
    fn best(&self) -> f64 {
        self.options[0].1
    }
}

fn latency(inst: &AuctionInstance, i: usize, j: usize) -> f64 {
    inst.links[i][j].map_or(f64::INFINITY, |l| l.offload_latency)
}

fn candidates(inst: &AuctionInstance, valuer: Valuer, skip: Option<usize>) -> Vec<Candidate> {
    let mut out = Vec::new();
    for i in 0..inst.bids.len() {
        if Some(i) == skip || !inst.bids[i].participation {
            continue;
        }
        let mut options: Vec<(usize, f64)> = (0..inst.asks.len())
            .filter(|&j| inst.eligible(i, j))
            .map(|j| (j, valuer.value(inst, i, j)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        if options.is_empty() {
            continue;
        }
        options.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then(latency(inst, i, a.0).total_cmp(&latency(inst, i, b.0)))
                .then(a.0.cmp(&b.0))
        });
        out.push(Candidate { bidder: i, demand: inst.bids[i].demand, options });
    }
    out
}

/// Everyone on their favourite server, if that fits.
fn unconstrained(cands: &[Candidate], capacity: &[u32], n: usize) -> Option<Vec<Option<usize>>> {
    let mut used = vec![0u32; capacity.len()];
    let mut assign = vec![None; n];
    for c in cands {
        let j = c.options[0].0;
        used[j] += c.demand;
        if used[j] > capacity[j] {
            return None;
        }
        assign[c.bidder] = Some(j);
    }
    Some(assign)
}

struct Search<'a> {
    cands: &'a [Candidate],
    remaining: Vec<u32>,
    current: Vec<Option<usize>>,
    best: f64,
    best_assign: Vec<Option<usize>>,
    slack: f64,
}

impl Search<'_> {
    /// Fractional-knapsack bound over candidates from `depth` on, against the
    /// pooled remaining capacity. Candidates are sorted by value per core.
    fn bound(&self, depth: usize) -> f64 {
        let mut room = f64::from(self.remaining.iter().sum::<u32>());
        let mut total = 0.0;
        for c in &self.cands[depth..] {
            if c.demand == 0 {
                total += c.best();
                continue;
            }
            let d = f64::from(c.demand);
            if d <= room {
                total += c.best();
                room -= d;
            } else {
                total += c.best() * room / d;
                break;
            }
        }
        total
    }

    fn dfs(&mut self, depth: usize, value: f64) {
        if depth == self.cands.len() {
            if value > self.best {
                self.best = value;
                self.best_assign.clone_from(&self.current);
            }
            return;
        }
        if value + self.bound(depth) + self.slack <= self.best {
            return;
        }
        let c = &self.cands[depth];
        for k in 0..c.options.len() {
            let (j, s) = c.options[k];
            if self.remaining[j] < c.demand {
                continue;
            }
            self.remaining[j] -= c.demand;
            self.current[c.bidder] = Some(j);
            self.dfs(depth + 1, value + s);
            self.current[c.bidder] = None;
            self.remaining[j] += c.demand;
        }
        self.dfs(depth + 1, value);
    }
}

fn capacities(inst: &AuctionInstance) -> Vec<u32> {
    inst.asks.iter().map(|a| if a.participation { a.available } else { 0 }).collect()
}

fn exact(inst: &AuctionInstance, valuer: Valuer, skip: Option<usize>) -> Vec<Option<usize>> {
    let mut cands = candidates(inst, valuer, skip);
    let capacity = capacities(inst);
    if let Some(assign) = unconstrained(&cands, &capacity, inst.bids.len()) {
        return assign;
    }
    let density = |c: &Candidate| if c.demand == 0 { f64::INFINITY } else { c.best() / f64::from(c.demand) };
    cands.sort_by(|a, b| density(b).total_cmp(&density(a)).then(a.bidder.cmp(&b.bidder)));
    let scale: f64 = cands.iter().map(Candidate::best).sum();
    let mut search = Search {
        cands: &cands,
        remaining: capacity,
        current: vec![None; inst.bids.len()],
        best: 0.0,
        best_assign: vec![None; inst.bids.len()],
        slack: 1e-9 * scale.max(1.0),
    };
    search.dfs(0, 0.0);
    search.best_assign
}

fn greedy(inst: &AuctionInstance, valuer: Valuer, skip: Option<usize>) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..inst.bids.len())
        .filter(|&i| Some(i) != skip && inst.bids[i].participation)
        .collect();
    let bids = &inst.bids;
    order.sort_by(|&a, &b| {
        bids[b]
            .valuation
            .total_cmp(&bids[a].valuation)
            .then(bids[a].deadline.total_cmp(&bids[b].deadline))
            .then(bids[a].ue_id.cmp(&bids[b].ue_id))
            .then(a.cmp(&b))
    });
    let mut remaining = capacities(inst);
    let mut assign = vec![None; inst.bids.len()];
    for i in order {
        let mut pick: Option<(usize, f64, f64)> = None;
        for j in 0..inst.asks.len() {
            if !inst.eligible(i, j) || remaining[j] < bids[i].demand {
                continue;
            }
            let s = valuer.value(inst, i, j);
            let l = latency(inst, i, j);
            if s > 0.0 && pick.is_none_or(|(_, best, bl)| s > best || (s == best && l < bl)) {
                pick = Some((j, s, l));
            }
        }
        if let Some((j, _, _)) = pick {
            remaining[j] -= bids[i].demand;
            assign[i] = Some(j);
        }
    }
    assign
}

/// Value-maximizing allocation with `skip` left out.
pub(crate) fn allocate(inst: &AuctionInstance, valuer: Valuer, skip: Option<usize>, mode: WinnerMode) -> Allocation {
    let assign = match mode {
        WinnerMode::Exact => exact(inst, valuer, skip),
        WinnerMode::Greedy => greedy(inst, valuer, skip),
    };
    let welfare = welfare_of(inst, &assign, valuer, None);
    Allocation { assign, welfare }
}

/// Chooses winners and their servers. Exact mode maximizes total declared
/// valuation with one server per winner and per-server capacity; greedy mode
/// serves bids in descending valuation order. Among equally valued servers a
/// winner gets the one with the lowest offload latency. Payments are left at
/// zero.
pub fn determine_winners(instance: &AuctionInstance, mode: WinnerMode) -> AuctionOutcome {
    let alloc = allocate(instance, Valuer::PLAIN, None, mode);
    AuctionOutcome {
        assignment: alloc.assign,
        declared_welfare: alloc.welfare,
        ..AuctionOutcome::empty(instance.bids.len(), instance.asks.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{BuyerBid, PairTerms, SellerAsk};

    fn bid(id: usize, v: f64, demand: u32, deadline: f64) -> BuyerBid {
        BuyerBid {
            ue_id: id,
            demand,
            valuation: v,
            deadline,
            budget: 1e9,
            participation: true,
            offload_prob: 1.0,
            local_latency: 5.0,
        }
    }

    fn ask(id: usize, available: u32) -> SellerAsk {
        SellerAsk {
            es_id: id,
            resource: available,
            reserve_price: 0.0,
            available,
            unit_cost: 0.0,
            participation: true,
        }
    }

    const TERMS: PairTerms = PairTerms { offload_latency: 0.001, split: 1.0 };

    #[test]
    fn higher_value_wins_single_slot() {
        let inst = AuctionInstance::fully_linked(vec![bid(0, 10.0, 1, 1.0), bid(1, 7.0, 1, 1.0)], vec![ask(0, 1)], TERMS);
        for mode in [WinnerMode::Exact, WinnerMode::Greedy] {
            let out = determine_winners(&inst, mode);
            assert_eq!(out.assignment, vec![Some(0), None]);
        }
    }

    #[test]
    fn greedy_ties_go_to_tighter_deadline() {
        let inst = AuctionInstance::fully_linked(
            vec![bid(0, 10.0, 1, 0.075), bid(1, 10.0, 1, 0.010)],
            vec![ask(0, 1)],
            TERMS,
        );
        let out = determine_winners(&inst, WinnerMode::Greedy);
        assert_eq!(out.assignment, vec![None, Some(0)]);
    }

    #[test]
    fn exact_beats_greedy_on_knapsack_trap() {
        // one big bid blocks two smaller ones that together are worth more
        let inst = AuctionInstance::fully_linked(
            vec![bid(0, 10.0, 2, 1.0), bid(1, 6.0, 1, 1.0), bid(2, 6.0, 1, 1.0)],
            vec![ask(0, 2)],
            TERMS,
        );
        assert_eq!(determine_winners(&inst, WinnerMode::Exact).declared_welfare, 12.0);
        assert_eq!(determine_winners(&inst, WinnerMode::Greedy).declared_welfare, 10.0);
    }

    #[test]
    fn nothing_feasible_gives_empty_outcome() {
        let inst = AuctionInstance::fully_linked(vec![bid(0, 10.0, 3, 1.0)], vec![ask(0, 2)], TERMS);
        let out = determine_winners(&inst, WinnerMode::Exact);
        assert_eq!(out.winners().count(), 0);
        assert_eq!(out.declared_welfare, 0.0);
    }
}
