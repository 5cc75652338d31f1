#include <stdio.h>

#include "offload_auction.h"

static int check(OaStatus s, const char *what) {
    if (s != OA_STATUS_OK) {
        const char *msg = oa_last_error();
        fprintf(stderr, "%s: status %d: %s\n", what, (int)s, msg ? msg : "(none)");
        return 1;
    }
    return 0;
}

int main(void) {
    OaConfig *cfg = NULL;
    if (check(oa_config_from_toml("winner_mode = \"exact\"", &cfg), "config")) return 1;

    OaAuction *a = oa_auction_new();
    OaAsk server = {.es_id = 0, .resource = 1, .reserve_price = 0.0, .available = 1, .unit_cost = 0.0, .participation = true};
    OaBid bid = {.ue_id = 0, .demand = 1, .valuation = 10.0, .deadline = 1.0, .budget = 100.0,
                 .participation = true, .offload_prob = 1.0, .local_latency = 5.0};
    size_t j, i0, i1;
    if (check(oa_auction_add_ask(a, &server, &j), "ask")) return 1;
    if (check(oa_auction_add_bid(a, &bid, &i0), "bid 0")) return 1;
    bid.ue_id = 1;
    bid.valuation = 7.0;
    if (check(oa_auction_add_bid(a, &bid, &i1), "bid 1")) return 1;
    if (check(oa_auction_link(a, i0, j, 0.1, 1.0), "link 0")) return 1;
    if (check(oa_auction_link(a, i1, j, 0.1, 1.0), "link 1")) return 1;

    OaOutcome *out = NULL;
    if (check(oa_auction_run(a, cfg, &out), "run")) return 1;
    int64_t s0, s1;
    double pay, income;
    if (check(oa_outcome_server(out, i0, &s0), "server 0")) return 1;
    if (check(oa_outcome_server(out, i1, &s1), "server 1")) return 1;
    if (check(oa_outcome_payment(out, i0, &pay), "payment")) return 1;
    if (check(oa_outcome_income(out, j, &income), "income")) return 1;
    printf("%lld %lld %.3f %.3f\n", (long long)s0, (long long)s1, pay, income);

    if (oa_outcome_payment(out, 9, &pay) != OA_STATUS_OUT_OF_RANGE) return 2;

    oa_outcome_free(out);
    oa_auction_free(a);
    oa_config_free(cfg);
    return 0;
}
