#ifndef OFFLOAD_AUCTION_H
#define OFFLOAD_AUCTION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OaStatus {
  OA_STATUS_OK = 0,
  OA_STATUS_NULL_POINTER = 1,
  OA_STATUS_INVALID_ARGUMENT = 2,
  OA_STATUS_OUT_OF_RANGE = 3,
  OA_STATUS_CONFIG = 4,
  OA_STATUS_AUCTION = 5,
  OA_STATUS_PANIC = 6,
} OaStatus;

/**
 * An auction under construction: bids, asks and the links between them.
 */
typedef struct OaAuction OaAuction;

/**
 * Simulation and mechanism settings.
 */
typedef struct OaConfig OaConfig;

/**
 * The result of running an auction.
 */
typedef struct OaOutcome OaOutcome;

/**
 * A UE's bid for one task.
 */
typedef struct OaBid {
  size_t ue_id;
  /**
   * Cores requested.
   */
  uint32_t demand;
  double valuation;
  /**
   * Seconds.
   */
  double deadline;
  double budget;
  bool participation;
  double offload_prob;
  /**
   * Latency if the task stays local, in seconds.
   */
  double local_latency;
} OaBid;

/**
 * An edge server's offer.
 */
typedef struct OaAsk {
  size_t es_id;
  uint32_t resource;
  /**
   * Posted price per core.
   */
  double reserve_price;
  uint32_t available;
  double unit_cost;
  bool participation;
} OaAsk;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *oa_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *oa_version(void);

/**
 * Built-in default settings. Never returns NULL.
 */
struct OaConfig *oa_config_default(void);

/**
 * Parses and validates a TOML document; keys left out keep their defaults.
 *
 * # Safety
 * `toml` must be NULL or a NUL-terminated string; `out` must be NULL or
 * point to writable storage for one handle.
 */
enum OaStatus oa_config_from_toml(const char *toml, struct OaConfig **out);

/**
 * # Safety
 * `config` must be NULL or a handle from this library not yet freed.
 */
void oa_config_free(struct OaConfig *config);

/**
 * An empty auction. Never returns NULL.
 */
struct OaAuction *oa_auction_new(void);

/**
 * # Safety
 * `auction` must be NULL or a handle from this library not yet freed.
 */
void oa_auction_free(struct OaAuction *auction);

/**
 * Appends a bid, initially linked to no server. Its index is written to
 * `index` when that is not NULL.
 *
 * # Safety
 * `auction` and `bid` must be valid pointers; `index` may be NULL.
 */
enum OaStatus oa_auction_add_bid(struct OaAuction *auction, const struct OaBid *bid, size_t *index);

/**
 * Appends an ask, initially linked to no bidder. Its index is written to
 * `index` when that is not NULL.
 *
 * # Safety
 * `auction` and `ask` must be valid pointers; `index` may be NULL.
 */
enum OaStatus oa_auction_add_ask(struct OaAuction *auction, const struct OaAsk *ask, size_t *index);

/**
 * Lets bidder `bid` be served by server `ask` with the given completion
 * latency (seconds) and offloaded fraction.
 *
 * # Safety
 * `auction` must be a valid handle.
 */
enum OaStatus oa_auction_link(struct OaAuction *auction,
                              size_t bid,
                              size_t ask,
                              double offload_latency,
                              double split);

/**
 * Screens participants and runs one auction under `config`.
 *
 * # Safety
 * `auction` and `config` must be valid handles; `out` must point to
 * writable storage for one handle.
 */
enum OaStatus oa_auction_run(const struct OaAuction *auction,
                             const struct OaConfig *config,
                             struct OaOutcome **out);

/**
 * # Safety
 * `outcome` must be NULL or a handle from this library not yet freed.
 */
void oa_outcome_free(struct OaOutcome *outcome);

/**
 * Server index assigned to bidder `bid`, or -1 when it lost.
 *
 * # Safety
 * `outcome` must be a valid handle and `server` writable.
 */
enum OaStatus oa_outcome_server(const struct OaOutcome *outcome, size_t bid, int64_t *server);

/**
 * Payment of bidder `bid` (zero for losers).
 *
 * # Safety
 * `outcome` must be a valid handle and `payment` writable.
 */
enum OaStatus oa_outcome_payment(const struct OaOutcome *outcome, size_t bid, double *payment);

/**
 * Income collected by server `ask`.
 *
 * # Safety
 * `outcome` must be a valid handle and `income` writable.
 */
enum OaStatus oa_outcome_income(const struct OaOutcome *outcome, size_t ask, double *income);

/**
 * Sum of every participant's payoff.
 *
 * # Safety
 * `outcome` must be a valid handle and `welfare` writable.
 */
enum OaStatus oa_outcome_social_welfare(const struct OaOutcome *outcome, double *welfare);

/**
 * Total declared valuation of the winners.
 *
 * # Safety
 * `outcome` must be a valid handle and `welfare` writable.
 */
enum OaStatus oa_outcome_declared_welfare(const struct OaOutcome *outcome, double *welfare);

/**
 * Number of winners removed for exceeding their budget.
 *
 * # Safety
 * `outcome` must be a valid handle and `count` writable.
 */
enum OaStatus oa_outcome_demoted_count(const struct OaOutcome *outcome, size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OFFLOAD_AUCTION_H */
