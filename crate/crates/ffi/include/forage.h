#ifndef FORAGE_H
#define FORAGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum ForageStatus {
  FORAGE_STATUS_OK = 0,
  FORAGE_STATUS_NULL_POINTER = 1,
  /**
   * A field is out of range or a scenario file does not parse.
   */
  FORAGE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The call does not apply to this scenario (regime, alpha, safe project).
   */
  FORAGE_STATUS_PRECONDITION = 3,
  FORAGE_STATUS_INTERNAL = 4,
} ForageStatus;

/**
 * Opaque policy handle.
 */
typedef struct ForagePolicy ForagePolicy;

/**
 * Opaque scenario handle.
 */
typedef struct ForageScenario ForageScenario;

/**
 * One project: prior probability of being good, flow reward when good,
 * and news rates in the good and bad state.
 */
typedef struct ForageProject {
  double prior;
  double reward;
  double rate_good;
  double rate_bad;
} ForageProject;

typedef struct ForageAllocation {
  double explore_low;
  double explore_high;
  double exploit_low;
  double exploit_high;
} ForageAllocation;

typedef struct ForageMonteCarlo {
  double mean;
  double std_error;
  uint64_t n_paths;
  double horizon;
  double tail_bound;
} ForageMonteCarlo;

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *forage_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *forage_version(void);

/**
 * Validate and build a scenario. `*out` receives a handle to free with
 * [`forage_scenario_free`].
 *
 * # Safety
 * `low`, `high` and `out` must be valid pointers or null.
 */
enum ForageStatus forage_scenario_new(const struct ForageProject *low,
                                      const struct ForageProject *high,
                                      double discount,
                                      double alpha,
                                      struct ForageScenario **out);

/**
 * Build a scenario from the text of a TOML scenario file.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer or null.
 */
enum ForageStatus forage_scenario_from_toml(const char *text, struct ForageScenario **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void forage_scenario_free(struct ForageScenario *s);

/**
 * Posterior cutoff above which the risky project is exploited, for a
 * scenario whose low project is safe.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum ForageStatus forage_cutoff(const struct ForageScenario *s, double *out);

/**
 * Closed-form payoffs at prior `p_high` with and without entanglement for
 * a safe low project and pure news.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum ForageStatus forage_payoffs(const struct ForageScenario *s,
                                 double p_high,
                                 double *pi_alpha0,
                                 double *pi_alpha1);

/**
 * Exploitation threshold read off a dynamic-programming solve with `grid`
 * cells, for a safe low project.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum ForageStatus forage_oracle_threshold(const struct ForageScenario *s,
                                          uint32_t grid,
                                          double *out);

/**
 * Optimal policy for the scenario.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum ForageStatus forage_policy_new(const struct ForageScenario *s, struct ForagePolicy **out);

/**
 * # Safety
 * `p` must come from this library and not be freed twice. Null is ignored.
 */
void forage_policy_free(struct ForagePolicy *p);

/**
 * Allocation at beliefs `(p_low, p_high)` after `clock` units without news.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum ForageStatus forage_policy_decide(const struct ForagePolicy *p,
                                       double p_low,
                                       double p_high,
                                       double clock,
                                       struct ForageAllocation *out);

/**
 * Monte Carlo payoff over `n_paths` seeded paths with horizon `30 / r`.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum ForageStatus forage_monte_carlo(const struct ForagePolicy *p,
                                     uint64_t n_paths,
                                     uint64_t seed,
                                     struct ForageMonteCarlo *out);

#endif  /* FORAGE_H */
