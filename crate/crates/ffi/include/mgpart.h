#ifndef MGPART_H
#define MGPART_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MgStatus {
  MG_STATUS_OK = 0,
  MG_STATUS_NULL_POINTER = 1,
  MG_STATUS_INVALID_UTF8 = 2,
  // Malformed network, scenarios, solution or option values.
  MG_STATUS_INVALID_INPUT = 3,
  // The solver proved there is no feasible partition.
  MG_STATUS_INFEASIBLE = 4,
  // Time limit reached before any feasible partition was found.
  MG_STATUS_TIME_LIMIT = 5,
  // Solver or re-verification failure.
  MG_STATUS_SOLVER_ERROR = 6,
  MG_STATUS_PANIC = 7,
} MgStatus;

// How a solve ended.
typedef enum MgSolveStatus {
  MG_SOLVE_STATUS_OPTIMAL = 0,
  // Stopped by the node budget with a feasible partition.
  MG_SOLVE_STATUS_FEASIBLE = 1,
  MG_SOLVE_STATUS_INFEASIBLE = 2,
  MG_SOLVE_STATUS_TIME_LIMIT = 3,
} MgSolveStatus;

typedef struct MgNetwork MgNetwork;

typedef struct MgScenarios MgScenarios;

typedef struct MgSolution MgSolution;

// Options for [`mg_partition`]. Start from [`mg_partition_options_default`].
typedef struct MgPartitionOptions {
  // Fraction of scenarios the design may fail.
  double gamma;
  // Fraction of each energized load that must be served.
  double rho;
  // Nonzero: single-scenario model, all energized load served.
  uint8_t deterministic;
  // Scenarios drawn uniformly from the pool; 0 uses the whole pool.
  size_t sample_size;
  uint64_t seed;
  double gap;
  // Seconds; 0 or less means no limit.
  double time_limit;
  // 0 means no limit.
  size_t node_limit;
} MgPartitionOptions;

// Out-of-sample assessment of a solution.
typedef struct MgAssessment {
  double q_hat;
  // Upper confidence bound on the violation probability.
  double upper;
  // Minus the mean load served, zero on infeasible draws.
  double objective;
  uint64_t infeasible;
  uint64_t draws;
} MgAssessment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread. Owned by the library and
// valid until the next failing call on the same thread.
const char *mg_last_error(void);

// Library version, static storage.
const char *mg_version(void);

// # Safety
// `s` is null or a string returned by this library, freed once.
void mg_string_free(char *s);

// Parses a network from JSON text.
//
// # Safety
// `json` is a NUL-terminated string; `out` is writable.
enum MgStatus mg_network_from_json(const char *json, struct MgNetwork **out);

// Loads a bundled network: `ieee37`, `feeder13`, `five_bus` or `two_bus`.
//
// # Safety
// `name` is a NUL-terminated string; `out` is writable.
enum MgStatus mg_network_builtin(const char *name, struct MgNetwork **out);

// # Safety
// `net` is null or from this library, freed once.
void mg_network_free(struct MgNetwork *net);

// Number of buses, or 0 for a null handle.
//
// # Safety
// `net` is null or a live handle.
size_t mg_network_num_buses(const struct MgNetwork *net);

// Parses scenarios from CSV text (or JSON when `is_json` is nonzero).
//
// # Safety
// `text` is a NUL-terminated string; `out` is writable.
enum MgStatus mg_scenarios_parse(const char *text, uint8_t is_json, struct MgScenarios **out);

// Synthetic hourly profiles for `net`.
//
// # Safety
// `net` is a live handle; `out` is writable.
enum MgStatus mg_scenarios_synthesize(const struct MgNetwork *net,
                                      size_t hours,
                                      double noise,
                                      uint64_t seed,
                                      struct MgScenarios **out);

// The network's nominal values as a one-scenario set.
//
// # Safety
// `net` is a live handle; `out` is writable.
enum MgStatus mg_scenarios_nominal(const struct MgNetwork *net, struct MgScenarios **out);

// Number of scenarios, or 0 for a null handle.
//
// # Safety
// `s` is null or a live handle.
size_t mg_scenarios_len(const struct MgScenarios *s);

// # Safety
// `s` is null or from this library, freed once.
void mg_scenarios_free(struct MgScenarios *s);

struct MgPartitionOptions mg_partition_options_default(void);

// Solves for the islands. `scenarios` may be null for the nominal values.
// `options` may be null for the defaults.
//
// # Safety
// Non-null pointers are live handles; `out` is writable.
enum MgStatus mg_partition(const struct MgNetwork *net,
                           const struct MgScenarios *scenarios,
                           const struct MgPartitionOptions *options,
                           struct MgSolution **out);

// Reads a solution written by [`mg_solution_to_json`] or the CLI. Its
// status reads as optimal and its bound as the recorded objective.
//
// # Safety
// `json` is a NUL-terminated string; `out` is writable.
enum MgStatus mg_solution_from_json(const char *json, struct MgSolution **out);

// # Safety
// `s` is null or from this library, freed once.
void mg_solution_free(struct MgSolution *s);

// Objective (minus mean load served), NaN for a null handle.
//
// # Safety
// `s` is null or a live handle.
double mg_solution_objective(const struct MgSolution *s);

// Proven lower bound on the objective, NaN for a null handle.
//
// # Safety
// `s` is null or a live handle.
double mg_solution_bound(const struct MgSolution *s);

// # Safety
// `s` is a live handle; `out` is writable.
enum MgStatus mg_solution_status(const struct MgSolution *s, enum MgSolveStatus *out);

// Number of islands, 0 for a null handle.
//
// # Safety
// `s` is null or a live handle.
size_t mg_solution_num_microgrids(const struct MgSolution *s);

// The solution as JSON; free the string with [`mg_string_free`].
//
// # Safety
// `s` is a live handle; `out` is writable.
enum MgStatus mg_solution_to_json(const struct MgSolution *s, char **out);

// Checks the solution on `n_prime` uniform draws from `pool`.
//
// # Safety
// Handles are live; `out` is writable.
enum MgStatus mg_assess(const struct MgSolution *sol,
                        const struct MgNetwork *net,
                        const struct MgScenarios *pool,
                        size_t n_prime,
                        double beta,
                        uint64_t seed,
                        struct MgAssessment *out);

// One-sided `1 - beta` upper confidence bound for a violation frequency
// `q_hat` observed on `n_prime` draws.
//
// # Safety
// `out` is writable.
enum MgStatus mg_upper_bound(double q_hat, uint64_t n_prime, double beta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MGPART_H */
