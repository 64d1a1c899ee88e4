/* C interface of the k-median solver toolkit.
 *
 * Conventions:
 *   - Opaque handles own their values; free with the matching km_*_free.
 *   - Fallible calls return KmStatus; KM_STATUS_OK is 0. On failure,
 *     km_last_error() returns a message for the calling thread, valid
 *     until that thread's next failing call.
 *   - Structured results are returned as newly allocated JSON strings;
 *     release them with km_string_free.
 *
 * Kept in sync with the `kmedian-ffi` crate (see cbindgen.toml).
 */

#ifndef KMEDIAN_H
#define KMEDIAN_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum KmStatus {
  KM_STATUS_OK = 0,
  KM_STATUS_NULL_POINTER = 1,
  KM_STATUS_INVALID_ARGUMENT = 2,
  KM_STATUS_BUDGET_EXCEEDED = 3,
  KM_STATUS_INTERNAL = 4,
} KmStatus;

/* Opaque problem instance handle. */
typedef struct KmInstance KmInstance;

/* Opaque hypergraph handle. */
typedef struct KmHypergraph KmHypergraph;

/* Message of the last failing call on this thread, or NULL. Owned by the
 * library; do not free. */
const char *km_last_error(void);

/* Release a string returned by this library. */
void km_string_free(char *s);

/* Parse an instance from its JSON form. */
KmStatus km_instance_from_json(const char *json, KmInstance **out);

/* Build an instance from a dense row-major n x n distance matrix and an
 * optional weight vector (NULL for unit weights). */
KmStatus km_instance_from_matrix(size_t n,
                                 const double *matrix,
                                 const double *weights,
                                 KmInstance **out);

/* Number of points, or 0 for a NULL handle. */
size_t km_instance_points(const KmInstance *instance);

/* Count metric violations (symmetry, triangle inequality, signs). */
KmStatus km_instance_validate(const KmInstance *instance, size_t *out_violations);

/* Weighted nearest-center cost of a center set. */
KmStatus km_instance_cost(const KmInstance *instance,
                          const size_t *centers,
                          size_t num_centers,
                          double *out);

/* Release an instance handle. */
void km_instance_free(KmInstance *instance);

/* Run the LP-rounding pipeline. p_threshold < 0 selects the analysis
 * optimum; mode is 0 for full enumeration, 1 for the planted guess.
 * Writes a solution-report JSON string. */
KmStatus km_solve(const KmInstance *instance,
                  size_t k,
                  double epsilon,
                  double p_threshold,
                  uint64_t trials,
                  uint32_t mode,
                  uint64_t seed,
                  char **out_json);

/* Exact k-median optimum by exhaustive enumeration, as JSON. */
KmStatus km_oracle_kmedian(const KmInstance *instance, size_t k, char **out_json);

/* Analysis constants (thresholds and both factor-revealing optima) as JSON. */
KmStatus km_bounds_constants(char **out_json);

/* Envelope grid verification report as JSON. */
KmStatus km_bounds_verify(uint32_t resolution, uint32_t d_max, char **out_json);

/* Parse a hypergraph from its JSON form. */
KmStatus km_hypergraph_from_json(const char *json, KmHypergraph **out);

/* Release a hypergraph handle. */
void km_hypergraph_free(KmHypergraph *hypergraph);

/* Generate a planted-cover (kind 0) or uniformly random (kind 1)
 * d-uniform hypergraph, as JSON. */
KmStatus km_gen_hypergraph(uint32_t kind,
                           size_t n,
                           size_t d,
                           size_t m,
                           uint64_t seed,
                           char **out_json);

/* Reduce a hypergraph to a k-median instance over its incidence-graph
 * shortest-path metric. Writes the instance JSON and the sidecar JSON
 * ({k, vertex_side, edge_side}). */
KmStatus km_reduce(const KmHypergraph *hypergraph,
                   size_t copies,
                   bool complete_triples,
                   char **out_instance_json,
                   char **out_sidecar_json);

/* Coverage optimum of a hypergraph: exhaustive when greedy is false, the
 * greedy heuristic otherwise. Result as JSON. */
KmStatus km_coverage_oracle(const KmHypergraph *hypergraph,
                            size_t k,
                            bool greedy,
                            char **out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KMEDIAN_H */
