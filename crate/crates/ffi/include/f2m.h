#ifndef F2M_H
#define F2M_H

#include <stddef.h>
#include <stdint.h>

#define F2M_MODE_JACOBI 0

#define F2M_MODE_GAUSS_SEIDEL 1

#define F2M_DISTANCE_ROUNDED 0

#define F2M_DISTANCE_EXACT 1

typedef enum F2mStatus {
  F2M_STATUS_OK = 0,
  F2M_STATUS_NULL_POINTER = 1,
  F2M_STATUS_INVALID_ARGUMENT = 2,
  F2M_STATUS_PARSE_ERROR = 3,
  F2M_STATUS_IO_ERROR = 4,
  // The graph has a node of degree below 3.
  F2M_STATUS_DEGREE_ERROR = 5,
  F2M_STATUS_SOLVE_FAILED = 6,
  F2M_STATUS_INDEX_OUT_OF_RANGE = 7,
  F2M_STATUS_PANIC = 8,
} F2mStatus;

typedef struct F2mInstance F2mInstance;

typedef struct F2mResult F2mResult;

// Solver settings. Start from [`f2m_config_default`] and override fields.
typedef struct F2mConfig {
  size_t k;
  // `F2M_MODE_JACOBI` or `F2M_MODE_GAUSS_SEIDEL`.
  uint32_t mode;
  // Jacobi damping; ignored by Gauss-Seidel.
  double eta;
  double eps;
  size_t max_sweeps;
  double tol;
  size_t max_restarts;
  double perturb_scale;
  uint64_t seed;
  double gap_tol;
  // Worker threads; 0 uses every core.
  size_t threads;
} F2mConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next call into this library from the same thread.
const char *f2m_last_error(void);

// Static, NUL-terminated crate version.
const char *f2m_version(void);

struct F2mConfig f2m_config_default(void);

// Parse TSPLIB EUC_2D text.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum F2mStatus f2m_instance_parse(const char *text, struct F2mInstance **out);

// Read a TSPLIB EUC_2D file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum F2mStatus f2m_instance_read(const char *path, struct F2mInstance **out);

// `n` points uniform in `[0, box_side]^2` with exact distances.
//
// # Safety
// `out` must be writable.
enum F2mStatus f2m_instance_generate(size_t n,
                                     uint64_t seed,
                                     double box_side,
                                     struct F2mInstance **out);

// Build an instance from `n` interleaved `x, y` pairs.
//
// # Safety
// `xy` must point to `2 * n` doubles; `out` must be writable.
enum F2mStatus f2m_instance_from_points(const double *xy,
                                        size_t n,
                                        uint32_t distance,
                                        struct F2mInstance **out);

// Number of points, or 0 for null.
//
// # Safety
// `instance` must be null or a live handle.
size_t f2m_instance_len(const struct F2mInstance *instance);

// # Safety
// `instance` must be null or a handle not yet freed.
void f2m_instance_free(struct F2mInstance *instance);

// Build the k-NN graph, solve, and certify. `config` may be null for defaults.
//
// # Safety
// `instance` must be a live handle, `config` null or valid, `out` writable.
enum F2mStatus f2m_solve(const struct F2mInstance *instance,
                         const struct F2mConfig *config,
                         struct F2mResult **out);

// # Safety
// `result` must be null or a handle not yet freed.
void f2m_result_free(struct F2mResult *result);

// Primal objective on the true costs; NaN for null.
//
// # Safety
// `result` must be null or a live handle.
double f2m_result_objective(const struct F2mResult *result);

// Dual value at the returned multipliers; NaN for null.
//
// # Safety
// `result` must be null or a live handle.
double f2m_result_dual_value(const struct F2mResult *result);

// Primal objective minus dual value; NaN for null.
//
// # Safety
// `result` must be null or a live handle.
double f2m_result_gap(const struct F2mResult *result);

// # Safety
// `result` must be null or a live handle.
size_t f2m_result_sweeps(const struct F2mResult *result);

// # Safety
// `result` must be null or a live handle.
size_t f2m_result_restarts(const struct F2mResult *result);

// # Safety
// `result` must be null or a live handle.
size_t f2m_result_node_count(const struct F2mResult *result);

// Edges of the k-NN graph, including those at value 0.
//
// # Safety
// `result` must be null or a live handle.
size_t f2m_result_edge_count(const struct F2mResult *result);

// Endpoints (u < v), cost and value of graph edge `index`. Any output pointer
// may be null.
//
// # Safety
// `result` must be a live handle; non-null outputs must be writable.
enum F2mStatus f2m_result_edge(const struct F2mResult *result,
                               size_t index,
                               size_t *u,
                               size_t *v,
                               double *cost,
                               double *value);

// Write the `u v value` solution file.
//
// # Safety
// `result` must be a live handle and `path` a NUL-terminated string.
enum F2mStatus f2m_result_write_solution(const struct F2mResult *result, const char *path);

// Write the relaxation over the solved graph in CPLEX-LP format.
//
// # Safety
// `result` must be a live handle and `path` a NUL-terminated string.
enum F2mStatus f2m_result_write_lp(const struct F2mResult *result, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* F2M_H */
