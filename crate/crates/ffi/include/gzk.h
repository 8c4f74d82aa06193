#ifndef GZK_H
#define GZK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum GzkStatus {
  GZK_STATUS_OK = 0,
  GZK_STATUS_NULL_POINTER = 1,
  GZK_STATUS_INVALID_ARGUMENT = 2,
  GZK_STATUS_INVALID_GRID = 3,
  GZK_STATUS_SIZE_MISMATCH = 4,
  GZK_STATUS_GRID_MISMATCH = 5,
  GZK_STATUS_SOLVER_FAILURE = 6,
  GZK_STATUS_CONFIG = 7,
  GZK_STATUS_IO = 8,
  GZK_STATUS_PANIC = 9,
} GzkStatus;

// Verdict of a completed experiment.
typedef enum GzkOutcome {
  GZK_OUTCOME_PASS = 0,
  GZK_OUTCOME_FAIL = 1,
} GzkOutcome;

// Opaque real field on a grid.
typedef struct GzkField GzkField;

// Opaque periodic grid.
typedef struct GzkGrid GzkGrid;

typedef struct GzkInvariants {
  double mass;
  double mean;
  double hamiltonian;
} GzkInvariants;

typedef struct GzkSolverConfig {
  uint32_t k;
  double dt;
  double t_end;
  double dealias_fraction;
  double cfl_constant;
  // Zero evolves only the dispersive part.
  uint8_t nonlinear;
} GzkSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t gzk_last_error_message(char *buf, size_t len);

// Creates an `n³` grid on the box `[-L/2, L/2)³`.
//
// # Safety
// `out` must be valid for writes.
enum GzkStatus gzk_grid_new(size_t n_axis, double box_len, struct GzkGrid **out);

// # Safety
// `grid` must be null or a handle from [`gzk_grid_new`] not yet freed.
void gzk_grid_free(struct GzkGrid *grid);

// Number of samples `n³`.
//
// # Safety
// `grid` must be a live handle; `out` valid for writes.
enum GzkStatus gzk_grid_len(const struct GzkGrid *grid, size_t *out);

// Builds a field from `len = n³` row-major samples `[x][y1][y2]`.
//
// # Safety
// `samples` must point to `len` readable doubles; `out` valid for writes.
enum GzkStatus gzk_field_from_samples(const struct GzkGrid *grid,
                                      const double *samples,
                                      size_t len,
                                      struct GzkField **out);

// Copies the samples of `field` into `buf`, which must hold `len = n³` doubles.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum GzkStatus gzk_field_samples(const struct GzkField *field, double *buf, size_t len);

// # Safety
// `field` must be null or a live field handle.
void gzk_field_free(struct GzkField *field);

// The profile `e^{-b|x|}` from its lattice spectrum.
//
// # Safety
// `grid` must be live; `out` valid for writes.
enum GzkStatus gzk_profile(const struct GzkGrid *grid, double b, struct GzkField **out);

// Truncated blow-up datum with the default coefficients.
//
// # Safety
// `grid` must be live; `out` valid for writes.
enum GzkStatus gzk_blowup_datum(const struct GzkGrid *grid,
                                uint32_t j_max,
                                uint32_t k_max,
                                double b,
                                struct GzkField **out);

// Free evolution `W(t)f`.
//
// # Safety
// `field` must be live; `out` valid for writes.
enum GzkStatus gzk_propagate(const struct GzkField *field, double t, struct GzkField **out);

// `‖f‖_{L^p}` for `p ≥ 1` (infinity allowed).
//
// # Safety
// `field` must be live; `out` valid for writes.
enum GzkStatus gzk_lebesgue_norm(const struct GzkField *field, double p, double *out);

// `‖J^s f‖₂`.
//
// # Safety
// `field` must be live; `out` valid for writes.
enum GzkStatus gzk_sobolev_norm(const struct GzkField *field, double s, double *out);

// Largest jump of a partial derivative across the origin at scale `delta`.
//
// # Safety
// `field` must be live; `out` valid for writes.
enum GzkStatus gzk_gradient_oscillation(const struct GzkField *field, double delta, double *out);

// Mass, mean and Hamiltonian for the nonlinearity degree `k`.
//
// # Safety
// `field` must be live; `out` valid for writes.
enum GzkStatus gzk_invariants(const struct GzkField *field, uint32_t k, struct GzkInvariants *out);

// Evolves `u0` to `cfg.t_end` and returns the final state.
//
// # Safety
// `u0` and `cfg` must be live; `out` valid for writes.
enum GzkStatus gzk_integrate(const struct GzkField *u0,
                             const struct GzkSolverConfig *cfg,
                             struct GzkField **out);

// Runs the experiment config at `config_path`. `output_root` may be null.
//
// # Safety
// Strings must be NUL-terminated UTF-8; `outcome` valid for writes.
enum GzkStatus gzk_run_experiment(const char *config_path,
                                  const char *output_root,
                                  enum GzkOutcome *outcome);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GZK_H */
