/* Generated by cbindgen from gasket-ffi. Do not edit. */

#ifndef GASKET_H
#define GASKET_H

#include <stddef.h>
#include <stdint.h>

// Stopping tolerance of Picard solves made through this interface.
#define GASKET_PICARD_TOLERANCE 1e-12

// Iteration cap of Picard solves made through this interface.
#define GASKET_PICARD_MAX_ITERATIONS 100000

typedef enum GasketStatus {
  GASKET_STATUS_OK = 0,
  GASKET_STATUS_NULL_POINTER = 1,
  GASKET_STATUS_INVALID_ARGUMENT = 2,
  GASKET_STATUS_INVALID_STRUCTURE = 3,
  GASKET_STATUS_LEVEL_OUT_OF_RANGE = 4,
  GASKET_STATUS_RESOLUTION = 5,
  GASKET_STATUS_SINGULAR = 6,
  GASKET_STATUS_NOT_CONTRACTIVE = 7,
  GASKET_STATUS_CERTIFICATION_FAILED = 8,
  GASKET_STATUS_NUMERICAL = 9,
  GASKET_STATUS_BUFFER_TOO_SMALL = 10,
  GASKET_STATUS_UNSUPPORTED = 11,
  GASKET_STATUS_PANIC = 12,
} GasketStatus;

typedef enum GasketMethod {
  GASKET_METHOD_DIRECT = 0,
  GASKET_METHOD_PICARD = 1,
} GasketMethod;

typedef enum GasketSuite {
  GASKET_SUITE_WEAK_MAXIMUM_PRINCIPLE = 0,
  GASKET_SUITE_STRONG_MAXIMUM_PRINCIPLE = 1,
  GASKET_SUITE_HOPF = 2,
  GASKET_SUITE_EQUICONTINUITY = 3,
} GasketSuite;

typedef enum GasketVerdict {
  GASKET_VERDICT_PASS = 0,
  GASKET_VERDICT_FAIL = 1,
  GASKET_VERDICT_INCONCLUSIVE = 2,
} GasketVerdict;

// A signed Radon measure: atoms plus multiples of the self-similar measure
// restricted to cells.
typedef struct GasketMeasure GasketMeasure;

// A fractal with its harmonic structure and vertex sets up to a level.
typedef struct GasketModel GasketModel;

// Values of a solution on `V_n` with its solve diagnostics.
typedef struct GasketSolution GasketSolution;

// Counts and worst margin of a verification suite. `worst_margin` is NaN
// when no instance was conclusive.
typedef struct GasketCheckSummary {
  enum GasketVerdict verdict;
  size_t instances;
  size_t passed;
  size_t failed;
  size_t inconclusive;
  double worst_margin;
  // Instance attaining the worst margin; meaningful when `instances > 0`.
  size_t witness_instance;
} GasketCheckSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *gasket_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *gasket_version(void);

// The Sierpinski gasket with its standard harmonic structure.
//
// # Safety
// `out` must be valid for writes.
enum GasketStatus gasket_model_sierpinski(size_t max_level, struct GasketModel **out);

// A model from fractal JSON text including its `harmonic` section.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for writes.
enum GasketStatus gasket_model_from_json(const char *json,
                                         size_t max_level,
                                         struct GasketModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must be null or a handle not yet freed.
void gasket_model_free(struct GasketModel *model);

// Highest level the model was built for.
//
// # Safety
// `model` must be a live handle and `out` valid for writes.
enum GasketStatus gasket_model_max_level(const struct GasketModel *model, size_t *out);

// `|V_n|`.
//
// # Safety
// `model` must be a live handle and `out` valid for writes.
enum GasketStatus gasket_model_vertex_count(const struct GasketModel *model,
                                            size_t level,
                                            size_t *out);

// Index in `V_n` of a vertex written `q<k>` or `w<word>:<label>`.
//
// # Safety
// `model` must be a live handle, `address` NUL-terminated and `out` valid for writes.
enum GasketStatus gasket_model_vertex_index(const struct GasketModel *model,
                                            const char *address,
                                            size_t level,
                                            size_t *out);

// Effective resistance `R(p, q)` computed at level `n`.
//
// # Safety
// `model` must be a live handle, `p` and `q` NUL-terminated and `out` valid for writes.
enum GasketStatus gasket_effective_resistance(const struct GasketModel *model,
                                              const char *p,
                                              const char *q,
                                              size_t level,
                                              double *out);

// A measure from JSON text `{"atoms": [...], "self_similar": [...]}`.
//
// # Safety
// `json` must be NUL-terminated and `out` valid for writes.
enum GasketStatus gasket_measure_from_json(const char *json, struct GasketMeasure **out);

// `coefficient · μ`.
//
// # Safety
// `out` must be valid for writes.
enum GasketStatus gasket_measure_self_similar(double coefficient, struct GasketMeasure **out);

// Releases a measure; null is ignored.
//
// # Safety
// `measure` must be null or a handle not yet freed.
void gasket_measure_free(struct GasketMeasure *measure);

// Total mass of a measure.
//
// # Safety
// `model` and `measure` must be live handles and `out` valid for writes.
enum GasketStatus gasket_measure_total_mass(const struct GasketModel *model,
                                            const struct GasketMeasure *measure,
                                            double *out);

// Solves `Δu − uν = σ` on `V_n` with `u = boundary` on `V_0`. `source` and
// `potential` may be null for zero measures.
//
// # Safety
// `model` must be a live handle, `boundary` point to `boundary_len`
// doubles, `source`/`potential` be null or live handles and `out` valid for writes.
enum GasketStatus gasket_solve(const struct GasketModel *model,
                               size_t level,
                               const double *boundary,
                               size_t boundary_len,
                               const struct GasketMeasure *source,
                               const struct GasketMeasure *potential,
                               enum GasketMethod method,
                               struct GasketSolution **out);

// Releases a solution; null is ignored.
//
// # Safety
// `solution` must be null or a handle not yet freed.
void gasket_solution_free(struct GasketSolution *solution);

// Number of values, `|V_n|`.
//
// # Safety
// `solution` must be a live handle and `out` valid for writes.
enum GasketStatus gasket_solution_len(const struct GasketSolution *solution, size_t *out);

// Copies the values in vertex order into `buffer`, which must hold
// `gasket_solution_len` doubles; otherwise `BufferTooSmall`.
//
// # Safety
// `solution` must be a live handle and `buffer` valid for `capacity` writes.
enum GasketStatus gasket_solution_values(const struct GasketSolution *solution,
                                         double *buffer,
                                         size_t capacity);

// Value at a vertex written `q<k>` or `w<word>:<label>`.
//
// # Safety
// `model` and `solution` must be live handles, `address` NUL-terminated and `out` valid for writes.
enum GasketStatus gasket_solution_value_at(const struct GasketModel *model,
                                           const struct GasketSolution *solution,
                                           const char *address,
                                           double *out);

// Largest interior residual of the solved system.
//
// # Safety
// `solution` must be a live handle and `out` valid for writes.
enum GasketStatus gasket_solution_residual(const struct GasketSolution *solution, double *out);

// Picard iterations and contraction factor; `0` and NaN for direct solves.
//
// # Safety
// `solution` must be a live handle; `iterations` and `kappa` valid for writes.
enum GasketStatus gasket_solution_picard_info(const struct GasketSolution *solution,
                                              size_t *iterations,
                                              double *kappa);

// Runs a randomized suite of `count` instances at level `n`. A failing
// suite still returns `Ok`; inspect `out->verdict`.
//
// # Safety
// `model` must be a live handle and `out` valid for writes.
enum GasketStatus gasket_verify(const struct GasketModel *model,
                                enum GasketSuite suite,
                                size_t level,
                                size_t count,
                                uint64_t seed,
                                struct GasketCheckSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GASKET_H */
