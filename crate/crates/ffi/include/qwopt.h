#ifndef QWOPT_H
#define QWOPT_H

#include <stdint.h>
#include <stddef.h>

typedef enum QwoptStatus {
  QWOPT_STATUS_OK = 0,
  QWOPT_STATUS_NULL_POINTER = 1,
  QWOPT_STATUS_INVALID_ARGUMENT = 2,
  QWOPT_STATUS_PARAMETER_COUNT = 3,
  QWOPT_STATUS_NUMERICAL = 4,
  QWOPT_STATUS_BUFFER_TOO_SMALL = 5,
  QWOPT_STATUS_INTERNAL = 6,
} QwoptStatus;

typedef enum QwoptAxis {
  QWOPT_AXIS_UP = 0,
  QWOPT_AXIS_DOWN = 1,
  QWOPT_AXIS_HORIZONTAL = 2,
} QwoptAxis;

/**
 * Opaque ask/tell surrogate optimizer.
 */
typedef struct QwoptOptimizer QwoptOptimizer;

/**
 * Opaque noisy fidelity oracle.
 */
typedef struct QwoptOracle QwoptOracle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Number of free angles of a walk with `steps` steps (3·steps − 1; 0 for 0).
 */
uintptr_t qwopt_param_count(uintptr_t steps);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *qwopt_last_error(void);

/**
 * Static name of a status code.
 */
const char *qwopt_status_name(enum QwoptStatus status);

/**
 * Builds an oracle for `target` (a preset such as `|1>`, `SR_1^-1` or
 * `random:1`). `lambda <= 0` disables shot noise. `seed` drives both the
 * random target and the counts.
 *
 * # Safety
 * `target` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QwoptStatus qwopt_oracle_new(uintptr_t steps,
                                  const char *target,
                                  enum QwoptAxis axis,
                                  double lambda,
                                  uint64_t seed,
                                  struct QwoptOracle **out);

/**
 * # Safety
 * `oracle` must come from [`qwopt_oracle_new`] and not be used afterwards.
 */
void qwopt_oracle_free(struct QwoptOracle *oracle);

/**
 * One noisy cost query `1 − f̂`. Advances the oracle's counter and RNG.
 *
 * # Safety
 * `theta` must point to `len` doubles; `oracle` and `cost` must be valid.
 */
enum QwoptStatus qwopt_oracle_cost(struct QwoptOracle *oracle,
                                   const double *theta,
                                   uintptr_t len,
                                   double *cost);

/**
 * Noiseless fidelity of `theta`; does not count as a query.
 *
 * # Safety
 * As [`qwopt_oracle_cost`].
 */
enum QwoptStatus qwopt_oracle_exact_fidelity(const struct QwoptOracle *oracle,
                                             const double *theta,
                                             uintptr_t len,
                                             double *fidelity);

/**
 * Cost queries answered so far; 0 for NULL.
 *
 * # Safety
 * `oracle` must be NULL or valid.
 */
uint64_t qwopt_oracle_evaluations(const struct QwoptOracle *oracle);

/**
 * Optimizer over the box `[lower[i], upper[i]]`, default settings.
 *
 * # Safety
 * `lower` and `upper` must point to `dim` doubles; `out` must be valid.
 */
enum QwoptStatus qwopt_optimizer_new(uintptr_t dim,
                                     const double *lower,
                                     const double *upper,
                                     uintptr_t budget,
                                     uint64_t seed,
                                     struct QwoptOptimizer **out);

/**
 * # Safety
 * `optimizer` must come from [`qwopt_optimizer_new`] and not be used afterwards.
 */
void qwopt_optimizer_free(struct QwoptOptimizer *optimizer);

/**
 * Writes the next point to evaluate into `point` (`len` ≥ dim). Asking
 * twice without telling returns the same point.
 *
 * # Safety
 * `point` must point to `len` writable doubles.
 */
enum QwoptStatus qwopt_optimizer_ask(struct QwoptOptimizer *optimizer,
                                     double *point,
                                     uintptr_t len);

/**
 * Reports the cost of the last asked point. `restarted` (may be NULL)
 * is set to 1 when the optimizer discarded its model after a stall.
 *
 * # Safety
 * `optimizer` must be valid; `restarted` NULL or valid.
 */
enum QwoptStatus qwopt_optimizer_tell(struct QwoptOptimizer *optimizer,
                                      double value,
                                      int32_t *restarted);

/**
 * Best point and value told so far. Fails with `InvalidArgument` before
 * the first tell.
 *
 * # Safety
 * `point` must point to `len` writable doubles; `value` must be valid.
 */
enum QwoptStatus qwopt_optimizer_best(const struct QwoptOptimizer *optimizer,
                                      double *point,
                                      uintptr_t len,
                                      double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWOPT_H */
