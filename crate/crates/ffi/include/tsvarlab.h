#ifndef TSVARLAB_H
#define TSVARLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsvStatus {
  TSV_STATUS_OK = 0,
  TSV_STATUS_SOLVER_FAILURE = 2,
  TSV_STATUS_INVALID_INPUT = 3,
  TSV_STATUS_NULL_POINTER = 10,
  TSV_STATUS_BUFFER_TOO_SMALL = 11,
  TSV_STATUS_PANIC = 12,
} TsvStatus;

/**
 * A parsed problem file.
 */
typedef struct TsvProblem TsvProblem;

/**
 * A trajectory on a problem's grid, with solver statistics when solved.
 */
typedef struct TsvTrajectory TsvTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `tsv_*` call on the same thread.
 */
const char *tsv_last_error_message(void);

/**
 * Parses a problem file given as a NUL-terminated UTF-8 string.
 *
 * # Safety
 * `text` must be a valid C string and `out_problem` a valid pointer.
 */
enum TsvStatus tsv_problem_from_str(const char *text, struct TsvProblem **out_problem);

/**
 * # Safety
 * `problem` must come from [`tsv_problem_from_str`] and not be used again.
 */
void tsv_problem_free(struct TsvProblem *problem);

/**
 * Number of grid points; 0 for NULL.
 *
 * # Safety
 * `problem` must be NULL or a live handle.
 */
size_t tsv_problem_len(const struct TsvProblem *problem);

/**
 * State dimension; 0 for NULL.
 *
 * # Safety
 * `problem` must be NULL or a live handle.
 */
size_t tsv_problem_dim(const struct TsvProblem *problem);

/**
 * Copies the grid points.
 *
 * # Safety
 * `buf` must hold `cap` doubles; `len` must be valid.
 */
enum TsvStatus tsv_problem_grid(const struct TsvProblem *problem,
                                double *buf,
                                size_t cap,
                                size_t *len);

/**
 * Solves the Euler-Lagrange boundary-value problem from the linear guess.
 *
 * # Safety
 * `problem` must be a live handle and `out_trajectory` a valid pointer.
 */
enum TsvStatus tsv_solve(const struct TsvProblem *problem, struct TsvTrajectory **out_trajectory);

/**
 * Wraps `len(problem) * dim(problem)` row-major values as a trajectory.
 *
 * # Safety
 * `values` must hold `count` doubles.
 */
enum TsvStatus tsv_trajectory_from_values(const struct TsvProblem *problem,
                                          const double *values,
                                          size_t count,
                                          struct TsvTrajectory **out_trajectory);

/**
 * # Safety
 * `trajectory` must come from this library and not be used again.
 */
void tsv_trajectory_free(struct TsvTrajectory *trajectory);

/**
 * Copies the row-major values (`len * dim` doubles).
 *
 * # Safety
 * `buf` must hold `cap` doubles; `len` must be valid.
 */
enum TsvStatus tsv_trajectory_values(const struct TsvTrajectory *trajectory,
                                     double *buf,
                                     size_t cap,
                                     size_t *len);

/**
 * Newton iterations and final gradient max-norm; NaN norm for trajectories
 * not produced by [`tsv_solve`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum TsvStatus tsv_trajectory_stats(const struct TsvTrajectory *trajectory,
                                    size_t *iterations,
                                    double *gradient_norm);

/**
 * Discrete action of `trajectory`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TsvStatus tsv_action(const struct TsvProblem *problem,
                          const struct TsvTrajectory *trajectory,
                          double *value);

/**
 * Euler-Lagrange residual on all but the last two grid points, row-major.
 *
 * # Safety
 * `buf` must hold `cap` doubles; `len` must be valid.
 */
enum TsvStatus tsv_el_residual(const struct TsvProblem *problem,
                               const struct TsvTrajectory *trajectory,
                               double *buf,
                               size_t cap,
                               size_t *len);

/**
 * Conserved quantity `C` of the file's symmetry on all but the last grid
 * point, plus the largest `|ΔC/Δt|`.
 *
 * # Safety
 * `buf` must hold `cap` doubles; `len` and `max_abs` must be valid.
 */
enum TsvStatus tsv_conservation(const struct TsvProblem *problem,
                                const struct TsvTrajectory *trajectory,
                                double *buf,
                                size_t cap,
                                size_t *len,
                                double *max_abs);

/**
 * Largest scaled cell discrepancy of the action over the `n_eps` values.
 *
 * # Safety
 * `eps` must hold `n_eps` doubles; `max_abs` must be valid.
 */
enum TsvStatus tsv_invariance(const struct TsvProblem *problem,
                              const struct TsvTrajectory *trajectory,
                              const double *eps,
                              size_t n_eps,
                              double *max_abs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSVARLAB_H */
