/* C ABI for the phasechain distributed-delay solver. */

#ifndef PHASECHAIN_H
#define PHASECHAIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum pc_status {
  /**
   * Success.
   */
  PC_OK = 0,
  /**
   * Malformed or invalid problem specification.
   */
  PC_ERR_SPEC = 1,
  /**
   * Stability gate refused the operator.
   */
  PC_ERR_STABILITY = 2,
  /**
   * Numerical failure during solving.
   */
  PC_ERR_NUMERICAL = 3,
  /**
   * A required pointer argument was null.
   */
  PC_ERR_NULL = 4,
  /**
   * Input text was not valid UTF-8.
   */
  PC_ERR_UTF8 = 5,
  /**
   * A callee panicked; state may be inconsistent.
   */
  PC_ERR_PANIC = 6,
} pc_status;

/**
 * Opaque problem handle.
 */
typedef struct pc_problem pc_problem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pc_version(void);

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *pc_last_error(void);

/**
 * Parse a TOML problem document into a new handle. On success `*out` owns
 * the problem and must be released with [`pc_problem_free`].
 */
enum pc_status pc_problem_parse(const char *toml_text, struct pc_problem **out);

/**
 * Release a handle. Null is ignored.
 */
void pc_problem_free(struct pc_problem *problem);

/**
 * Physical system dimension, or 0 for a null handle.
 */
uintptr_t pc_problem_dim(const struct pc_problem *problem);

/**
 * Semi-stability analysis of the augmented operator. `semi_stable` receives
 * 1 or 0; `max_real_part` the spectral abscissa; `h1_max_eig` the largest
 * eigenvalue of the Hermitian part. Output pointers may be null to skip.
 */
enum pc_status pc_stability(const struct pc_problem *problem,
                            int32_t *semi_stable,
                            double *max_real_part,
                            double *h1_max_eig);

/**
 * Integrate the problem with the spec's method and initial state at
 * `n_times` strictly increasing times. `out_re`/`out_im` must each hold
 * `n_times * pc_problem_dim(problem)` doubles and are filled row-major over
 * (time, component).
 */
enum pc_status pc_solve(const struct pc_problem *problem,
                        const double *times,
                        uintptr_t n_times,
                        double *out_re,
                        double *out_im);

/**
 * Quantum-resource estimate for evolving to time `t` at tolerance `eps`
 * with the given norm ratio and precision bits. Output pointers may be null
 * to skip individual fields.
 */
enum pc_status pc_complexity(const struct pc_problem *problem,
                             double t,
                             double eps,
                             double norm_ratio,
                             uint32_t precision_bits,
                             double *queries,
                             double *gate_multiplier,
                             double *success_probability);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASECHAIN_H */
