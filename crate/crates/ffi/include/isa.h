#ifndef ISA_H
#define ISA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum IsaStatus {
  ISA_STATUS_OK = 0,
  ISA_STATUS_NULL_POINTER = 1,
  ISA_STATUS_INVALID_UTF8 = 2,
  ISA_STATUS_PARSE = 3,
  ISA_STATUS_DOMAIN = 4,
  ISA_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The iteration budget ran out; the partial result is still returned.
   */
  ISA_STATUS_BUDGET_EXCEEDED = 6,
  ISA_STATUS_IO = 7,
  ISA_STATUS_PANIC = 8,
} IsaStatus;

/**
 * Parsed expression.
 */
typedef struct IsaExpr IsaExpr;

/**
 * Interval superposition models of every output of an expression.
 */
typedef struct IsaModel IsaModel;

/**
 * Validated set-inversion problem.
 */
typedef struct IsaProblem IsaProblem;

/**
 * Interior and boundary boxes of a solved problem.
 */
typedef struct IsaSubpaving IsaSubpaving;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Free with
 * [`isa_string_free`].
 */
char *isa_last_error_message(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void isa_string_free(char *s);

/**
 * Parse a single-output expression over `x1, x2, ...`.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` writable.
 */
enum IsaStatus isa_expr_parse(const char *text, struct IsaExpr **out);

/**
 * # Safety
 * `e` must come from [`isa_expr_parse`] and not have been freed.
 */
void isa_expr_free(struct IsaExpr *e);

/**
 * # Safety
 * `e` must be a live expression handle.
 */
size_t isa_expr_n_vars(const struct IsaExpr *e);

/**
 * Printed form of output 0. Free with [`isa_string_free`].
 *
 * # Safety
 * `e` must be a live expression handle.
 */
char *isa_expr_to_string(const struct IsaExpr *e);

/**
 * Evaluate output 0 at the point `x[0..n]`.
 *
 * # Safety
 * `x` must hold `n` doubles and `out` be writable.
 */
enum IsaStatus isa_expr_eval(const struct IsaExpr *e, const double *x, size_t n, double *out);

/**
 * Natural interval extension of output 0 over the box `[lo, hi]`.
 *
 * # Safety
 * `lo` and `hi` must hold `n` doubles; `out_lo` and `out_hi` be writable.
 */
enum IsaStatus isa_expr_eval_interval(const struct IsaExpr *e,
                                      const double *lo,
                                      const double *hi,
                                      size_t n,
                                      double *out_lo,
                                      double *out_hi);

/**
 * Build the model of `e` on a grid of `resolution` cells per coordinate
 * over the box `[lo, hi]`.
 *
 * # Safety
 * `lo` and `hi` must hold `n` doubles and `out` be writable.
 */
enum IsaStatus isa_model_new(const struct IsaExpr *e,
                             const double *lo,
                             const double *hi,
                             size_t n,
                             size_t resolution,
                             struct IsaModel **out);

/**
 * # Safety
 * `m` must come from [`isa_model_new`] and not have been freed.
 */
void isa_model_free(struct IsaModel *m);

/**
 * Range enclosure of output 0 of the model.
 *
 * # Safety
 * `m` must be a live model handle; `out_lo` and `out_hi` writable.
 */
enum IsaStatus isa_model_range(const struct IsaModel *m, double *out_lo, double *out_hi);

/**
 * Model value of output 0 at the point `x[0..n]`.
 *
 * # Safety
 * `x` must hold `n` doubles; `out_lo` and `out_hi` be writable.
 */
enum IsaStatus isa_model_eval(const struct IsaModel *m,
                              const double *x,
                              size_t n,
                              double *out_lo,
                              double *out_hi);

/**
 * Load and validate a problem from its JSON text.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
enum IsaStatus isa_problem_from_json(const char *json, struct IsaProblem **out);

/**
 * # Safety
 * `p` must come from [`isa_problem_from_json`] and not have been freed.
 */
void isa_problem_free(struct IsaProblem *p);

/**
 * Solve the problem. On [`IsaStatus::BudgetExceeded`] `out` still receives
 * the partial subpaving.
 *
 * # Safety
 * `p` must be a live problem handle and `out` writable.
 */
enum IsaStatus isa_problem_solve(const struct IsaProblem *p, struct IsaSubpaving **out);

/**
 * # Safety
 * `s` must come from [`isa_problem_solve`] and not have been freed.
 */
void isa_subpaving_free(struct IsaSubpaving *s);

/**
 * # Safety
 * `s` must be a live subpaving handle.
 */
size_t isa_subpaving_interior_count(const struct IsaSubpaving *s);

/**
 * # Safety
 * `s` must be a live subpaving handle.
 */
size_t isa_subpaving_boundary_count(const struct IsaSubpaving *s);

/**
 * # Safety
 * `s` must be a live subpaving handle.
 */
uint64_t isa_subpaving_iterations(const struct IsaSubpaving *s);

/**
 * Copy box `index` into `lo[0..n]` and `hi[0..n]`. Boxes are numbered
 * interior first, then boundary.
 *
 * # Safety
 * `lo` and `hi` must have room for `n` doubles.
 */
enum IsaStatus isa_subpaving_box(const struct IsaSubpaving *s,
                                 size_t index,
                                 double *lo,
                                 double *hi,
                                 size_t n);

/**
 * Subpaving as JSON. Free with [`isa_string_free`].
 *
 * # Safety
 * `s` must be a live subpaving handle.
 */
char *isa_subpaving_to_json(const struct IsaSubpaving *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISA_H */
