#ifndef LIOUVILLE_H
#define LIOUVILLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Which residual [`lv_residual_norms`] evaluates.
typedef enum LvEquation {
  // `u_xy − K e^{au}` at cell centres.
  LV_EQUATION_HYPERBOLIC = 0,
  // `Δu − K e^{au}` at interior nodes.
  LV_EQUATION_ELLIPTIC = 1,
  // `(ln T)_xy / T̄ − K` at cell centres; the field holds `T > 0`.
  LV_EQUATION_LOG = 2,
} LvEquation;

// Result of every fallible call.
typedef enum LvStatus {
  LV_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or an out-of-range argument.
  LV_STATUS_INVALID_ARGUMENT = 1,
  // Expression source did not parse.
  LV_STATUS_PARSE = 2,
  // Input outside the domain of the operation (singular node, sign, grid).
  LV_STATUS_DOMAIN = 3,
  // An iterative solver or integrator did not converge.
  LV_STATUS_NON_CONVERGENCE = 4,
  // File could not be read or written.
  LV_STATUS_IO = 5,
  // Internal panic caught at the boundary.
  LV_STATUS_PANIC = 6,
} LvStatus;

// Parsed expression.
typedef struct LvExpr LvExpr;

// Sampled field on a uniform grid, row-major in `y`.
typedef struct LvField LvField;

// Rectangle `[x0, x1] × [y0, y1]` sampled with `nx × ny` nodes.
typedef struct LvDomain {
  double x0;
  double y0;
  double x1;
  double y1;
  size_t nx;
  size_t ny;
} LvDomain;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *lv_last_error(void);

// Parses `src` over the `nvars` variable names in `vars` (1 or 2).
//
// # Safety
// `src` and each `vars[i]` must be NUL-terminated strings; `out` must be
// writable.
enum LvStatus lv_expr_parse(const char *src,
                            const char *const *vars,
                            size_t nvars,
                            struct LvExpr **out_expr);

// Evaluates at `at[0..n]` with first and second derivatives along
// variable `wrt`. Any of `value`, `d1`, `d2` may be null.
//
// # Safety
// `expr` must come from [`lv_expr_parse`]; `at` must hold `n` doubles.
enum LvStatus lv_expr_eval(const struct LvExpr *expr,
                           const double *at,
                           size_t n,
                           size_t wrt,
                           double *value,
                           double *d1,
                           double *d2);

// # Safety
// `expr` must come from [`lv_expr_parse`] or be null.
void lv_expr_free(struct LvExpr *expr);

// Copies `nx·ny` values (row-major in `y`) into a new field with origin
// `(x0, y0)` and spacings `hx`, `hy`.
//
// # Safety
// `values` must hold `nx·ny` doubles; `out_field` must be writable.
enum LvStatus lv_field_new(size_t nx,
                           size_t ny,
                           double x0,
                           double y0,
                           double hx,
                           double hy,
                           const double *values,
                           struct LvField **out_field);

// Grid of `field`: node counts, origin and spacings. Null outputs are skipped.
//
// # Safety
// `field` must be a live handle.
enum LvStatus lv_field_grid(const struct LvField *field,
                            size_t *nx,
                            size_t *ny,
                            double *x0,
                            double *y0,
                            double *hx,
                            double *hy);

// Borrowed pointer to the `nx·ny` values, `NaN` at masked or undefined
// nodes. Null if `field` is null. Valid while the handle lives.
//
// # Safety
// `field` must be a live handle or null.
const double *lv_field_values(const struct LvField *field);

// Reads a field file.
//
// # Safety
// `path` must be a NUL-terminated string; `out_field` must be writable.
enum LvStatus lv_field_read(const char *path, struct LvField **out_field);

// Writes a field file.
//
// # Safety
// `field` must be a live handle; `path` a NUL-terminated string.
enum LvStatus lv_field_write(const struct LvField *field, const char *path);

// # Safety
// `field` must be a live handle or null.
void lv_field_free(struct LvField *field);

// Samples `u = (1/a)·ln(2f'g' / (aK(f + g)²))` with `f` in `x`, `g` in `y`.
//
// # Safety
// `f`, `g` must be NUL-terminated strings; `out_field` must be writable.
enum LvStatus lv_hyperbolic_exact(const char *f,
                                  const char *g,
                                  double k,
                                  double a,
                                  struct LvDomain domain,
                                  struct LvField **out_field);

// Samples the one-seed solution of `Δu = K e^{au}` from the analytic
// function `seed` of `z`; the denominator sign follows `sign(aK)`.
//
// # Safety
// `seed` must be a NUL-terminated string; `out_field` must be writable.
enum LvStatus lv_elliptic_exact(const char *seed,
                                double k,
                                double a,
                                struct LvDomain domain,
                                struct LvField **out_field);

// Max-norm and L² norm of a residual of `field`. For
// [`LvEquation::Log`] the field holds `T` and `a` is ignored.
//
// # Safety
// `field` must be a live handle; null outputs are skipped.
enum LvStatus lv_residual_norms(const struct LvField *field,
                                enum LvEquation eq,
                                double k,
                                double a,
                                double *max_abs,
                                double *l2);

// Continues `Δu + λe^u = 0` on the unit disk (radial grid of `n` nodes)
// from `λ = 0` and reports the first fold.
//
// # Safety
// `lambda0` and `u0` must be writable.
enum LvStatus lv_gelfand_fold(size_t n, double *lambda0, double *u0);

// Marches `u_xy = K e^{au}` from `u(x, y0) = phi(x)` and `u(x0, y) = psi(y)`.
// Nodes above `threshold` and everything downstream are `NaN`;
// `masked` (optional) receives their count.
//
// # Safety
// `phi`, `psi` must be NUL-terminated strings; `out_field` writable.
enum LvStatus lv_march(const char *phi,
                       const char *psi,
                       double k,
                       double a,
                       struct LvDomain domain,
                       double threshold,
                       struct LvField **out_field,
                       size_t *masked);

// Integrates the Bäcklund pair from `w = phi(x) + psi(y)` with
// `u(x0, y0) = u_corner`; `y_first` selects the left edge first.
//
// # Safety
// `phi`, `psi` must be NUL-terminated strings; `out_field` writable.
enum LvStatus lv_backlund(const char *phi,
                          const char *psi,
                          double bt_a,
                          double u_corner,
                          struct LvDomain domain,
                          bool y_first,
                          struct LvField **out_field);

// Liouville action of `field` and, if `out_gradient` is non-null, its
// gradient with respect to the nodes (`NaN` on the boundary).
//
// # Safety
// `field` must be a live handle; `value` must be writable.
enum LvStatus lv_action(const struct LvField *field,
                        double c,
                        double mu,
                        double *value,
                        struct LvField **out_gradient);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIOUVILLE_H */
