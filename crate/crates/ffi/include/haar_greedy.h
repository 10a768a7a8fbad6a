#ifndef HAAR_GREEDY_H
#define HAAR_GREEDY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum HgStatus {
  HG_STATUS_OK = 0,
  HG_STATUS_NULL_POINTER = 1,
  HG_STATUS_INVALID_EXPONENT = 2,
  HG_STATUS_INVALID_INPUT = 3,
  HG_STATUS_TOO_MANY_TERMS = 4,
  HG_STATUS_ORACLE_CAP = 5,
  HG_STATUS_NO_CONVERGENCE = 6,
  HG_STATUS_BUFFER_TOO_SMALL = 7,
  HG_STATUS_PANIC = 8,
} HgStatus;

/**
 * Opaque piecewise-constant function on a dyadic grid.
 */
typedef struct HgGrid HgGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 *
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *hg_last_error(void);

/**
 * Creates a grid function on the level-`level` grid of `[0,1]^dim` from
 * `2^(dim*level)` row-major values, axis 1 varying fastest.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` must be writable.
 */
enum HgStatus hg_grid_new(uintptr_t dim,
                          uint32_t level,
                          const double *values,
                          uintptr_t len,
                          struct HgGrid **out);

/**
 * Releases a handle from [`hg_grid_new`]. Null is ignored.
 *
 * # Safety
 * `grid` must be null or a live handle not freed before.
 */
void hg_grid_free(struct HgGrid *grid);

/**
 * Number of cells, which equals the dictionary size. Zero for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
uintptr_t hg_grid_len(const struct HgGrid *grid);

/**
 * `||f||_p` for `0 < p`.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum HgStatus hg_lp_norm(const struct HgGrid *grid, double p, double *out);

/**
 * Greedy error `||f - G_m f||_p` and the selected support.
 *
 * Up to `cap` dictionary positions go to `support`, which may be null when
 * `m` is zero.
 *
 * # Safety
 * `grid` must be a live handle, `error` writable, and `support` must have room
 * for `cap` entries.
 */
enum HgStatus hg_greedy(const struct HgGrid *grid,
                        double p,
                        uintptr_t m,
                        double *error,
                        uintptr_t *support,
                        uintptr_t cap);

/**
 * Best m-term error `sigma_m(f)_p` by exhaustive search, with a minimizing support.
 *
 * A nonpositive `tol` selects the default solver tolerance. The search is
 * capped at 16 atoms and 5 terms; larger problems return
 * `HG_STATUS_ORACLE_CAP`.
 *
 * # Safety
 * `grid` must be a live handle, `sigma` writable, and `support` must have room
 * for `cap` entries.
 */
enum HgStatus hg_sigma_m(const struct HgGrid *grid,
                         double p,
                         uintptr_t m,
                         double tol,
                         double *sigma,
                         uintptr_t *support,
                         uintptr_t cap);

/**
 * Constant `C` in `||f - G_m f||_p <= C sigma_m(f)_p` for dimension `dim`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HgStatus hg_greedy_constant(double p, uintptr_t dim, double *out);

/**
 * `(2^dim - 1)(max(p, p') - 1)`, the square-function constant summed over orientations.
 *
 * # Safety
 * `out` must be writable.
 */
enum HgStatus hg_c4_star(double p, uintptr_t dim, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAAR_GREEDY_H */
