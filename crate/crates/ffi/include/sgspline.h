#ifndef SGSPLINE_H
#define SGSPLINE_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of all fallible calls.
 */
typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_ARGUMENT = 2,
  SG_STATUS_OUT_OF_DOMAIN = 3,
  SG_STATUS_ORDER_TOO_HIGH = 4,
  SG_STATUS_SINGULAR = 5,
  SG_STATUS_INVALID_GEOMETRY = 6,
  SG_STATUS_NO_CONVERGENCE = 7,
  SG_STATUS_IO = 8,
  SG_STATUS_BUFFER_TOO_SMALL = 9,
  SG_STATUS_PANIC = 10,
} SgStatus;

/**
 * Spline geometry map of the unit cube.
 */
typedef struct SgGeometry SgGeometry;

/**
 * Univariate clamped dyadic spline space.
 */
typedef struct SgSpace SgSpace;

/**
 * Combination-technique approximation on the unit cube.
 */
typedef struct SgSparse SgSparse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into the library from the same thread.
 */
const char *sg_last_error_message(void);

/**
 * Creates the degree-`degree` space on `2^level` uniform cells.
 *
 * # Safety
 * `out_space` must be a valid pointer.
 */
enum SgStatus sg_space_new(size_t degree, uint32_t level, struct SgSpace **out_space);

/**
 * # Safety
 * `space` must be NULL or a handle from [`sg_space_new`] not yet freed.
 */
void sg_space_free(struct SgSpace *space);

/**
 * Number of basis functions, 0 for a NULL handle.
 *
 * # Safety
 * `space` must be NULL or a live handle.
 */
size_t sg_space_dim(const struct SgSpace *space);

/**
 * Writes the `order`-th derivatives of all basis functions at `x` into
 * `values[0..len]`; `len` must be at least the space dimension.
 *
 * # Safety
 * `space` must be a live handle and `values` valid for `len` writes.
 */
enum SgStatus sg_space_eval_basis(const struct SgSpace *space,
                                  double x,
                                  size_t order,
                                  double *values,
                                  size_t len);

/**
 * Sparse and full tensor dimensions for `(d, n, p)`.
 *
 * # Safety
 * The output pointers must be valid.
 */
enum SgStatus sg_sparse_dimension(size_t d,
                                  uint32_t n,
                                  size_t degree,
                                  uint64_t *out_sparse,
                                  uint64_t *out_full);

/**
 * Combination-technique projection of a built-in target (`"sin"`, `"bump"`,
 * `"exp"`, `"sin-exp"`, `"waves"`) with projection order `r`.
 *
 * # Safety
 * `target` must be a NUL-terminated string and `out_fn` a valid pointer.
 */
enum SgStatus sg_sparse_project(size_t d,
                                uint32_t n,
                                size_t degree,
                                size_t r,
                                const char *target,
                                double param,
                                uint64_t seed,
                                struct SgSparse **out_fn);

/**
 * # Safety
 * `func` must be NULL or a live handle.
 */
void sg_sparse_free(struct SgSparse *func);

/**
 * Evaluates the approximation at `x[0..d]`.
 *
 * # Safety
 * `func` must be a live handle, `x` valid for `d` reads, `value` valid.
 */
enum SgStatus sg_sparse_eval(const struct SgSparse *func, const double *x, size_t d, double *value);

/**
 * L2 error of the approximation against the target it was built from.
 *
 * # Safety
 * `func` must be a live handle, `target` NUL-terminated, `error` valid.
 */
enum SgStatus sg_sparse_l2_error(const struct SgSparse *func,
                                 const char *target,
                                 double param,
                                 uint64_t seed,
                                 double *error);

/**
 * Built-in geometry by name (`"identity"`, `"shear"`, `"distorted-square"`).
 *
 * # Safety
 * `name` must be NUL-terminated and `out_geo` valid.
 */
enum SgStatus sg_geometry_builtin(const char *name, struct SgGeometry **out_geo);

/**
 * Parses a geometry from its text form.
 *
 * # Safety
 * `source` must be NUL-terminated and `out_geo` valid.
 */
enum SgStatus sg_geometry_parse(const char *source, struct SgGeometry **out_geo);

/**
 * # Safety
 * `geo` must be NULL or a live handle.
 */
void sg_geometry_free(struct SgGeometry *geo);

/**
 * Spatial dimension, 0 for a NULL handle.
 *
 * # Safety
 * `geo` must be NULL or a live handle.
 */
size_t sg_geometry_dims(const struct SgGeometry *geo);

/**
 * `x = F(xi)` for `xi[0..dims]`, written to `x[0..dims]`.
 *
 * # Safety
 * `geo` must be live; `xi` and `x` valid for `dims` elements.
 */
enum SgStatus sg_geometry_eval(const struct SgGeometry *geo,
                               const double *xi,
                               double *x,
                               size_t dims);

/**
 * `xi = F^{-1}(x)` by Newton iteration.
 *
 * # Safety
 * `geo` must be live; `x` and `xi` valid for `dims` elements.
 */
enum SgStatus sg_geometry_inverse(const struct SgGeometry *geo,
                                  const double *x,
                                  double *xi,
                                  size_t dims);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGSPLINE_H */
