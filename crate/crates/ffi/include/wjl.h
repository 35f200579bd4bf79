#ifndef WJL_H
#define WJL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum WjlStatus {
  WJL_STATUS_OK = 0,
  WJL_STATUS_NULL_POINTER = 1,
  WJL_STATUS_INVALID_ARGUMENT = 2,
  WJL_STATUS_DIMENSION_MISMATCH = 3,
  WJL_STATUS_PROVENANCE_MISMATCH = 4,
  WJL_STATUS_CONFIG_MISMATCH = 5,
  WJL_STATUS_FORMAT_ERROR = 6,
  WJL_STATUS_BUFFER_TOO_SMALL = 7,
  WJL_STATUS_PANIC = 8,
} WjlStatus;

/**
 * Interpretation of the `t` argument of [`wjl_sketch_update`].
 */
typedef enum WjlStreamMode {
  WJL_STREAM_MODE_TIMESTEP = 0,
  WJL_STREAM_MODE_TURNSTILE = 1,
} WjlStreamMode;

/**
 * A seeded `k x d` projection matrix.
 */
typedef struct WjlMatrix WjlMatrix;

/**
 * A reduced vector `g(x)` tagged with its matrix.
 */
typedef struct WjlReduced WjlReduced;

/**
 * A streaming sketch.
 */
typedef struct WjlSketch WjlSketch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wjl_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `cap`). Returns the untruncated length including
 * the terminator; 0 means no error has been recorded.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t wjl_last_error_message(char *buf, size_t cap);

/**
 * Creates the seeded `k x d` matrix.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum WjlStatus wjl_matrix_new(size_t d, size_t k, uint64_t seed, struct WjlMatrix **out);

/**
 * # Safety
 * `matrix` must be null or a handle from `wjl_matrix_new` not yet freed.
 */
void wjl_matrix_free(struct WjlMatrix *matrix);

/**
 * Reduces a dense vector of length `len` (which must equal `d`).
 *
 * # Safety
 * `x` must be valid for `len` reads; `out` valid for writing a pointer.
 */
enum WjlStatus wjl_reduce(const struct WjlMatrix *matrix,
                          const double *x,
                          size_t len,
                          struct WjlReduced **out);

/**
 * Reduces a sparse vector given as `nnz` parallel `(index, value)` arrays.
 *
 * # Safety
 * `indices` and `values` must be valid for `nnz` reads.
 */
enum WjlStatus wjl_reduce_sparse(const struct WjlMatrix *matrix,
                                 const size_t *indices,
                                 const double *values,
                                 size_t nnz,
                                 struct WjlReduced **out);

/**
 * # Safety
 * `reduced` must be null or a live handle.
 */
void wjl_reduced_free(struct WjlReduced *reduced);

/**
 * Reduced dimension `k`.
 *
 * # Safety
 * `reduced` must be a live handle; `out` valid for writing.
 */
enum WjlStatus wjl_reduced_dim(const struct WjlReduced *reduced, size_t *out);

/**
 * Estimate of `||x||_w^2` from `g(x)` and `g(w)`.
 *
 * # Safety
 * Handles must be live; `out` valid for writing.
 */
enum WjlStatus wjl_rho(const struct WjlReduced *gx, const struct WjlReduced *gw, double *out);

/**
 * Estimate of `||x - y||_w^2` from `g(x)`, `g(y)` and `g(w)`.
 *
 * # Safety
 * Handles must be live; `out` valid for writing.
 */
enum WjlStatus wjl_rho_pairwise(const struct WjlReduced *gx,
                                const struct WjlReduced *gy,
                                const struct WjlReduced *gw,
                                double *out);

/**
 * Writes the WJLR encoding. `*written` receives the encoded length even
 * when the buffer is too small (status `BufferTooSmall`).
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes; `written` valid for writing.
 */
enum WjlStatus wjl_reduced_serialize(const struct WjlReduced *reduced,
                                     uint8_t *buf,
                                     size_t cap,
                                     size_t *written);

/**
 * # Safety
 * `bytes` must be valid for `len` reads; `out` valid for writing a pointer.
 */
enum WjlStatus wjl_reduced_deserialize(const uint8_t *bytes, size_t len, struct WjlReduced **out);

/**
 * Reduced dimension sufficient for an `(epsilon, delta)` guarantee on inputs
 * with distortion at most `distortion`, using the default constant.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum WjlStatus wjl_required_k(double epsilon, double delta, double distortion, uint64_t *out);

/**
 * Sketch dimensions `(r, m)` for an `(epsilon, delta)` guarantee.
 *
 * # Safety
 * `r` and `m` must be valid for writing.
 */
enum WjlStatus wjl_plan_sketch(double epsilon,
                               double delta,
                               double distortion,
                               size_t *r,
                               size_t *m);

/**
 * Zeroed sketch. Sketches to be compared or merged must be created with the
 * same `(r, m, seed, mode)`.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum WjlStatus wjl_sketch_new(size_t r,
                              size_t m,
                              uint64_t seed,
                              enum WjlStreamMode mode,
                              struct WjlSketch **out);

/**
 * Zeroed sketch sharing the hashes of `sketch` (cheaper than
 * `wjl_sketch_new` with the same arguments).
 *
 * # Safety
 * `sketch` must be live; `out` valid for writing a pointer.
 */
enum WjlStatus wjl_sketch_empty_like(const struct WjlSketch *sketch, struct WjlSketch **out);

/**
 * # Safety
 * `sketch` must be null or a live handle.
 */
void wjl_sketch_free(struct WjlSketch *sketch);

/**
 * Adds `v * h(t)` to every counter.
 *
 * # Safety
 * `sketch` must be live and not used concurrently.
 */
enum WjlStatus wjl_sketch_update(struct WjlSketch *sketch, uint64_t t, double v);

/**
 * New sketch whose counters are the sums of those of `a` and `b`.
 *
 * # Safety
 * Handles must be live; `out` valid for writing a pointer.
 */
enum WjlStatus wjl_sketch_merge(const struct WjlSketch *a,
                                const struct WjlSketch *b,
                                struct WjlSketch **out);

/**
 * Median-of-means estimate of `||x||_w^2`. May be negative.
 *
 * # Safety
 * Handles must be live; `out` valid for writing.
 */
enum WjlStatus wjl_sketch_estimate(const struct WjlSketch *sx,
                                   const struct WjlSketch *sw,
                                   double *out);

/**
 * Writes the WJLS encoding, with the same size protocol as
 * `wjl_reduced_serialize`.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes; `written` valid for writing.
 */
enum WjlStatus wjl_sketch_serialize(const struct WjlSketch *sketch,
                                    uint8_t *buf,
                                    size_t cap,
                                    size_t *written);

/**
 * # Safety
 * `bytes` must be valid for `len` reads; `out` valid for writing a pointer.
 */
enum WjlStatus wjl_sketch_deserialize(const uint8_t *bytes, size_t len, struct WjlSketch **out);

/**
 * Exact `sum_i w_i^2 x_i^2`.
 *
 * # Safety
 * `x` and `w` must be valid for `d` reads; `out` valid for writing.
 */
enum WjlStatus wjl_weighted_sq_norm(const double *x, const double *w, size_t d, double *out);

/**
 * Exact `||x||_2 ||w||_2 / ||x||_w`.
 *
 * # Safety
 * `x` and `w` must be valid for `d` reads; `out` valid for writing.
 */
enum WjlStatus wjl_distortion(const double *x, const double *w, size_t d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WJL_H */
