#ifndef SIKWAVE_H
#define SIKWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SikStatus {
  SIK_STATUS_OK = 0,
  SIK_STATUS_NULL_POINTER = 1,
  SIK_STATUS_INVALID_ARGUMENT = 2,
  SIK_STATUS_NUMERICAL = 3,
  SIK_STATUS_IO = 4,
  SIK_STATUS_FORMAT = 5,
  SIK_STATUS_PANIC = 6,
} SikStatus;

typedef enum SikBackend {
  SIK_BACKEND_NAIVE = 0,
  SIK_BACKEND_FFT = 1,
} SikBackend;

/**
 * Opaque codebook handle.
 */
typedef struct SikCodebook SikCodebook;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sik_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *sik_version(void);

/**
 * Cosine distance between two length-`n` vectors.
 *
 * # Safety
 * `y` and `z` must point to `n` readable doubles; `out` must be writable.
 */
enum SikStatus sik_cosine_distance(const double *y, const double *z, size_t n, double *out);

/**
 * Pearson χ² of a waveform's 2×2 occurrence table.
 *
 * # Safety
 * `out` must be writable.
 */
enum SikStatus sik_chi2_statistic(uint64_t o0, uint64_t o1, uint64_t m0, uint64_t m1, double *out);

/**
 * Matthews correlation coefficient of a confusion matrix.
 *
 * # Safety
 * `out` must be writable.
 */
enum SikStatus sik_mcc(uint64_t tp, uint64_t fp, uint64_t tn, uint64_t fn_, double *out);

/**
 * Builds a codebook from `k × p` row-major centroids; rows are normalized.
 * `class_tag` is 0 (interictal) or 1 (preictal).
 *
 * # Safety
 * `centroids` must point to `k * p` readable doubles; `out` must be writable.
 */
enum SikStatus sik_codebook_from_centroids(const double *centroids,
                                           size_t k,
                                           size_t p,
                                           uint32_t class_tag,
                                           struct SikCodebook **out);

/**
 * Fits a codebook to `n` row-major signals of length `l`.
 *
 * # Safety
 * `signals` must point to `n * l` readable doubles; `out` must be writable.
 */
enum SikStatus sik_codebook_fit(const double *signals,
                                size_t n,
                                size_t l,
                                size_t k,
                                size_t p,
                                size_t max_iter,
                                size_t n_init,
                                uint64_t seed,
                                enum SikBackend backend,
                                uint32_t class_tag,
                                struct SikCodebook **out);

/**
 * Reads a codebook written by [`sik_codebook_save`].
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum SikStatus sik_codebook_load(const char *path_, struct SikCodebook **out);

/**
 * Writes a codebook as a versioned JSON artifact.
 *
 * # Safety
 * `cb` must be a live handle and `path` a nul-terminated string.
 */
enum SikStatus sik_codebook_save(const struct SikCodebook *cb, const char *path_);

/**
 * Number of centroids, or 0 for a null handle.
 *
 * # Safety
 * `cb` must be null or a live handle.
 */
size_t sik_codebook_k(const struct SikCodebook *cb);

/**
 * Centroid length, or 0 for a null handle.
 *
 * # Safety
 * `cb` must be null or a live handle.
 */
size_t sik_codebook_p(const struct SikCodebook *cb);

/**
 * Copies the `k × p` row-major centroids into `out`, which holds `len`
 * doubles.
 *
 * # Safety
 * `cb` must be a live handle; `out` must point to `len` writable doubles.
 */
enum SikStatus sik_codebook_copy_centroids(const struct SikCodebook *cb, double *out, size_t len);

/**
 * Best centroid, shift and distance for one signal of length `l`.
 *
 * # Safety
 * `cb` must be a live handle, `x` must point to `l` readable doubles and
 * the three outputs must be writable.
 */
enum SikStatus sik_codebook_assign(const struct SikCodebook *cb,
                                   const double *x,
                                   size_t l,
                                   enum SikBackend backend,
                                   size_t *centroid,
                                   size_t *shift,
                                   double *distance);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `cb` must be null or a handle not yet freed.
 */
void sik_codebook_free(struct SikCodebook *cb);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIKWAVE_H */
