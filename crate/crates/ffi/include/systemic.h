/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef SYSTEMIC_H
#define SYSTEMIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SystemicStatus {
  SYSTEMIC_STATUS_OK = 0,
  SYSTEMIC_STATUS_NULL_POINTER = 1,
  /**
   * Malformed edge list, bad weight or node index.
   */
  SYSTEMIC_STATUS_FORMAT = 2,
  /**
   * Argument outside the domain of the operation (unknown measure id,
   * invalid exponent, non-UTF-8 string, ...).
   */
  SYSTEMIC_STATUS_DOMAIN = 3,
  /**
   * The operation needs a connected graph.
   */
  SYSTEMIC_STATUS_CONNECTIVITY = 4,
  SYSTEMIC_STATUS_NUMERICAL = 5,
  /**
   * The output buffer is shorter than required.
   */
  SYSTEMIC_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  SYSTEMIC_STATUS_INTERNAL = 7,
} SystemicStatus;

/**
 * Opaque graph handle with a cached Laplacian spectrum.
 */
typedef struct SystemicGraph SystemicGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses an edge list (`n <count>` header, then `u v w` lines).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SystemicStatus systemic_graph_parse(const char *text, struct SystemicGraph **out);

/**
 * Builds a graph from `m` edges `(us[i], vs[i], ws[i])` on `n` nodes.
 *
 * # Safety
 * `us`, `vs` and `ws` must each point to `m` readable elements (they may be
 * NULL when `m == 0`); `out` must be writable.
 */
enum SystemicStatus systemic_graph_new(size_t n,
                                       const size_t *us,
                                       const size_t *vs,
                                       const double *ws,
                                       size_t m,
                                       struct SystemicGraph **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `g` must come from this library and not have been freed.
 */
void systemic_graph_free(struct SystemicGraph *g);

/**
 * Node count, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t systemic_graph_node_count(const struct SystemicGraph *g);

/**
 * Edge count, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t systemic_graph_edge_count(const struct SystemicGraph *g);

/**
 * Writes the `n` ascending Laplacian eigenvalues to `out[0..n]`. Works
 * for disconnected graphs too.
 *
 * # Safety
 * `g` must be a live handle and `out` must hold `len` writable doubles.
 */
enum SystemicStatus systemic_spectrum(const struct SystemicGraph *g, double *out, size_t len);

/**
 * Evaluates a measure by identifier (`energy1`, `zeta_measure`, ...).
 * Pass NaN for an unused `p` or `k` and NULL for an unused `f`; `p` may be
 * `INFINITY`.
 *
 * # Safety
 * `g` must be a live handle, `measure` a NUL-terminated string, `f` NULL or
 * NUL-terminated, and `out` writable.
 */
enum SystemicStatus systemic_evaluate(const struct SystemicGraph *g,
                                      const char *measure,
                                      double p,
                                      double k,
                                      const char *f,
                                      double *out);

/**
 * `Σ λ_i^{-p}` over the nonzero Laplacian eigenvalues.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SystemicStatus systemic_zeta(const struct SystemicGraph *g, double p, double *out);

/**
 * Closed-form `H_p` norm; `p` may be `INFINITY`.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SystemicStatus systemic_hp_norm(const struct SystemicGraph *g, double p, double *out);

/**
 * Weighted spanning-tree count.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SystemicStatus systemic_spanning_tree_count(const struct SystemicGraph *g, double *out);

/**
 * Lower bound on `Σ f(λ_i)` after adding `k` edges, for the scalar
 * function `f` (`inverse`, `inverse_sq`, `inverse_pow:Q`, `exp_decay:C`).
 *
 * # Safety
 * `g` must be a live handle, `f` NUL-terminated and `out` writable.
 */
enum SystemicStatus systemic_fundamental_limit(const struct SystemicGraph *g,
                                               size_t k,
                                               const char *f,
                                               double *out);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *systemic_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *systemic_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYSTEMIC_H */
