#ifndef LEVELREG_H
#define LEVELREG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LrStatus {
  LR_STATUS_OK = 0,
  LR_STATUS_NULL_POINTER = 1,
  LR_STATUS_INVALID_ARGUMENT = 2,
  LR_STATUS_DIMENSION_MISMATCH = 3,
  LR_STATUS_GUARD_EXCEEDED = 4,
  LR_STATUS_NUMERICAL = 5,
  LR_STATUS_PANIC = 6,
} LrStatus;

typedef enum LrProxEngine {
  LR_PROX_ENGINE_AUTO = 0,
  LR_PROX_ENGINE_DECOMPOSITION = 1,
  LR_PROX_ENGINE_MIN_NORM = 2,
} LrProxEngine;

// Opaque set-function handle.
typedef struct LrSetFunction LrSetFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Unit-weight chain total variation on p elements.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum LrStatus lr_setfn_chain_tv(size_t p, struct LrSetFunction **out);

// Unit-weight 4-neighbour grid total variation; element r·width + c is cell (r, c).
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum LrStatus lr_setfn_grid_tv(size_t width, size_t height, struct LrSetFunction **out);

// Cut function of an undirected graph with non-negative weights.
//
// # Safety
// `from`, `to` and `weights` must each point to `n_edges` readable elements;
// `out` must be writable.
enum LrStatus lr_setfn_cut(size_t p,
                           size_t n_edges,
                           const size_t *from,
                           const size_t *to,
                           const double *weights,
                           struct LrSetFunction **out);

// F(A) = h(|A|) from the p + 1 values h(0), …, h(p).
//
// # Safety
// `h` must point to `len` readable values; `out` must be writable.
enum LrStatus lr_setfn_cardinality(const double *h, size_t len, struct LrSetFunction **out);

// Robust cut over a hidden graph on p nodes paired with the p elements.
//
// # Safety
// As for [`lr_setfn_cut`].
enum LrStatus lr_setfn_noisy_cut(size_t p,
                                 size_t n_edges,
                                 const size_t *from,
                                 const size_t *to,
                                 const double *weights,
                                 double penalty,
                                 struct LrSetFunction **out);

// Explicit table of 2^p values indexed by bitmask (bit i set = element i in A).
//
// # Safety
// `values` must point to `len` readable values; `out` must be writable.
enum LrStatus lr_setfn_table(size_t p,
                             const double *values,
                             size_t len,
                             struct LrSetFunction **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `f` must be null or a handle not yet freed.
void lr_setfn_free(struct LrSetFunction *f);

// Ground set size.
//
// # Safety
// `f` must be a live handle and `out` writable.
enum LrStatus lr_setfn_size(const struct LrSetFunction *f, size_t *out);

// F(A) for a byte mask of length p.
//
// # Safety
// `mask` must point to `p` readable bytes and `out` be writable.
enum LrStatus lr_setfn_eval(const struct LrSetFunction *f,
                            const uint8_t *mask,
                            size_t p,
                            double *out);

// Lovász extension f(w).
//
// # Safety
// `w` must point to `p` readable values and `out` be writable.
enum LrStatus lr_lovasz_extension(const struct LrSetFunction *f,
                                  const double *w,
                                  size_t p,
                                  double *out);

// Greedy base point s ∈ B(F) maximizing sᵀw, written to `s_out`.
//
// # Safety
// `w` must be readable and `s_out` writable for `p` values.
enum LrStatus lr_greedy(const struct LrSetFunction *f, const double *w, size_t p, double *s_out);

// argmin_w ½‖w − z‖² + λf(w), written to `w_out`.
//
// # Safety
// `z` must be readable and `w_out` writable for `p` values.
enum LrStatus lr_prox(const struct LrSetFunction *f,
                      const double *z,
                      size_t p,
                      double lambda,
                      enum LrProxEngine engine,
                      double *w_out);

// Smallest minimizer of λF(A) − z(A) as a byte mask, and the minimum value.
//
// # Safety
// `z` must be readable for `p` values, `mask_out` writable for `p` bytes and
// `value_out` writable.
enum LrStatus lr_sfm(const struct LrSetFunction *f,
                     const double *z,
                     size_t p,
                     double lambda,
                     uint8_t *mask_out,
                     double *value_out);

// Message for the last failed call on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *lr_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *lr_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVELREG_H */
