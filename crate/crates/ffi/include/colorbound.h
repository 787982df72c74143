#ifndef COLORBOUND_H
#define COLORBOUND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call.
typedef enum CbStatus {
  CB_STATUS_OK = 0,
  // Arguments violate a precondition.
  CB_STATUS_INVALID_ARGUMENT = 1,
  // A search found nothing in its range.
  CB_STATUS_NOT_FOUND = 2,
  // A computation would exceed its work or state-space budget.
  CB_STATUS_BUDGET_EXCEEDED = 3,
  // A logarithm of a vanishing quantity was requested.
  CB_STATUS_NUMERICAL = 4,
  // Text input could not be parsed.
  CB_STATUS_PARSE = 5,
  // A required pointer was null.
  CB_STATUS_NULL_POINTER = 6,
  // The library panicked; this is a bug.
  CB_STATUS_PANIC = 7,
} CbStatus;

typedef enum CbProvenance {
  CB_PROVENANCE_EXACT = 0,
  CB_PROVENANCE_TRUNCATED = 1,
  CB_PROVENANCE_MONTE_CARLO = 2,
} CbProvenance;

typedef enum CbMode {
  CB_MODE_ENUMERATE = 0,
  CB_MODE_MONTE_CARLO = 1,
} CbMode;

// Opaque finite-support distribution on [0, 1].
typedef struct CbDistribution CbDistribution;

// Opaque multigraph.
typedef struct CbMultigraph CbMultigraph;

// A value with its error radius and how it was obtained.
typedef struct CbEvalResult {
  double value;
  double error_radius;
  enum CbProvenance provenance;
} CbEvalResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread ("" after success).
// The pointer stays valid until the next call on the same thread.
const char *cb_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cb_version(void);

// Builds a canonical distribution from `len` (location, weight) pairs.
//
// # Safety
// `locations` and `weights` must point to `len` doubles; `out` must be
// writable.
enum CbStatus cb_distribution_new(const double *locations,
                                  const double *weights,
                                  size_t len,
                                  struct CbDistribution **out);

// # Safety
// `dist` must come from `cb_distribution_new` (or be null) and not be
// used afterwards.
void cb_distribution_free(struct CbDistribution *dist);

// Number of atoms after canonicalisation.
//
// # Safety
// `dist` must be a live handle; `out` must be writable.
enum CbStatus cb_distribution_len(const struct CbDistribution *dist, size_t *out);

// Location and weight of atom `index` (atoms sorted by location).
//
// # Safety
// `dist` must be a live handle; `location` and `weight` must be writable.
enum CbStatus cb_distribution_atom(const struct CbDistribution *dist,
                                   size_t index,
                                   double *location,
                                   double *weight);

// Probability that some colour is hit by none of `len` independent draws,
// draw `h` being a wildcard with probability `alphas[h]`.
//
// # Safety
// `alphas` must point to `len` doubles; `out` must be writable.
enum CbStatus cb_miss_probability(uint32_t q,
                                  const double *alphas,
                                  size_t len,
                                  struct CbEvalResult *out);

// `Sigma_{d,q}(alpha)` for the `d`-regular model.
//
// # Safety
// `out` must be writable.
enum CbStatus cb_sigma_regular(uint32_t d, uint32_t q, double alpha, struct CbEvalResult *out);

// Global minimum of `Sigma_{d,q}` over `[0, 1]`.
//
// # Safety
// `alpha_star` and `sigma_min` must be writable.
enum CbStatus cb_minimize_sigma(uint32_t d, uint32_t q, double *alpha_star, double *sigma_min);

// Smallest `d` in `[3, d_max]` with `min Sigma_{d,q} < 0`.
//
// # Safety
// `d_q` must be writable.
enum CbStatus cb_find_dq(uint32_t q, uint32_t d_max, uint32_t *d_q);

// Smallest degree ruled out by the first-moment bound.
//
// # Safety
// `degree` must be writable.
enum CbStatus cb_first_moment_bound(uint32_t q, uint32_t *degree);

// Largest degree below the second-moment colourability threshold;
// `*exists` is false when that degree would be below 3.
//
// # Safety
// `degree` and `exists` must be writable.
enum CbStatus cb_second_moment_bound(uint32_t q, uint32_t *degree, bool *exists);

// `Sigma*_{d,q}(delta_alpha)` for the binomial model.
//
// # Safety
// `out` must be writable.
enum CbStatus cb_sigma_star_atom(double d, uint32_t q, double alpha, struct CbEvalResult *out);

// `Sigma*_{d,q}(p)` by exact enumeration or Monte Carlo (`samples`,
// `seed` are ignored when enumerating).
//
// # Safety
// `dist` must be a live handle; `out` must be writable.
enum CbStatus cb_sigma_star(double d,
                            uint32_t q,
                            const struct CbDistribution *dist,
                            enum CbMode mode,
                            uint64_t samples,
                            uint64_t seed,
                            struct CbEvalResult *out);

// Multigraph on `n` vertices with `len` edges `(us[i], vs[i])` of
// multiplicity `mults[i]` (or 1 each when `mults` is null).
//
// # Safety
// `us`, `vs` (and `mults` unless null) must point to `len` elements;
// `out` must be writable.
enum CbStatus cb_multigraph_new(size_t n,
                                const uint32_t *us,
                                const uint32_t *vs,
                                const uint64_t *mults,
                                size_t len,
                                struct CbMultigraph **out);

// Parses the text format ("n m" then "u v mult" lines, 1-based).
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum CbStatus cb_multigraph_parse(const char *text, struct CbMultigraph **out);

// Text form of `graph`; release the string with `cb_string_free`.
//
// # Safety
// `graph` must be a live handle; `out` must be writable.
enum CbStatus cb_multigraph_to_text(const struct CbMultigraph *graph, char **out);

// # Safety
// `s` must come from this library (or be null) and not be used afterwards.
void cb_string_free(char *s);

// # Safety
// `graph` must come from this library (or be null) and not be used
// afterwards.
void cb_multigraph_free(struct CbMultigraph *graph);

// Potts partition function `Z_beta(G)` with `q` colours.
//
// # Safety
// `graph` must be a live handle; `out` must be writable.
enum CbStatus cb_potts_partition(const struct CbMultigraph *graph,
                                 uint32_t q,
                                 double beta,
                                 double *out);

// Number of proper `q`-colourings.
//
// # Safety
// `graph` must be a live handle; `out` must be writable.
enum CbStatus cb_count_colorings(const struct CbMultigraph *graph, uint32_t q, uint64_t *out);

// Exact chromatic number (graphs without loops, at most 60 vertices).
//
// # Safety
// `graph` must be a live handle; `out` must be writable.
enum CbStatus cb_chromatic_number(const struct CbMultigraph *graph, uint32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLORBOUND_H */
