#ifndef SOFLAB_H
#define SOFLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SoflabStatus {
  SOFLAB_STATUS_OK = 0,
  SOFLAB_STATUS_NULL_POINTER = 1,
  SOFLAB_STATUS_INVALID_ARGUMENT = 2,
  SOFLAB_STATUS_UNSUPPORTED = 3,
  SOFLAB_STATUS_BUDGET_EXCEEDED = 4,
  SOFLAB_STATUS_SCHEMA = 5,
  SOFLAB_STATUS_ASSERTION = 6,
  SOFLAB_STATUS_IO = 7,
  SOFLAB_STATUS_UTF8 = 8,
  SOFLAB_STATUS_PANIC = 9,
} SoflabStatus;

// A sofic approximation sequence.
typedef struct SoflabSofic SoflabSofic;

// A subshift: group, alphabet and forbidden patterns.
typedef struct SoflabSystem SoflabSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *soflab_version(void);

// Message of the last failure on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *soflab_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void soflab_string_free(char *s);

// Builds a system from the JSON of an experiment's `system` block.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum SoflabStatus soflab_system_from_json(const char *json, struct SoflabSystem **out);

// The full shift on `k` symbols over Z.
//
// # Safety
// `out` must be writable.
enum SoflabStatus soflab_system_full_shift(size_t k, struct SoflabSystem **out);

// The golden-mean shift over Z.
//
// # Safety
// `out` must be writable.
enum SoflabStatus soflab_system_golden_mean(struct SoflabSystem **out);

// # Safety
// `sys` must be NULL or a handle from this library, not yet freed.
void soflab_system_free(struct SoflabSystem *sys);

// # Safety
// `sys` must be a live handle and `out` writable.
enum SoflabStatus soflab_system_alphabet_size(const struct SoflabSystem *sys, size_t *out);

// Number of admissible patterns on a window of Z given by its positions.
//
// # Safety
// `window` must point to `len` integers and `out` be writable.
enum SoflabStatus soflab_language_size(const struct SoflabSystem *sys,
                                       const int64_t *window,
                                       size_t len,
                                       uint64_t budget,
                                       uint64_t *out);

// Cyclic models of the intervals `{0..d-1}` of Z, one stage per size.
//
// # Safety
// `sizes` must point to `n` values and `out` be writable.
enum SoflabStatus soflab_sofic_cyclic(const size_t *sizes, size_t n, struct SoflabSofic **out);

// Independent uniform permutations for the generators of the free group
// of the given rank, one stage per degree, reproducible from `seed`.
//
// # Safety
// `degrees` must point to `n` values and `out` be writable.
enum SoflabStatus soflab_sofic_random_free(size_t rank,
                                           const size_t *degrees,
                                           size_t n,
                                           uint64_t seed,
                                           struct SoflabSofic **out);

// # Safety
// `seq` must be NULL or a handle from this library, not yet freed.
void soflab_sofic_free(struct SoflabSofic *seq);

// Number of stages.
//
// # Safety
// `seq` must be a live handle and `out` writable.
enum SoflabStatus soflab_sofic_len(const struct SoflabSofic *seq, size_t *out);

// Degree `d_i` of stage `i` (0-based).
//
// # Safety
// `seq` must be a live handle and `out` writable.
enum SoflabStatus soflab_sofic_degree(const struct SoflabSofic *seq, size_t i, size_t *out);

// Sofic trace of the symbol partition with `F` the generators and `W`
// the identity: writes `n = stages` values per mode. `-INFINITY` marks an
// empty microstate set and NaN a stage that ran out of budget.
//
// # Safety
// Handles must be live; `inner` and `outer` must each hold `n` doubles.
enum SoflabStatus soflab_sofic_topological_trace(const struct SoflabSystem *sys,
                                                 const struct SoflabSofic *seq,
                                                 double delta,
                                                 uint64_t budget,
                                                 double *inner,
                                                 double *outer,
                                                 size_t n);

// Whether the sets admit pairwise disjoint cores of relative size at
// least `1 - eps`. Set `i` is `elements[offset_i .. offset_i + lengths[i]]`
// with the sets stored back to back.
//
// # Safety
// `lengths` must hold `n_sets` values and `elements` their sum.
enum SoflabStatus soflab_epsilon_disjoint(const size_t *elements,
                                          const size_t *lengths,
                                          size_t n_sets,
                                          double eps,
                                          bool *out);

// Runs an experiment document (the JSON accepted by the `soflab` CLI)
// and returns its JSON report and CSV table. `budget` 0 keeps the
// document's own budget. Either output pointer may be NULL.
//
// # Safety
// `spec_json` must be a NUL-terminated string; non-NULL outputs must be
// writable.
enum SoflabStatus soflab_run_spec(const char *spec_json,
                                  uint64_t budget,
                                  char **out_json,
                                  char **out_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOFLAB_H */
