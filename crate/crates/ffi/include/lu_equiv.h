#ifndef LU_EQUIV_H
#define LU_EQUIV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible function.
typedef enum LuStatus {
  LU_STATUS_OK = 0,
  LU_STATUS_NULL_POINTER = 1,
  LU_STATUS_PARSE = 2,
  LU_STATUS_INVALID_STATE = 3,
  LU_STATUS_INVALID_UNITARIES = 4,
  LU_STATUS_INVALID_CONFIG = 5,
  LU_STATUS_BUFFER_TOO_SMALL = 6,
  LU_STATUS_WRONG_VERDICT = 7,
  LU_STATUS_NUMERICAL = 8,
  LU_STATUS_INTERNAL = 9,
  LU_STATUS_PANIC = 10,
} LuStatus;

// Outcome of [`lu_decide`]. The values match the command-line exit codes.
typedef enum LuVerdictKind {
  LU_VERDICT_KIND_EQUIVALENT = 0,
  LU_VERDICT_KIND_INEQUIVALENT = 1,
  LU_VERDICT_KIND_INCONCLUSIVE = 2,
} LuVerdictKind;

// Opaque validated density matrix.
typedef struct LuState LuState;

// Opaque decision result.
typedef struct LuVerdict LuVerdict;

// Search settings. Obtain defaults from [`lu_config_default`].
typedef struct LuConfig {
  double tol_residual;
  double tol_spectra;
  size_t n_starts;
  size_t max_iters;
  uint64_t seed;
  // Wall-clock budget in milliseconds; 0 means unlimited.
  uint64_t budget_ms;
  double degeneracy_tol;
  double zero_tol;
} LuConfig;

// Spectral witness of inequivalence.
typedef struct LuWitness {
  // Bit `k - 1` is set when subsystem `k` belongs to the subset.
  uint32_t subset_mask;
  // 1-based tensor mode.
  size_t mode;
  // Max-norm gap between the two singular-value triples.
  double gap;
} LuWitness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *lu_version(void);

// Message for the last failed call on this thread; empty if it succeeded.
// The pointer stays valid until the next call into this library.
const char *lu_last_error(void);

struct LuConfig lu_config_default(void);

// Parse a state document (`{"n_qubits": N, "matrix": [[[re, im], ...], ...]}`).
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum LuStatus lu_state_from_json(const char *json, struct LuState **out);

// Build a state from row-major `2^n x 2^n` real and imaginary parts.
//
// # Safety
// `re` and `im` must each hold `4^n_qubits` doubles; `out` must be writable.
enum LuStatus lu_state_from_parts(size_t n_qubits,
                                  const double *re,
                                  const double *im,
                                  struct LuState **out);

// # Safety
// `state` must be null or a handle from this library not yet freed.
void lu_state_free(struct LuState *state);

// Number of qubits, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
size_t lu_state_n_qubits(const struct LuState *state);

// Correlation tensors as canonical JSON. Free the result with [`lu_string_free`].
//
// # Safety
// `state` must be a live handle and `out` writable.
enum LuStatus lu_state_tensors_json(const struct LuState *state, char **out);

// Singular-spectrum fingerprint as canonical JSON. Free with [`lu_string_free`].
//
// # Safety
// `state` must be a live handle and `out` writable.
enum LuStatus lu_state_fingerprint_json(const struct LuState *state, char **out);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void lu_string_free(char *s);

// Decide whether `b` is a local-unitary image of `a`. A null `config`
// selects the defaults.
//
// # Safety
// `a` and `b` must be live handles, `config` null or valid, `out` writable.
enum LuStatus lu_decide(const struct LuState *a,
                        const struct LuState *b,
                        const struct LuConfig *config,
                        struct LuVerdict **out);

// # Safety
// `verdict` must be null or a handle from [`lu_decide`] not yet freed.
void lu_verdict_free(struct LuVerdict *verdict);

// # Safety
// `verdict` must be a live handle and `out` writable.
enum LuStatus lu_verdict_kind(const struct LuVerdict *verdict, enum LuVerdictKind *out);

// Certificate residual of an equivalent verdict, or the best tensor residual
// of an inconclusive one. Fails with `WRONG_VERDICT` for an inequivalent one.
//
// # Safety
// `verdict` must be a live handle and `out` writable.
enum LuStatus lu_verdict_residual(const struct LuVerdict *verdict, double *out);

// Copy the certified unitaries of an equivalent verdict. Unitary `k` occupies
// entries `4k .. 4k + 4` of `re` and `im`, row-major. `len` is the capacity of
// each array in doubles; it must be at least `4 * n_qubits`.
//
// # Safety
// `verdict` must be a live handle; `re` and `im` must hold `len` doubles.
enum LuStatus lu_verdict_unitaries(const struct LuVerdict *verdict,
                                   double *re,
                                   double *im,
                                   size_t len);

// Witness of an inequivalent verdict.
//
// # Safety
// `verdict` must be a live handle and `out` writable.
enum LuStatus lu_verdict_witness(const struct LuVerdict *verdict, struct LuWitness *out);

// Compute `max |b - (xU) a (xU)^dag|` for `n_units` unitaries laid out as in
// [`lu_verdict_unitaries`].
//
// # Safety
// `a`, `b` must be live handles; `re`, `im` hold `4 * n_units` doubles; `out` writable.
enum LuStatus lu_verify(const struct LuState *a,
                        const struct LuState *b,
                        const double *re,
                        const double *im,
                        size_t n_units,
                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LU_EQUIV_H */
