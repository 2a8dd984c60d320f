#ifndef QPREP_H
#define QPREP_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum QprepStatus {
  QPREP_STATUS_OK = 0,
  QPREP_STATUS_NULL_POINTER = 1,
  QPREP_STATUS_INVALID_ARGUMENT = 2,
  QPREP_STATUS_PARSE = 3,
  QPREP_STATUS_OVERFLOW = 4,
  QPREP_STATUS_PANIC = 5,
} QprepStatus;

// Discrete energy distribution.
typedef struct QprepMeasure QprepMeasure;

// Matrix product state.
typedef struct QprepMps QprepMps;

// Determinant-to-signature compression result.
typedef struct QprepSignatureMap QprepSignatureMap;

// Sum-of-Slater-determinants state.
typedef struct QprepSos QprepSos;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a success.
// The pointer stays valid until the next `qprep_*` call on the same thread.
const char *qprep_last_error(void);

// Library version as a static NUL-terminated string.
const char *qprep_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a pointer previously returned through a `char **` out-parameter.
void qprep_string_free(char *s);

// Parses SOS JSON (`{"n_spin_orbitals": n, "terms": [{"re", "im", "occ"}]}`).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum QprepStatus qprep_sos_from_json(const char *json, struct QprepSos **out);

// Serializes the state to compact JSON.
//
// # Safety
// `sos` must be a live handle; `out` must be writable.
enum QprepStatus qprep_sos_to_json(const struct QprepSos *sos, char **out);

// Number of determinants, or 0 for a null handle.
//
// # Safety
// `sos` must be null or a live handle.
size_t qprep_sos_len(const struct QprepSos *sos);

// # Safety
// `sos` must be null or a handle not yet freed.
void qprep_sos_free(struct QprepSos *sos);

// Compresses the state's determinants to distinct signatures.
//
// # Safety
// `sos` must be a live handle; `out` must be writable.
enum QprepStatus qprep_compress(const struct QprepSos *sos, struct QprepSignatureMap **out);

// Bits per signature.
//
// # Safety
// `map` must be null or a live handle.
size_t qprep_signature_map_signature_len(const struct QprepSignatureMap *map);

// Number of signatures (one per determinant).
//
// # Safety
// `map` must be null or a live handle.
size_t qprep_signature_map_count(const struct QprepSignatureMap *map);

// Copies signature `index` into `bits` as one byte (0 or 1) per bit.
// `capacity` must be at least the signature length.
//
// # Safety
// `map` must be a live handle; `bits` must hold `capacity` bytes.
enum QprepStatus qprep_signature_map_get(const struct QprepSignatureMap *map,
                                         size_t index,
                                         uint8_t *bits,
                                         size_t capacity);

// # Safety
// `map` must be null or a handle not yet freed.
void qprep_signature_map_free(struct QprepSignatureMap *map);

// Simulates the SOS encoding circuit and reports fidelity and leftover ancilla weight.
//
// # Safety
// `sos` must be a live handle; both outputs must be writable.
enum QprepStatus qprep_simulate_sos(const struct QprepSos *sos,
                                    double *fidelity,
                                    double *ancilla_residual);

// Converts an SOS state to an MPS with bond dimension at most `chi_max`.
// `fidelity` receives the overlap with the input and may be null.
//
// # Safety
// `sos` must be a live handle; `out` must be writable; `fidelity` null or writable.
enum QprepStatus qprep_sos_to_mps(const struct QprepSos *sos,
                                  size_t local_dim,
                                  size_t chi_max,
                                  struct QprepMps **out,
                                  double *fidelity);

// # Safety
// `mps` must be null or a live handle.
size_t qprep_mps_n_sites(const struct QprepMps *mps);

// Largest bond dimension.
//
// # Safety
// `mps` must be null or a live handle.
size_t qprep_mps_max_bond(const struct QprepMps *mps);

// # Safety
// `mps` must be null or a handle not yet freed.
void qprep_mps_free(struct QprepMps *mps);

// Builds a measure from `n` (energy, weight) pairs in normalized units.
//
// # Safety
// `energies` and `weights` must each hold `n` doubles; `out` must be writable.
enum QprepStatus qprep_measure_from_arrays(const double *energies,
                                           const double *weights,
                                           size_t n,
                                           struct QprepMeasure **out);

// Gaussian discretized into `bins` equal-width bins over ±6σ.
//
// # Safety
// `out` must be writable.
enum QprepStatus qprep_measure_gaussian(double mean,
                                        double sigma,
                                        size_t bins,
                                        struct QprepMeasure **out);

// # Safety
// `m` must be null or a live handle.
size_t qprep_measure_len(const struct QprepMeasure *m);

// Mean energy, NaN for a null handle.
//
// # Safety
// `m` must be null or a live handle.
double qprep_measure_mean(const struct QprepMeasure *m);

// # Safety
// `m` must be null or a handle not yet freed.
void qprep_measure_free(struct QprepMeasure *m);

// Expected minimum energy over `reps` independent samples.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum QprepStatus qprep_expected_min(const struct QprepMeasure *m, uint32_t reps, double *out);

// Probability that `k`-digit QPE reports an energy below `e0 - epsilon` from
// levels above the exclusion threshold: the exact sum and its approximation.
//
// # Safety
// `m` must be a live handle; `exact` and `approx` must be writable.
enum QprepStatus qprep_leak_prob(const struct QprepMeasure *m,
                                 uint32_t k,
                                 double epsilon,
                                 double e0,
                                 double *exact,
                                 double *approx);

// Toffoli count and clean ancillae of the basic SOS encoder for `n` spatial
// orbitals and `d` determinants.
//
// # Safety
// `toffoli` and `clean_qubits` must be writable.
enum QprepStatus qprep_sos_cost_basic(uint64_t n,
                                      uint64_t d,
                                      uint64_t *toffoli,
                                      uint64_t *clean_qubits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPREP_H */
