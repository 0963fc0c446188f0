#ifndef CARLEMAN_H
#define CARLEMAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call.
 */
typedef enum CarlemanStatus {
  CARLEMAN_STATUS_OK = 0,
  /**
   * A check missed its tolerance (only from [`carleman_run`]).
   */
  CARLEMAN_STATUS_TOLERANCE = 1,
  /**
   * Invalid configuration or argument.
   */
  CARLEMAN_STATUS_CONFIG = 2,
  /**
   * The solver failed (singular system, overflow, ...).
   */
  CARLEMAN_STATUS_SOLVER = 3,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  CARLEMAN_STATUS_INVALID_POINTER = 4,
  /**
   * Internal panic; the handle involved should be freed and not reused.
   */
  CARLEMAN_STATUS_PANIC = 5,
} CarlemanStatus;

/**
 * A solved Γ.
 */
typedef struct CarlemanGamma CarlemanGamma;

/**
 * A parsed scenario with its grid and field.
 */
typedef struct CarlemanScenario CarlemanScenario;

/**
 * A complex number as two doubles.
 */
typedef struct CarlemanComplex {
  double re;
  double im;
} CarlemanComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *carleman_last_error(void);

void carleman_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *carleman_version(void);

/**
 * Parses a JSON scenario (empty string for all defaults) and builds its grid and field.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CarlemanStatus carleman_scenario_new(const char *json, struct CarlemanScenario **out);

/**
 * # Safety
 * `s` must come from [`carleman_scenario_new`] and not be used afterwards; null is ignored.
 */
void carleman_scenario_free(struct CarlemanScenario *s);

/**
 * Number of quadrature nodes, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live scenario handle.
 */
size_t carleman_scenario_node_count(const struct CarlemanScenario *s);

/**
 * Copies the 64-character hex config hash and a NUL into `buf` (at least 65 bytes).
 *
 * # Safety
 * `s` must be a live handle and `buf` writable for `len` bytes.
 */
enum CarlemanStatus carleman_scenario_hash(const struct CarlemanScenario *s, char *buf, size_t len);

/**
 * Solves Γ for the scenario's field dressed at `times` (n = 0 for the undeformed field).
 *
 * # Safety
 * `s` must be a live handle, `times` readable for `n` entries, and `out` valid.
 */
enum CarlemanStatus carleman_solve(const struct CarlemanScenario *s,
                                   const struct CarlemanComplex *times,
                                   size_t n,
                                   struct CarlemanGamma **out);

/**
 * # Safety
 * `g` must come from [`carleman_solve`] and not be used afterwards; null is ignored.
 */
void carleman_gamma_free(struct CarlemanGamma *g);

/**
 * Matrix dimension r of Γ, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t carleman_gamma_dim(const struct CarlemanGamma *g);

/**
 * Γ(z), written row-major into `out` (r·r entries).
 *
 * # Safety
 * `g` must be a live handle and `out` writable for r·r entries.
 */
enum CarlemanStatus carleman_gamma_evaluate(const struct CarlemanGamma *g,
                                            struct CarlemanComplex z,
                                            struct CarlemanComplex *out);

/**
 * Γ₁, the coefficient of 1/z at infinity, row-major into `out` (r·r entries).
 *
 * # Safety
 * `g` must be a live handle and `out` writable for r·r entries.
 */
enum CarlemanStatus carleman_gamma_residue(const struct CarlemanGamma *g,
                                           struct CarlemanComplex *out);

/**
 * max over nodes of |det Γ − 1|, or NaN for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
double carleman_gamma_unimodularity(const struct CarlemanGamma *g);

/**
 * log det₂(I − 𝒦) of the scenario's kernel pair dressed at `times`.
 *
 * # Safety
 * `s` must be a live handle, `times` readable for `n` entries, and `out` valid.
 */
enum CarlemanStatus carleman_log_det2(const struct CarlemanScenario *s,
                                      const struct CarlemanComplex *times,
                                      size_t n,
                                      struct CarlemanComplex *out);

/**
 * ψ(x, t, t₃) for an `nls_beta` scenario.
 *
 * # Safety
 * `s` must be a live handle and `out` valid.
 */
enum CarlemanStatus carleman_nls_psi(const struct CarlemanScenario *s,
                                     double x,
                                     double t,
                                     double t3,
                                     struct CarlemanComplex *out);

/**
 * Runs a subcommand (e.g. "solve-dbar") on a JSON scenario and writes its report files.
 *
 * Returns `Tolerance` when the run finished but a check failed.
 *
 * # Safety
 * `command` and `json` must be NUL-terminated strings.
 */
enum CarlemanStatus carleman_run(const char *command, const char *json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARLEMAN_H */
