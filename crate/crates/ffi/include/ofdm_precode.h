#ifndef OFDM_PRECODE_H
#define OFDM_PRECODE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum OpcStatus {
  OPC_STATUS_OK = 0,
  OPC_STATUS_NULL_POINTER = 1,
  /**
   * Bad argument at the ABI level (length, encoding).
   */
  OPC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Scenario text, preset name or parameter rejected.
   */
  OPC_STATUS_INVALID_CONFIG = 3,
  OPC_STATUS_DIMENSION_MISMATCH = 4,
  /**
   * Rank-deficient leakage matrix or a vanishing update.
   */
  OPC_STATUS_NUMERICAL = 5,
  OPC_STATUS_IO = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  OPC_STATUS_INTERNAL = 7,
} OpcStatus;

/**
 * A scenario with its calibration and constraint set, ready to precode.
 */
typedef struct OpcPrecoder OpcPrecoder;

/**
 * A parsed scenario.
 */
typedef struct OpcScenario OpcScenario;

/**
 * Per-symbol result of [`opc_precoder_apply`].
 */
typedef struct OpcSymbolStats {
  double evm_pct;
  /**
   * NaN for NSP, which has no thresholds.
   */
  double max_violation_db;
  size_t iterations;
  bool converged;
} OpcSymbolStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *opc_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *opc_last_error_message(void);

/**
 * Parses a TOML scenario. Relative mask file paths resolve against the
 * current directory.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OpcStatus opc_scenario_parse(const char *toml, struct OpcScenario **out);

/**
 * Loads a built-in scenario by name, or a scenario file by path.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OpcStatus opc_scenario_preset(const char *name, struct OpcScenario **out);

/**
 * Number of allocated subcarriers of the scenario.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` a valid pointer.
 */
enum OpcStatus opc_scenario_n_allocated(const struct OpcScenario *s, size_t *out);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void opc_scenario_free(struct OpcScenario *s);

/**
 * Measures the power calibration and builds the constraint set. This runs
 * the scenario's calibration batch and may take a moment.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` a valid pointer.
 */
enum OpcStatus opc_precoder_new(const struct OpcScenario *s, struct OpcPrecoder **out);

/**
 * Number of mask constraints.
 *
 * # Safety
 * `p` must be a live precoder handle and `out` a valid pointer.
 */
enum OpcStatus opc_precoder_n_constraints(const struct OpcPrecoder *p, size_t *out);

/**
 * Writes data symbol `index` of the scenario's batch (its seed and
 * constellation) into `out`, which holds `2·n` doubles.
 *
 * # Safety
 * `p` must be a live precoder handle and `out` valid for `2·n` doubles.
 */
enum OpcStatus opc_precoder_symbol(const struct OpcPrecoder *p,
                                   uint64_t index,
                                   double *out,
                                   size_t n);

/**
 * Precodes one symbol with the scenario's algorithm. `d` and `out` hold
 * `2·n` doubles each and may alias. `stats` may be null.
 *
 * # Safety
 * `p` must be a live precoder handle; `d` and `out` valid for `2·n`
 * doubles; `stats` null or valid.
 */
enum OpcStatus opc_precoder_apply(const struct OpcPrecoder *p,
                                  const double *d,
                                  size_t n,
                                  double *out,
                                  struct OpcSymbolStats *stats);

/**
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void opc_precoder_free(struct OpcPrecoder *p);

/**
 * Leakage kernel of an `n`-point symbol with `n_cp` prefix samples at
 * frequency offset `offset` (in subcarriers).
 *
 * # Safety
 * `re` and `im` must be valid pointers.
 */
enum OpcStatus opc_leakage_kernel(size_t n, size_t n_cp, double offset, double *re, double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OFDM_PRECODE_H */
