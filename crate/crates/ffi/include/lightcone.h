#ifndef LIGHTCONE_H
#define LIGHTCONE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LcStatus {
  /**
   * The call succeeded.
   */
  LcOk = 0,
  /**
   * The scenario file or TOML text is malformed or fails validation.
   */
  LcConfigError = 1,
  /**
   * A pipeline failed to run (solver error, I/O failure, ...).
   */
  LcRuntimeError = 2,
  /**
   * A required pointer argument was NULL or an index was out of range.
   */
  LcNullArgument = 3,
  /**
   * A string argument was not valid UTF-8.
   */
  LcInvalidUtf8 = 4,
  /**
   * The library panicked internally; the handle states are unchanged.
   */
  LcPanic = 5,
} LcStatus;

/**
 * Opaque verification report (ordered pass/fail entries).
 */
typedef struct LcReport LcReport;

/**
 * Opaque verification scenario (parsed and validated configuration).
 */
typedef struct LcScenario LcScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message raised on this thread, valid until the next library
 * call on the same thread. Never NULL; empty before any error.
 */
const char *lc_last_error(void);

/**
 * Parse and validate a scenario from a TOML file on disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum LcStatus lc_scenario_load(const char *path, struct LcScenario **out);

/**
 * Instantiate a bundled scenario (`minkowski-moretti`, `overcoupled-gauge`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum LcStatus lc_scenario_builtin(const char *name, struct LcScenario **out);

/**
 * Parse and validate a scenario from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum LcStatus lc_scenario_from_toml(const char *text, struct LcScenario **out);

/**
 * Override the scenario seed.
 *
 * # Safety
 * `scenario` must be a live handle from this library.
 */
enum LcStatus lc_scenario_set_seed(struct LcScenario *scenario, uint64_t seed);

/**
 * Scenario name as a fresh NUL-terminated copy (release with
 * `lc_string_free`). Returns NULL on a NULL handle.
 *
 * # Safety
 * `scenario` must be a live handle from this library.
 */
char *lc_scenario_name(const struct LcScenario *scenario);

/**
 * Run every pipeline the scenario enables. `out_dir` may be NULL (no
 * report files are written); otherwise the directory is created and
 * `report.json` plus CSV tables land there. The call succeeds even when
 * checks FAIL — inspect the report.
 *
 * # Safety
 * `scenario` must be a live handle; `out_dir` NULL or NUL-terminated;
 * `out` must be a valid pointer.
 */
enum LcStatus lc_scenario_run(const struct LcScenario *scenario,
                              const char *out_dir,
                              struct LcReport **out);

/**
 * Run the grid-refinement convergence sweep (`levels` ≥ 3).
 *
 * # Safety
 * Same contracts as `lc_scenario_run`.
 */
enum LcStatus lc_scenario_sweep(const struct LcScenario *scenario,
                                uintptr_t levels,
                                const char *out_dir,
                                struct LcReport **out);

/**
 * 1 when every entry passed, 0 otherwise (0 on a NULL handle).
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
int32_t lc_report_all_pass(const struct LcReport *report);

/**
 * Number of check entries (0 on a NULL handle).
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
uintptr_t lc_report_len(const struct LcReport *report);

/**
 * Entry identifier (e.g. `"bulk.monomorphism"`) as a fresh copy (release
 * with `lc_string_free`). NULL on a NULL handle or out-of-range index.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
char *lc_report_entry_id(const struct LcReport *report, uintptr_t index);

/**
 * Measured value of an entry (NaN on a NULL handle or bad index).
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
double lc_report_entry_value(const struct LcReport *report, uintptr_t index);

/**
 * Threshold of an entry; NaN for informational entries, NULL handles, or
 * bad indices.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
double lc_report_entry_threshold(const struct LcReport *report, uintptr_t index);

/**
 * 1 when the entry passed, 0 otherwise (0 on NULL handle / bad index).
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
int32_t lc_report_entry_pass(const struct LcReport *report, uintptr_t index);

/**
 * Canonical JSON serialization of the report as a fresh copy (release with
 * `lc_string_free`). NULL on a NULL handle.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
char *lc_report_to_json(const struct LcReport *report);

/**
 * Release a scenario handle. NULL is a no-op.
 *
 * # Safety
 * `scenario` must be NULL or a handle obtained from this library, and must
 * not be used afterwards.
 */
void lc_scenario_free(struct LcScenario *scenario);

/**
 * Release a report handle. NULL is a no-op.
 *
 * # Safety
 * `report` must be NULL or a handle obtained from this library, and must
 * not be used afterwards.
 */
void lc_report_free(struct LcReport *report);

/**
 * Release a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be NULL or a string obtained from this library, and must not be
 * used afterwards.
 */
void lc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIGHTCONE_H */
