#ifndef PIOLA_H
#define PIOLA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define PIOLA_OK 0

/**
 * A required pointer argument was null.
 */
#define PIOLA_ERR_NULL_ARGUMENT 1

/**
 * A string argument was not valid UTF-8.
 */
#define PIOLA_ERR_INVALID_UTF8 2

/**
 * Scenario JSON failed to parse or validate; see `piola_last_error`.
 */
#define PIOLA_ERR_LOAD 3

/**
 * Check execution failed; see `piola_last_error`.
 */
#define PIOLA_ERR_RUNTIME 4

/**
 * Opaque verification report.
 */
typedef struct PiolaReport PiolaReport;

/**
 * Opaque validated scenario.
 */
typedef struct PiolaScenario PiolaScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *piola_last_error(void);

/**
 * Parse and validate a scenario from JSON text.
 *
 * # Safety
 * `json` must be nul-terminated; `out` must point to writable storage.
 */
int piola_scenario_from_json(const char *json, struct PiolaScenario **out);

/**
 * Load one of the built-in scenarios by name.
 *
 * # Safety
 * `name` must be nul-terminated; `out` must point to writable storage.
 */
int piola_scenario_builtin(const char *name, struct PiolaScenario **out);

/**
 * # Safety
 * `scenario` must come from a piola_scenario_* constructor, or be null.
 */
void piola_scenario_free(struct PiolaScenario *scenario);

/**
 * Run every check of the scenario. A negative `seed` keeps the
 * scenario's own seed; a non-negative value overrides it.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must point to writable storage.
 */
int piola_run(const struct PiolaScenario *scenario, int64_t seed, struct PiolaReport **out);

/**
 * 1 if every check passed, 0 otherwise; -1 on null input.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
int piola_report_passed(const struct PiolaReport *report);

/**
 * Render the report as the stable JSON schema. Free with
 * `piola_string_free`.
 *
 * # Safety
 * `report` must be a live handle; `out` must point to writable storage.
 */
int piola_report_json(const struct PiolaReport *report, char **out);

/**
 * Render the report as the human-readable table. Free with
 * `piola_string_free`.
 *
 * # Safety
 * `report` must be a live handle; `out` must point to writable storage.
 */
int piola_report_text(const struct PiolaReport *report, char **out);

/**
 * # Safety
 * `report` must come from `piola_run`, or be null.
 */
void piola_report_free(struct PiolaReport *report);

/**
 * # Safety
 * `text` must come from a piola_report_* renderer, or be null.
 */
void piola_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIOLA_H */
