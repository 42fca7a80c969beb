#ifndef WTCPIR_H
#define WTCPIR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WtcStatus {
  WTC_STATUS_OK = 0,
  WTC_STATUS_NULL_POINTER = 1,
  WTC_STATUS_INVALID_UTF8 = 2,
  WTC_STATUS_INVALID_ARGUMENT = 3,
  WTC_STATUS_PLAN_ERROR = 4,
  WTC_STATUS_SIMULATION_ERROR = 5,
  WTC_STATUS_PANIC = 6,
} WtcStatus;

/**
 * Opaque query plan.
 */
typedef struct WtcPlan WtcPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Valid until the next call
 * into the library from the same thread.
 */
const char *wtc_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void wtc_string_free(char *s);

/**
 * Upper bound and best achievable rate as doubles.
 *
 * # Safety
 * `mu` must be null or a valid C string; the outputs must be writable.
 */
enum WtcStatus wtc_capacity(size_t messages,
                            size_t databases,
                            const char *mu,
                            double *upper,
                            double *lower);

/**
 * Full capacity report as JSON with exact rationals.
 *
 * # Safety
 * `mu` must be null or a valid C string; `out_json` must be writable.
 */
enum WtcStatus wtc_capacity_json(size_t messages,
                                 size_t databases,
                                 const char *mu,
                                 char **out_json);

/**
 * Builds a plan. `seq` may be null to use the best scheme; `desired` is 0-based.
 * `field_q` of 0 picks the default field.
 *
 * # Safety
 * `seq` must point to `seq_len` values when non-null; `out` must be writable.
 */
enum WtcStatus wtc_plan_build(size_t messages,
                              size_t databases,
                              const char *mu,
                              const size_t *seq,
                              size_t seq_len,
                              size_t desired,
                              uint64_t seed,
                              uint64_t field_q,
                              struct WtcPlan **out);

/**
 * Parses a plan from its JSON form.
 *
 * # Safety
 * `json` must be a valid C string; `out` must be writable.
 */
enum WtcStatus wtc_plan_from_json(const char *json, struct WtcPlan **out);

/**
 * # Safety
 * `plan` must be a live handle; `out_json` must be writable.
 */
enum WtcStatus wtc_plan_to_json(const struct WtcPlan *plan, char **out_json);

/**
 * Markdown rendering of the plan.
 *
 * # Safety
 * `plan` must be a live handle; `out` must be writable.
 */
enum WtcStatus wtc_plan_table(const struct WtcPlan *plan, char **out);

/**
 * Message length `L` and total download `Σ t_n`.
 *
 * # Safety
 * `plan` must be a live handle; the outputs must be writable.
 */
enum WtcStatus wtc_plan_dimensions(const struct WtcPlan *plan,
                                   uint64_t *message_len,
                                   uint64_t *total_download);

/**
 * # Safety
 * `plan` must be null or a handle from this library, freed once.
 */
void wtc_plan_free(struct WtcPlan *plan);

/**
 * Runs the privacy, security and decodability audits. `passed` receives
 * the overall verdict; `out_json` may be null.
 *
 * # Safety
 * `plan` must be a live handle; `passed` must be writable.
 */
enum WtcStatus wtc_plan_audit(const struct WtcPlan *plan,
                              uint64_t budget,
                              size_t trials,
                              uint64_t seed,
                              bool *passed,
                              char **out_json);

/**
 * One retrieval over random messages drawn from `store_seed` and keys from
 * `key_seed`. `correct` reports whether the decoded message matches.
 *
 * # Safety
 * `plan` must be a live handle; `correct` must be writable.
 */
enum WtcStatus wtc_simulate(const struct WtcPlan *plan,
                            uint64_t store_seed,
                            uint64_t key_seed,
                            bool *correct);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WTCPIR_H */
