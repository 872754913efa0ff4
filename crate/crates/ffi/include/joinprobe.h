#ifndef JOINPROBE_H
#define JOINPROBE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum jp_status {
  JP_STATUS_OK = 0,
  JP_STATUS_NULL_ARGUMENT = 1,
  JP_STATUS_INVALID_INPUT = 2,
  JP_STATUS_UNSUPPORTED = 3,
  JP_STATUS_ENGINE = 4,
  JP_STATUS_CONFIG = 5,
  JP_STATUS_IO = 6,
  /*
   A Rust panic was caught at the boundary.
   */
  JP_STATUS_INTERNAL = 7,
} jp_status;

/*
 Opaque handle to a normalized, possibly noise-injected test database.
 */
typedef struct jp_database jp_database;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Load `source` (`builtin:shopping`, `builtin:synthetic:<seed>` or a CSV
 path), normalize it and, when `epsilon` > 0, inject noise drawn from
 `seed`. On success `*out` owns a handle for [`jp_database_free`].

 # Safety
 `source` must be a valid C string and `out` a valid pointer.
 */
enum jp_status jp_database_load(const char *source,
                                double epsilon,
                                uint64_t seed,
                                struct jp_database **out);

/*
 # Safety
 `db` must come from [`jp_database_load`] and not be used afterwards.
 */
void jp_database_free(struct jp_database *db);

/*
 # Safety
 `db` must be a live handle and `out` a valid pointer.
 */
enum jp_status jp_database_table_count(const struct jp_database *db, size_t *out);

/*
 CREATE TABLE statements for `dialect` (`generic`, `mysql`, `mariadb`,
 `tidb`), followed by INSERTs when `with_data` is non-zero.

 # Safety
 `db` must be a live handle, `dialect` a valid C string, `out` a valid
 pointer.
 */
enum jp_status jp_database_ddl(const struct jp_database *db,
                               const char *dialect,
                               int32_t with_data,
                               char **out);

/*
 Ground truth of a generated-shape query as JSON:
 `{"mode": "FullSet"|"SubSet", "columns": [...], "rows": [[...]], "provenance": [RowID...]}`
 with values rendered as SQL literals.

 # Safety
 `db` must be a live handle, `sql` a valid C string, `out` a valid
 pointer.
 */
enum jp_status jp_ground_truth(const struct jp_database *db, const char *sql, char **out);

/*
 Run a campaign configured by TOML text (same keys as the CLI config
 file) and return its summary as JSON.

 # Safety
 `config_toml` must be a valid C string and `out` a valid pointer.
 */
enum jp_status jp_run_campaign(const char *config_toml, char **out);

/*
 # Safety
 `s` must come from this library and not be used afterwards.
 */
void jp_string_free(char *s);

/*
 Message for the last failed call on this thread; empty after a
 success. Valid until the next call on the same thread.
 */
const char *jp_last_error_message(void);

/*
 Library version as a static C string.
 */
const char *jp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JOINPROBE_H */
