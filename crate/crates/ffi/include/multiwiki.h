#ifndef MULTIWIKI_H
#define MULTIWIKI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MwStatus {
  MW_STATUS_OK = 0,
  /**
   * A null pointer, invalid UTF-8 or malformed argument.
   */
  MW_STATUS_INVALID_ARGUMENT = 1,
  MW_STATUS_NOT_FOUND = 2,
  /**
   * The request was understood but cannot be satisfied (bad config,
   * unknown article, unsupported format).
   */
  MW_STATUS_USER_ERROR = 3,
  /**
   * The file system or a remote service failed.
   */
  MW_STATUS_ENVIRONMENT_ERROR = 4,
  MW_STATUS_INTERNAL = 5,
  MW_STATUS_PANIC = 6,
} MwStatus;

/**
 * Opaque handle to an open data directory.
 */
typedef struct MwStore MwStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Schema version of every JSON document produced by this library.
 */
uint32_t mw_schema_version(void);

/**
 * Library version, a static nul-terminated string.
 */
const char *mw_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *mw_last_error(void);

/**
 * Releases a string returned through an `out` parameter. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void mw_string_free(char *s);

/**
 * Opens the data directory at `path`. With `create` false the directory
 * must already exist.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum MwStatus mw_store_open(const char *path, bool create, struct MwStore **out);

/**
 * Closes a store handle. Null is ignored.
 *
 * # Safety
 * `store` must come from [`mw_store_open`] and not have been freed.
 */
void mw_store_free(struct MwStore *store);

/**
 * Stored pairs as a JSON array of pair summaries.
 *
 * # Safety
 * Pointer arguments must be valid.
 */
enum MwStatus mw_pairs_json(const struct MwStore *store, char **out);

/**
 * The stored timeline document of a pair.
 *
 * # Safety
 * Pointer arguments must be valid.
 */
enum MwStatus mw_timeline_json(const struct MwStore *store, const char *pair_id, char **out);

/**
 * The comparison document for the latest report at or before `time`
 * (RFC 3339).
 *
 * # Safety
 * Pointer arguments must be valid.
 */
enum MwStatus mw_comparison_json(const struct MwStore *store,
                                 const char *pair_id,
                                 const char *time,
                                 char **out);

/**
 * The timeline exported as `"json"` or `"csv"`.
 *
 * # Safety
 * Pointer arguments must be valid.
 */
enum MwStatus mw_export(const struct MwStore *store,
                        const char *pair_id,
                        const char *format,
                        char **out);

/**
 * Ingests an article pair (`"lang:Title"` each) from a fixture directory
 * using the bundled offline annotators. `snapshot_count` of 0 keeps the
 * configured count. Writes the pair id to `out`.
 *
 * # Safety
 * Pointer arguments must be valid.
 */
enum MwStatus mw_ingest_fixture(const struct MwStore *store,
                                const char *fixture_dir,
                                const char *article1,
                                const char *article2,
                                uint32_t snapshot_count,
                                char **out);

/**
 * Recomputes the reports and timeline of an ingested pair with its stored
 * configuration.
 *
 * # Safety
 * Pointer arguments must be valid.
 */
enum MwStatus mw_analyze(const struct MwStore *store, const char *pair_id);

/**
 * The default similarity configuration as JSON.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MwStatus mw_default_config_json(char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MULTIWIKI_H */
