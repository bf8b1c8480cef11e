#ifndef TABLETALK_H
#define TABLETALK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes shared by every fallible function.
 */
typedef enum TtStatus {
  TT_STATUS_OK = 0,
  TT_STATUS_NULL_ARGUMENT = 1,
  TT_STATUS_INVALID_UTF8 = 2,
  TT_STATUS_INVALID_JSON = 3,
  TT_STATUS_INVALID_INPUT = 4,
  TT_STATUS_IO = 5,
  TT_STATUS_PANIC = 6,
} TtStatus;

/*
 Shared settings and vocabulary for any number of sessions.
 */
typedef struct TtEngine TtEngine;

/*
 One conversation about one page.
 */
typedef struct TtSession TtSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates an engine.

 `dict_path` may be null for an in-memory vocabulary. `deixis_window_ms`
 of zero or less selects the default window. `wake_word` may be null for
 the default.

 # Safety
 Pointer arguments must be null or valid NUL-terminated strings; `out` must be writable.
 */
enum TtStatus tt_engine_new(const char *dict_path,
                            int64_t deixis_window_ms,
                            const char *wake_word,
                            struct TtEngine **out);

/*
 Destroys an engine. Sessions created from it stay valid.

 # Safety
 `engine` must be null or a pointer from [`tt_engine_new`] not yet freed.
 */
void tt_engine_free(struct TtEngine *engine);

/*
 Opens a session. A non-zero `id_seed` makes element identifiers reproducible.

 # Safety
 `engine` must be a live engine, `session_id` a valid string, `out` writable.
 */
enum TtStatus tt_session_new(const struct TtEngine *engine,
                             const char *session_id,
                             uint64_t id_seed,
                             struct TtSession **out);

/*
 # Safety
 `session` must be null or a pointer from [`tt_session_new`] not yet freed.
 */
void tt_session_free(struct TtSession *session);

/*
 Feeds one client protocol message and returns the replies as a JSON array.

 # Safety
 `session` must be live, `message_json` a valid string, `out_json` writable.
 */
enum TtStatus tt_session_handle(struct TtSession *session,
                                const char *message_json,
                                int64_t now_ms,
                                char **out_json);

/*
 Parses a page and returns its model as JSON.

 # Safety
 `url` and `html` must be valid strings; `out_json` writable.
 */
enum TtStatus tt_parse_page(const char *url, const char *html, char **out_json);

/*
 Scores how well `label` abbreviates `candidate`, in `[0, 1]`.

 # Safety
 Both strings must be valid; `out_score` writable.
 */
enum TtStatus tt_score_match(const char *label, const char *candidate, double *out_score);

/*
 Releases a string returned by this library.

 # Safety
 `s` must be null or a string from this library not yet freed.
 */
void tt_string_free(char *s);

/*
 Message for the most recent failure on this thread; empty after a success.
 The pointer stays valid until the next call into this library on the same thread.
 */
const char *tt_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TABLETALK_H */
