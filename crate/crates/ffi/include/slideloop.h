#ifndef SLIDELOOP_H
#define SLIDELOOP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_ARGUMENT = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  SL_STATUS_INVALID_JSON = 3,
  SL_STATUS_INVALID_DOCUMENT = 4,
  SL_STATUS_PERTURB = 5,
  SL_STATUS_INGEST = 6,
  SL_STATUS_EXPORT = 7,
  SL_STATUS_BACKEND = 8,
  SL_STATUS_PANIC = 9,
} SlStatus;

// Opaque slide document.
typedef struct SlDoc SlDoc;

// Owned byte buffer returned by [`sl_doc_export_pptx`].
typedef struct SlBytes {
  uint8_t *data;
  size_t len;
} SlBytes;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Owned by the
// library and valid until the next call.
const char *sl_last_error(void);

// Static name of a status code.
const char *sl_status_name(enum SlStatus status);

// Parses canonical slide JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum SlStatus sl_doc_from_json(const char *json, struct SlDoc **out);

// Writes the canonical JSON of `doc` to `*out`.
//
// # Safety
// `doc` must be a live handle and `out` a writable pointer.
enum SlStatus sl_doc_to_json(const struct SlDoc *doc, char **out);

// Number of elements, or 0 for a null handle.
//
// # Safety
// `doc` must be null or a live handle.
size_t sl_doc_element_count(const struct SlDoc *doc);

// Number of TENTATIVE elements, or 0 for a null handle.
//
// # Safety
// `doc` must be null or a live handle.
size_t sl_doc_tentative_count(const struct SlDoc *doc);

// Writes the validation violations of `doc` to `*out` as a JSON array of
// strings; an empty array means the document is valid.
//
// # Safety
// `doc` must be a live handle and `out` a writable pointer.
enum SlStatus sl_doc_validate(const struct SlDoc *doc, char **out);

// Renders `doc` to SVG. `pixels_per_inch <= 0` selects 96.
//
// # Safety
// `doc` must be a live handle and `out` a writable pointer.
enum SlStatus sl_doc_render_svg(const struct SlDoc *doc,
                                double pixels_per_inch,
                                bool highlight_tentative,
                                char **out);

// Perturbs `doc` with every kind enabled. The draft goes to `*out_doc` and
// the perturbation log, as JSON, to `*out_log`.
//
// # Safety
// `doc` must be a live handle; `out_doc` and `out_log` writable pointers.
enum SlStatus sl_doc_perturb(const struct SlDoc *doc,
                             uint64_t seed,
                             double severity,
                             struct SlDoc **out_doc,
                             char **out_log);

// Undoes a perturbation given its log JSON.
//
// # Safety
// `doc` must be a live handle, `log_json` a NUL-terminated string and `out`
// a writable pointer.
enum SlStatus sl_doc_reverse_replay(const struct SlDoc *doc,
                                    const char *log_json,
                                    struct SlDoc **out);

// Runs the heuristic refinement loop. The final doc goes to `*out_doc`;
// when `out_trace` is not null the trace JSON is written there too.
//
// # Safety
// `doc` must be a live handle and `out_doc` a writable pointer; `out_trace`
// may be null.
enum SlStatus sl_doc_refine(const struct SlDoc *doc,
                            uint32_t max_iterations,
                            struct SlDoc **out_doc,
                            char **out_trace);

// Reads slide `index` of a .pptx archive.
//
// # Safety
// `bytes` must point to `len` readable bytes and `out` be writable.
enum SlStatus sl_doc_from_pptx(const uint8_t *bytes, size_t len, size_t index, struct SlDoc **out);

// Exports `doc` as a one-slide .pptx archive. Release with
// [`sl_bytes_free`].
//
// # Safety
// `doc` must be a live handle and `out` a writable pointer.
enum SlStatus sl_doc_export_pptx(const struct SlDoc *doc, struct SlBytes *out);

// Releases a handle. Null is ignored.
//
// # Safety
// `doc` must be null or a handle not yet freed.
void sl_doc_free(struct SlDoc *doc);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void sl_string_free(char *s);

// Releases a buffer from [`sl_doc_export_pptx`] and resets it.
//
// # Safety
// `bytes` must be null or point to a buffer from this library not yet freed.
void sl_bytes_free(struct SlBytes *bytes);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLIDELOOP_H */
