#ifndef INSITU_H
#define INSITU_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum InsituScanFormat {
  INSITU_SCAN_FORMAT_OBJ = 0,
  INSITU_SCAN_FORMAT_PLY = 1,
} InsituScanFormat;

typedef enum InsituStatus {
  INSITU_STATUS_OK = 0,
  INSITU_STATUS_NULL_POINTER = 1,
  INSITU_STATUS_INVALID_UTF8 = 2,
  INSITU_STATUS_UNKNOWN_DESIGN = 3,
  INSITU_STATUS_UNKNOWN_PARAMETER = 4,
  INSITU_STATUS_KIND_MISMATCH = 5,
  INSITU_STATUS_INVALID_ARGUMENT = 6,
  INSITU_STATUS_GEOMETRY = 7,
  INSITU_STATUS_PARSE = 8,
  INSITU_STATUS_ESTIMATION = 9,
  INSITU_STATUS_PANIC = 10,
} InsituStatus;

// An imported environment scan with detected support planes.
typedef struct InsituScene InsituScene;

// A design plus its committed configuration.
typedef struct InsituSession InsituSession;

// Heap bytes owned by the caller; release with [`insitu_buffer_free`].
typedef struct InsituBuffer {
  uint8_t *data;
  size_t len;
} InsituBuffer;

typedef struct InsituStability {
  bool toppled;
  bool settled;
  double tilt_deg;
  double quasi_static_margin;
} InsituStability;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
// Valid until the next call into this library on the same thread.
const char *insitu_last_error(void);

const char *insitu_version(void);

size_t insitu_design_count(void);

// Catalog id at `index`, or null when out of range. Static storage.
const char *insitu_design_id(size_t index);

// # Safety
// `design_id` must be a NUL-terminated string; `out_session` must be writable.
enum InsituStatus insitu_session_new(const char *design_id, struct InsituSession **out_session);

// # Safety
// `session` must come from [`insitu_session_new`] and not be used afterwards.
void insitu_session_free(struct InsituSession *session);

// Commits a numeric value. A rejected value leaves the configuration
// unchanged, returns `Ok` and sets `*snapped_back` (which may be null).
//
// # Safety
// Pointers must be valid; `name` NUL-terminated.
enum InsituStatus insitu_session_set_number(struct InsituSession *session,
                                            const char *name,
                                            double value,
                                            bool *snapped_back);

// # Safety
// Pointers must be valid; `name` NUL-terminated.
enum InsituStatus insitu_session_set_bool(struct InsituSession *session,
                                          const char *name,
                                          bool value,
                                          bool *snapped_back);

// # Safety
// Pointers must be valid; `name` NUL-terminated.
enum InsituStatus insitu_session_get_number(const struct InsituSession *session,
                                            const char *name,
                                            double *value);

// # Safety
// `session` must be a valid handle.
enum InsituStatus insitu_session_set_pose(struct InsituSession *session,
                                          double x,
                                          double y,
                                          double z,
                                          double yaw);

// Committed configuration as JSON. Free with [`insitu_string_free`].
//
// # Safety
// Pointers must be valid.
enum InsituStatus insitu_session_config_json(const struct InsituSession *session, char **json);

// Binary STL of the posed design.
//
// # Safety
// Pointers must be valid. Free the buffer with [`insitu_buffer_free`].
enum InsituStatus insitu_session_export_stl(const struct InsituSession *session,
                                            struct InsituBuffer *buffer);

// # Safety
// `buffer` must have been filled by this library or zeroed.
void insitu_buffer_free(struct InsituBuffer *buffer);

// # Safety
// `s` must come from this library or be null.
void insitu_string_free(char *s);

// Imports a Y-up scan and detects support planes. `format` is an
// [`InsituScanFormat`] value.
//
// # Safety
// `data` must point to `len` readable bytes; `out_scene` must be writable.
enum InsituStatus insitu_scene_load(const uint8_t *data,
                                    size_t len,
                                    uint32_t format,
                                    struct InsituScene **out_scene);

// # Safety
// `scene` must come from [`insitu_scene_load`] and not be used afterwards.
void insitu_scene_free(struct InsituScene *scene);

// Number of detected support planes; 0 for a null handle.
//
// # Safety
// `scene` must be a valid handle or null.
size_t insitu_scene_plane_count(const struct InsituScene *scene);

// Drops the design onto the support plane below it. With a null scene
// the design stands on a level floor at its lowest point.
//
// # Safety
// `session` and `report` must be valid; `scene` valid or null.
enum InsituStatus insitu_estimate_stability(const struct InsituSession *session,
                                            const struct InsituScene *scene,
                                            struct InsituStability *report);

// Evaluates a requirement spec given as JSON. Results are written as a
// JSON array to `*results_json` (free with [`insitu_string_free`]).
//
// # Safety
// Pointers must be valid; `scene` may be null.
enum InsituStatus insitu_check_requirements(const struct InsituSession *session,
                                            const struct InsituScene *scene,
                                            const char *spec_json,
                                            bool *all_passed,
                                            char **results_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INSITU_H */
