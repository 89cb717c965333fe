#ifndef SEGEVAL_H
#define SEGEVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SEGEVAL_KIND_BOX 0

#define SEGEVAL_KIND_MASK 1

/**
 * Box always, mask when every detection has a polygon.
 */
#define SEGEVAL_KIND_BOTH 2

/**
 * Result of every fallible call.
 */
typedef enum SegevalStatus {
  SEGEVAL_STATUS_OK = 0,
  SEGEVAL_STATUS_NULL_ARGUMENT = 1,
  SEGEVAL_STATUS_INVALID_UTF8 = 2,
  SEGEVAL_STATUS_PARSE_ERROR = 3,
  SEGEVAL_STATUS_INVALID_ARGUMENT = 4,
  SEGEVAL_STATUS_EVALUATION_ERROR = 5,
  SEGEVAL_STATUS_GEOMETRY_ERROR = 6,
  SEGEVAL_STATUS_PANIC = 7,
} SegevalStatus;

/**
 * Parsed ground truth.
 */
typedef struct SegevalBundle SegevalBundle;

/**
 * Parsed predictions, tied to the bundle's class registry.
 */
typedef struct SegevalDetections SegevalDetections;

/**
 * Result of [`segeval_evaluate`].
 */
typedef struct SegevalReport SegevalReport;

typedef struct SegevalConfig {
  /**
   * One of the `SEGEVAL_KIND_*` values.
   */
  uint32_t kind;
  double score_threshold;
  /**
   * Nonzero counts non-defect classes in the mean rows.
   */
  int32_t include_non_defect;
  /**
   * Worker cap; 0 uses all cores.
   */
  uint32_t threads;
} SegevalConfig;

typedef struct SegevalCounts {
  size_t tp;
  size_t fp;
  size_t fn_;
} SegevalCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *segeval_last_error(void);

/**
 * Library version, static storage.
 */
const char *segeval_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void segeval_string_free(char *s);

/**
 * Defaults: both kinds, score threshold 0.70, defect classes
 * only in the means.
 */
struct SegevalConfig segeval_config_default(void);

/**
 * Parses a VIA document with the seven-class rope registry. `manifest`
 * (`file_name,width,height` lines) may be null.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum SegevalStatus segeval_bundle_from_via(const char *via_json,
                                           const char *manifest,
                                           struct SegevalBundle **out);

/**
 * # Safety
 * `b` must be null or a live handle from [`segeval_bundle_from_via`].
 */
void segeval_bundle_free(struct SegevalBundle *b);

/**
 * # Safety
 * `b` must be a live handle; `images` and `annotations` writable.
 */
enum SegevalStatus segeval_bundle_counts(const struct SegevalBundle *b,
                                         size_t *images,
                                         size_t *annotations);

/**
 * Parses a prediction document against the bundle's classes.
 *
 * # Safety
 * `b` must be a live handle, `json` NUL-terminated, `out` writable.
 */
enum SegevalStatus segeval_detections_from_json(const struct SegevalBundle *b,
                                                const char *json,
                                                struct SegevalDetections **out);

/**
 * # Safety
 * `d` must be null or a live handle.
 */
void segeval_detections_free(struct SegevalDetections *d);

/**
 * # Safety
 * `d` must be a live handle and `count` writable.
 */
enum SegevalStatus segeval_detections_count(const struct SegevalDetections *d, size_t *count);

/**
 * Full AP report. `cfg` may be null for [`segeval_config_default`].
 *
 * # Safety
 * Handles must be live; `cfg` null or valid; `out` writable.
 */
enum SegevalStatus segeval_evaluate(const struct SegevalBundle *b,
                                    const struct SegevalDetections *d,
                                    const struct SegevalConfig *cfg,
                                    struct SegevalReport **out);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
void segeval_report_free(struct SegevalReport *r);

/**
 * One cell of the report. `scope` is a class name or `"mean"`, `column`
 * one of `AP`, `AP50`, `AP75`, `AP_m`, `AP_l`. `defined` is set to 0 for
 * an undefined cell (then `value` is NaN) or a missing kind/scope/column.
 *
 * # Safety
 * `r` must be a live handle, strings NUL-terminated, outputs writable.
 */
enum SegevalStatus segeval_report_value(const struct SegevalReport *r,
                                        uint32_t kind,
                                        const char *scope,
                                        const char *column,
                                        double *value,
                                        int32_t *defined);

/**
 * Pretty JSON report. `model` may be null.
 *
 * # Safety
 * `r` must be a live handle, `model` null or NUL-terminated, `out`
 * writable. Free the result with [`segeval_string_free`].
 */
enum SegevalStatus segeval_report_json(const struct SegevalReport *r,
                                       const char *model,
                                       char **out);

/**
 * Text table with columns `[Model |] Type | AP | AP50 | AP75 | AP_m | AP_l`.
 *
 * # Safety
 * As [`segeval_report_json`].
 */
enum SegevalStatus segeval_report_table(const struct SegevalReport *r,
                                        const char *model,
                                        char **out);

/**
 * CSV with raw ratios.
 *
 * # Safety
 * As [`segeval_report_json`].
 */
enum SegevalStatus segeval_report_csv(const struct SegevalReport *r, const char *model, char **out);

/**
 * TP/FP/FN after dropping detections scoring below `score_threshold`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum SegevalStatus segeval_fp_fn_counts(const struct SegevalBundle *b,
                                        const struct SegevalDetections *d,
                                        double score_threshold,
                                        double iou_threshold,
                                        uint32_t kind,
                                        struct SegevalCounts *out);

/**
 * Images whose defective/clean prediction at `tau` matches the truth.
 *
 * # Safety
 * Handles must be live and outputs writable.
 */
enum SegevalStatus segeval_image_accuracy(const struct SegevalBundle *b,
                                          const struct SegevalDetections *d,
                                          double tau,
                                          size_t *correct,
                                          size_t *total);

/**
 * IoU of two boxes given as `{x_min, y_min, x_max, y_max}`.
 *
 * # Safety
 * `a` and `b` must point to 4 doubles; `out` writable.
 */
enum SegevalStatus segeval_box_iou(const double *a, const double *b, double *out);

/**
 * IoU of two polygons rasterized in a `width` x `height` frame.
 *
 * # Safety
 * Each coordinate pointer must reference `n_*` doubles; `out` writable.
 */
enum SegevalStatus segeval_polygon_mask_iou(const double *xs_a,
                                            const double *ys_a,
                                            size_t n_a,
                                            const double *xs_b,
                                            const double *ys_b,
                                            size_t n_b,
                                            uint32_t width,
                                            uint32_t height,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEGEVAL_H */
