#ifndef TERRACAST_H
#define TERRACAST_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_ARGUMENT = 2,
  TC_STATUS_IO = 3,
  TC_STATUS_DATA = 4,
  TC_STATUS_MODEL = 5,
  TC_STATUS_BUFFER_TOO_SMALL = 6,
  TC_STATUS_PANIC = 7,
} TcStatus;

// Opaque dataset handle.
typedef struct TcDataset TcDataset;

// Opaque model handle.
typedef struct TcModel TcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Load the dataset described by `manifest.txt` in `dir` (or a manifest file path).
//
// # Safety
// `dir` must be a NUL-terminated string; `out` must be a valid pointer.
enum TcStatus tc_dataset_open(const char *dir, struct TcDataset **out);

// Release a dataset handle. Null is ignored.
//
// # Safety
// `d` must come from [`tc_dataset_open`] and not be used afterwards.
void tc_dataset_free(struct TcDataset *d);

// Grid size, number of dates and number of classes.
//
// # Safety
// `d` must be a live handle; output pointers must be valid or null.
enum TcStatus tc_dataset_shape(const struct TcDataset *d,
                               size_t *rows,
                               size_t *cols,
                               size_t *dates,
                               size_t *classes);

// Copy the cover map of `date` into `out` (`rows * cols` cells).
//
// # Safety
// `d` must be a live handle; `out` must hold `len` cells.
enum TcStatus tc_dataset_cover(const struct TcDataset *d, size_t date, uint16_t *out, size_t len);

// Load a model file written by the library or the command-line tool.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be a valid pointer.
enum TcStatus tc_model_open(const char *path, struct TcModel **out);

// Release a model handle. Null is ignored.
//
// # Safety
// `m` must come from [`tc_model_open`] and not be used afterwards.
void tc_model_free(struct TcModel *m);

// Predict the map following `from_date`; non-frontier pixels are copied
// when `frontier_only` is non-zero.
//
// # Safety
// Handles must be live; `out` must hold `len` cells.
enum TcStatus tc_predict_map(const struct TcModel *m,
                             const struct TcDataset *d,
                             size_t from_date,
                             int frontier_only,
                             size_t frontier_order,
                             uint16_t *out,
                             size_t len);

// Per-class and overall misclassification of `pred` against `truth`.
//
// `per_class` receives `classes` values; an absent class yields NaN.
//
// # Safety
// `truth` and `pred` must hold `len` cells; `per_class` must hold `classes`
// values or be null; `overall` must be valid or null.
enum TcStatus tc_misclassification(const uint16_t *truth,
                                   const uint16_t *pred,
                                   size_t len,
                                   size_t classes,
                                   double *per_class,
                                   double *overall);

// Number of free parameters of the regression model with `classes` classes
// and `covariates` covariates (one-hot previous class plus encoded layers).
size_t tc_polyreg_param_count(size_t classes, size_t covariates);

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *tc_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *tc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TERRACAST_H */
