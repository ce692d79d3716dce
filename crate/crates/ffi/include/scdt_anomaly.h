#ifndef SCDT_ANOMALY_H
#define SCDT_ANOMALY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HadStatus {
  HAD_STATUS_OK = 0,
  HAD_STATUS_NULL_POINTER = 1,
  HAD_STATUS_INVALID_ARGUMENT = 2,
  HAD_STATUS_IO_ERROR = 3,
  HAD_STATUS_FORMAT_ERROR = 4,
  HAD_STATUS_SHAPE_MISMATCH = 5,
  HAD_STATUS_DATA_ERROR = 6,
  HAD_STATUS_NUMERICAL_ERROR = 7,
  HAD_STATUS_BUFFER_TOO_SMALL = 8,
  HAD_STATUS_PANIC = 99,
} HadStatus;

// Hyperspectral cube, pixels stored band-interleaved-by-pixel.
typedef struct HadCube HadCube;

// Per-pixel anomaly scores in row-major order.
typedef struct HadScoreMap HadScoreMap;

typedef struct HadAucReport {
  double auc_full;
  double pauc_raw_1e2;
  double pauc_raw_1e3;
  double pauc_std_1e2;
  double pauc_std_1e3;
} HadAucReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *had_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *had_version(void);

// Copies `rows * cols * bands` BIP samples into a new cube.
//
// # Safety
// `data` must point to that many readable doubles and `out` to writable
// storage for one pointer.
enum HadStatus had_cube_new(size_t rows,
                            size_t cols,
                            size_t bands,
                            const double *data,
                            struct HadCube **out);

// Reads a portable cube from its JSON sidecar path.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum HadStatus had_cube_read_portable(const char *path, struct HadCube **out);

// Reads an ENVI cube from its header and data file.
//
// # Safety
// Both paths must be NUL-terminated strings and `out` writable.
enum HadStatus had_cube_read_envi(const char *header_path,
                                  const char *data_path,
                                  struct HadCube **out);

// # Safety
// `cube` must come from this library and not be used afterwards. Null is
// ignored.
void had_cube_free(struct HadCube *cube);

// # Safety
// `cube` must be a live handle; the out pointers must be writable.
enum HadStatus had_cube_dims(const struct HadCube *cube, size_t *rows, size_t *cols, size_t *bands);

// Number of doubles [`had_scdt_forward`] writes for `grid_size`.
size_t had_scdt_flat_len(size_t grid_size);

// Signed CDT of one signal on `[domain_lo, domain_hi]`, written as
// `[pos quantiles | pos mass | neg quantiles | neg mass]`.
//
// # Safety
// `values` must hold `len` doubles and `out` room for `out_len` doubles.
enum HadStatus had_scdt_forward(const double *values,
                                size_t len,
                                double domain_lo,
                                double domain_hi,
                                size_t grid_size,
                                double *out,
                                size_t out_len);

// SCDT subspace detector. `grid_size = 0` selects twice the band count;
// `energy_threshold <= 0` selects the default 0.9999. `out_k` may be null.
//
// # Safety
// `cube` must be a live handle and `out` writable.
enum HadStatus had_detect_scdt(const struct HadCube *cube,
                               size_t grid_size,
                               double energy_threshold,
                               struct HadScoreMap **out,
                               size_t *out_k);

// Global RX. A negative `ridge` selects the default loading.
//
// # Safety
// `cube` must be a live handle and `out` writable.
enum HadStatus had_detect_rx(const struct HadCube *cube, double ridge, struct HadScoreMap **out);

// # Safety
// `map` must be a live handle.
size_t had_scoremap_len(const struct HadScoreMap *map);

// Copies the scores (row-major) into `out`.
//
// # Safety
// `map` must be a live handle and `out` hold `out_len` doubles.
enum HadStatus had_scoremap_copy(const struct HadScoreMap *map, double *out, size_t out_len);

// # Safety
// `map` must come from this library and not be used afterwards. Null is
// ignored.
void had_scoremap_free(struct HadScoreMap *map);

// Full and partial AUC of `n` scores against labels (nonzero = anomaly).
//
// # Safety
// `scores` and `labels` must hold `n` elements; `out` must be writable.
enum HadStatus had_auc_report(const double *scores,
                              const uint8_t *labels,
                              size_t n,
                              struct HadAucReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCDT_ANOMALY_H */
