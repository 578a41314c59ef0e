#ifndef SYNTAXPROBE_H
#define SYNTAXPROBE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_POINTER = 1,
  SP_STATUS_INVALID_ARGUMENT = 2,
  SP_STATUS_PARSE_ERROR = 3,
  SP_STATUS_IO_ERROR = 4,
  SP_STATUS_FORMAT_ERROR = 5,
  SP_STATUS_NUMERICAL_ERROR = 6,
  SP_STATUS_PANIC = 7,
} SpStatus;

/*
 Opaque embedding table with its utterance IDs.
 */
typedef struct SpTable SpTable;

/*
 Opaque constituency tree.
 */
typedef struct SpTree SpTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty after a success.
 The pointer stays valid until the next library call on the same thread.
 */
const char *sp_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sp_version(void);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void sp_string_free(char *s);

/*
 Parses one bracketed tree.

 # Safety
 `text` must be a NUL-terminated string; `out_tree` must be writable.
 */
enum SpStatus sp_tree_parse(const char *text, struct SpTree **out_tree);

/*
 Releases a tree. NULL is ignored.

 # Safety
 `tree` must come from this library and not have been freed.
 */
void sp_tree_free(struct SpTree *tree);

/*
 Nodes on the longest root-to-leaf path.

 # Safety
 `tree` must be a live handle; `out_depth` must be writable.
 */
enum SpStatus sp_tree_depth(const struct SpTree *tree, size_t *out_depth);

/*
 # Safety
 `tree` must be a live handle; `out_count` must be writable.
 */
enum SpStatus sp_tree_node_count(const struct SpTree *tree, size_t *out_count);

/*
 New tree without terminal words; the input is left untouched.

 # Safety
 `tree` must be a live handle; `out_tree` must be writable.
 */
enum SpStatus sp_tree_delexicalize(const struct SpTree *tree, struct SpTree **out_tree);

/*
 Canonical bracketing; free with `sp_string_free`.

 # Safety
 `tree` must be a live handle; `out_text` must be writable.
 */
enum SpStatus sp_tree_to_string(const struct SpTree *tree, char **out_text);

/*
 Unnormalized subset-tree kernel of two delexicalized trees.

 # Safety
 Both handles must be live; `out_value` must be writable.
 */
enum SpStatus sp_kernel_raw(const struct SpTree *a,
                            const struct SpTree *b,
                            double lambda,
                            double *out_value);

/*
 Kernel normalized to 1 on identical trees.

 # Safety
 Both handles must be live; `out_value` must be writable.
 */
enum SpStatus sp_kernel_normalized(const struct SpTree *a,
                                   const struct SpTree *b,
                                   double lambda,
                                   double *out_value);

/*
 Normalized Gram matrix of `n` trees into `out_matrix` (`n * n`).

 # Safety
 `trees` must point to `n` live handles; `out_matrix` to `n * n` doubles.
 */
enum SpStatus sp_gram_matrix(const struct SpTree *const *trees,
                             size_t n,
                             double lambda,
                             double *out_matrix);

/*
 Reads a WEMB file and its JSONL manifest (`<path>.jsonl` next to it, or
 `manifest.jsonl` in the same directory).

 # Safety
 `path` must be a NUL-terminated string; `out_table` must be writable.
 */
enum SpStatus sp_table_read(const char *path, struct SpTable **out_table);

/*
 Releases a table. NULL is ignored.

 # Safety
 `table` must come from this library and not have been freed.
 */
void sp_table_free(struct SpTable *table);

/*
 Writes rows, dim and layer id; any out-pointer may be NULL.

 # Safety
 `table` must be a live handle.
 */
enum SpStatus sp_table_shape(const struct SpTable *table,
                             size_t *out_rows,
                             size_t *out_dim,
                             uint32_t *out_layer_id);

/*
 Copies row `row` into `out_values`, which must hold `len == dim` floats.

 # Safety
 `table` must be a live handle; `out_values` must hold `len` floats.
 */
enum SpStatus sp_table_row(const struct SpTable *table, size_t row, float *out_values, size_t len);

/*
 Utterance ID of row `row`; free with `sp_string_free`.

 # Safety
 `table` must be a live handle; `out_id` must be writable.
 */
enum SpStatus sp_table_id(const struct SpTable *table, size_t row, char **out_id);

/*
 Cosine similarity of two length-`n` vectors.

 # Safety
 `u` and `v` must hold `n` doubles; `out_value` must be writable.
 */
enum SpStatus sp_cosine(const double *u, const double *v, size_t n, double *out_value);

/*
 Ridge regression of `y` (`n x q`) on `x` (`n x p`) with centering.
 Writes `p * q` weights and `q` intercepts.

 # Safety
 All buffers must have the stated sizes.
 */
enum SpStatus sp_ridge_fit(const double *x,
                           size_t n,
                           size_t p,
                           const double *y,
                           size_t q,
                           double alpha,
                           double *out_weights,
                           double *out_intercept);

/*
 R² averaged uniformly over the `q` columns; constant columns score 0.

 # Safety
 `y_true` and `y_pred` must hold `n * q` doubles.
 */
enum SpStatus sp_r2_score(const double *y_true,
                          const double *y_pred,
                          size_t n,
                          size_t q,
                          double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNTAXPROBE_H */
