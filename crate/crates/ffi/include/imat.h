#ifndef IMAT_H
#define IMAT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define IMAT_OK 0

/**
 * The value does not exist, e.g. WMD with no covered token on one side.
 */
#define IMAT_UNDEFINED 1

/**
 * Null pointer or non-UTF-8 string argument.
 */
#define IMAT_ERR_ARGUMENT -1

#define IMAT_ERR_CONFIG -2

#define IMAT_ERR_IO -3

#define IMAT_ERR_CORPUS -4

#define IMAT_ERR_EMBEDDING -5

/**
 * No target sentences, or no source sentence above the threshold.
 */
#define IMAT_ERR_MATCH -6

#define IMAT_ERR_TRANSLATE -7

#define IMAT_ERR_CHECKPOINT -8

#define IMAT_ERR_EVAL -9

#define IMAT_ERR_INTERNAL -10

/**
 * A Rust panic was caught at the boundary.
 */
#define IMAT_ERR_PANIC -11

/**
 * Word vectors loaded from a text file.
 */
typedef struct ImatEmbeddings ImatEmbeddings;

typedef struct ImatRunConfig {
  const char *source;
  const char *target;
  const char *embeddings;
  /**
   * Checkpoint directory, or null to skip writing.
   */
  const char *out_dir;
  /**
   * `builtin` or `external:CMD`; null means builtin.
   */
  const char *backend;
  double gamma;
  uint32_t max_iters;
  double update_threshold;
  uint64_t seed;
} ImatRunConfig;

typedef struct ImatRunSummary {
  uint64_t pairs;
  uint32_t iterations;
  bool converged;
  double total_cost;
} ImatRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *imat_last_error(void);

/**
 * Loads word vectors; on success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
int imat_embeddings_load(const char *path, struct ImatEmbeddings **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `emb` must come from `imat_embeddings_load` and not be used afterwards.
 */
void imat_embeddings_free(struct ImatEmbeddings *emb);

/**
 * Vector dimension, or 0 for a null handle.
 *
 * # Safety
 * `emb` must be null or a live handle.
 */
size_t imat_embeddings_dim(const struct ImatEmbeddings *emb);

/**
 * Word Mover's Distance between two whitespace-tokenized strings.
 * Returns `IMAT_UNDEFINED` when either side has no token with a vector.
 *
 * # Safety
 * Pointers must be valid; `emb` must be a live handle.
 */
int imat_wmd(const struct ImatEmbeddings *emb, const char *a, const char *b, double *out);

/**
 * Cosine similarity of the averaged word vectors of two strings.
 * Returns `IMAT_UNDEFINED` when either side has no token with a vector.
 *
 * # Safety
 * Pointers must be valid; `emb` must be a live handle.
 */
int imat_sentence_similarity(const struct ImatEmbeddings *emb,
                             const char *a,
                             const char *b,
                             double *out);

/**
 * Corpus BLEU (0 to 100) of a hypothesis file against `n_refs` line-aligned
 * reference files.
 *
 * # Safety
 * `refs` must point to `n_refs` valid C strings.
 */
int imat_bleu_files(const char *hyp, const char *const *refs, size_t n_refs, double *out);

/**
 * Defaults for every numeric field; path fields are null.
 */
struct ImatRunConfig imat_run_config_default(void);

/**
 * Runs the full loop on two corpus files.
 *
 * # Safety
 * `config` and `summary` must be valid pointers; string fields must be null
 * where allowed or valid C strings.
 */
int imat_run(const struct ImatRunConfig *config, struct ImatRunSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMAT_H */
