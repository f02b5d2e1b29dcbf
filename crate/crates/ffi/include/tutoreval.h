#ifndef TUTOREVAL_H
#define TUTOREVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum TevStatus {
  TEV_STATUS_OK = 0,
  TEV_STATUS_NULL_POINTER = 1,
  TEV_STATUS_INVALID_UTF8 = 2,
  TEV_STATUS_INVALID_ARGUMENT = 3,
  TEV_STATUS_PARSE = 4,
  TEV_STATUS_SCHEMA = 5,
  TEV_STATUS_DUPLICATE_KEY = 6,
  TEV_STATUS_LOOKUP = 7,
  TEV_STATUS_EMPTY_INPUT = 8,
  TEV_STATUS_DOMAIN = 9,
  TEV_STATUS_JOIN = 10,
  TEV_STATUS_SHAPE = 11,
  TEV_STATUS_DIMENSION = 12,
  TEV_STATUS_NUMERIC = 13,
  TEV_STATUS_RANGE = 14,
  TEV_STATUS_VALIDATION = 15,
  TEV_STATUS_IO = 16,
  TEV_STATUS_PANIC = 99,
} TevStatus;

typedef enum TevLabel {
  TEV_LABEL_YES = 0,
  TEV_LABEL_TO_SOME_EXTENT = 1,
  TEV_LABEL_NO = 2,
} TevLabel;

/**
 * How an ensemble decision was reached.
 */
typedef enum TevBasis {
  TEV_BASIS_UNANIMOUS = 0,
  TEV_BASIS_PLURALITY = 1,
  TEV_BASIS_QUOTA_FLIP = 2,
} TevBasis;

typedef enum TevMode {
  TEV_MODE_STRICT = 0,
  TEV_MODE_LENIENT = 1,
} TevMode;

typedef enum TevTrack {
  TEV_TRACK_MISTAKE_IDENTIFICATION = 0,
  TEV_TRACK_MISTAKE_LOCATION = 1,
  TEV_TRACK_PROVIDING_GUIDANCE = 2,
  TEV_TRACK_ACTIONABILITY = 3,
} TevTrack;

/**
 * Parsed dialogue corpus.
 */
typedef struct TevCorpus TevCorpus;

/**
 * Instances × models vote table.
 */
typedef struct TevPredictionMatrix TevPredictionMatrix;

typedef struct TevScores {
  double macro_f1;
  double accuracy;
} TevScores;

/**
 * Plain-data mirror of the fine-tuning configuration.
 */
typedef struct TevTrainConfig {
  size_t rank;
  double alpha;
  double dropout;
  double learning_rate;
  double warmup_fraction;
  double weight_decay;
  uint64_t max_steps;
  double clip_norm;
  size_t max_seq_len;
  size_t batch_size;
  uint64_t seed;
  uint64_t eval_every;
  uint64_t checkpoint_every;
  size_t checkpoint_retention;
} TevTrainConfig;

/**
 * NUL-terminated library version. Static storage; do not free.
 */
const char *tev_version(void);

/**
 * Message for the most recent failure on this thread, or NULL when no call
 * has failed yet. The pointer stays valid until the next failing call on
 * the same thread.
 */
const char *tev_last_error_message(void);

void tev_clear_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 */
void tev_string_free(char *s);

/**
 * Macro-F1 and accuracy of `n` positionally aligned gold and predicted label
 * codes under `mode` (a [`TevMode`] value).
 */
enum TevStatus tev_score(const int32_t *gold,
                         const int32_t *predicted,
                         size_t n,
                         int32_t mode,
                         struct TevScores *out);

/**
 * Parses a JSON corpus document into a new handle.
 */
enum TevStatus tev_corpus_parse(const char *json, struct TevCorpus **out);

void tev_corpus_free(struct TevCorpus *corpus);

enum TevStatus tev_corpus_dialogue_count(const struct TevCorpus *corpus, size_t *out);

enum TevStatus tev_corpus_response_count(const struct TevCorpus *corpus, size_t *out);

/**
 * Instruction JSONL for one track (a [`TevTrack`] value). Free the result
 * with [`tev_string_free`].
 */
enum TevStatus tev_corpus_export_track(const struct TevCorpus *corpus,
                                       int32_t track,
                                       bool include_unlabeled,
                                       char **out);

/**
 * Builds a vote table from `n_instances` ids and a row-major
 * `n_instances × n_models` array of label codes.
 */
enum TevStatus tev_prediction_matrix_new(const char *const *ids,
                                         const int32_t *votes,
                                         size_t n_instances,
                                         size_t n_models,
                                         struct TevPredictionMatrix **out);

void tev_prediction_matrix_free(struct TevPredictionMatrix *matrix);

enum TevStatus tev_prediction_matrix_instances(const struct TevPredictionMatrix *matrix,
                                               size_t *out);

/**
 * Calibrated ensemble labels in instance order. `tse_freq` is the target
 * "To some extent" frequency in [0, 1]. `out_basis` may be NULL.
 */
enum TevStatus tev_ensemble_aggregate(const struct TevPredictionMatrix *matrix,
                                      double tse_freq,
                                      enum TevLabel *out_labels,
                                      enum TevBasis *out_basis,
                                      size_t len);

/**
 * Plain plurality labels, with no quota adjustment.
 */
enum TevStatus tev_ensemble_plurality(const struct TevPredictionMatrix *matrix,
                                      enum TevLabel *out_labels,
                                      enum TevBasis *out_basis,
                                      size_t len);

enum TevStatus tev_train_config_default(struct TevTrainConfig *out);

/**
 * TOML rendering of a configuration. Free the result with
 * [`tev_string_free`].
 */
enum TevStatus tev_train_config_to_toml(const struct TevTrainConfig *config, char **out);

/**
 * Learning rate at `step` under the warmup-then-constant schedule.
 */
enum TevStatus tev_warmup_lr(uint64_t step, const struct TevTrainConfig *config, double *out);

/**
 * Rescales `grad` to L2 norm at most `clip_norm`. `out` may equal `grad`.
 */
enum TevStatus tev_clip_gradient(const double *grad, size_t len, double clip_norm, double *out);

/**
 * `ΔW = alpha·A·B` for `A` of shape `out_dim × rank` and `B` of shape
 * `rank × in_dim`. `out` receives `out_dim × in_dim` values.
 */
enum TevStatus tev_lora_delta_w(const double *a,
                                const double *b,
                                size_t out_dim,
                                size_t rank,
                                size_t in_dim,
                                double alpha,
                                double *out);

/**
 * Gradients of a loss with respect to `A` and `B`, given the layer input
 * `x` (length `in_dim`) and `∂L/∂y` (length `out_dim`).
 */
enum TevStatus tev_lora_adapter_gradients(const double *a,
                                          const double *b,
                                          size_t out_dim,
                                          size_t rank,
                                          size_t in_dim,
                                          double alpha,
                                          const double *x,
                                          const double *loss_grad,
                                          double *out_grad_a,
                                          double *out_grad_b);

#endif  /* TUTOREVAL_H */
