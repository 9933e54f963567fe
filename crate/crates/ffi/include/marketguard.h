#ifndef MARKETGUARD_H
#define MARKETGUARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible function.
 */
typedef enum MgStatus {
  MG_STATUS_OK = 0,
  MG_STATUS_NULL_POINTER = 1,
  MG_STATUS_INVALID_INPUT = 2,
  MG_STATUS_PARSE = 3,
  MG_STATUS_IO = 4,
  MG_STATUS_CONFIG = 5,
  MG_STATUS_DEGENERATE_LABELS = 6,
  MG_STATUS_CONVERGENCE = 7,
  MG_STATUS_DEGENERATE_MODEL = 8,
  MG_STATUS_UNSUPPORTED = 9,
  MG_STATUS_MANIFEST_MISMATCH = 10,
  MG_STATUS_INTERNAL = 11,
} MgStatus;

/**
 * Kernel family selector for [`MgKernel`].
 */
typedef enum MgKernelType {
  MG_KERNEL_TYPE_LINEAR = 0,
  MG_KERNEL_TYPE_POLYNOMIAL = 1,
  MG_KERNEL_TYPE_RBF = 2,
} MgKernelType;

/**
 * Trained SVM model, optionally with feature scaling.
 */
typedef struct MgModel MgModel;

/**
 * Weighted ruleset over the seller feature manifest.
 */
typedef struct MgRuleSet MgRuleSet;

/**
 * Training parameters; see [`mg_train_config_default`].
 */
typedef struct MgTrainConfig {
  double c;
  double kkt_tol;
  double value_eps;
  size_t max_passes;
  uint64_t rng_seed;
} MgTrainConfig;

/**
 * Kernel description. `degree` and `offset` apply to polynomial kernels,
 * `gamma` to RBF kernels; other fields are ignored.
 */
typedef struct MgKernel {
  enum MgKernelType kind;
  uint32_t degree;
  double offset;
  double gamma;
} MgKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *mg_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mg_version(void);

/**
 * Number of features in the seller feature manifest.
 */
size_t mg_feature_count(void);

struct MgTrainConfig mg_train_config_default(void);

/**
 * Evaluates `kernel` on two vectors of length `dim`.
 */
enum MgStatus mg_kernel_eval(const struct MgKernel *kernel,
                             const double *a,
                             const double *b,
                             size_t dim,
                             double *out);

/**
 * Trains on `n` row-major samples of `dim` features. Labels are +1
 * (fraudulent) or -1 (normal). `config` may be null for defaults.
 */
enum MgStatus mg_train(const double *samples,
                       size_t n,
                       size_t dim,
                       const int8_t *labels,
                       const struct MgKernel *kernel,
                       const struct MgTrainConfig *config,
                       struct MgModel **out);

/**
 * Loads a model file.
 */
enum MgStatus mg_model_load(const char *path, struct MgModel **out);

enum MgStatus mg_model_save(const struct MgModel *model, const char *path);

/**
 * Releases a model. Null is ignored.
 */
void mg_model_free(struct MgModel *model);

/**
 * Input dimension of the model, or 0 for a null handle.
 */
size_t mg_model_dimension(const struct MgModel *model);

/**
 * Number of support vectors, or 0 for a null handle.
 */
size_t mg_model_support_vector_count(const struct MgModel *model);

/**
 * Signed decision value f(x) for a sample in the model's input space.
 */
enum MgStatus mg_model_decision_value(const struct MgModel *model,
                                      const double *x,
                                      size_t dim,
                                      double *out);

/**
 * Writes +1 (fraudulent) or -1 (normal); a zero decision value is +1.
 */
enum MgStatus mg_model_classify(const struct MgModel *model,
                                const double *x,
                                size_t dim,
                                int8_t *out);

/**
 * Geometric margin 1/‖w‖ in feature space.
 */
enum MgStatus mg_model_margin(const struct MgModel *model, double *out);

/**
 * Decision value for unscaled seller features in manifest order
 * (`mg_feature_count()` values). Requires a model trained by the pipeline.
 */
enum MgStatus mg_model_score_features(const struct MgModel *model,
                                      const double *features,
                                      size_t len,
                                      double *out);

/**
 * Loads a TOML ruleset.
 */
enum MgStatus mg_ruleset_load(const char *path, struct MgRuleSet **out);

/**
 * The bundled illustrative ruleset.
 */
enum MgStatus mg_ruleset_default(struct MgRuleSet **out);

/**
 * Releases a ruleset. Null is ignored.
 */
void mg_ruleset_free(struct MgRuleSet *rules);

/**
 * Aggregate score of the rules firing on `features` (manifest order) and
 * whether it reaches the ruleset's decision threshold.
 */
enum MgStatus mg_ruleset_evaluate(const struct MgRuleSet *rules,
                                  const double *features,
                                  size_t len,
                                  double *out_score,
                                  bool *out_flagged);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARKETGUARD_H */
