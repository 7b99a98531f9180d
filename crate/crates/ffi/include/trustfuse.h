#ifndef TRUSTFUSE_H
#define TRUSTFUSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>

/**
 * Result code of every call.
 */
typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_POINTER = 1,
  /**
   * An argument is out of its domain (negative mass, bad sum, bad trust).
   */
  TF_STATUS_DOMAIN = 2,
  /**
   * Array lengths do not match.
   */
  TF_STATUS_DIMENSION = 3,
  /**
   * Fusion hit total conflict.
   */
  TF_STATUS_CONFLICT = 4,
  /**
   * A non-finite value came up.
   */
  TF_STATUS_NUMERIC = 5,
  TF_STATUS_UNDEFINED = 6,
  TF_STATUS_SINGULAR = 7,
  TF_STATUS_IO = 8,
  /**
   * A file could not be parsed.
   */
  TF_STATUS_PARSE = 9,
  /**
   * Internal panic; the library state is unchanged.
   */
  TF_STATUS_PANIC = 10,
} TfStatus;

/**
 * A trained model.
 */
typedef struct TfModel TfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tf_version(void);

/**
 * Degree of trust `b_t + a_t·u` of a referral opinion.
 *
 * # Safety
 * `out` must be null or valid for one write.
 */
enum TfStatus tf_degree_of_trust(double belief_trust,
                                 double belief_distrust,
                                 double uncertainty,
                                 double base_rate_trust,
                                 double *out);

/**
 * Opinion of K evidence values.
 *
 * # Safety
 * `evidence` and `out_belief` must be valid for K reads / writes,
 * `out_uncertainty` for one write.
 */
enum TfStatus tf_evidence_to_opinion(const double *evidence,
                                     size_t k,
                                     double *out_belief,
                                     double *out_uncertainty);

/**
 * Discounts one opinion by a degree of trust in [0, 1].
 *
 * # Safety
 * `belief` and `out_belief` must be valid for K reads / writes,
 * `out_uncertainty` for one write.
 */
enum TfStatus tf_trust_discount(const double *belief,
                                double uncertainty,
                                size_t k,
                                double trust,
                                double *out_belief,
                                double *out_uncertainty);

/**
 * Belief-constraint fusion of n ≥ 1 opinions, left to right.
 *
 * # Safety
 * `beliefs` must be valid for n·K reads, `uncertainties` for n,
 * `out_belief` for K writes and `out_uncertainty` for one.
 */
enum TfStatus tf_bcf_fuse(const double *beliefs,
                          const double *uncertainties,
                          size_t n,
                          size_t k,
                          double *out_belief,
                          double *out_uncertainty);

/**
 * Discounts opinion i by `trusts[i]`, then fuses them all.
 *
 * # Safety
 * As [`tf_bcf_fuse`], plus `trusts` valid for n reads.
 */
enum TfStatus tf_discounted_fuse(const double *beliefs,
                                 const double *uncertainties,
                                 const double *trusts,
                                 size_t n,
                                 size_t k,
                                 double *out_belief,
                                 double *out_uncertainty);

/**
 * Loads a checkpoint written by `trustfuse train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for one write.
 */
enum TfStatus tf_model_load(const char *path, struct TfModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from [`tf_model_load`] and not be used afterwards.
 */
void tf_model_free(struct TfModel *model);

/**
 * Number of classes K.
 *
 * # Safety
 * `model` must be a live handle; `out` valid for one write.
 */
enum TfStatus tf_model_num_classes(const struct TfModel *model, size_t *out);

/**
 * Number of input views V the caller supplies to [`tf_model_predict`].
 *
 * # Safety
 * `model` must be a live handle; `out` valid for one write.
 */
enum TfStatus tf_model_num_views(const struct TfModel *model, size_t *out);

/**
 * Feature dimension of input view `view` (0-based).
 *
 * # Safety
 * `model` must be a live handle; `out` valid for one write.
 */
enum TfStatus tf_model_view_dim(const struct TfModel *model, size_t view, size_t *out);

/**
 * Predicts one instance from raw features.
 *
 * `views[v]` points at `view_dims[v]` features of view v. Writes the label,
 * the fused belief (K values) and uncertainty. `out_trust` receives the
 * degree of trust of each model view (V, plus one with a pseudo-view) and
 * may be null.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum TfStatus tf_model_predict(const struct TfModel *model,
                               const double *const *views,
                               const size_t *view_dims,
                               size_t num_views,
                               size_t *out_label,
                               double *out_belief,
                               double *out_uncertainty,
                               double *out_trust);

/**
 * Number of trust values [`tf_model_predict`] writes to `out_trust`.
 *
 * # Safety
 * `model` must be a live handle; `out` valid for one write.
 */
enum TfStatus tf_model_num_trust(const struct TfModel *model, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRUSTFUSE_H */
