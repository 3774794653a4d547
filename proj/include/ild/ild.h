/* C interface to the ILD library.
 *
 * Every fallible call returns an ild_status; on failure ild_last_error()
 * holds a message for the calling thread. Strings returned through char**
 * are owned by the caller and released with ild_string_free. Domain labels
 * and intervention indices are 1-based. Observations are dense row-major
 * double arrays of length n * dim.
 */
#ifndef ILD_ILD_H
#define ILD_ILD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ILD_API __declspec(dllexport)
#else
#define ILD_API __attribute__((visibility("default")))
#endif

typedef enum ild_status {
  ILD_OK = 0,
  ILD_ERR_DIMENSION_MISMATCH = 1,
  ILD_ERR_NOT_LOWER_TRIANGULAR = 2,
  ILD_ERR_NON_POSITIVE_DIAGONAL = 3,
  ILD_ERR_SINGULAR_MATRIX = 4,
  ILD_ERR_INVALID_ARGUMENT = 5,
  ILD_ERR_DOMAIN_OUT_OF_RANGE = 6,
  ILD_ERR_EMPTY_INPUT = 7,
  ILD_ERR_PRECONDITION_VIOLATED = 8,
  ILD_ERR_TRIANGULARITY_BROKEN = 9,
  ILD_ERR_PARSE = 10,
  ILD_ERR_IO = 11,
  ILD_ERR_INTERNAL = 12
} ild_status;

typedef struct ild_model ild_model;
typedef struct ild_dataset ild_dataset;

ILD_API const char* ild_version(void);
ILD_API const char* ild_status_name(ild_status status);
ILD_API const char* ild_last_error(void);
ILD_API void ild_string_free(char* s);

/* Models (JSON bundle {"g": chain, "F": [scm, ...]}). */
ILD_API ild_status ild_model_from_json(const char* json, ild_model** out);
ILD_API ild_status ild_model_load(const char* path, ild_model** out);
ILD_API ild_status ild_model_to_json(const ild_model* model, char** out);
ILD_API ild_status ild_model_save(const ild_model* model, const char* path);
ILD_API void ild_model_free(ild_model* model);
ILD_API int ild_model_dim(const ild_model* model);
ILD_API int ild_model_num_domains(const ild_model* model);

ILD_API ild_status ild_sample(const ild_model* model, int d, int n, uint64_t seed, double* out);
ILD_API ild_status ild_log_likelihood(const ild_model* model, const double* x, int d,
                                      double* out);
ILD_API ild_status ild_counterfactual(const ild_model* model, const double* x, int d,
                                      int d_prime, double* out);
/* JSON {"indices": [...], "tolerance": t}. */
ILD_API ild_status ild_intervention_set(const ild_model* model, double tol, char** out);
ILD_API ild_status ild_lipschitz_bound(const ild_model* model, double* out);
ILD_API ild_status ild_gt_bound_term(const ild_model* model, int n_mc, uint64_t seed,
                                     double* out);
/* Any output pointer may be NULL if not wanted. */
ILD_API ild_status ild_canonicalize(const ild_model* model, double tol, ild_model** canonical,
                                    ild_model** identity_canonical, char** report_json);
ILD_API ild_status ild_dc_distance(const ild_model* a, const ild_model* b,
                                   const ild_dataset* data, uint64_t seed, double* out);

/* Datasets (CSV with header d,x1,...,xm). */
ILD_API ild_status ild_dataset_create(int dim, size_t n, const int* domains, const double* x,
                                      ild_dataset** out);
ILD_API ild_status ild_dataset_load_csv(const char* path, ild_dataset** out);
ILD_API ild_status ild_dataset_save_csv(const ild_dataset* data, const char* path);
ILD_API ild_status ild_dataset_to_csv(const ild_dataset* data, char** out);
ILD_API void ild_dataset_free(ild_dataset* data);
ILD_API size_t ild_dataset_size(const ild_dataset* data);
ILD_API int ild_dataset_dim(const ild_dataset* data);
ILD_API ild_status ild_dataset_get(const ild_dataset* data, size_t i, int* d, double* x);

/* Ground truth. spec_json fields: dim, num_domains, intervention, n_train,
 * n_val, n_test, seed (missing keys take defaults). */
ILD_API ild_status ild_spec_normalize(const char* spec_json, char** out);
ILD_API ild_status ild_generate(const char* spec_json, ild_model** ground_truth,
                                ild_dataset** train, ild_dataset** val, ild_dataset** test);

/* Training. variant_json: {"variant": "can", "k": K} or {"variant": "dense"}.
 * config_json fields: learning_rate_g, learning_rate_f, beta1, beta2,
 * batch_size, iterations, eval_every, seed. history_csv and optimizer_json
 * may be NULL. */
ILD_API ild_status ild_train_config_normalize(const char* config_json, char** out);
ILD_API ild_status ild_train(const char* variant_json, const char* config_json,
                             const ild_dataset* train, const ild_dataset* val, int num_domains,
                             ild_model** best, char** history_csv, char** optimizer_json);

/* Metrics. */
ILD_API ild_status ild_counterfactual_error(const ild_model* estimated,
                                            const ild_model* ground_truth,
                                            const ild_dataset* test, double* out);
ILD_API ild_status ild_dataset_nll(const ild_model* model, const ild_dataset* data, double* out);

#ifdef __cplusplus
}
#endif

#endif
