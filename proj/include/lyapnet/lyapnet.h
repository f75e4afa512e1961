/* lyapnet: spectral-norm constrained training of small networks with
 * cascade passivity certificates and l2 attack verification.
 *
 * C API over the shared library. All functions return a lyap_status; outputs
 * are written through pointers. Strings returned through char** are owned by
 * the library and must be released with lyap_string_free. Handles are opaque
 * and freed with their matching *_free function. On any non-OK status,
 * lyap_last_error() describes the failure for the calling thread.
 */
#ifndef LYAPNET_LYAPNET_H
#define LYAPNET_LYAPNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LYAP_API __declspec(dllexport)
#else
#define LYAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lyap_status {
  LYAP_OK = 0,
  LYAP_ERR_SHAPE = 1,
  LYAP_ERR_NUMERIC = 2,
  LYAP_ERR_SIZE = 3,
  LYAP_ERR_BUDGET = 4,
  LYAP_ERR_CONFIG = 5,
  LYAP_ERR_INPUT = 6,
  LYAP_ERR_FORMAT = 7,
  LYAP_ERR_CONTRACT = 8,
  LYAP_ERR_PLANNING = 9,
  LYAP_ERR_DEGENERATE_CONE = 10,
  LYAP_ERR_COMPLEX_SLOPES = 11,
  LYAP_ERR_IO = 12,
  LYAP_ERR_USAGE = 13,
  LYAP_ERR_UNKNOWN = 99
} lyap_status;

typedef struct lyap_dataset lyap_dataset;
typedef struct lyap_model lyap_model;

LYAP_API const char* lyap_status_name(lyap_status s);
/* Message for the most recent failure on this thread; never NULL. */
LYAP_API const char* lyap_last_error(void);
LYAP_API void lyap_string_free(char* s);

/* ------------------------------ certificates ----------------------------- */

/* beta = 1/delta^2 + 2|nu|/delta; requires delta > 0. */
LYAP_API lyap_status lyap_spectral_cap(double delta, double nu, double* out_beta);

/* ||Delta_n|| <= sqrt(c) * eps with c = 1/delta^2 + 2 nu/delta. */
LYAP_API lyap_status lyap_corollary_bound(double delta, double nu, double eps, double* out);

/* sqrt(c * eps): the published-table form of the bound. */
LYAP_API lyap_status lyap_table_bound(double delta, double nu, double eps, double* out);

/* Residual block budget delta' = nu' = (nu + delta - 1)/(1 - 2 delta). */
LYAP_API lyap_status lyap_residual_effective_budget(double delta, double nu, double* out_delta,
                                                    double* out_nu);

/* Conic sector slopes <-> budget maps. */
LYAP_API lyap_status lyap_conic_from_slopes(double a, double b, double* out_delta, double* out_nu);
LYAP_API lyap_status lyap_slopes_from_budget(double delta, double nu, double* out_a, double* out_b);

/* Quasi-dominance of a dense row-major n x n matrix. verdict: 1 pass, 0 fail.
 * witness (length n) receives a positive diagonal scaling when it exists and
 * may be NULL. */
LYAP_API lyap_status lyap_quasi_dominant(const double* matrix, size_t n, double tol, int* verdict,
                                         double* witness);

/* Certificate for explicit budgets: deltas/nus have length n (n > 2).
 * Returns the full certificate as a JSON document. */
LYAP_API lyap_status lyap_certify(const double* deltas, const double* nus, size_t n,
                                  double global_delta, double global_nu, int strict,
                                  char** json_out);

/* Plans per-layer budgets for n layers under the global pair, JSON result. */
LYAP_API lyap_status lyap_plan(size_t n, double global_delta, double global_nu,
                               double margin_out, double margin_in, double slack,
                               char** json_out);

/* -------------------------------- datasets ------------------------------- */

LYAP_API lyap_status lyap_dataset_load_idx(const char* images_path, const char* labels_path,
                                           lyap_dataset** out);
LYAP_API lyap_status lyap_dataset_synth(size_t classes, size_t dim, size_t per_class,
                                        uint64_t seed, lyap_dataset** out);
LYAP_API void lyap_dataset_free(lyap_dataset* d);
LYAP_API size_t lyap_dataset_size(const lyap_dataset* d);
LYAP_API size_t lyap_dataset_dim(const lyap_dataset* d);
LYAP_API size_t lyap_dataset_classes(const lyap_dataset* d);

/* --------------------------------- models -------------------------------- */

LYAP_API lyap_status lyap_model_load(const char* path, lyap_model** out);
LYAP_API lyap_status lyap_model_save(const lyap_model* m, const char* path);
LYAP_API void lyap_model_free(lyap_model* m);

/* Per-layer sigma_max estimates (power iteration with `iters` rounds) as JSON:
 * {"sigma": [...], "exact": [... or null per layer]}. `with_exact` adds the
 * dense-SVD oracle value for layers small enough to materialize. */
LYAP_API lyap_status lyap_model_spectra(const lyap_model* m, uint32_t iters, int with_exact,
                                        char** json_out);

/* Forward pass: batch of n samples, row-major input of n*in_dim floats;
 * out must hold n*out_dim floats. */
LYAP_API lyap_status lyap_model_forward(const lyap_model* m, const float* batch, size_t n,
                                        size_t in_dim, float* out, size_t out_dim);

/* ------------------------------- experiments ----------------------------- */

/* Trains a model from a JSON experiment config. Dataset handles override the
 * config's dataset section when non-NULL. Returns the trained model and, when
 * log_json_out is non-NULL, a JSON training log. */
LYAP_API lyap_status lyap_train(const char* config_json, const lyap_dataset* train,
                                lyap_model** out_model, char** log_json_out);

/* Attack sweep + bound verification of a trained model; JSON report plus a
 * CSV table (either output pointer may be NULL). */
LYAP_API lyap_status lyap_evaluate(const char* config_json, lyap_model* model,
                                   const lyap_dataset* test, char** report_json_out,
                                   char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* LYAPNET_LYAPNET_H */
