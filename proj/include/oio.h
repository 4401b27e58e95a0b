#ifndef OIO_H
#define OIO_H

/* C interface to the online inventory optimization library.
 *
 * Handles are opaque; every call that can fail returns a status code and
 * leaves a message readable through oio_last_error() on the calling thread.
 * Reports expose their content as a JSON document.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(OIO_BUILD_SHARED)
#define OIO_API __declspec(dllexport)
#else
#define OIO_API __declspec(dllimport)
#endif
#else
#define OIO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum oio_status {
  OIO_OK = 0,
  OIO_ERR_INVALID_ARGUMENT = 1, /* bad parameters or malformed config values */
  OIO_ERR_PARSE = 2,            /* config text is not valid JSON */
  OIO_ERR_IO = 3,               /* file could not be read or written */
  OIO_ERR_DATA = 4,             /* demand data exhausted or protocol violated */
  OIO_ERR_FEASIBILITY = 5,      /* order-up-to constraint failed during a run */
  OIO_ERR_RUNTIME = 6
};

typedef struct oio_config oio_config_t;
typedef struct oio_report oio_report_t;

OIO_API const char* oio_version(void);

/* message from the most recent failing call on this thread ("" if none) */
OIO_API const char* oio_last_error(void);

/* ---- experiment configuration ------------------------------------------ */

OIO_API int32_t oio_config_from_json(const char* json_text, oio_config_t** out);
OIO_API int32_t oio_config_from_file(const char* path, oio_config_t** out);
/* RFC 7386 merge patch applied to the stored config, which is then re-resolved */
OIO_API int32_t oio_config_override(oio_config_t* cfg, const char* json_patch);
/* resolved parameters (derived diameter, gradient bound, non-degeneracy, ...)
 * as a JSON document; the pointer stays valid until the next call on cfg */
OIO_API const char* oio_config_manifest(oio_config_t* cfg);
OIO_API void oio_config_free(oio_config_t* cfg);

/* ---- experiments --------------------------------------------------------- */

/* Replicated run with regret measurement and bound checks. write_files != 0
 * writes summary.json / manifest.json (and trajectory CSVs when the config
 * asks for them) under the config's output directory. */
OIO_API int32_t oio_run(const oio_config_t* cfg, int32_t jobs, int32_t write_files,
                        oio_report_t** out);

/* Regret-vs-gamma sweep on a log-spaced grid. points <= 0 selects the default
 * grid (25 points on [1e-5, 10]). Completed cells found in the output
 * directory are reused. */
OIO_API int32_t oio_sweep(const oio_config_t* cfg, double gamma_min, double gamma_max,
                          int32_t points, int32_t jobs, oio_report_t** out);

/* Mean regret at each horizon plus the log-log growth exponent. */
OIO_API int32_t oio_fit(const oio_config_t* cfg, const int64_t* horizons, int32_t count,
                        int32_t jobs, oio_report_t** out);

/* JSON document of a report; valid until the report is freed */
OIO_API const char* oio_report_json(const oio_report_t* report);
OIO_API void oio_report_free(oio_report_t* report);

/* ---- stateless primitives ------------------------------------------------ */

/* sum_i h[i]*max(y[i]-d[i],0) + p[i]*max(d[i]-y[i],0) */
OIO_API int32_t oio_newsvendor_cost(int32_t n, const double* y, const double* d,
                                    const double* h, const double* p, double* out);

/* subgradient from sales s = min(y, demand): h[i] where s[i] < y[i], -p[i]
 * where s[i] == y[i]; fails if s[i] > y[i] */
OIO_API int32_t oio_newsvendor_subgradient(int32_t n, const double* y, const double* s,
                                           const double* h, const double* p,
                                           double* out_g);

OIO_API int32_t oio_project_box(int32_t n, const double* v, const double* lower,
                                const double* upper, double* out);

/* projection onto { y >= 0 : sum y <= cap } */
OIO_API int32_t oio_project_capacity(int32_t n, const double* v, double cap, double* out);

/* Regret ceilings; mu <= 0 or delta <= 0 is rejected where the formula needs it. */
OIO_API int32_t oio_bound_adaptive_expected(double horizon, double gradient_bound,
                                            double diameter, double gamma, double mu,
                                            double* out);
OIO_API int32_t oio_bound_adaptive_high_prob(double horizon, double gradient_bound,
                                             double diameter, double gamma, double mu,
                                             double delta, double* out);
OIO_API int32_t oio_bound_descent_sqrt_t(double horizon, double gradient_bound,
                                         double diameter, double gamma, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OIO_H */
