#include <math.h>
#include <stdio.h>
#include <string.h>

#include <oio.h>

static int failures = 0;

static void check(int ok, const char* what) {
  if (!ok) {
    fprintf(stderr, "FAIL: %s (last error: %s)\n", what, oio_last_error());
    ++failures;
  }
}

static int close_to(double a, double b, double tol) { return fabs(a - b) <= tol; }

static const char* kConfig =
    "{\"n\":1,\"horizon\":60,\"replications\":2,\"seed\":7,"
    "\"demand\":{\"kind\":\"poisson\",\"lambda\":1.5},"
    "\"loss\":{\"kind\":\"newsvendor\",\"holding\":1.0,\"penalty\":10.0},"
    "\"set\":{\"kind\":\"box\",\"lower\":0.0,\"upper\":6.0},"
    "\"policy\":{\"name\":\"maxcosd\",\"gamma\":0.1}}";

static void test_primitives(void) {
  double y[2] = {3.0, 1.0};
  double d[2] = {1.0, 2.0};
  double h[2] = {1.0, 2.0};
  double p[2] = {3.0, 4.0};
  double cost = 0.0;
  check(oio_newsvendor_cost(2, y, d, h, p, &cost) == OIO_OK, "cost status");
  check(close_to(cost, 6.0, 1e-12), "cost value");
  check(oio_newsvendor_cost(0, y, d, h, p, &cost) == OIO_ERR_INVALID_ARGUMENT,
        "cost rejects n < 1");
  check(oio_newsvendor_cost(2, y, NULL, h, p, &cost) == OIO_ERR_INVALID_ARGUMENT,
        "cost rejects null demand");

  double s[2] = {1.0, 1.0};
  double g[2] = {0.0, 0.0};
  check(oio_newsvendor_subgradient(2, y, s, h, p, g) == OIO_OK, "subgradient status");
  check(g[0] == 1.0 && g[1] == -4.0, "subgradient selection");
  double bad_s[2] = {4.0, 1.0};
  check(oio_newsvendor_subgradient(2, y, bad_s, h, p, g) == OIO_ERR_DATA,
        "sales above the level are a protocol breach");
  check(strlen(oio_last_error()) > 0, "protocol breach leaves a message");

  double v[2] = {-1.0, 5.0};
  double lower[2] = {0.0, 0.0};
  double upper[2] = {4.0, 4.0};
  double out[2] = {0.0, 0.0};
  check(oio_project_box(2, v, lower, upper, out) == OIO_OK, "box projection status");
  check(out[0] == 0.0 && out[1] == 4.0, "box projection clamps");

  double w[2] = {2.0, -1.0};
  check(oio_project_capacity(2, w, 1.0, out) == OIO_OK, "capacity projection status");
  check(close_to(out[0], 1.0, 1e-12) && close_to(out[1], 0.0, 1e-12),
        "capacity projection value");
  double inside[2] = {0.2, 0.3};
  check(oio_project_capacity(2, inside, 1.0, out) == OIO_OK, "interior status");
  check(out[0] == 0.2 && out[1] == 0.3, "interior point is fixed");
  check(oio_project_capacity(2, w, -1.0, out) == OIO_ERR_INVALID_ARGUMENT,
        "negative capacity is rejected");
}

static void test_bounds(void) {
  const double T = 400.0, G = 2.0, D = 3.0, gamma = 0.25, mu = 0.5, delta = 0.05;
  const double coef = 1.0 / (2.0 * gamma) + gamma + 1.0;
  double out = 0.0;

  check(oio_bound_adaptive_expected(T, G, D, gamma, mu, &out) == OIO_OK,
        "expected bound status");
  check(close_to(out, sqrt(2.0) * G * D * coef * sqrt(T) / mu, 1e-9),
        "expected bound value");

  check(oio_bound_adaptive_high_prob(T, G, D, gamma, mu, delta, &out) == OIO_OK,
        "high probability bound status");
  check(close_to(out, G * D * coef * (1.0 + log(T / delta) / mu) * sqrt(T), 1e-9),
        "high probability bound value");

  check(oio_bound_descent_sqrt_t(T, G, D, gamma, &out) == OIO_OK,
        "descent bound status");
  check(close_to(out, (1.0 + 2.0 * gamma) / (2.0 * gamma) * G * D * sqrt(T), 1e-9),
        "descent bound value");

  check(oio_bound_adaptive_expected(T, G, D, gamma, 0.0, &out) ==
            OIO_ERR_INVALID_ARGUMENT,
        "zero mu is rejected");
  check(oio_bound_adaptive_high_prob(T, G, D, gamma, mu, 1.0, &out) ==
            OIO_ERR_INVALID_ARGUMENT,
        "delta = 1 is rejected");
  check(oio_bound_descent_sqrt_t(T, G, D, 0.0, &out) == OIO_ERR_INVALID_ARGUMENT,
        "zero gamma is rejected");
  check(oio_bound_descent_sqrt_t(T, G, D, gamma, NULL) == OIO_ERR_INVALID_ARGUMENT,
        "null output is rejected");
}

static void test_config_and_run(void) {
  oio_config_t* cfg = NULL;
  check(oio_config_from_json(kConfig, &cfg) == OIO_OK, "config parses");
  check(cfg != NULL, "config handle set");

  const char* manifest = oio_config_manifest(cfg);
  check(manifest != NULL && strstr(manifest, "\"horizon\": 60") != NULL,
        "manifest echoes the horizon");
  check(strstr(manifest, "\"diameter\"") != NULL, "manifest carries derived values");

  check(oio_config_override(cfg, "{\"horizon\":40}") == OIO_OK, "override applies");
  manifest = oio_config_manifest(cfg);
  check(strstr(manifest, "\"horizon\": 40") != NULL, "override is visible");

  check(oio_config_override(cfg, "{\"horizon\":0}") == OIO_ERR_INVALID_ARGUMENT,
        "bad override is rejected");
  manifest = oio_config_manifest(cfg);
  check(strstr(manifest, "\"horizon\": 40") != NULL,
        "rejected override leaves the config untouched");
  check(oio_config_override(cfg, "{oops") == OIO_ERR_PARSE,
        "override with broken JSON is a parse error");

  oio_report_t* report = NULL;
  check(oio_run(cfg, 1, 0, &report) == OIO_OK, "run succeeds");
  const char* json = oio_report_json(report);
  check(strstr(json, "\"aggregate\"") != NULL, "report has the aggregate block");
  check(strstr(json, "\"per_replication\"") != NULL, "report has per replication rows");
  check(strstr(json, "\"config_hash\"") != NULL, "report is hash stamped");
  oio_report_free(report);

  int64_t horizons[2] = {30, 60};
  report = NULL;
  check(oio_fit(cfg, horizons, 2, 1, &report) == OIO_OK, "fit succeeds");
  check(strstr(oio_report_json(report), "\"slope\"") != NULL, "fit reports a slope");
  oio_report_free(report);
  check(oio_fit(cfg, horizons, 1, 1, NULL) == OIO_ERR_INVALID_ARGUMENT,
        "fit needs two horizons and an output");
  check(oio_fit(cfg, NULL, 2, 1, &report) == OIO_ERR_INVALID_ARGUMENT,
        "fit rejects null horizons");

  report = NULL;
  check(oio_sweep(cfg, 0.05, 0.5, 2, 1, &report) == OIO_OK, "sweep succeeds");
  check(strstr(oio_report_json(report), "\"cells\"") != NULL, "sweep reports cells");
  oio_report_free(report);

  oio_config_free(cfg);
}

static void test_error_paths(void) {
  oio_config_t* cfg = NULL;
  check(oio_config_from_json("not json", &cfg) == OIO_ERR_PARSE, "parse error status");
  check(cfg == NULL, "failed parse leaves no handle");
  check(strlen(oio_last_error()) > 0, "parse error message");

  check(oio_config_from_json("{\"n\":0}", &cfg) == OIO_ERR_INVALID_ARGUMENT,
        "invalid config status");
  check(strstr(oio_last_error(), "n") != NULL, "invalid config names the field");

  check(oio_config_from_json(NULL, &cfg) == OIO_ERR_INVALID_ARGUMENT, "null text");
  check(oio_config_from_json(kConfig, NULL) == OIO_ERR_INVALID_ARGUMENT, "null out");
  check(oio_config_from_file("no_such_file.json", &cfg) == OIO_ERR_IO, "missing file");
  check(oio_run(NULL, 1, 0, NULL) == OIO_ERR_INVALID_ARGUMENT, "run rejects nulls");

  /* an aggressive unclamped descent step drops below the carried stock */
  const char* infeasible =
      "{\"n\":1,\"horizon\":5,\"replications\":1,"
      "\"demand\":{\"kind\":\"constant\",\"level\":0.0},"
      "\"loss\":{\"kind\":\"newsvendor\",\"holding\":1.0,\"penalty\":1.0},"
      "\"set\":{\"kind\":\"box\",\"lower\":0.0,\"upper\":10.0},"
      "\"policy\":{\"name\":\"osd\",\"gamma\":1.0,\"rate\":\"sqrt_t\"},"
      "\"y1\":5.0}";
  check(oio_config_from_json(infeasible, &cfg) == OIO_OK, "infeasible config parses");
  oio_report_t* report = NULL;
  check(oio_run(cfg, 1, 0, &report) == OIO_ERR_FEASIBILITY,
        "constraint breach surfaces as a feasibility status");
  check(report == NULL, "failed run leaves no report");
  oio_config_free(cfg);

  /* success clears the sticky message */
  double out = 0.0;
  check(oio_bound_descent_sqrt_t(100.0, 1.0, 1.0, 0.5, &out) == OIO_OK, "bound ok");
  check(strlen(oio_last_error()) == 0, "success clears the error message");
}

int main(void) {
  check(oio_version() != NULL && strlen(oio_version()) > 0, "version string");
  test_primitives();
  test_bounds();
  test_config_and_run();
  test_error_paths();
  if (failures > 0) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}
