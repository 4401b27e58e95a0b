#include "oio.h"

#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "oio/errors.hpp"
#include "oio/runner.hpp"
#include "oio/simulator.hpp"

namespace {

thread_local std::string g_last_error;

// JSON syntax problems get their own status code
struct ParseError : oio::Error {
  using oio::Error::Error;
};

int32_t classify(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return OIO_ERR_PARSE;
  if (dynamic_cast<const oio::FeasibilityViolation*>(&e)) return OIO_ERR_FEASIBILITY;
  if (dynamic_cast<const oio::EndOfData*>(&e)) return OIO_ERR_DATA;
  if (dynamic_cast<const oio::ProtocolViolation*>(&e)) return OIO_ERR_DATA;
  if (dynamic_cast<const oio::IngestionError*>(&e)) return OIO_ERR_IO;
  if (dynamic_cast<const oio::ConfigError*>(&e)) return OIO_ERR_INVALID_ARGUMENT;
  return OIO_ERR_RUNTIME;
}

int32_t fail(int32_t code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
int32_t guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return OIO_OK;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return classify(e);
  } catch (...) {
    g_last_error = "unknown error";
    return OIO_ERR_RUNTIME;
  }
}

oio::Json parse_json_text(const char* text) {
  try {
    return oio::Json::parse(text);
  } catch (const oio::Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

int32_t bound_by_name(const char* name, double horizon, double gradient_bound,
                      double diameter, double gamma, std::optional<double> mu,
                      double delta, double* out) {
  if (!out) return fail(OIO_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto bounds =
        oio::theoretical_bounds(horizon, gradient_bound, diameter, gamma, mu, delta);
    for (const oio::NamedBound& b : bounds) {
      if (b.name == name) {
        *out = b.value;
        return;
      }
    }
    throw oio::ConfigError("bound unavailable for the given parameters");
  });
}

}  // namespace

struct oio_config {
  oio::Json raw;
  oio::ExperimentConfig resolved;
  std::string manifest_text;
};

struct oio_report {
  std::string json;
};

extern "C" {

const char* oio_version(void) { return "0.1.0"; }

const char* oio_last_error(void) { return g_last_error.c_str(); }

int32_t oio_config_from_json(const char* json_text, oio_config_t** out) {
  if (!json_text || !out) return fail(OIO_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    oio::Json j = parse_json_text(json_text);
    *out = new oio_config{j, oio::parse_config(j), {}};
  });
}

int32_t oio_config_from_file(const char* path, oio_config_t** out) {
  if (!path || !out) return fail(OIO_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw oio::IngestionError(std::string("cannot open config file: ") + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    oio::Json j = parse_json_text(text.c_str());
    *out = new oio_config{j, oio::parse_config(j), {}};
  });
}

int32_t oio_config_override(oio_config_t* cfg, const char* json_patch) {
  if (!cfg || !json_patch) return fail(OIO_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    oio::Json patch = parse_json_text(json_patch);
    oio::Json merged = cfg->raw;
    merged.merge_patch(patch);
    // resolve first so a bad patch leaves the config untouched
    oio::ExperimentConfig resolved = oio::parse_config(merged);
    cfg->raw = std::move(merged);
    cfg->resolved = std::move(resolved);
    cfg->manifest_text.clear();
  });
}

const char* oio_config_manifest(oio_config_t* cfg) {
  if (!cfg) return "";
  try {
    cfg->manifest_text = oio::resolved_manifest(cfg->resolved).dump(2);
    return cfg->manifest_text.c_str();
  } catch (...) {
    return "";
  }
}

void oio_config_free(oio_config_t* cfg) { delete cfg; }

int32_t oio_run(const oio_config_t* cfg, int32_t jobs, int32_t write_files,
                oio_report_t** out) {
  if (!cfg || !out) return fail(OIO_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    oio::ExperimentResult res =
        oio::run_experiment(cfg->resolved, jobs > 0 ? jobs : 1, write_files != 0);
    *out = new oio_report{res.summary.dump(2)};
  });
}

int32_t oio_sweep(const oio_config_t* cfg, double gamma_min, double gamma_max,
                  int32_t points, int32_t jobs, oio_report_t** out) {
  if (!cfg || !out) return fail(OIO_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::vector<double> grid = points > 0 ? oio::log_grid(gamma_min, gamma_max, points)
                                          : oio::log_grid(1e-5, 10.0, 25);
    oio::SweepResult res = oio::sweep_gamma(cfg->resolved, grid, jobs > 0 ? jobs : 1);
    *out = new oio_report{res.summary.dump(2)};
  });
}

int32_t oio_fit(const oio_config_t* cfg, const int64_t* horizons, int32_t count,
                int32_t jobs, oio_report_t** out) {
  if (!cfg || !horizons || !out) return fail(OIO_ERR_INVALID_ARGUMENT, "null argument");
  if (count < 2) return fail(OIO_ERR_INVALID_ARGUMENT, "fit needs at least two horizons");
  *out = nullptr;
  return guarded([&] {
    std::vector<long> hs(horizons, horizons + count);
    oio::FitResult res = oio::growth_fit(cfg->resolved, hs, jobs > 0 ? jobs : 1);
    *out = new oio_report{res.report.dump(2)};
  });
}

const char* oio_report_json(const oio_report_t* report) {
  return report ? report->json.c_str() : "";
}

void oio_report_free(oio_report_t* report) { delete report; }

int32_t oio_newsvendor_cost(int32_t n, const double* y, const double* d, const double* h,
                            const double* p, double* out) {
  if (n < 1 || !y || !d || !h || !p || !out)
    return fail(OIO_ERR_INVALID_ARGUMENT, "null argument or n < 1");
  return guarded([&] {
    oio::NewsvendorLoss loss(oio::Vec(h, h + n), oio::Vec(p, p + n));
    *out = loss.evaluate(oio::Vec(y, y + n), oio::Vec(d, d + n));
  });
}

int32_t oio_newsvendor_subgradient(int32_t n, const double* y, const double* s,
                                   const double* h, const double* p, double* out_g) {
  if (n < 1 || !y || !s || !h || !p || !out_g)
    return fail(OIO_ERR_INVALID_ARGUMENT, "null argument or n < 1");
  return guarded([&] {
    oio::NewsvendorLoss loss(oio::Vec(h, h + n), oio::Vec(p, p + n));
    oio::Vec g = loss.subgradient_censored(oio::Vec(y, y + n), oio::Vec(s, s + n));
    for (int32_t i = 0; i < n; ++i) out_g[i] = g[static_cast<std::size_t>(i)];
  });
}

int32_t oio_project_box(int32_t n, const double* v, const double* lower,
                        const double* upper, double* out) {
  if (n < 1 || !v || !lower || !upper || !out)
    return fail(OIO_ERR_INVALID_ARGUMENT, "null argument or n < 1");
  return guarded([&] {
    oio::FeasibleSet set =
        oio::FeasibleSet::box(oio::Vec(lower, lower + n), oio::Vec(upper, upper + n));
    oio::Vec y = set.project(oio::Vec(v, v + n));
    for (int32_t i = 0; i < n; ++i) out[i] = y[static_cast<std::size_t>(i)];
  });
}

int32_t oio_project_capacity(int32_t n, const double* v, double cap, double* out) {
  if (n < 1 || !v || !out) return fail(OIO_ERR_INVALID_ARGUMENT, "null argument or n < 1");
  return guarded([&] {
    oio::FeasibleSet set = oio::FeasibleSet::capacity(n, cap);
    oio::Vec y = set.project(oio::Vec(v, v + n));
    for (int32_t i = 0; i < n; ++i) out[i] = y[static_cast<std::size_t>(i)];
  });
}

int32_t oio_bound_adaptive_expected(double horizon, double gradient_bound,
                                    double diameter, double gamma, double mu,
                                    double* out) {
  if (!(mu > 0.0)) return fail(OIO_ERR_INVALID_ARGUMENT, "mu must be > 0");
  return bound_by_name("adaptive_expected", horizon, gradient_bound, diameter, gamma, mu,
                       0.5, out);
}

int32_t oio_bound_adaptive_high_prob(double horizon, double gradient_bound,
                                     double diameter, double gamma, double mu,
                                     double delta, double* out) {
  if (!(mu > 0.0)) return fail(OIO_ERR_INVALID_ARGUMENT, "mu must be > 0");
  return bound_by_name("adaptive_high_prob", horizon, gradient_bound, diameter, gamma, mu,
                       delta, out);
}

int32_t oio_bound_descent_sqrt_t(double horizon, double gradient_bound, double diameter,
                                 double gamma, double* out) {
  return bound_by_name("descent_sqrt_t", horizon, gradient_bound, diameter, gamma,
                       std::nullopt, 0.5, out);
}

}  // extern "C"
