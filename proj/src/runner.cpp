#include "oio/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "oio/errors.hpp"
#include "oio/rng.hpp"

namespace fs = std::filesystem;

namespace oio {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

double number_field(const Json& j, const std::string& field) {
  if (!j.is_number()) bad_field(field, "expected a number");
  return j.get<double>();
}

long integer_field(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) bad_field(field, "expected an integer");
  return j.get<long>();
}

// optional string member with a type check that names the field
std::string string_value(const Json& j, const char* key, const char* dflt,
                         const std::string& field) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_string()) bad_field(field, "expected a string");
  return j.at(key).get<std::string>();
}

// scalar broadcast or explicit array of length n
Vec vec_field(const Json& j, const std::string& field, int n) {
  if (j.is_number()) return Vec(static_cast<std::size_t>(n), j.get<double>());
  if (!j.is_array()) bad_field(field, "expected a number or an array");
  Vec v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) bad_field(field, "array entries must be numbers");
    v.push_back(e.get<double>());
  }
  if (static_cast<int>(v.size()) != n)
    bad_field(field, "expected " + std::to_string(n) + " entries, found " +
                         std::to_string(v.size()));
  return v;
}

void check_known_keys(const Json& j, std::initializer_list<const char*> allowed,
                      const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) bad_field(scope.empty() ? it.key() : scope + "." + it.key(), "unknown field");
  }
}

std::unique_ptr<DemandSource> parse_demand(const Json& j, int n) {
  if (!j.is_object()) bad_field("demand", "expected an object");
  if (!j.contains("kind")) bad_field("demand.kind", "missing");
  std::string kind = string_value(j, "kind", "", "demand.kind");
  if (kind == "poisson") {
    check_known_keys(j, {"kind", "lambda"}, "demand");
    if (!j.contains("lambda")) bad_field("demand.lambda", "missing");
    return make_poisson(vec_field(j.at("lambda"), "demand.lambda", n));
  }
  if (kind == "uniform_intensity_poisson") {
    check_known_keys(j, {"kind", "lo", "hi", "meta_seed"}, "demand");
    double lo = number_field(j.value("lo", Json(1.0)), "demand.lo");
    double hi = number_field(j.value("hi", Json(2.0)), "demand.hi");
    Json meta_j = j.value("meta_seed", Json(715));
    if (!meta_j.is_number_integer()) bad_field("demand.meta_seed", "expected an integer");
    return make_uniform_intensity_poisson(n, lo, hi, meta_j.get<uint64_t>());
  }
  if (kind == "constant") {
    check_known_keys(j, {"kind", "level"}, "demand");
    if (!j.contains("level")) bad_field("demand.level", "missing");
    return make_constant(vec_field(j.at("level"), "demand.level", n));
  }
  if (kind == "sequence") {
    check_known_keys(j, {"kind", "rows", "repeat"}, "demand");
    if (!j.contains("rows") || !j.at("rows").is_array() || j.at("rows").empty())
      bad_field("demand.rows", "expected a nonempty array of rows");
    if (j.contains("repeat") && !j.at("repeat").is_boolean())
      bad_field("demand.repeat", "expected a boolean");
    std::vector<Vec> rows;
    for (const auto& r : j.at("rows")) rows.push_back(vec_field(r, "demand.rows", n));
    return make_deterministic(std::move(rows), j.value("repeat", false));
  }
  if (kind == "clipped_ar1") {
    check_known_keys(j, {"kind", "mean", "phi", "sigma"}, "demand");
    if (!j.contains("mean")) bad_field("demand.mean", "missing");
    double phi = number_field(j.value("phi", Json(0.0)), "demand.phi");
    double sigma = number_field(j.value("sigma", Json(0.0)), "demand.sigma");
    return make_clipped_ar1(vec_field(j.at("mean"), "demand.mean", n), phi, sigma);
  }
  if (kind == "decaying") {
    check_known_keys(j, {"kind", "y1", "ratio"}, "demand");
    double y1 = number_field(j.value("y1", Json(1.0)), "demand.y1");
    double ratio = number_field(j.value("ratio", Json(0.5)), "demand.ratio");
    auto built = adversary_decaying_demand(y1, ratio);
    return std::move(built.demand);
  }
  bad_field("demand.kind", "unknown kind '" + kind + "'");
}

std::unique_ptr<Loss> parse_loss(const Json& j, int n) {
  if (!j.is_object()) bad_field("loss", "expected an object");
  std::string kind = string_value(j, "kind", "newsvendor", "loss.kind");
  if (kind == "newsvendor") {
    check_known_keys(j, {"kind", "holding", "penalty"}, "loss");
    if (!j.contains("holding")) bad_field("loss.holding", "missing");
    if (!j.contains("penalty")) bad_field("loss.penalty", "missing");
    return std::make_unique<NewsvendorLoss>(vec_field(j.at("holding"), "loss.holding", n),
                                            vec_field(j.at("penalty"), "loss.penalty", n));
  }
  if (kind == "linear") {
    check_known_keys(j, {"kind"}, "loss");
    return std::make_unique<LinearLoss>(n);
  }
  bad_field("loss.kind", "unknown kind '" + kind + "'");
}

// column q-quantile (smallest order statistic at rank ceil(q*T)) of csv data
double column_quantile(const CsvDataset& data, int col, double q) {
  Vec column(static_cast<std::size_t>(data.periods));
  for (long t = 0; t < data.periods; ++t)
    column[static_cast<std::size_t>(t)] = data.rows[static_cast<std::size_t>(t)][col];
  std::sort(column.begin(), column.end());
  long k = std::min<long>(data.periods,
                          std::max<long>(1, static_cast<long>(std::ceil(
                                                q * static_cast<double>(data.periods)))));
  return column[static_cast<std::size_t>(k - 1)];
}

FeasibleSet parse_set(const Json& j, int n, const DemandSource& demand,
                      const CsvDataset* csv) {
  if (!j.is_object()) bad_field("set", "expected an object");
  std::string kind = string_value(j, "kind", "box", "set.kind");
  if (kind == "box") {
    check_known_keys(j, {"kind", "lower", "upper"}, "set");
    Vec lower = j.contains("lower") ? vec_field(j.at("lower"), "set.lower", n)
                                    : zeros(static_cast<std::size_t>(n));
    Vec upper;
    if (j.contains("upper") && j.at("upper").is_string()) {
      if (j.at("upper").get<std::string>() != "auto")
        bad_field("set.upper", "expected a number, an array, or \"auto\"");
      if (!csv) bad_field("set.upper", "\"auto\" needs csv demand data");
      upper.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        upper[static_cast<std::size_t>(i)] = std::max(1.0, column_quantile(*csv, i, 0.95));
    } else if (j.contains("upper")) {
      upper = vec_field(j.at("upper"), "set.upper", n);
    } else {
      bad_field("set.upper", "missing");
    }
    return FeasibleSet::box(std::move(lower), std::move(upper));
  }
  if (kind == "capacity") {
    check_known_keys(j, {"kind", "cap"}, "set");
    if (!j.contains("cap")) bad_field("set.cap", "missing");
    double cap;
    if (j.at("cap").is_string()) {
      if (j.at("cap").get<std::string>() != "auto")
        bad_field("set.cap", "expected a number or \"auto\"");
      // 1.5x the total mean demand rate
      if (const Vec* lambda = poisson_intensities(demand)) {
        cap = 1.5 * sum(*lambda);
      } else if (csv) {
        double total = 0.0;
        for (const Vec& row : csv->rows) total += sum(row);
        cap = 1.5 * total / static_cast<double>(csv->periods);
      } else {
        bad_field("set.cap", "\"auto\" needs poisson or csv demand");
      }
    } else {
      cap = number_field(j.at("cap"), "set.cap");
    }
    return FeasibleSet::capacity(n, cap);
  }
  bad_field("set.kind", "unknown kind '" + kind + "'");
}

PolicyConfig parse_policy(const Json& j, int n) {
  if (!j.is_object()) bad_field("policy", "expected an object");
  PolicyConfig pc;
  if (!j.contains("name")) bad_field("policy.name", "missing");
  pc.name = string_value(j, "name", "", "policy.name");
  if (pc.name == "maxcosd") {
    check_known_keys(j, {"name", "gamma"}, "policy");
    pc.gamma = number_field(j.value("gamma", Json(0.1)), "policy.gamma");
    pc.rate = "adaptive";
    pc.strategy = "feasibility";
  } else if (pc.name == "cosd") {
    check_known_keys(j, {"name", "gamma", "rate", "strategy", "tau"}, "policy");
    pc.gamma = number_field(j.value("gamma", Json(0.1)), "policy.gamma");
    pc.rate = string_value(j, "rate", "adaptive", "policy.rate");
    pc.strategy = string_value(j, "strategy", "every_period", "policy.strategy");
    pc.tau = static_cast<int>(integer_field(j.value("tau", Json(1)), "policy.tau"));
    if (pc.rate != "adaptive" && pc.rate != "sqrt_t")
      bad_field("policy.rate", "expected \"adaptive\" or \"sqrt_t\"");
    if (pc.strategy != "every_period" && pc.strategy != "minibatch" &&
        pc.strategy != "cleanup" && pc.strategy != "feasibility")
      bad_field("policy.strategy", "unknown strategy '" + pc.strategy + "'");
  } else if (pc.name == "osd") {
    check_known_keys(j, {"name", "gamma", "rate", "clamp_to_state"}, "policy");
    pc.gamma = number_field(j.value("gamma", Json(0.1)), "policy.gamma");
    pc.rate = string_value(j, "rate", "sqrt_t", "policy.rate");
    if (pc.rate != "adaptive" && pc.rate != "sqrt_t")
      bad_field("policy.rate", "expected \"adaptive\" or \"sqrt_t\"");
    if (j.contains("clamp_to_state") && !j.at("clamp_to_state").is_boolean())
      bad_field("policy.clamp_to_state", "expected a boolean");
    pc.clamp_to_state = j.value("clamp_to_state", false);
  } else if (pc.name == "constant") {
    check_known_keys(j, {"name", "level"}, "policy");
    if (!j.contains("level")) bad_field("policy.level", "missing");
    pc.level = vec_field(j.at("level"), "policy.level", n);
  } else if (pc.name == "zero") {
    check_known_keys(j, {"name"}, "policy");
    pc.name = "constant";
    pc.level = zeros(static_cast<std::size_t>(n));
  } else {
    bad_field("policy.name", "unknown policy '" + pc.name + "'");
  }
  if (pc.name != "constant" && !(pc.gamma > 0.0)) bad_field("policy.gamma", "must be > 0");
  return pc;
}

Json policy_json(const PolicyConfig& pc) {
  Json j;
  j["name"] = pc.name;
  if (pc.name == "constant") {
    j["level"] = pc.level;
    return j;
  }
  j["gamma"] = pc.gamma;
  j["rate"] = pc.rate;
  if (pc.name == "cosd" || pc.name == "maxcosd") {
    j["strategy"] = pc.strategy;
    if (pc.strategy == "minibatch") j["tau"] = pc.tau;
  }
  if (pc.name == "osd") j["clamp_to_state"] = pc.clamp_to_state;
  return j;
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

Json manifest_core(const ExperimentConfig& cfg);

uint64_t hash_manifest(Json manifest) { return fnv1a64(manifest.dump()); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::unique_ptr<Policy> ExperimentConfig::make_policy() const {
  return make_policy(policy.gamma);
}

std::unique_ptr<Policy> ExperimentConfig::make_policy(double gamma) const {
  const PolicyConfig& pc = policy;
  if (pc.name == "constant") return std::make_unique<ConstantPolicy>(pc.level);
  Vec start = y1;
  if (pc.name == "osd") {
    auto rate = pc.rate == "adaptive"
                    ? make_adaptive_rate(gamma, set.diameter())
                    : make_sqrt_schedule(gamma, set.diameter(), loss->gradient_bound());
    return std::make_unique<OsdPolicy>(set, std::move(start), std::move(rate),
                                       pc.clamp_to_state);
  }
  std::unique_ptr<UpdateStrategy> strat;
  if (pc.strategy == "every_period") strat = make_every_period();
  else if (pc.strategy == "minibatch") strat = make_minibatch(pc.tau);
  else if (pc.strategy == "cleanup") strat = make_cleanup_trigger();
  else strat = make_feasibility_trigger();
  auto rate = pc.rate == "sqrt_t"
                  ? make_sqrt_schedule(gamma, set.diameter(), loss->gradient_bound())
                  : make_adaptive_rate(gamma, set.diameter());
  return std::make_unique<CosdPolicy>(set, std::move(start), std::move(strat),
                                      std::move(rate));
}

std::unique_ptr<Dynamic> ExperimentConfig::make_dynamic() const {
  switch (dynamic) {
    case DynamicKind::Stateless:
      return make_stateless(n);
    case DynamicKind::Backlogging:
      return make_backlogging(n);
    case DynamicKind::LostSales:
      return make_lost_sales(n);
    case DynamicKind::Perishable:
      return make_perishable(n, perishable_lifetime);
  }
  throw ConfigError("unhandled dynamic kind");
}

Json setting_preset(int id, const Json& overrides) {
  Json p;
  p["setting"] = id;
  p["replications"] = 10;
  p["seed"] = 1;
  p["feedback"] = "censored";
  p["y1"] = 0.0;
  p["policy"] = Json{{"name", "maxcosd"}, {"gamma", 0.1}};
  switch (id) {
    case 1:
    case 2:
      p["n"] = 1;
      p["horizon"] = 1969;
      p["demand"] = Json{{"kind", "poisson"}, {"lambda", 1.0}};
      p["loss"] = Json{{"kind", "newsvendor"}, {"holding", 1.0}, {"penalty", 200.0}};
      p["set"] = Json{{"kind", "box"}, {"lower", 0.0}, {"upper", 10.0}};
      p["dynamic"] = id == 1 ? Json{{"kind", "lost_sales"}}
                             : Json{{"kind", "perishable"}, {"lifetime", 2}};
      break;
    case 3:
      p["n"] = 100;
      p["horizon"] = 1969;
      p["demand"] = Json{{"kind", "uniform_intensity_poisson"},
                         {"lo", 1.0},
                         {"hi", 2.0},
                         {"meta_seed", 715}};
      p["loss"] = Json{{"kind", "newsvendor"}, {"holding", 1.0}, {"penalty", 200.0}};
      p["set"] = Json{{"kind", "capacity"}, {"cap", "auto"}};
      p["dynamic"] = Json{{"kind", "lost_sales"}};
      break;
    case 4:
    case 5:
      // demand.path must be supplied; costs default to a flat schedule with a
      // 200x stockout/holding ratio
      p["demand"] = Json{{"kind", "csv"}};
      p["loss"] = Json{{"kind", "newsvendor"}, {"holding", 0.01}, {"penalty", 2.0}};
      p["dynamic"] = id == 4 ? Json{{"kind", "lost_sales"}} : Json{{"kind", "stateless"}};
      p["set"] = id == 4 ? Json{{"kind", "capacity"}, {"cap", "auto"}}
                         : Json{{"kind", "box"}, {"lower", 0.0}, {"upper", "auto"}};
      break;
    default:
      bad_field("setting", "unknown setting " + std::to_string(id));
  }
  Json merged = p;
  merged.merge_patch(overrides);
  return merged;
}

ExperimentConfig parse_config(const Json& input) {
  if (!input.is_object()) throw ConfigError("config must be a JSON object");
  Json j = input;
  if (j.contains("setting")) {
    int id = static_cast<int>(integer_field(j.at("setting"), "setting"));
    if (id != 0) {
      Json patch = j;
      patch.erase("setting");
      j = setting_preset(id, patch);
    }
  }
  check_known_keys(j,
                   {"setting", "n", "horizon", "replications", "seed", "delta", "feedback",
                    "set", "dynamic", "demand", "loss", "policy", "y1", "uppd",
                    "output_dir", "write_trajectories"},
                   "");

  ExperimentConfig cfg;
  cfg.raw = input;
  cfg.setting = j.value("setting", 0);

  const CsvDataset* csv = nullptr;
  CsvDataset csv_storage;
  if (!j.contains("demand")) bad_field("demand", "missing");
  const Json& dj = j.at("demand");
  if (!dj.is_object()) bad_field("demand", "expected an object");

  if (string_value(dj, "kind", "", "demand.kind") == "csv") {
    check_known_keys(dj, {"kind", "path"}, "demand");
    if (!dj.contains("path") || !dj.at("path").is_string())
      bad_field("demand.path", "expected a file path");
    csv_storage = load_csv(dj.at("path").get<std::string>());
    // n comes from the file unless the config pins it
    if (j.contains("n")) {
      cfg.n = static_cast<int>(integer_field(j.at("n"), "n"));
      if (csv_storage.products != cfg.n)
        bad_field("n", "demand file has " + std::to_string(csv_storage.products) +
                           " products, config says " + std::to_string(cfg.n));
    } else {
      cfg.n = csv_storage.products;
    }
    csv = &csv_storage;
    CsvDataset copy = csv_storage;
    cfg.demand = make_csv_source(std::move(copy));
  } else {
    if (!j.contains("n")) bad_field("n", "missing");
    cfg.n = static_cast<int>(integer_field(j.at("n"), "n"));
    if (cfg.n < 1) bad_field("n", "must be >= 1");
    cfg.demand = parse_demand(dj, cfg.n);
  }

  if (!j.contains("loss")) bad_field("loss", "missing");
  cfg.loss = parse_loss(j.at("loss"), cfg.n);
  if (!j.contains("set")) bad_field("set", "missing");
  cfg.set = parse_set(j.at("set"), cfg.n, *cfg.demand, csv);

  if (j.contains("horizon")) {
    cfg.horizon = integer_field(j.at("horizon"), "horizon");
  } else if (csv) {
    cfg.horizon = csv->periods;
  } else {
    bad_field("horizon", "missing");
  }
  if (cfg.horizon < 1) bad_field("horizon", "must be >= 1");
  if (auto cap_periods = cfg.demand->max_periods(); cap_periods && cfg.horizon > *cap_periods)
    bad_field("horizon", "demand data holds only " + std::to_string(*cap_periods) +
                             " periods");

  cfg.replications = static_cast<int>(
      integer_field(j.value("replications", Json(1)), "replications"));
  if (cfg.replications < 1) bad_field("replications", "must be >= 1");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0)
      bad_field("seed", "expected an integer >= 0");
    cfg.base_seed = j.at("seed").get<uint64_t>();
  }
  cfg.delta = number_field(j.value("delta", Json(0.1)), "delta");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) bad_field("delta", "must lie in (0, 1)");

  std::string fb = string_value(j, "feedback", "censored", "feedback");
  if (fb == "censored") cfg.feedback = Feedback::Censored;
  else if (fb == "full_information") cfg.feedback = Feedback::FullInformation;
  else bad_field("feedback", "expected \"censored\" or \"full_information\"");

  Json dyn = j.value("dynamic", Json{{"kind", "lost_sales"}});
  if (dyn.is_string()) dyn = Json{{"kind", dyn.get<std::string>()}};
  if (!dyn.is_object()) bad_field("dynamic", "expected an object or a string");
  check_known_keys(dyn, {"kind", "lifetime"}, "dynamic");
  std::string dk = string_value(dyn, "kind", "lost_sales", "dynamic.kind");
  if (dk == "stateless") cfg.dynamic = DynamicKind::Stateless;
  else if (dk == "backlogging") cfg.dynamic = DynamicKind::Backlogging;
  else if (dk == "lost_sales") cfg.dynamic = DynamicKind::LostSales;
  else if (dk == "perishable") cfg.dynamic = DynamicKind::Perishable;
  else bad_field("dynamic.kind", "unknown kind '" + dk + "'");
  if (dyn.contains("lifetime")) {
    cfg.perishable_lifetime =
        static_cast<int>(integer_field(dyn.at("lifetime"), "dynamic.lifetime"));
    if (cfg.perishable_lifetime < 1) bad_field("dynamic.lifetime", "must be >= 1");
  }

  cfg.policy = parse_policy(j.value("policy", Json{{"name", "maxcosd"}}), cfg.n);

  cfg.y1 = j.contains("y1") ? vec_field(j.at("y1"), "y1", cfg.n)
                            : zeros(static_cast<std::size_t>(cfg.n));
  if (cfg.policy.name == "constant") cfg.y1 = cfg.policy.level;
  if (!cfg.set.contains(cfg.y1)) bad_field("y1", "initial level lies outside the set");
  if (cfg.policy.name == "constant" && !cfg.set.contains(cfg.policy.level))
    bad_field("policy.level", "lies outside the set");

  cfg.uppd = cfg.demand->non_degeneracy();
  if (j.contains("uppd")) {
    const Json& u = j.at("uppd");
    check_known_keys(u, {"rho", "mu"}, "uppd");
    double rho = number_field(u.value("rho", Json(0.0)), "uppd.rho");
    double mu = number_field(u.value("mu", Json(0.0)), "uppd.mu");
    if (!(rho > 0.0)) bad_field("uppd.rho", "must be > 0");
    if (!(mu > 0.0 && mu <= 1.0)) bad_field("uppd.mu", "must lie in (0, 1]");
    cfg.uppd = NonDegeneracy{rho, mu};
    cfg.uppd_supplied = true;
  }

  cfg.output_dir = string_value(j, "output_dir", "", "output_dir");
  if (j.contains("write_trajectories") && !j.at("write_trajectories").is_boolean())
    bad_field("write_trajectories", "expected a boolean");
  cfg.write_trajectories = j.value("write_trajectories", false);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open config file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

namespace {

Json set_json(const FeasibleSet& set) {
  Json j;
  if (set.kind() == FeasibleSet::Kind::Box) {
    j["kind"] = "box";
    j["lower"] = set.lower();
    j["upper"] = set.upper();
  } else {
    j["kind"] = "capacity";
    j["cap"] = set.cap();
  }
  return j;
}

Json loss_json(const Loss& loss) {
  Json j;
  j["kind"] = loss.name();
  if (loss.kind() == LossKind::Newsvendor) {
    const auto& nv = static_cast<const NewsvendorLoss&>(loss);
    j["holding"] = nv.holding();
    j["penalty"] = nv.penalty();
  }
  return j;
}

Json manifest_core(const ExperimentConfig& cfg) {
  Json m;
  m["n"] = cfg.n;
  m["horizon"] = cfg.horizon;
  m["replications"] = cfg.replications;
  m["base_seed"] = cfg.base_seed;
  m["delta"] = cfg.delta;
  m["feedback"] = cfg.feedback == Feedback::Censored ? "censored" : "full_information";
  m["setting"] = cfg.setting;
  m["set"] = set_json(cfg.set);
  m["y1"] = cfg.y1;
  Json dyn;
  dyn["kind"] = cfg.dynamic == DynamicKind::Stateless      ? "stateless"
                : cfg.dynamic == DynamicKind::Backlogging  ? "backlogging"
                : cfg.dynamic == DynamicKind::LostSales    ? "lost_sales"
                                                           : "perishable";
  if (cfg.dynamic == DynamicKind::Perishable) dyn["lifetime"] = cfg.perishable_lifetime;
  m["dynamic"] = dyn;
  m["demand"] = cfg.demand->describe();
  m["loss"] = loss_json(*cfg.loss);
  m["policy"] = policy_json(cfg.policy);
  Json derived;
  derived["diameter"] = cfg.set.diameter();
  derived["gradient_bound"] = cfg.loss->gradient_bound();
  if (cfg.uppd) {
    derived["rho"] = cfg.uppd->rho;
    derived["mu"] = cfg.uppd->mu;
    derived["uppd_source"] = cfg.uppd_supplied ? "supplied" : "demand_model";
  } else {
    derived["rho"] = nullptr;
    derived["mu"] = nullptr;
    derived["uppd_source"] = "unknown";
  }
  m["derived"] = derived;
  return m;
}

std::vector<std::string> gamma_warnings(const ExperimentConfig& cfg, double gamma) {
  std::vector<std::string> w;
  if (cfg.policy.name != "constant" && cfg.uppd) {
    double limit = cfg.uppd->rho / cfg.set.diameter();
    if (gamma > limit) {
      std::ostringstream os;
      os << "gamma = " << gamma << " exceeds rho/diameter = " << limit
         << "; the small-step premise behind single-period cycles fails";
      w.push_back(os.str());
    }
  }
  return w;
}

}  // namespace

Json resolved_manifest(const ExperimentConfig& cfg) {
  Json m = manifest_core(cfg);
  m["output_dir"] = cfg.output_dir;
  m["write_trajectories"] = cfg.write_trajectories;
  Json warnings = Json::array();
  for (const std::string& w : gamma_warnings(cfg, cfg.policy.gamma)) warnings.push_back(w);
  m["warnings"] = warnings;
  return m;
}

uint64_t config_hash(const ExperimentConfig& cfg) { return hash_manifest(manifest_core(cfg)); }

namespace {

// run fn(0..count-1) across a small worker pool, rethrowing the first failure
void for_each_index(long count, int jobs, const std::function<void(long)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int n_threads = static_cast<int>(std::min<long>(jobs, count));
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

ReplicationOutcome execute_replication(const ExperimentConfig& cfg, double gamma,
                                       long horizon, int rep,
                                       const std::string& traj_path) {
  ReplicationOutcome out;
  out.seed = cfg.base_seed + static_cast<uint64_t>(rep);
  auto policy = cfg.make_policy(gamma);
  auto dyn = cfg.make_dynamic();
  auto demand = cfg.demand->clone_fresh();
  std::unique_ptr<CsvTrajectorySink> sink;
  if (!traj_path.empty()) sink = std::make_unique<CsvTrajectorySink>(traj_path, cfg.n);
  Trajectory traj = run(*policy, *dyn, *demand, *cfg.loss, cfg.set, cfg.feedback, horizon,
                        out.seed, sink.get());
  RegretReport rr = regret(traj, *cfg.loss, cfg.set);
  out.regret = rr.regret;
  out.cumulative_loss = rr.cumulative_loss;
  out.hindsight_value = rr.hindsight_value;
  out.checks = rr.checks;
  if (cfg.policy.name != "constant") {
    // per-replication ceilings that hold pathwise
    if (cfg.uppd && cfg.policy.rate == "adaptive") {
      auto bounds = theoretical_bounds(static_cast<double>(horizon),
                                       cfg.loss->gradient_bound(), cfg.set.diameter(),
                                       gamma, cfg.uppd->mu, cfg.delta);
      for (const NamedBound& b : bounds) {
        if (b.name == "adaptive_high_prob")
          out.checks.push_back({b.name, b.value, rr.regret <= b.value});
      }
    }
    if (cfg.policy.name == "osd" && cfg.policy.rate == "sqrt_t") {
      auto bounds = theoretical_bounds(static_cast<double>(horizon),
                                       cfg.loss->gradient_bound(), cfg.set.diameter(),
                                       gamma, std::nullopt, cfg.delta);
      for (const NamedBound& b : bounds) {
        if (b.name == "descent_sqrt_t")
          out.checks.push_back({b.name, b.value, rr.regret <= b.value});
      }
    }
  }
  auto [lengths, open_tail] = cycle_lengths(traj);
  out.cycle_lengths = std::move(lengths);
  out.open_tail = open_tail;
  return out;
}

Json outcome_json(const ReplicationOutcome& o) {
  Json j;
  j["seed"] = o.seed;
  j["R_T"] = o.regret;
  j["cumulative_loss"] = o.cumulative_loss;
  j["hindsight_value"] = o.hindsight_value;
  Json checks = Json::array();
  for (const BoundCheck& c : o.checks)
    checks.push_back(Json{{"name", c.name}, {"value", c.value}, {"satisfied", c.satisfied}});
  j["bound_checks"] = checks;
  return j;
}

ReplicationOutcome outcome_from_json(const Json& j) {
  ReplicationOutcome o;
  o.seed = j.at("seed").get<uint64_t>();
  o.regret = j.at("R_T").get<double>();
  o.cumulative_loss = j.value("cumulative_loss", 0.0);
  o.hindsight_value = j.value("hindsight_value", 0.0);
  for (const auto& c : j.at("bound_checks"))
    o.checks.push_back({c.at("name").get<std::string>(), c.at("value").get<double>(),
                        c.at("satisfied").get<bool>()});
  for (const auto& len : j.value("cycle_lengths", Json::array()))
    o.cycle_lengths.push_back(len.get<long>());
  o.open_tail = j.value("open_tail", 0);
  return o;
}

struct RepBatch {
  std::vector<ReplicationOutcome> outcomes;
  std::vector<bool> resumed;
};

// Run cfg.replications replications at the given gamma/horizon. When
// record_dir is nonempty, each finished replication leaves a JSON record
// there and matching records from earlier runs are reused instead of rerun.
RepBatch run_replications(const ExperimentConfig& cfg, double gamma, long horizon,
                          int jobs, bool write_traj, const std::string& record_dir,
                          uint64_t record_hash) {
  int reps = cfg.replications;
  RepBatch batch;
  batch.outcomes.resize(static_cast<std::size_t>(reps));
  batch.resumed.assign(static_cast<std::size_t>(reps), false);
  if (!record_dir.empty()) fs::create_directories(record_dir);
  for_each_index(reps, jobs, [&](long r) {
    fs::path record;
    if (!record_dir.empty()) {
      std::ostringstream name;
      name << "rep_" << std::setw(3) << std::setfill('0') << r << ".json";
      record = fs::path(record_dir) / name.str();
      if (fs::exists(record)) {
        std::ifstream in(record);
        Json j;
        try {
          j = Json::parse(in);
        } catch (const Json::parse_error&) {
          j = nullptr;  // half-written record from an interrupted run
        }
        if (j.is_object() && j.value("record_hash", "") == hex64(record_hash)) {
          batch.outcomes[static_cast<std::size_t>(r)] = outcome_from_json(j);
          batch.resumed[static_cast<std::size_t>(r)] = true;
          return;
        }
      }
    }
    std::string traj_path;
    if (write_traj) {
      std::ostringstream name;
      name << "trajectory_r" << std::setw(3) << std::setfill('0') << r << ".csv";
      traj_path = (fs::path(cfg.output_dir) / name.str()).string();
    }
    ReplicationOutcome out =
        execute_replication(cfg, gamma, horizon, static_cast<int>(r), traj_path);
    if (!record_dir.empty()) {
      Json j = outcome_json(out);
      j["cycle_lengths"] = out.cycle_lengths;
      j["open_tail"] = out.open_tail;
      j["record_hash"] = hex64(record_hash);
      write_text(record, j.dump(2) + "\n");
    }
    batch.outcomes[static_cast<std::size_t>(r)] = out;
  });
  return batch;
}

struct Aggregate {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

Aggregate aggregate_regret(const std::vector<ReplicationOutcome>& outcomes) {
  Aggregate a;
  double k = static_cast<double>(outcomes.size());
  for (const auto& o : outcomes) a.mean += o.regret;
  a.mean /= k;
  if (outcomes.size() > 1) {
    double ss = 0.0;
    for (const auto& o : outcomes) {
      double dev = o.regret - a.mean;
      ss += dev * dev;
    }
    a.stderr_mean = std::sqrt(ss / (k - 1.0) / k);
  }
  return a;
}

Json cycle_stats_json(const CycleStats& st) {
  Json j;
  j["status"] = st.status;
  j["completed"] = st.completed;
  j["open_tail"] = st.open_tail;
  if (st.status == "ok") {
    j["mean"] = st.mean;
    j["second_moment"] = st.second_moment;
    j["stderr"] = st.stderr_mean;
    j["tail_freq"] = st.tail_freq;
    Json checks = Json::array();
    for (const auto& c : st.checks)
      checks.push_back(Json{{"name", c.name},
                            {"empirical", c.empirical},
                            {"limit", c.limit},
                            {"satisfied", c.satisfied}});
    j["checks"] = checks;
  }
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs, bool write_files) {
  if (write_files && !cfg.output_dir.empty()) fs::create_directories(cfg.output_dir);
  bool want_traj = write_files && cfg.write_trajectories && !cfg.output_dir.empty();
  RepBatch batch =
      run_replications(cfg, cfg.policy.gamma, cfg.horizon, jobs, want_traj, "", 0);
  Aggregate agg = aggregate_regret(batch.outcomes);

  ExperimentResult result;
  result.replications = batch.outcomes;
  result.mean_regret = agg.mean;
  result.stderr_regret = agg.stderr_mean;

  Json per_rep = Json::array();
  for (const auto& o : batch.outcomes) per_rep.push_back(outcome_json(o));

  Json aggregate;
  aggregate["mean"] = agg.mean;
  aggregate["stderr"] = agg.stderr_mean;
  Json agg_checks = Json::array();
  if (cfg.policy.name != "constant" && cfg.uppd && cfg.policy.rate == "adaptive") {
    auto bounds = theoretical_bounds(static_cast<double>(cfg.horizon),
                                     cfg.loss->gradient_bound(), cfg.set.diameter(),
                                     cfg.policy.gamma, cfg.uppd->mu, cfg.delta);
    for (const NamedBound& b : bounds) {
      if (b.name == "adaptive_expected")
        agg_checks.push_back(Json{
            {"name", b.name}, {"value", b.value}, {"satisfied", agg.mean <= b.value}});
    }
  }
  aggregate["checks"] = agg_checks;

  std::vector<long> pooled;
  int pooled_tail = 0;
  for (const auto& o : batch.outcomes) {
    pooled.insert(pooled.end(), o.cycle_lengths.begin(), o.cycle_lengths.end());
    pooled_tail += o.open_tail;
  }
  std::optional<double> mu;
  if (cfg.uppd) mu = cfg.uppd->mu;
  CycleStats pooled_stats = cycle_stats_from_lengths(std::move(pooled), pooled_tail, mu);

  Json summary;
  summary["config_hash"] = hex64(config_hash(cfg));
  summary["per_replication"] = per_rep;
  summary["aggregate"] = aggregate;
  summary["cycle_stats"] = cycle_stats_json(pooled_stats);
  summary["manifest"] = resolved_manifest(cfg);
  result.summary = summary;

  if (write_files && !cfg.output_dir.empty()) {
    write_text(fs::path(cfg.output_dir) / "summary.json", summary.dump(2) + "\n");
    write_text(fs::path(cfg.output_dir) / "manifest.json",
               resolved_manifest(cfg).dump(2) + "\n");
  }
  return result;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("log grid needs 0 < lo <= hi");
  if (points < 1) throw ConfigError("log grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(points));
  if (points == 1) {
    grid[0] = lo;
    return grid;
  }
  double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] =
        std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(points - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

SweepResult sweep_gamma(const ExperimentConfig& cfg, const std::vector<double>& grid,
                        int jobs) {
  if (grid.empty()) throw ConfigError("gamma sweep needs a nonempty grid");
  for (double g : grid)
    if (!(g > 0.0)) throw ConfigError("gamma grid values must be > 0");
  if (cfg.policy.name == "constant")
    throw ConfigError("gamma sweep needs a gradient-based policy");
  SweepResult result;
  Json cells = Json::array();
  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    double gamma = grid[ci];
    Json cell_manifest = manifest_core(cfg);
    cell_manifest["policy"]["gamma"] = gamma;
    uint64_t cell_hash = hash_manifest(cell_manifest);
    std::string record_dir;
    if (!cfg.output_dir.empty()) {
      std::ostringstream name;
      name << "cell_" << std::setw(3) << std::setfill('0') << ci;
      record_dir = (fs::path(cfg.output_dir) / name.str()).string();
    }
    RepBatch batch =
        run_replications(cfg, gamma, cfg.horizon, jobs, false, record_dir, cell_hash);
    Aggregate agg = aggregate_regret(batch.outcomes);
    bool all_resumed = !batch.resumed.empty();
    for (bool r : batch.resumed) all_resumed = all_resumed && r;
    result.cells.push_back({gamma, agg.mean, agg.stderr_mean, all_resumed});
    Json cell;
    cell["gamma"] = gamma;
    cell["mean"] = agg.mean;
    cell["stderr"] = agg.stderr_mean;
    Json per_rep = Json::array();
    for (const auto& o : batch.outcomes) per_rep.push_back(outcome_json(o));
    cell["per_replication"] = per_rep;
    cells.push_back(cell);
  }
  Json summary;
  summary["config_hash"] = hex64(config_hash(cfg));
  summary["grid"] = grid;
  summary["cells"] = cells;
  summary["manifest"] = resolved_manifest(cfg);
  result.summary = summary;
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    write_text(fs::path(cfg.output_dir) / "sweep.json", summary.dump(2) + "\n");
    std::ostringstream csv;
    csv << "gamma,mean_regret,stderr\n";
    csv.precision(17);
    for (const SweepCell& c : result.cells)
      csv << c.gamma << "," << c.mean_regret << "," << c.stderr_regret << "\n";
    write_text(fs::path(cfg.output_dir) / "sweep.csv", csv.str());
    write_text(fs::path(cfg.output_dir) / "sweep.svg", sweep_svg(result.cells));
  }
  return result;
}

FitResult growth_fit(const ExperimentConfig& cfg, const std::vector<long>& horizons,
                     int jobs) {
  if (horizons.size() < 2) throw ConfigError("growth fit needs at least two horizons");
  std::vector<long> hs = horizons;
  std::sort(hs.begin(), hs.end());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
  for (long h : hs) {
    if (h < 1) throw ConfigError("growth fit horizons must be >= 1");
    if (auto cap = cfg.demand->max_periods(); cap && h > *cap)
      throw ConfigError("growth fit horizon " + std::to_string(h) +
                        " exceeds the demand data (" + std::to_string(*cap) + " periods)");
  }
  FitResult result;
  for (long h : hs) {
    RepBatch batch = run_replications(cfg, cfg.policy.gamma, h, jobs, false, "", 0);
    Aggregate agg = aggregate_regret(batch.outcomes);
    result.points.push_back({h, agg.mean, agg.stderr_mean});
  }
  std::vector<double> lx, ly;
  for (const FitPoint& p : result.points) {
    if (p.mean_regret > 0.0) {
      lx.push_back(std::log(static_cast<double>(p.horizon)));
      ly.push_back(std::log(p.mean_regret));
    } else {
      result.excluded.push_back(p.horizon);
    }
  }
  if (lx.size() < 2)
    throw ConfigError("growth fit has fewer than two horizons with positive mean regret");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw ConfigError("growth fit horizons are not distinct");
  result.slope = sxy / sxx;
  result.intercept = my - result.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double r = ly[i] - (result.intercept + result.slope * lx[i]);
    ss += r * r;
  }
  result.residual = std::sqrt(ss / static_cast<double>(lx.size()));

  Json report;
  report["config_hash"] = hex64(config_hash(cfg));
  report["slope"] = result.slope;
  report["intercept"] = result.intercept;
  report["residual"] = result.residual;
  Json points = Json::array();
  for (const FitPoint& p : result.points)
    points.push_back(Json{{"horizon", p.horizon},
                          {"mean_regret", p.mean_regret},
                          {"stderr", p.stderr_regret}});
  report["points"] = points;
  report["excluded"] = result.excluded;
  Json warnings = Json::array();
  if (!result.excluded.empty())
    warnings.push_back("horizons with nonpositive mean regret were excluded from the fit");
  report["warnings"] = warnings;
  report["manifest"] = resolved_manifest(cfg);
  result.report = report;
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    write_text(fs::path(cfg.output_dir) / "fit.json", report.dump(2) + "\n");
  }
  return result;
}

std::string sweep_svg(const std::vector<SweepCell>& cells) {
  const double width = 640, height = 420;
  const double ml = 70, mr = 20, mt = 20, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const SweepCell& c : cells) {
    double lo = std::max(c.mean_regret - c.stderr_regret, 1e-12);
    double hi = std::max(c.mean_regret + c.stderr_regret, 1e-12);
    xmin = std::min(xmin, c.gamma);
    xmax = std::max(xmax, c.gamma);
    ymin = std::min(ymin, std::log10(lo));
    ymax = std::max(ymax, std::log10(hi));
  }
  if (cells.empty()) {
    xmin = xmax = 1.0;
    ymin = ymax = 0.0;
  }
  double lxmin = std::log10(xmin), lxmax = std::log10(xmax);
  if (lxmax - lxmin < 1e-9) lxmax = lxmin + 1.0;
  if (ymax - ymin < 1e-9) ymax = ymin + 1.0;
  auto px = [&](double gamma) {
    return ml + (std::log10(gamma) - lxmin) / (lxmax - lxmin) * (width - ml - mr);
  };
  auto py = [&](double value) {
    double lv = std::log10(std::max(value, 1e-12));
    return height - mb - (lv - ymin) / (ymax - ymin) * (height - mt - mb);
  };
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
     << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
     << height - mb << "\" stroke=\"black\"/>\n";
  // decade ticks
  for (int e = static_cast<int>(std::floor(lxmin)); e <= static_cast<int>(std::ceil(lxmax));
       ++e) {
    double g = std::pow(10.0, e);
    if (g < xmin * 0.999 || g > xmax * 1.001) continue;
    double x = px(g);
    os << "<line x1=\"" << x << "\" y1=\"" << height - mb << "\" x2=\"" << x << "\" y2=\""
       << height - mb + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x << "\" y=\"" << height - mb + 20
       << "\" font-size=\"11\" text-anchor=\"middle\">1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::floor(ymin)); e <= static_cast<int>(std::ceil(ymax));
       ++e) {
    if (e < ymin - 0.001 || e > ymax + 0.001) continue;
    double y = py(std::pow(10.0, e));
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
       << "\" font-size=\"11\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
     << "\" font-size=\"13\" text-anchor=\"middle\">gamma</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
     << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (mt + height - mb) / 2 << ")\">mean regret</text>\n";
  // error bars
  for (const SweepCell& c : cells) {
    double x = px(c.gamma);
    double ylo = py(std::max(c.mean_regret - c.stderr_regret, 1e-12));
    double yhi = py(std::max(c.mean_regret + c.stderr_regret, 1e-12));
    os << "<line x1=\"" << x << "\" y1=\"" << ylo << "\" x2=\"" << x << "\" y2=\"" << yhi
       << "\" stroke=\"#888\"/>\n";
  }
  // mean curve
  os << "<polyline fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"1.5\" points=\"";
  for (const SweepCell& c : cells) os << px(c.gamma) << "," << py(c.mean_regret) << " ";
  os << "\"/>\n";
  for (const SweepCell& c : cells)
    os << "<circle cx=\"" << px(c.gamma) << "\" cy=\"" << py(c.mean_regret)
       << "\" r=\"2.5\" fill=\"#1f6feb\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace oio
