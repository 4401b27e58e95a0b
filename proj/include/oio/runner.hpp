#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oio/demand.hpp"
#include "oio/dynamics.hpp"
#include "oio/feasible_set.hpp"
#include "oio/loss.hpp"
#include "oio/policy.hpp"
#include "oio/simulator.hpp"

namespace oio {

using Json = nlohmann::json;

struct PolicyConfig {
  std::string name;         // "maxcosd", "cosd", "osd", "constant"
  double gamma = 1.0;       // maxcosd / cosd / osd
  std::string rate;         // cosd/osd: "adaptive" or "sqrt_t"
  std::string strategy;     // cosd: "every_period", "minibatch", "cleanup", "feasibility"
  int tau = 1;              // minibatch cycle length
  bool clamp_to_state = false;  // osd: lift proposals onto the reachable set
  Vec level;                // constant policy
};

// Fully resolved experiment description. Demand/dynamic/loss prototypes are
// cloned fresh for every replication.
struct ExperimentConfig {
  int n = 1;
  long horizon = 0;
  int replications = 1;
  uint64_t base_seed = 1;
  double delta = 0.1;  // failure probability of the high-probability ceiling
  Feedback feedback = Feedback::Censored;
  int setting = 0;  // preset id when built from one, 0 otherwise
  FeasibleSet set = FeasibleSet::box({0.0}, {1.0});
  Vec y1;
  DynamicKind dynamic = DynamicKind::LostSales;
  int perishable_lifetime = 2;
  std::unique_ptr<DemandSource> demand;
  std::unique_ptr<Loss> loss;
  PolicyConfig policy;
  std::optional<NonDegeneracy> uppd;  // from the source, or supplied explicitly
  bool uppd_supplied = false;
  std::string output_dir;
  bool write_trajectories = false;
  Json raw;  // config as given

  std::unique_ptr<Policy> make_policy() const;
  std::unique_ptr<Policy> make_policy(double gamma_override) const;
  std::unique_ptr<Dynamic> make_dynamic() const;
  double diameter() const { return set.diameter(); }
  double gradient_bound() const { return loss->gradient_bound(); }
};

// Parse a config object; unknown "setting" ids, missing fields and malformed
// values raise ConfigError naming the offending field.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

// preset problem blocks; overrides are merged on top before resolution
Json setting_preset(int id, const Json& overrides);

// resolved parameters echoed into summaries: n, horizon, policy, derived
// diameter / gradient bound / non-degeneracy, warnings
Json resolved_manifest(const ExperimentConfig& cfg);
uint64_t config_hash(const ExperimentConfig& cfg);

struct ReplicationOutcome {
  uint64_t seed = 0;
  double regret = 0.0;
  double cumulative_loss = 0.0;
  double hindsight_value = 0.0;
  std::vector<BoundCheck> checks;
  std::vector<long> cycle_lengths;
  int open_tail = 0;
};

struct ExperimentResult {
  Json summary;
  std::vector<ReplicationOutcome> replications;
  double mean_regret = 0.0;
  double stderr_regret = 0.0;
};

// Run all replications (optionally across worker threads), aggregate regret,
// attach bound checks and pooled cycle statistics, and write summary.json /
// manifest.json (plus per-replication trajectory CSVs when configured) under
// cfg.output_dir when write_files is set.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1,
                                bool write_files = true);

std::vector<double> log_grid(double lo, double hi, int points);

struct SweepCell {
  double gamma;
  double mean_regret;
  double stderr_regret;
  bool resumed;  // every replication was recovered from a previous run
};

struct SweepResult {
  std::vector<SweepCell> cells;
  Json summary;
};

// Regret-vs-gamma sweep over a shared demand panel (same seeds per cell).
// Completed (gamma, replication) cells found under output_dir are reused, so
// interrupted sweeps resume. Writes sweep.csv, sweep.svg and sweep.json.
SweepResult sweep_gamma(const ExperimentConfig& cfg, const std::vector<double>& grid,
                        int jobs);

struct FitPoint {
  long horizon;
  double mean_regret;
  double stderr_regret;
};

struct FitResult {
  double slope = 0.0;       // d log mean-regret / d log T
  double intercept = 0.0;
  double residual = 0.0;    // RMS residual of the log-log fit
  std::vector<FitPoint> points;
  std::vector<long> excluded;  // horizons dropped for nonpositive mean regret
  Json report;
};

// Least-squares slope of log mean-regret against log horizon; horizons with
// nonpositive mean regret are excluded with a warning (at least two positive
// points are required).
FitResult growth_fit(const ExperimentConfig& cfg, const std::vector<long>& horizons,
                     int jobs);

// minimal standalone plot of a sweep table (log-log, error bars)
std::string sweep_svg(const std::vector<SweepCell>& cells);

}  // namespace oio
