#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oio/loss.hpp"
#include "oio/vec.hpp"

namespace oio {

class FeasibleSet;
class Policy;

// Uniform lower bound on the probability that all products see demand >= rho,
// conditionally on any history.
struct NonDegeneracy {
  double rho;
  double mu;
};

class DemandSource {
 public:
  virtual ~DemandSource() = default;
  virtual int dim() const = 0;
  // restart the stream; must be called before the first next()
  virtual void reset(uint64_t seed) = 0;
  // demand vector for the next period, componentwise >= 0;
  // throws EndOfData when a finite source is exhausted
  virtual Vec next() = 0;
  virtual std::optional<NonDegeneracy> non_degeneracy() const { return std::nullopt; }
  // number of periods available, when finite
  virtual std::optional<long> max_periods() const { return std::nullopt; }
  virtual std::string describe() const = 0;
  virtual std::unique_ptr<DemandSource> clone_fresh() const = 0;
};

// fixed sequence of rows; repeats cyclically when repeat = true
std::unique_ptr<DemandSource> make_deterministic(std::vector<Vec> rows, bool repeat);
// constant demand every period
std::unique_ptr<DemandSource> make_constant(Vec level);
// independent Poisson per product
std::unique_ptr<DemandSource> make_poisson(Vec intensities);
// Poisson with intensities drawn once from Uniform[lo, hi] using meta_seed
std::unique_ptr<DemandSource> make_uniform_intensity_poisson(int n, double lo, double hi,
                                                             uint64_t meta_seed);
// d_{t,i} = max(0, mean_i + phi (d_{t-1,i} - mean_i) + sigma eps), eps ~ N(0,1)
std::unique_ptr<DemandSource> make_clipped_ar1(Vec mean, double phi, double sigma);

// expose the materialized intensities of a uniform-intensity source
const Vec* poisson_intensities(const DemandSource& src);

struct CsvDataset {
  std::vector<Vec> rows;  // rows[t][i], t = 0..periods-1
  int products = 0;
  long periods = 0;
};

// comma-separated, one row per period, one column per product, optional header
// (detected by a non-numeric first cell); values must be >= 0 and finite
CsvDataset load_csv(const std::string& path);
std::unique_ptr<DemandSource> make_csv_source(CsvDataset data);

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

// Replay-based worst case for a deterministic single-product policy under
// lost-sales carry-over: probe with constant demand; if the policy never
// orders above zero the probe sequence itself is returned, otherwise the
// probe runs until the first positive order level and zeros follow.
std::vector<Vec> adversary_replay_sequence(const PolicyFactory& make_policy,
                                           const FeasibleSet& set, const Loss& loss,
                                           double probe, long horizon);

struct DecayingConstruction {
  std::unique_ptr<DemandSource> demand;  // d_t = ratio * y1 * 2^-t, single product
  std::unique_ptr<Loss> loss;            // linear
  double regret_rate;                    // per-period lower bound y1 * (1 - ratio)
};

// Geometrically vanishing demand against a unit first order; cumulative demand
// stays below ratio * y1 while a fixed-level comparator pays nothing.
DecayingConstruction adversary_decaying_demand(double y1, double ratio);

}  // namespace oio
