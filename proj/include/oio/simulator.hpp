#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oio/demand.hpp"
#include "oio/dynamics.hpp"
#include "oio/feasible_set.hpp"
#include "oio/loss.hpp"
#include "oio/policy.hpp"
#include "oio/vec.hpp"

namespace oio {

enum class Feedback { Censored, FullInformation };

// Row-major per-period records of one run.
class Trajectory {
 public:
  Trajectory(int n, long horizon_hint = 0);

  int products() const { return n_; }
  long periods() const { return static_cast<long>(loss_.size()); }

  double x(long t, int i) const { return x_[idx(t, i)]; }   // t is 1-based
  double y(long t, int i) const { return y_[idx(t, i)]; }
  double d(long t, int i) const { return d_[idx(t, i)]; }
  double s(long t, int i) const { return s_[idx(t, i)]; }
  double g(long t, int i) const { return g_[idx(t, i)]; }
  double loss(long t) const { return loss_[static_cast<std::size_t>(t - 1)]; }
  int cycle(long t) const { return cycle_[static_cast<std::size_t>(t - 1)]; }
  bool updated(long t) const { return updated_[static_cast<std::size_t>(t - 1)] != 0; }

  Vec y_row(long t) const;
  Vec x_row(long t) const;
  std::vector<Vec> demand_rows() const;
  double total_loss() const;

  void append(const Vec& x, const Vec& y, const Vec& d, const Vec& s, const Vec& g,
              double loss, int cycle, bool updated);

  uint64_t seed = 0;

 private:
  std::size_t idx(long t, int i) const {
    return static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(i);
  }
  int n_;
  std::vector<double> x_, y_, d_, s_, g_;
  std::vector<double> loss_;
  std::vector<int> cycle_;
  std::vector<uint8_t> updated_;
};

// Streaming hook invoked after each period is appended.
class TrajectorySink {
 public:
  virtual ~TrajectorySink() = default;
  virtual void on_period(const Trajectory& traj, long t) = 0;
};

// writes "t,x0..,y0..,d0..,s0..,g0..,loss,cycle_k,updated" rows as they occur
class CsvTrajectorySink final : public TrajectorySink {
 public:
  explicit CsvTrajectorySink(const std::string& path, int n);
  ~CsvTrajectorySink() override;
  void on_period(const Trajectory& traj, long t) override;

 private:
  struct Impl;
  Impl* impl_;
};

// One full protocol run: x_1 = 0; each period checks y >= x exactly, plays the
// policy level, draws demand, evaluates loss and feedback, advances the
// carry-over rule. Throws FeasibilityViolation / EndOfData on contract breaks.
Trajectory run(Policy& policy, Dynamic& dynamic, DemandSource& demand, const Loss& loss,
               const FeasibleSet& set, Feedback feedback, long horizon, uint64_t seed,
               TrajectorySink* sink = nullptr);

struct Hindsight {
  Vec y;
  double value;  // cumulative loss of the fixed level y
};

// best fixed order-up-to level for the realized demand sequence
Hindsight hindsight_best(const std::vector<Vec>& demands, const Loss& loss,
                         const FeasibleSet& set);

// per-product smallest empirical p/(h+p)-quantile, clamped to the box
Vec hindsight_box_quantile(const std::vector<Vec>& demands, const NewsvendorLoss& loss,
                           const Vec& lower, const Vec& upper);

// projected subgradient on the mean cost with suffix averaging; used for
// capacity sets, cross-checked against the quantile solution when slack
Hindsight hindsight_subgradient(const std::vector<Vec>& demands, const Loss& loss,
                                const FeasibleSet& set);

struct BoundCheck {
  std::string name;
  double value;
  bool satisfied;
};

struct RegretReport {
  double regret;
  double cumulative_loss;
  Vec hindsight_y;
  double hindsight_value;
  std::vector<BoundCheck> checks;  // always includes the coarse D*G*T ceiling
};

RegretReport regret(const Trajectory& traj, const Loss& loss, const FeasibleSet& set);

struct NamedBound {
  std::string name;
  double value;
};

// Closed-form regret ceilings for the algorithm family:
//   adaptive_expected   sqrt(2) G D (1/(2 gamma) + gamma + 1) sqrt(T) / mu
//   adaptive_high_prob  G D (1/(2 gamma) + gamma + 1) (1 + log(T/delta)/mu) sqrt(T)
//   descent_sqrt_t      (1 + 2 gamma) / (2 gamma) * G D sqrt(T)
//   coarse_ceiling      D G T
// mu-dependent entries are emitted only when mu is supplied.
std::vector<NamedBound> theoretical_bounds(double horizon, double gradient_bound,
                                           double diameter, double gamma,
                                           std::optional<double> mu, double delta);

struct CycleStats {
  std::string status;  // "ok", "insufficient_data"
  int completed = 0;
  int open_tail = 0;  // periods of the unfinished final cycle
  std::vector<long> lengths;
  double mean = 0.0;
  double second_moment = 0.0;
  double stderr_mean = 0.0;
  std::vector<double> tail_freq;  // tail_freq[m-1] = fraction of cycles longer than m
  struct Check {
    std::string name;
    double empirical;
    double limit;
    bool satisfied;
  };
  std::vector<Check> checks;
};

// Cycle-length distribution with geometric-tail compliance flags when mu is
// known; fewer than 30 completed cycles yields status "insufficient_data"
// without flags. Flags allow 3-sigma statistical slack.
CycleStats cycle_stats(const Trajectory& traj, std::optional<double> mu, double c_mu = 1.0,
                       int tail_max = 8);

// same statistics over an explicit pool of completed cycle lengths
CycleStats cycle_stats_from_lengths(std::vector<long> lengths, int open_tail,
                                    std::optional<double> mu, double c_mu = 1.0,
                                    int tail_max = 8);

// completed cycle lengths of a trajectory (gaps between update periods) and
// the length of the unfinished final cycle
std::pair<std::vector<long>, int> cycle_lengths(const Trajectory& traj);

struct AuditResult {
  bool pass;
  long period = 0;  // first failing period when !pass
  Vec y, x;
};

// recheck y_t >= x_t componentwise (exact) over a stored trajectory
AuditResult feasibility_audit(const Trajectory& traj);

}  // namespace oio
