#pragma once

#include <functional>
#include <memory>
#include <string>

#include "oio/feasible_set.hpp"
#include "oio/vec.hpp"

namespace oio {

// Bookkeeping for one update cycle: k is 1-based, cycle_start is the period
// the cycle began, anchor is the level committed at that period, within_sum
// accumulates the cycle's subgradients, past_norms_sq holds the squared norms
// of the completed cycles' gradient sums.
struct CycleState {
  int cycle = 1;
  int cycle_start = 1;
  Vec anchor;
  Vec within_sum;
  double past_norms_sq = 0.0;
};

// eta = gamma * diameter / sqrt(|within_sum|^2 + past_norms_sq); 0 when the
// denominator vanishes (the candidate then stays at the anchor)
double adaptive_eta(const CycleState& cs, double gamma, double diameter);

class LearningRate {
 public:
  virtual ~LearningRate() = default;
  virtual double eta(const CycleState& cs, int t) const = 0;
  virtual std::string describe() const = 0;
  virtual std::unique_ptr<LearningRate> clone() const = 0;
};

// eta_t = gamma * D / (G * sqrt(t)), the classical decreasing schedule
std::unique_ptr<LearningRate> make_sqrt_schedule(double gamma, double diameter,
                                                 double gradient_bound);
std::unique_ptr<LearningRate> make_adaptive_rate(double gamma, double diameter);

// Decides whether period next_period starts a new cycle, given the observed
// next state and the candidate level the update would commit.
class UpdateStrategy {
 public:
  virtual ~UpdateStrategy() = default;
  virtual bool triggers(int next_period, const Vec& x_next, const Vec& candidate) const = 0;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<UpdateStrategy> clone() const = 0;
};

std::unique_ptr<UpdateStrategy> make_every_period();
// cycles of fixed length tau >= 1
std::unique_ptr<UpdateStrategy> make_minibatch(int tau);
// update when the next state is componentwise zero (or below)
std::unique_ptr<UpdateStrategy> make_cleanup_trigger();
// update when the candidate level is reachable from the next state (exact
// componentwise comparison, no tolerance)
std::unique_ptr<UpdateStrategy> make_feasibility_trigger();

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  // level for the current period
  virtual const Vec& propose() const = 0;
  // subgradient of the current period and the environment's next state
  virtual void observe(const Vec& g, const Vec& x_next) = 0;
  // 1-based index of the cycle containing the current period
  virtual int cycle_index() const = 0;
  // whether the current period began a cycle (a freshly committed level)
  virtual bool at_update_period() const = 0;
  virtual bool deterministic() const { return true; }
};

// Projected subgradient descent, updating every period. With clamp_to_state
// the descent step is lifted to max(step, x_{t+1}) componentwise, keeping the
// proposal reachable; exact for box sets.
class OsdPolicy final : public Policy {
 public:
  OsdPolicy(FeasibleSet set, Vec y1, std::unique_ptr<LearningRate> rate,
            bool clamp_to_state = false);
  std::string name() const override { return "osd"; }
  const Vec& propose() const override { return y_; }
  void observe(const Vec& g, const Vec& x_next) override;
  int cycle_index() const override { return t_; }
  bool at_update_period() const override { return true; }

 private:
  FeasibleSet set_;
  Vec y_;
  int t_ = 1;
  std::unique_ptr<LearningRate> rate_;
  bool clamp_;
  CycleState cs_;
};

// Cyclic updates: between update periods the level is held and subgradients
// accumulate; at an update period the candidate
//   project(anchor - eta * within_sum)
// is committed and a new cycle begins. The feasibility trigger makes the
// commit conditional on the observed state, so a rejected candidate keeps the
// cycle open.
class CosdPolicy final : public Policy {
 public:
  CosdPolicy(FeasibleSet set, Vec y1, std::unique_ptr<UpdateStrategy> strategy,
             std::unique_ptr<LearningRate> rate);
  std::string name() const override;
  const Vec& propose() const override { return y_; }
  void observe(const Vec& g, const Vec& x_next) override;
  int cycle_index() const override { return cs_.cycle; }
  bool at_update_period() const override { return t_ == cs_.cycle_start; }

 private:
  FeasibleSet set_;
  Vec y_;
  int t_ = 1;
  std::unique_ptr<UpdateStrategy> strategy_;
  std::unique_ptr<LearningRate> rate_;
  CycleState cs_;
};

// orders up to a fixed level every period (level = 0 gives the never-order policy)
class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(Vec level);
  std::string name() const override { return "constant"; }
  const Vec& propose() const override { return level_; }
  void observe(const Vec& g, const Vec& x_next) override;
  int cycle_index() const override { return t_; }
  bool at_update_period() const override { return true; }

 private:
  Vec level_;
  int t_ = 1;
};

// feasibility-triggered cyclic descent with the adaptive rate
std::unique_ptr<Policy> make_maxcosd(const FeasibleSet& set, Vec y1, double gamma);
std::unique_ptr<Policy> make_osd(const FeasibleSet& set, Vec y1, double gamma,
                                 double gradient_bound, bool clamp_to_state = false);

}  // namespace oio
