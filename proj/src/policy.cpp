#include "oio/policy.hpp"

#include <cmath>

#include "oio/errors.hpp"

namespace oio {

double adaptive_eta(const CycleState& cs, double gamma, double diameter) {
  double denom_sq = norm_sq(cs.within_sum) + cs.past_norms_sq;
  if (denom_sq <= 0.0) return 0.0;
  return gamma * diameter / std::sqrt(denom_sq);
}

namespace {

class SqrtSchedule final : public LearningRate {
 public:
  SqrtSchedule(double gamma, double diameter, double gradient_bound)
      : gamma_(gamma), d_(diameter), g_(gradient_bound) {
    if (!(gamma > 0.0)) throw ConfigError("rate parameter gamma must be > 0");
    if (!(gradient_bound > 0.0))
      throw ConfigError("sqrt-t schedule needs a positive gradient bound");
  }
  double eta(const CycleState&, int t) const override {
    return gamma_ * d_ / (g_ * std::sqrt(static_cast<double>(t)));
  }
  std::string describe() const override { return "sqrt_t"; }
  std::unique_ptr<LearningRate> clone() const override {
    return std::make_unique<SqrtSchedule>(gamma_, d_, g_);
  }

 private:
  double gamma_, d_, g_;
};

class AdaptiveRate final : public LearningRate {
 public:
  AdaptiveRate(double gamma, double diameter) : gamma_(gamma), d_(diameter) {
    if (!(gamma > 0.0)) throw ConfigError("rate parameter gamma must be > 0");
  }
  double eta(const CycleState& cs, int) const override {
    return adaptive_eta(cs, gamma_, d_);
  }
  std::string describe() const override { return "adaptive"; }
  std::unique_ptr<LearningRate> clone() const override {
    return std::make_unique<AdaptiveRate>(gamma_, d_);
  }

 private:
  double gamma_, d_;
};

class EveryPeriodStrategy final : public UpdateStrategy {
 public:
  bool triggers(int, const Vec&, const Vec&) const override { return true; }
  std::string name() const override { return "every_period"; }
  std::unique_ptr<UpdateStrategy> clone() const override {
    return std::make_unique<EveryPeriodStrategy>();
  }
};

class MinibatchStrategy final : public UpdateStrategy {
 public:
  explicit MinibatchStrategy(int tau) : tau_(tau) {
    if (tau < 1) throw ConfigError("minibatch cycle length must be >= 1");
  }
  bool triggers(int next_period, const Vec&, const Vec&) const override {
    return (next_period - 1) % tau_ == 0;
  }
  std::string name() const override { return "minibatch"; }
  std::unique_ptr<UpdateStrategy> clone() const override {
    return std::make_unique<MinibatchStrategy>(tau_);
  }

 private:
  int tau_;
};

class CleanupStrategy final : public UpdateStrategy {
 public:
  bool triggers(int, const Vec& x_next, const Vec&) const override {
    for (double v : x_next)
      if (v > 0.0) return false;
    return true;
  }
  std::string name() const override { return "cleanup"; }
  std::unique_ptr<UpdateStrategy> clone() const override {
    return std::make_unique<CleanupStrategy>();
  }
};

class FeasibilityStrategy final : public UpdateStrategy {
 public:
  bool triggers(int, const Vec& x_next, const Vec& candidate) const override {
    return dominated_by(x_next, candidate);
  }
  std::string name() const override { return "feasibility"; }
  std::unique_ptr<UpdateStrategy> clone() const override {
    return std::make_unique<FeasibilityStrategy>();
  }
};

Vec descend(const FeasibleSet& set, const Vec& anchor, double eta, const Vec& g_sum) {
  Vec v(anchor.size());
  for (std::size_t i = 0; i < anchor.size(); ++i) v[i] = anchor[i] - eta * g_sum[i];
  return set.project(v);
}

void start_cycle(CycleState& cs, const Vec& committed, int next_period) {
  cs.past_norms_sq += norm_sq(cs.within_sum);
  cs.within_sum = zeros(cs.within_sum.size());
  cs.anchor = committed;
  cs.cycle_start = next_period;
  cs.cycle += 1;
}

void accumulate(CycleState& cs, const Vec& g) {
  for (std::size_t i = 0; i < g.size(); ++i) cs.within_sum[i] += g[i];
}

}  // namespace

std::unique_ptr<LearningRate> make_sqrt_schedule(double gamma, double diameter,
                                                 double gradient_bound) {
  return std::make_unique<SqrtSchedule>(gamma, diameter, gradient_bound);
}

std::unique_ptr<LearningRate> make_adaptive_rate(double gamma, double diameter) {
  return std::make_unique<AdaptiveRate>(gamma, diameter);
}

std::unique_ptr<UpdateStrategy> make_every_period() {
  return std::make_unique<EveryPeriodStrategy>();
}

std::unique_ptr<UpdateStrategy> make_minibatch(int tau) {
  return std::make_unique<MinibatchStrategy>(tau);
}

std::unique_ptr<UpdateStrategy> make_cleanup_trigger() {
  return std::make_unique<CleanupStrategy>();
}

std::unique_ptr<UpdateStrategy> make_feasibility_trigger() {
  return std::make_unique<FeasibilityStrategy>();
}

OsdPolicy::OsdPolicy(FeasibleSet set, Vec y1, std::unique_ptr<LearningRate> rate,
                     bool clamp_to_state)
    : set_(std::move(set)), y_(std::move(y1)), rate_(std::move(rate)), clamp_(clamp_to_state) {
  if (!set_.contains(y_)) throw ConfigError("initial level lies outside the feasible set");
  cs_.anchor = y_;
  cs_.within_sum = zeros(y_.size());
}

void OsdPolicy::observe(const Vec& g, const Vec& x_next) {
  if (g.size() != y_.size()) throw ConfigError("subgradient has wrong dimension");
  accumulate(cs_, g);
  double eta = rate_->eta(cs_, t_);
  Vec next = descend(set_, cs_.anchor, eta, cs_.within_sum);
  if (clamp_) next = cwise_max(next, x_next);
  start_cycle(cs_, next, t_ + 1);
  y_ = std::move(next);
  ++t_;
}

CosdPolicy::CosdPolicy(FeasibleSet set, Vec y1, std::unique_ptr<UpdateStrategy> strategy,
                       std::unique_ptr<LearningRate> rate)
    : set_(std::move(set)),
      y_(std::move(y1)),
      strategy_(std::move(strategy)),
      rate_(std::move(rate)) {
  if (!set_.contains(y_)) throw ConfigError("initial level lies outside the feasible set");
  cs_.anchor = y_;
  cs_.within_sum = zeros(y_.size());
}

std::string CosdPolicy::name() const {
  return strategy_->name() == "feasibility" ? "maxcosd" : "cosd_" + strategy_->name();
}

void CosdPolicy::observe(const Vec& g, const Vec& x_next) {
  if (g.size() != y_.size()) throw ConfigError("subgradient has wrong dimension");
  accumulate(cs_, g);
  double eta = rate_->eta(cs_, t_);
  Vec candidate = descend(set_, cs_.anchor, eta, cs_.within_sum);
  if (strategy_->triggers(t_ + 1, x_next, candidate)) {
    start_cycle(cs_, candidate, t_ + 1);
    y_ = std::move(candidate);
  }
  ++t_;
}

ConstantPolicy::ConstantPolicy(Vec level) : level_(std::move(level)) {
  if (level_.empty()) throw ConfigError("constant policy needs a nonempty level");
  for (double v : level_)
    if (!(v >= 0.0)) throw ConfigError("constant policy level must be >= 0");
}

void ConstantPolicy::observe(const Vec&, const Vec& x_next) {
  if (!dominated_by(x_next, level_))
    throw FeasibilityViolation(t_ + 1, level_, x_next);
  ++t_;
}

std::unique_ptr<Policy> make_maxcosd(const FeasibleSet& set, Vec y1, double gamma) {
  return std::make_unique<CosdPolicy>(set, std::move(y1), make_feasibility_trigger(),
                                      make_adaptive_rate(gamma, set.diameter()));
}

std::unique_ptr<Policy> make_osd(const FeasibleSet& set, Vec y1, double gamma,
                                 double gradient_bound, bool clamp_to_state) {
  return std::make_unique<OsdPolicy>(
      set, std::move(y1), make_sqrt_schedule(gamma, set.diameter(), gradient_bound),
      clamp_to_state);
}

}  // namespace oio
