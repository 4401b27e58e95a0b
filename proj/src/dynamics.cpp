#include "oio/dynamics.hpp"

#include <algorithm>

#include "oio/errors.hpp"

namespace oio {

namespace {

void check_step_inputs(const Vec& y, const Vec& d, const Vec& onhand, int n, int period) {
  if (static_cast<int>(y.size()) != n || static_cast<int>(d.size()) != n)
    throw ConfigError("dynamic step input has wrong dimension");
  for (int i = 0; i < n; ++i)
    if (!(d[i] >= 0.0)) throw ConfigError("demand must be >= 0");
  if (!dominated_by(onhand, y)) throw FeasibilityViolation(period, y, onhand);
}

class StatelessDynamic final : public Dynamic {
 public:
  explicit StatelessDynamic(int n) : n_(n) {}
  DynamicKind kind() const override { return DynamicKind::Stateless; }
  int dim() const override { return n_; }
  std::string name() const override { return "stateless"; }
  void reset() override { t_ = 1; }
  Vec state() const override { return zeros(static_cast<std::size_t>(n_)); }
  Vec step(const Vec& y, const Vec& d) override {
    check_step_inputs(y, d, state(), n_, t_);
    ++t_;
    return zeros(static_cast<std::size_t>(n_));
  }
  std::unique_ptr<Dynamic> clone_fresh() const override {
    return std::make_unique<StatelessDynamic>(n_);
  }

 private:
  int n_;
  int t_ = 1;
};

class LostSalesDynamic final : public Dynamic {
 public:
  explicit LostSalesDynamic(int n) : n_(n), x_(zeros(static_cast<std::size_t>(n))) {}
  DynamicKind kind() const override { return DynamicKind::LostSales; }
  int dim() const override { return n_; }
  std::string name() const override { return "lost_sales"; }
  void reset() override {
    t_ = 1;
    x_ = zeros(static_cast<std::size_t>(n_));
  }
  Vec state() const override { return x_; }
  Vec step(const Vec& y, const Vec& d) override {
    check_step_inputs(y, d, x_, n_, t_);
    for (int i = 0; i < n_; ++i) x_[static_cast<std::size_t>(i)] = std::max(y[i] - d[i], 0.0);
    ++t_;
    return x_;
  }
  std::unique_ptr<Dynamic> clone_fresh() const override {
    return std::make_unique<LostSalesDynamic>(n_);
  }

 private:
  int n_;
  int t_ = 1;
  Vec x_;
};

}  // namespace

BackloggingDynamic::BackloggingDynamic(int n)
    : n_(n), position_(zeros(static_cast<std::size_t>(n))) {}

void BackloggingDynamic::reset() {
  t_ = 1;
  position_ = zeros(static_cast<std::size_t>(n_));
}

// Unfilled demand is owed, so the constraint state never exceeds the signed
// position's positive part: ordering is always allowed after a stockout.
Vec BackloggingDynamic::state() const { return positive_part(position_); }

Vec BackloggingDynamic::step(const Vec& y, const Vec& d) {
  Vec onhand = state();
  check_step_inputs(y, d, onhand, n_, t_);
  for (int i = 0; i < n_; ++i) position_[static_cast<std::size_t>(i)] = y[i] - d[i];
  ++t_;
  return state();
}

std::unique_ptr<Dynamic> BackloggingDynamic::clone_fresh() const {
  return std::make_unique<BackloggingDynamic>(n_);
}

PerishableDynamic::PerishableDynamic(int n, int lifetime) : n_(n), m_(lifetime) {
  if (lifetime < 1) throw ConfigError("perishable lifetime must be >= 1");
  reset();
}

std::string PerishableDynamic::name() const {
  return "perishable_m" + std::to_string(m_);
}

void PerishableDynamic::reset() {
  buckets_.assign(static_cast<std::size_t>(n_), zeros(static_cast<std::size_t>(m_)));
  onhand_ = zeros(static_cast<std::size_t>(n_));
  perished_ = zeros(static_cast<std::size_t>(n_));
  t_ = 1;
}

Vec PerishableDynamic::state() const { return onhand_; }

Vec PerishableDynamic::step(const Vec& y, const Vec& d) {
  check_step_inputs(y, d, onhand_, n_, t_);
  for (int i = 0; i < n_; ++i) {
    auto si = static_cast<std::size_t>(i);
    auto& b = buckets_[si];
    // fresh units fill the order up to y; age slots grow from newest (0) to oldest
    b[0] = y[i] - onhand_[si];
    // serve demand oldest-first
    double remaining = d[i];
    for (int a = m_ - 1; a >= 0 && remaining > 0.0; --a) {
      double taken = std::min(b[static_cast<std::size_t>(a)], remaining);
      b[static_cast<std::size_t>(a)] -= taken;
      remaining -= taken;
    }
    // everything ages one period and the oldest bucket perishes
    perished_[si] = b[static_cast<std::size_t>(m_ - 1)];
    for (int a = m_ - 1; a >= 1; --a)
      b[static_cast<std::size_t>(a)] = b[static_cast<std::size_t>(a - 1)];
    b[0] = 0.0;
    // the bucket total equals the carry-over ceiling minus perished stock in
    // exact arithmetic; clamp away summation dust so the reported state never
    // exceeds max(y - d, 0)
    onhand_[si] = std::min(sum(b), std::max(y[i] - d[i], 0.0));
  }
  ++t_;
  return onhand_;
}

std::unique_ptr<Dynamic> PerishableDynamic::clone_fresh() const {
  return std::make_unique<PerishableDynamic>(n_, m_);
}

std::unique_ptr<Dynamic> make_stateless(int n) { return std::make_unique<StatelessDynamic>(n); }
std::unique_ptr<Dynamic> make_backlogging(int n) {
  return std::make_unique<BackloggingDynamic>(n);
}
std::unique_ptr<Dynamic> make_lost_sales(int n) {
  return std::make_unique<LostSalesDynamic>(n);
}
std::unique_ptr<Dynamic> make_perishable(int n, int lifetime) {
  return std::make_unique<PerishableDynamic>(n, lifetime);
}

}  // namespace oio
