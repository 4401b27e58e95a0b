#pragma once

#include <memory>
#include <string>
#include <vector>

#include "oio/vec.hpp"

namespace oio {

enum class DynamicKind { Stateless, Backlogging, LostSales, Perishable };

// Carry-over rule mapping (order-up-to level, demand) to the next period's
// starting state. Every concrete rule keeps the next state componentwise
// below [y - d]^+ (backlogging reports the positive part as the constraint
// state while tracking the signed position separately).
class Dynamic {
 public:
  virtual ~Dynamic() = default;
  virtual DynamicKind kind() const = 0;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual void reset() = 0;
  // current constraint state x_t (x_1 = 0 after reset)
  virtual Vec state() const = 0;
  // advance one period and return x_{t+1}; throws FeasibilityViolation if y < state
  virtual Vec step(const Vec& y, const Vec& d) = 0;
  virtual std::unique_ptr<Dynamic> clone_fresh() const = 0;
};

std::unique_ptr<Dynamic> make_stateless(int n);
std::unique_ptr<Dynamic> make_backlogging(int n);
std::unique_ptr<Dynamic> make_lost_sales(int n);
// lifetime m >= 1 in periods; m = 1 behaves like stateless
std::unique_ptr<Dynamic> make_perishable(int n, int lifetime);

// Backlogging keeps a signed inventory position; expose it for diagnostics.
class BackloggingDynamic final : public Dynamic {
 public:
  explicit BackloggingDynamic(int n);
  DynamicKind kind() const override { return DynamicKind::Backlogging; }
  int dim() const override { return n_; }
  std::string name() const override { return "backlogging"; }
  void reset() override;
  Vec state() const override;
  Vec step(const Vec& y, const Vec& d) override;
  std::unique_ptr<Dynamic> clone_fresh() const override;
  const Vec& position() const { return position_; }

 private:
  int n_;
  int t_ = 1;
  Vec position_;
};

// Age-structured stock with oldest-first consumption; units older than the
// lifetime perish, unmet demand is lost. Buckets are per product.
class PerishableDynamic final : public Dynamic {
 public:
  PerishableDynamic(int n, int lifetime);
  DynamicKind kind() const override { return DynamicKind::Perishable; }
  int dim() const override { return n_; }
  std::string name() const override;
  void reset() override;
  Vec state() const override;
  Vec step(const Vec& y, const Vec& d) override;
  std::unique_ptr<Dynamic> clone_fresh() const override;

  int lifetime() const { return m_; }
  // quantity perished at the most recent step, per product
  const Vec& last_perished() const { return perished_; }
  // buckets[i][a] = stock of product i aged a periods (a = 0 is this period's order)
  const std::vector<Vec>& buckets() const { return buckets_; }

 private:
  int n_, m_;
  int t_ = 1;
  std::vector<Vec> buckets_;
  Vec onhand_;  // reported state; equals the bucket totals up to rounding guards
  Vec perished_;
};

}  // namespace oio
