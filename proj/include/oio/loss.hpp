#pragma once

#include <memory>
#include <string>

#include "oio/vec.hpp"

namespace oio {

enum class LossKind { Newsvendor, Linear };

// Per-period cost and its subgradients. Two feedback regimes share one
// deterministic subgradient selection: the censored formula evaluated at
// sales s = min(y, d), which picks -p_i at the kinks. Under full demand
// information that formula is applied with s = min(y, d) computed from the
// observed demand, so both regimes emit identical vectors on identical runs.
class Loss {
 public:
  virtual ~Loss() = default;
  virtual LossKind kind() const = 0;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual double evaluate(const Vec& y, const Vec& d) const = 0;
  // selection from observed demand
  virtual Vec subgradient(const Vec& y, const Vec& d) const = 0;
  // selection from observed sales only; requires s <= y componentwise
  virtual Vec subgradient_censored(const Vec& y, const Vec& s) const = 0;
  // G: uniform bound on the Euclidean norm of every emitted subgradient
  virtual double gradient_bound() const = 0;
  virtual std::unique_ptr<Loss> clone() const = 0;
};

// c(y, d) = sum_i h_i [y_i - d_i]^+ + p_i [d_i - y_i]^+
class NewsvendorLoss final : public Loss {
 public:
  NewsvendorLoss(Vec holding, Vec penalty);

  LossKind kind() const override { return LossKind::Newsvendor; }
  int dim() const override { return static_cast<int>(h_.size()); }
  std::string name() const override { return "newsvendor"; }
  double evaluate(const Vec& y, const Vec& d) const override;
  Vec subgradient(const Vec& y, const Vec& d) const override;
  Vec subgradient_censored(const Vec& y, const Vec& s) const override;
  // sqrt(n) * max_i max(h_i, p_i)
  double gradient_bound() const override;
  std::unique_ptr<Loss> clone() const override;

  const Vec& holding() const { return h_; }
  const Vec& penalty() const { return p_; }

 private:
  Vec h_, p_;
};

// l(y) = sum_i y_i, demand-independent; gradient is the all-ones vector
class LinearLoss final : public Loss {
 public:
  explicit LinearLoss(int n);

  LossKind kind() const override { return LossKind::Linear; }
  int dim() const override { return n_; }
  std::string name() const override { return "linear"; }
  double evaluate(const Vec& y, const Vec& d) const override;
  Vec subgradient(const Vec& y, const Vec& d) const override;
  Vec subgradient_censored(const Vec& y, const Vec& s) const override;
  double gradient_bound() const override;
  std::unique_ptr<Loss> clone() const override;

 private:
  int n_;
};

}  // namespace oio
