#include "oio/loss.hpp"

#include <cmath>

#include "oio/errors.hpp"

namespace oio {

namespace {

void require_dim(const Vec& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n)
    throw ConfigError(std::string(what) + " has wrong dimension");
}

}  // namespace

NewsvendorLoss::NewsvendorLoss(Vec holding, Vec penalty)
    : h_(std::move(holding)), p_(std::move(penalty)) {
  if (h_.empty() || h_.size() != p_.size())
    throw ConfigError("newsvendor loss needs matching nonempty cost vectors");
  for (std::size_t i = 0; i < h_.size(); ++i) {
    if (!(h_[i] >= 0.0) || !(p_[i] >= 0.0) || !std::isfinite(h_[i]) || !std::isfinite(p_[i]))
      throw ConfigError("holding/penalty costs must be finite and >= 0");
  }
}

double NewsvendorLoss::evaluate(const Vec& y, const Vec& d) const {
  require_dim(y, dim(), "order level");
  require_dim(d, dim(), "demand");
  double c = 0.0;
  for (std::size_t i = 0; i < h_.size(); ++i) {
    double over = y[i] - d[i];
    c += over > 0.0 ? h_[i] * over : p_[i] * (-over);
  }
  return c;
}

Vec NewsvendorLoss::subgradient(const Vec& y, const Vec& d) const {
  require_dim(d, dim(), "demand");
  return subgradient_censored(y, cwise_min(y, d));
}

Vec NewsvendorLoss::subgradient_censored(const Vec& y, const Vec& s) const {
  require_dim(y, dim(), "order level");
  require_dim(s, dim(), "sales");
  Vec g(h_.size());
  for (std::size_t i = 0; i < h_.size(); ++i) {
    if (s[i] > y[i]) throw ProtocolViolation("sales exceed the order-up-to level");
    // s < y reveals demand was met (holding side); s == y is censored and the
    // stockout side is charged, which also fixes the selection at the kink
    g[i] = s[i] < y[i] ? h_[i] : -p_[i];
  }
  return g;
}

double NewsvendorLoss::gradient_bound() const {
  double m = 0.0;
  for (std::size_t i = 0; i < h_.size(); ++i) m = std::max(m, std::max(h_[i], p_[i]));
  return std::sqrt(static_cast<double>(h_.size())) * m;
}

std::unique_ptr<Loss> NewsvendorLoss::clone() const {
  return std::make_unique<NewsvendorLoss>(h_, p_);
}

LinearLoss::LinearLoss(int n) : n_(n) {
  if (n < 1) throw ConfigError("linear loss needs n >= 1");
}

double LinearLoss::evaluate(const Vec& y, const Vec& d) const {
  require_dim(y, n_, "order level");
  (void)d;
  return sum(y);
}

Vec LinearLoss::subgradient(const Vec& y, const Vec& d) const {
  require_dim(y, n_, "order level");
  (void)d;
  return Vec(static_cast<std::size_t>(n_), 1.0);
}

Vec LinearLoss::subgradient_censored(const Vec& y, const Vec& s) const {
  require_dim(y, n_, "order level");
  (void)s;
  return Vec(static_cast<std::size_t>(n_), 1.0);
}

double LinearLoss::gradient_bound() const { return std::sqrt(static_cast<double>(n_)); }

std::unique_ptr<Loss> LinearLoss::clone() const { return std::make_unique<LinearLoss>(n_); }

}  // namespace oio
