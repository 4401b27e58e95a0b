#include "oio/feasible_set.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oio/errors.hpp"

namespace oio {

FeasibleSet FeasibleSet::box(Vec lower, Vec upper) {
  if (lower.empty() || lower.size() != upper.size())
    throw ConfigError("box set needs matching nonempty lower/upper bounds");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] >= 0.0)) throw ConfigError("box lower bound must be >= 0");
    if (!(lower[i] <= upper[i])) throw ConfigError("box needs lower <= upper");
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw ConfigError("box bounds must be finite");
  }
  FeasibleSet s;
  s.kind_ = Kind::Box;
  s.n_ = static_cast<int>(lower.size());
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

FeasibleSet FeasibleSet::capacity(int n, double cap) {
  if (n < 1) throw ConfigError("capacity set needs n >= 1");
  if (!(cap >= 0.0) || !std::isfinite(cap))
    throw ConfigError("capacity must be finite and >= 0");
  FeasibleSet s;
  s.kind_ = Kind::Capacity;
  s.n_ = n;
  s.cap_ = cap;
  return s;
}

const Vec& FeasibleSet::lower() const {
  if (kind_ != Kind::Box) throw ConfigError("lower() on a non-box set");
  return lower_;
}

const Vec& FeasibleSet::upper() const {
  if (kind_ != Kind::Box) throw ConfigError("upper() on a non-box set");
  return upper_;
}

double FeasibleSet::cap() const {
  if (kind_ != Kind::Capacity) throw ConfigError("cap() on a non-capacity set");
  return cap_;
}

Vec FeasibleSet::project(const Vec& v) const {
  if (static_cast<int>(v.size()) != n_)
    throw ConfigError("projection input has wrong dimension");
  if (kind_ == Kind::Box) {
    Vec y(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      y[i] = std::min(std::max(v[i], lower_[i]), upper_[i]);
    return y;
  }
  // capped simplex: if the positive part already fits, it is the projection;
  // otherwise shift by the threshold theta solving sum max(v_i - theta, 0) = cap
  Vec pos = positive_part(v);
  if (sum(pos) <= cap_) return pos;
  Vec sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    double cand = (prefix - cap_) / static_cast<double>(k + 1);
    if (k + 1 == sorted.size() || sorted[k + 1] <= cand) {
      theta = cand;
      break;
    }
  }
  Vec y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = std::max(v[i] - theta, 0.0);
  // rounding in v_i - theta can leave the sum a few ulp above the cap; pull the
  // largest entry back so membership of the projection is exact
  for (int pass = 0; pass < 4 && sum(y) > cap_; ++pass) {
    double excess = sum(y) - cap_;
    double& top = *std::max_element(y.begin(), y.end());
    top = std::min(top - excess, std::nextafter(top, 0.0));
  }
  return y;
}

double FeasibleSet::diameter() const {
  if (kind_ == Kind::Box) {
    double s = 0.0;
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      double w = upper_[i] - lower_[i];
      s += w * w;
    }
    return std::sqrt(s);
  }
  // farthest pair is two distinct scaled unit vectors (or the origin for n = 1)
  return n_ >= 2 ? cap_ * std::sqrt(2.0) : cap_;
}

bool FeasibleSet::contains(const Vec& v, double tol) const {
  if (static_cast<int>(v.size()) != n_) return false;
  if (kind_ == Kind::Box) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] < lower_[i] - tol || v[i] > upper_[i] + tol) return false;
    return true;
  }
  double s = 0.0;
  for (double x : v) {
    if (x < -tol) return false;
    s += x;
  }
  return s <= cap_ + tol;
}

}  // namespace oio
