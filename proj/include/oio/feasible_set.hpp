#pragma once

#include "oio/vec.hpp"

namespace oio {

// Order-up-to level set: either a box [lower, upper] with 0 <= lower <= upper,
// or a capped simplex { y >= 0 : sum_i y_i <= cap }.
class FeasibleSet {
 public:
  enum class Kind { Box, Capacity };

  static FeasibleSet box(Vec lower, Vec upper);
  static FeasibleSet capacity(int n, double cap);

  Kind kind() const { return kind_; }
  int dim() const { return n_; }

  // Euclidean projection onto the set
  Vec project(const Vec& v) const;
  // largest distance between two points of the set
  double diameter() const;
  bool contains(const Vec& v, double tol = 0.0) const;

  const Vec& lower() const;
  const Vec& upper() const;
  double cap() const;

 private:
  FeasibleSet() = default;
  Kind kind_ = Kind::Box;
  int n_ = 0;
  Vec lower_, upper_;
  double cap_ = 0.0;
};

}  // namespace oio
