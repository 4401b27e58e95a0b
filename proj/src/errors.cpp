#include "oio/errors.hpp"

#include <sstream>

namespace oio {

namespace {

std::string describe(int period, const Vec& y, const Vec& x) {
  std::ostringstream os;
  os << "order-up-to constraint failed at period " << period << ": y = (";
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << ") does not dominate x = (";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

FeasibilityViolation::FeasibilityViolation(int period_, Vec y_, Vec x_)
    : Error(describe(period_, y_, x_)), period(period_), y(std::move(y_)), x(std::move(x_)) {}

}  // namespace oio
