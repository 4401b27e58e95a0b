#pragma once

#include <stdexcept>
#include <string>

#include "oio/vec.hpp"

namespace oio {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// bad parameters, malformed config, dimension mismatches
class ConfigError : public Error {
 public:
  using Error::Error;
};

// problems reading external data (CSV files etc.)
class IngestionError : public Error {
 public:
  using Error::Error;
};

// an observation that contradicts the interaction protocol (e.g. sales > order level)
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

// a finite demand source was asked for more periods than it holds
class EndOfData : public Error {
 public:
  using Error::Error;
};

// the order-up-to constraint y >= x failed at some period
class FeasibilityViolation : public Error {
 public:
  FeasibilityViolation(int period, Vec y, Vec x);
  int period;
  Vec y;
  Vec x;
};

}  // namespace oio
