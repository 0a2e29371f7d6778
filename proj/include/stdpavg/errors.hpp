#pragma once

#include <stdexcept>
#include <string>

namespace stdpavg {

// Malformed input (negative rates, empty dimensions, unknown keys).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Quadrature or integrator failure, non-finite state.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A lookup left the covered domain (drive tables, tail caches).
class RangeError : public std::out_of_range {
 public:
  RangeError(const std::string& what, double time)
      : std::out_of_range(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stdpavg
