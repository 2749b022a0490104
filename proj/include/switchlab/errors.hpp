#pragma once

#include <stdexcept>
#include <string>

namespace switchlab {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A numerical routine could not meet its requested accuracy.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  [[nodiscard]] double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// Two routes that must agree did not, or a computed object violates its invariants.
class Inconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace switchlab
