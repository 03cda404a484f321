#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace bdpp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PoleError : Error {
  std::complex<double> where;
  PoleError(const std::string& msg, std::complex<double> z) : Error(msg), where(z) {}
};

struct ContourError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  double last_delta;
  ConvergenceError(const std::string& msg, double d) : Error(msg), last_delta(d) {}
};

struct AdmissibilityError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct ConstraintError : Error {
  using Error::Error;
};

struct BudgetError : Error {
  using Error::Error;
};

struct UsageError : Error {
  using Error::Error;
};

}  // namespace bdpp
