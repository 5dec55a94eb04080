#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lqgame {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A fatal validation check failed (dimension mismatch, non-PSD weight, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed model document. `path` is a JSON-pointer-like location.
class SpecParseError : public Error {
 public:
  SpecParseError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Numerical breakdown inside a recursion (singular gain Hessian or
// innovation covariance). `step` is the time index, or -1 when not tied to one.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int step = -1)
      : Error(step >= 0 ? what + " at k=" + std::to_string(step) : what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// A fixed-point iteration failed to converge or converged to a
// non-stabilizing point.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace lqgame
