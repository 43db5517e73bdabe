#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace flowdesign {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent dimensions or out-of-domain parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The constraint system admits no point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class UnboundedError : public Error {
 public:
  using Error::Error;
};

// The LP core lost accuracy and could not certify its answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An iteration hit its cap; the last iterate is kept for inspection.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last)
      : Error(what), last_iterate_(std::move(last)) {}
  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }

 private:
  Eigen::VectorXd last_iterate_;
};

// Malformed input file or config; `field` names the offending key/column.
class FormatError : public Error {
 public:
  FormatError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace flowdesign
