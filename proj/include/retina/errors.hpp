#ifndef RETINA_ERRORS_HPP
#define RETINA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace retina {

// Shape of an operand does not match the operation's contract.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller violated a documented precondition.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value or unknown configuration key.  Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data, including file IO failures.  Exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training failure (divergence, bad member).  Exit code 4.  Carries the step
// at which the failure was detected.
class TrainError : public std::runtime_error {
 public:
  TrainError(const std::string& msg, long step)
      : std::runtime_error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// A metric has no defined value on the given sample (e.g. single-class AUC).
class UndefinedMetricError : public std::runtime_error {
 public:
  explicit UndefinedMetricError(const std::string& msg) : std::runtime_error(msg) {}
};

// Too many bootstrap replicates had undefined metrics.  Exit code 5.
class UnstableMetricError : public std::runtime_error {
 public:
  explicit UnstableMetricError(const std::string& msg) : std::runtime_error(msg) {}
};

// Logistic fit failed (non-finite objective).  Carries the last gradient norm.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& msg, double grad_norm)
      : std::runtime_error(msg + " (gradient norm " + std::to_string(grad_norm) + ")"),
        grad_norm_(grad_norm) {}
  double grad_norm() const { return grad_norm_; }

 private:
  double grad_norm_;
};

// Input outside the supported range of a published formula.
class RangeError : public std::runtime_error {
 public:
  explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace retina

#endif  // RETINA_ERRORS_HPP
