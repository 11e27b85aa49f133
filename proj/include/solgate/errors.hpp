#pragma once

#include <stdexcept>
#include <string>

namespace solgate {

struct DegenerateConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InstabilityError : std::runtime_error {
  double multiplier_magnitude;
  InstabilityError(const std::string& what, double mag)
      : std::runtime_error(what), multiplier_magnitude(mag) {}
};

struct OptimizationError : std::runtime_error {
  double best_residual;
  OptimizationError(const std::string& what, double residual)
      : std::runtime_error(what), best_residual(residual) {}
};

struct ClassificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotLocalizedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SaddlePointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EscapeError : std::runtime_error {
  double time_of_loss;
  EscapeError(const std::string& what, double t)
      : std::runtime_error(what), time_of_loss(t) {}
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace solgate
