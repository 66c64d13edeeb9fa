#pragma once

#include <stdexcept>
#include <string>

namespace kelly_ou {

/// Raised when the volatility matrix cannot be inverted. Carries the
/// numerical rank found by the singular-value test.
class SingularVolatility : public std::runtime_error {
 public:
  SingularVolatility(int rank, int n)
      : std::runtime_error("singular volatility: sigma has rank " + std::to_string(rank) +
                           " < " + std::to_string(n)),
        rank_(rank),
        n_(n) {}

  int rank() const noexcept { return rank_; }
  int dimension() const noexcept { return n_; }

 private:
  int rank_;
  int n_;
};

class NoStationaryDistribution : public std::domain_error {
 public:
  explicit NoStationaryDistribution(int asset)
      : std::domain_error("no stationary distribution: b[" + std::to_string(asset) + "] == 0") {}
};

/// NaN/inf propagation or a non-PSD covariance; always an upstream bug.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or inconsistent arguments from the user.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace kelly_ou
