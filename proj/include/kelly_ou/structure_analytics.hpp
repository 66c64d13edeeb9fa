#pragma once

#include "kelly_ou/kelly_engine.hpp"
#include "kelly_ou/types.hpp"

namespace kelly_ou {

enum class Structure {
  /// sigma on the diagonal and superdiagonal: each asset shares one factor
  /// with its neighbour.
  bidiagonal,
  /// sigma times the lower-triangular matrix of ones: global correlation.
  triangular,
};

struct StructureKind {
  Structure structure;
  int n;
  double sigma;
};

struct Rational {
  long num;
  long den;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

/// Throws ConfigError for n < 2 or sigma <= 0.
void validate(const StructureKind& kind);

Matrix build_sigma(const StructureKind& kind);

/// The closed-form inverse of the triangular structure: the lower bidiagonal
/// (1, -1) pattern divided by sigma.
Matrix triangular_sigma_inverse(int n, double sigma);

/// Long-run expected total Kelly fraction in the bidiagonal market at r = 0:
/// (n+1)/4 for odd n, n/4 for even n.
Rational bidiagonal_limit_expected_total_fraction(int n);

/// Independent route to the same limit. At stationarity with r = 0 the
/// expected excess return is E[c_i] = 1/2 |sigma_i|^2, so the expected total
/// fraction is 1/2 * 1^T R^{-1} s with s_i = |sigma_i|^2.
double bidiagonal_limit_oracle(int n, double sigma);

/// Kelly fractions of the triangular market in closed form from the
/// sigma^2-scaled excess returns c_hat_i = (mu_i - r) / sigma^2.
FractionVector triangular_fractions(const Vector& c_hat);

/// Expected total fraction of the triangular market at time t, which only
/// depends on asset 1's parameters.
double triangular_expected_total_fraction(double a1, double b1, double sigma, double r, double s1_0,
                                          double t);

/// t -> infinity limit of triangular_expected_total_fraction. Discontinuous
/// in b1 at 0.
double limit_expected_total_fraction(double a1, double b1, double sigma, double r);

}  // namespace kelly_ou
