#include "kelly_ou/structure_analytics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "kelly_ou/errors.hpp"

namespace kelly_ou {

void validate(const StructureKind& kind) {
  if (kind.n < 2) throw ConfigError("structured markets need n >= 2, got " + std::to_string(kind.n));
  if (!(kind.sigma > 0.0) || !std::isfinite(kind.sigma)) {
    throw ConfigError("structure volatility must be finite and > 0");
  }
}

Matrix triangular_sigma_inverse(int n, double sigma) {
  Matrix inv = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    inv(i, i) = 1.0;
    if (i > 0) inv(i, i - 1) = -1.0;
  }
  return inv / sigma;
}

Matrix build_sigma(const StructureKind& kind) {
  validate(kind);
  const int n = kind.n;
  Matrix s = Matrix::Zero(n, n);
  if (kind.structure == Structure::bidiagonal) {
    for (int i = 0; i < n; ++i) {
      s(i, i) = kind.sigma;
      if (i + 1 < n) s(i, i + 1) = kind.sigma;
    }
    return s;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) s(i, j) = kind.sigma;
  }
  const Matrix check = s * triangular_sigma_inverse(n, kind.sigma);
  if ((check - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12) {
    throw NumericalError("triangular sigma does not match its closed-form inverse");
  }
  return s;
}

Rational bidiagonal_limit_expected_total_fraction(int n) {
  if (n < 2) throw ConfigError("bidiagonal limit needs n >= 2");
  const long num = n % 2 == 1 ? n + 1 : n;
  const long g = std::gcd(num, 4L);
  return Rational{num / g, 4L / g};
}

double bidiagonal_limit_oracle(int n, double sigma) {
  const Matrix s = build_sigma({Structure::bidiagonal, n, sigma});
  const Matrix R = s * s.transpose();
  const Vector row_sq = s.rowwise().squaredNorm();
  const Vector y = R.partialPivLu().solve(row_sq);
  return 0.5 * y.sum();
}

FractionVector triangular_fractions(const Vector& c_hat) {
  const Index n = c_hat.size();
  if (n < 2) throw ConfigError("triangular fractions need n >= 2");
  FractionVector out{Vector(n), false};
  out.f(0) = 2.0 * c_hat(0) - c_hat(1);
  for (Index i = 1; i + 1 < n; ++i) {
    out.f(i) = (c_hat(i) - c_hat(i - 1)) - (c_hat(i + 1) - c_hat(i));
  }
  out.f(n - 1) = c_hat(n - 1) - c_hat(n - 2);
  return out;
}

double triangular_expected_total_fraction(double a1, double b1, double sigma, double r, double s1_0,
                                          double t) {
  if (!(t >= 0.0)) throw ConfigError("time must be >= 0");
  const double s2 = sigma * sigma;
  return ((a1 - b1 * std::log(s1_0)) * std::exp(-b1 * t) + 0.5 * s2 - r) / s2;
}

double limit_expected_total_fraction(double a1, double b1, double sigma, double r) {
  if (b1 < 0.0) throw ConfigError("b1 must be >= 0");
  const double s2 = sigma * sigma;
  if (b1 == 0.0) return (a1 + 0.5 * s2 - r) / s2;
  return (0.5 * s2 - r) / s2;
}

}  // namespace kelly_ou
