#pragma once

#include <cstdint>
#include <random>

#include "kelly_ou/types.hpp"

namespace kelly_ou {

/// Independent normal stream for one Monte Carlo path, derived only from
/// (seed, path index). Worker count and scheduling never change the draws.
class PathStream {
 public:
  PathStream(std::uint64_t seed, std::uint64_t path);

  double normal() { return normal_(engine_); }
  void fill_normal(Vector& z);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace kelly_ou
