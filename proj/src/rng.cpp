#include "kelly_ou/rng.hpp"

namespace kelly_ou {
namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
                    0x6b656c6cu};
  return std::mt19937_64(seq);
}

}  // namespace

PathStream::PathStream(std::uint64_t seed, std::uint64_t path) : engine_(make_engine(seed, path)) {}

void PathStream::fill_normal(Vector& z) {
  for (Index i = 0; i < z.size(); ++i) z(i) = normal_(engine_);
}

}  // namespace kelly_ou
