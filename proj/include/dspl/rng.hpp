#pragma once

#include <cstdint>
#include <string_view>

namespace dspl {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);
// FNV-1a, stable across platforms.
std::uint64_t hash_string(std::string_view s);

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so results do not depend on evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits(std::uint64_t counter) const;
  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const;
  // Standard normal by inversion.
  double normal(std::uint64_t counter) const;

 private:
  std::uint64_t key_;
};

}  // namespace dspl
