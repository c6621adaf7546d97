#include "dspl/rng.hpp"

#include <cmath>

#include <boost/math/special_functions/erf.hpp>

namespace dspl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ (splitmix64(value) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(hash_combine(splitmix64(seed), stream)) {}

std::uint64_t CounterRng::bits(std::uint64_t counter) const { return splitmix64(key_ ^ splitmix64(counter)); }

double CounterRng::uniform(std::uint64_t counter) const {
  return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t counter) const {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uniform(counter));
}

}  // namespace dspl
