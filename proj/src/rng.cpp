#include "natrob/rng.hpp"

#include <cmath>

namespace natrob {
namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

uint64_t mix64(uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

}  // namespace

uint64_t CounterRng::next_u64() {
  return mix64(key_ ^ mix64(counter_++ + kGolden));
}

double CounterRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::next_gaussian() {
  double u1 = 1.0 - next_double();  // (0, 1]
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

uint64_t CounterRng::next_poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 256.0) {
    double v = mean + std::sqrt(mean) * next_gaussian();
    return v < 0.0 ? 0 : static_cast<uint64_t>(std::llround(v));
  }
  const double limit = std::exp(-mean);
  uint64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= next_double();
  } while (p > limit);
  return k - 1;
}

uint64_t CounterRng::derive_key(std::initializer_list<uint64_t> parts) {
  uint64_t k = 0x243f6a8885a308d3ULL;
  for (uint64_t p : parts) k = mix64(k + kGolden + p);
  return k;
}

uint64_t CounterRng::hash_string(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace natrob
