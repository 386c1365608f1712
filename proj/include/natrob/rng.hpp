#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace natrob {

// Counter-based keyed generator. A stream is fully determined by its key, so
// independent streams (one per frame/family/severity) can be drawn in any
// order, on any thread, with identical results.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : key_(key) {}

  uint64_t next_u64();
  // Uniform in [0, 1).
  double next_double();
  // Standard normal via Box-Muller (two uniforms per draw, no caching).
  double next_gaussian();
  // Poisson with the given mean (Knuth product method; normal approximation
  // above mean 256 to avoid exp underflow).
  uint64_t next_poisson(double mean);

  // Order-sensitive combination of parts into a stream key.
  static uint64_t derive_key(std::initializer_list<uint64_t> parts);
  static uint64_t hash_string(std::string_view s);

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace natrob
