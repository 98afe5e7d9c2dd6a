#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spfom {

// Named sub-streams derived from a root seed. Every consumer of randomness
// draws from its own stream so that, e.g., changing the batch size never
// perturbs the generated instance.
enum class Stream : std::uint64_t {
  kInstance = 1,
  kBatchSampling = 2,
  kChoice = 3,
  kPowerIteration = 4,
  kSimMarket = 5,
};

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of sub-stream `stream`, replica `index`, under `root`:
//   splitmix64(splitmix64(root) ^ splitmix64(stream * 2^32 + index))
constexpr std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
  const std::uint64_t tag = (static_cast<std::uint64_t>(stream) << 32) + index;
  return splitmix64(splitmix64(root) ^ splitmix64(tag));
}

// mt19937_64 engine (bit sequence fixed by the C++ standard) with hand-written
// conversions, since <random> distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t root, Stream stream, std::uint64_t index = 0)
      : engine_(derive_seed(root, stream, index)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1): 53-bit midpoint grid.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on (lo, hi).
  double uniform(double lo, double hi) {
    const double x = lo + (hi - lo) * uniform();
    return x < hi ? x : std::nextafter(hi, lo);
  }

  // Uniform integer in [0, bound), unbiased (rejection on the top range).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spfom
