#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pcaet {

/// Name recorded in manifests. Streams are mt19937_64 engines whose seed is the
/// splitmix64 mix of (seed, stream ids); uniforms take the top 53 bits; Poisson
/// variates use multiplicative inversion below mean 10 and Hörmann's PTRS above.
inline constexpr std::string_view kRngAlgorithm =
    "mt19937_64/splitmix64-stream-keys/poisson-inversion+ptrs";

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic seed for stream (a, b) of a run seeded with `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box–Muller, one value per call).
  double normal();
  std::int64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pcaet
