#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ecr {

// SplitMix64 (Steele/Lea/Flood mixing function). Counter-based: the state is a
// plain 64-bit counter advanced by the golden-ratio increment, so a stream is
// fully determined by its seed and draws are bit-reproducible across machines.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform on [0, 1) with 53-bit resolution
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1); exact zeros are rejected so inverse-CDF transforms stay finite
  double uniform_open() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  // standard normal via Box-Muller; always consumes two uniforms per draw so
  // the stream position does not depend on the values drawn
  double gaussian() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Substream derivation rule: mix (seed, stream) through one SplitMix64 round.
// Used to give learn/cal/test blocks and per-repeat generators disjoint streams.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0xD1B54A32D192ED03ull * (stream + 1)));
  return g.next();
}

}  // namespace ecr
