#pragma once

// Deterministic per-task random streams. A stream is identified by
// (master seed, stream id, substream id); the engine seed is a SplitMix64 hash
// of that triple, so task r draws the same numbers whatever the scheduling.

#include <cmath>
#include <cstdint>
#include <random>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace switchlab {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream,
                                                  std::uint64_t substream = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ (substream * 0xd1b54a32d192ed03ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t master, std::uint64_t stream = 0, std::uint64_t substream = 0)
      : engine_(stream_seed(master, stream, substream)) {}

  /// Uniform on [0, 1).
  double uniform() { return boost::random::uniform_01<double>{}(engine_); }
  double exponential(double rate) { return boost::random::exponential_distribution<double>(rate)(engine_); }
  /// Gamma with integer or real shape and the given rate.
  double gamma(double shape, double rate) {
    return boost::random::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
  }
  double normal(double mean = 0.0, double sd = 1.0) {
    return boost::random::normal_distribution<double>(mean, sd)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace switchlab
