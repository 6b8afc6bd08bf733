#pragma once

// Seedable, splittable random stream. A fixed seed reproduces the exact draw
// sequence; child(k) derives an independent stream keyed by k, so concurrent
// work items get schedule-independent randomness.

#include <cstdint>
#include <random>
#include <stdexcept>

namespace dpreg {

namespace detail {

// SplitMix64 finalizer, used to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed)
      : seed_(seed), engine_(detail::splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  // Independent stream for work item `key`; derivation depends only on
  // (parent seed, key), never on how much the parent has been consumed.
  RandomStream child(std::uint64_t key) const {
    return RandomStream(detail::splitmix64(seed_ ^ detail::splitmix64(key ^ 0xa02b'dbf7'bb3c'0a7ULL)));
  }

  // Sequential split for callers without a natural key.
  RandomStream split() { return child(split_count_++); }

  std::mt19937_64& engine() { return engine_; }

  // Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    } while (u <= 0.0);
    return u;
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    std::normal_distribution<double> dist(mean, sd);
    return dist(engine_);
  }

  double exponential(double rate) {
    if (rate <= 0.0) throw std::invalid_argument("exponential: rate must be > 0");
    std::exponential_distribution<double> dist(rate);
    return dist(engine_);
  }

  double gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) throw std::invalid_argument("gamma: shape and scale must be > 0");
    std::gamma_distribution<double> dist(shape, scale);
    return dist(engine_);
  }

  double chi_squared(double df) { return gamma(0.5 * df, 2.0); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t split_count_ = 0;
};

}  // namespace dpreg
