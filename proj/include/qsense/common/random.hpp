#pragma once

#include <cstdint>
#include <random>

namespace qsense {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream (a, b) under a master seed. Streams never depend on
/// thread count or scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(master) ^ (a + 0x632be59bd9b4e019ULL)) ^
                  (b + 0x85157af5ULL));
}

/// Seeded random source. Copyable value; each Monte-Carlo trial owns one.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  RandomStream split(std::uint64_t a, std::uint64_t b = 0) const {
    return RandomStream(derive_seed(seed_, a, b));
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return normal_(engine_); }
  double normal(double mean, double sigma) { return mean + sigma * normal_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t seed_;
};

}  // namespace qsense
