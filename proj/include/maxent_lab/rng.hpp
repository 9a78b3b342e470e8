#pragma once

#include <cstdint>
#include <vector>

namespace maxent_lab {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream: value i of stream s under seed k is a pure function of (k, s, i), so
/// replicas can run in any order or on any thread and still reproduce bit for bit.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix64(seed ^ mix64(stream))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Child stream, independent of this one's position.
  CounterRng split(std::uint64_t child) const { return CounterRng(key_, child ^ 0xa0761d6478bd642fULL); }

  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Inverse-CDF sampler over a finite mass function.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const std::vector<double>& mass) {
    double acc = 0;
    for (double m : mass) {
      acc += m;
      cdf_.push_back(acc);
    }
    for (auto& v : cdf_) v /= acc;
    cdf_.back() = 1.0;
  }

  std::size_t operator()(CounterRng& rng) const {
    const double u = rng.uniform();
    std::size_t lo = 0, hi = cdf_.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (u < cdf_[mid]) hi = mid;
      else lo = mid + 1;
    }
    return lo;
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace maxent_lab
