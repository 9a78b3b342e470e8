#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "maxent_lab/error.hpp"

namespace maxent_lab {

/// pi(j) proportional to 1 / (j log2^2(j + 1)) on all j >= 1; the first j_max masses are stored
/// and the rest is recorded as tail mass.
struct IntegerPrior {
  std::vector<double> mass;  // mass[j - 1] = pi(j)
  double tail = 0;
  double normalizer = 0;

  static double weight(double j) {
    const double l = std::log2(j + 1);
    return 1.0 / (j * l * l);
  }

  static IntegerPrior rissanen(std::size_t j_max) {
    if (j_max < 1) throw Error(ErrorCode::invalid_input, "J_max must be at least 1");
    constexpr std::size_t kExplicit = 1u << 22;
    IntegerPrior p;
    double head = 0;
    double total = 0;
    for (std::size_t j = std::max(kExplicit, j_max); j >= 1; --j) {
      const double w = weight(static_cast<double>(j));
      total += w;
      if (j <= j_max) head += w;
    }
    // Remaining terms by the midpoint integral of 1/(x log2^2 x).
    const double a = static_cast<double>(std::max(kExplicit, j_max)) + 0.5;
    total += std::numbers::ln2 / std::log2(a + 1);
    p.normalizer = total;
    for (std::size_t j = 1; j <= j_max; ++j) p.mass.push_back(weight(static_cast<double>(j)) / total);
    p.tail = 1.0 - head / total;
    return p;
  }

  std::size_t j_max() const { return mass.size(); }
  double operator()(std::size_t j) const { return mass.at(j - 1); }
  double log2_mass(std::size_t j) const { return std::log2(mass.at(j - 1)); }

  /// Masses of the first `count` integers renormalized to sum to one.
  std::vector<double> normalized_head(std::size_t count) const {
    if (count < 1 || count > mass.size()) throw Error(ErrorCode::invalid_input, "prior head size out of range");
    double s = 0;
    for (std::size_t j = 0; j < count; ++j) s += mass[j];
    std::vector<double> out(mass.begin(), mass.begin() + static_cast<std::ptrdiff_t>(count));
    for (auto& v : out) v /= s;
    return out;
  }
};

}  // namespace maxent_lab
