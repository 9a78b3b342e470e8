#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "maxent_lab/error.hpp"
#include "maxent_lab/events.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/lattice_dp.hpp"
#include "maxent_lab/rational.hpp"

namespace maxent_lab {

/// Exact conditional mass table over C_n from explicit sequence enumeration.
struct OracleTable {
  std::int64_t n = 0;
  std::vector<std::vector<std::size_t>> sequences;  // members of C_n, lexicographic
  std::vector<Rational> mass;                       // under the supplied measure
  Rational constraint_prob = 0;
  std::uint64_t visited = 0;

  Rational conditional(std::size_t i) const { return mass[i] / constraint_prob; }

  /// Joint mass of A_n and C_n over the enumerated members.
  Rational joint(const EventSpec& event, std::size_t alphabet) const {
    Rational total = 0;
    std::vector<std::int64_t> counts(alphabet);
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      const auto& s = sequences[i];
      std::fill(counts.begin(), counts.end(), 0);
      std::int64_t pairs = 0;
      for (std::size_t t = 0; t < s.size(); ++t) {
        ++counts[s[t]];
        if (t > 0 && s[t - 1] == event.j_prime && s[t] == event.j) ++pairs;
      }
      std::optional<std::size_t> last;
      if (!s.empty()) last = s.back();
      if (event.holds(counts, pairs, last)) total += mass[i];
    }
    return total;
  }

  std::optional<Rational> conditional_event(const EventSpec& event, std::size_t alphabet) const {
    if (constraint_prob == 0) return std::nullopt;
    return joint(event, alphabet) / constraint_prob;
  }
};

/// Enumerates C_n by depth-first search, pruning prefixes whose remaining sum leaves the
/// range [r min, r max] per coordinate. Aborts when more than `cap` nodes are visited.
inline OracleTable enumerate_oracle(const ConstraintSpec& c, std::int64_t n, const ExactMeasure& measure,
                                    std::uint64_t cap = kEnumerationCap) {
  if (n < 1) throw Error(ErrorCode::invalid_input, "oracle needs n >= 1");
  OracleTable table;
  table.n = n;
  auto target = c.target_sum_index(n);
  if (!target) return table;
  const std::size_t alphabet = c.outcomes();
  const std::size_t k = c.dim;
  std::vector<std::int64_t> lo(k, std::numeric_limits<std::int64_t>::max()), hi(k, 0);
  for (const auto& row : c.index)
    for (std::size_t j = 0; j < k; ++j) {
      lo[j] = std::min(lo[j], row[j]);
      hi[j] = std::max(hi[j], row[j]);
    }
  std::vector<std::size_t> seq(static_cast<std::size_t>(n));
  std::vector<Rational> prefix_mass(static_cast<std::size_t>(n + 1));
  prefix_mass[0] = 1;
  std::vector<std::int64_t> sum(k, 0);

  auto recurse = [&](auto&& self, std::int64_t depth) -> void {
    if (++table.visited > cap)
      throw Error(ErrorCode::enumeration_infeasible,
                  "sequence enumeration exceeded " + std::to_string(cap) + " nodes at n = " + std::to_string(n));
    if (depth == n) {
      table.sequences.push_back(seq);
      table.mass.push_back(prefix_mass[static_cast<std::size_t>(n)]);
      table.constraint_prob += prefix_mass[static_cast<std::size_t>(n)];
      return;
    }
    const std::int64_t left = n - depth - 1;
    for (std::size_t x = 0; x < alphabet; ++x) {
      if (measure.mass[x] == 0) continue;
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) {
        const std::int64_t rem = (*target)[j] - sum[j] - c.index[x][j];
        ok = rem >= left * lo[j] && rem <= left * hi[j];
      }
      if (!ok) continue;
      for (std::size_t j = 0; j < k; ++j) sum[j] += c.index[x][j];
      seq[static_cast<std::size_t>(depth)] = x;
      prefix_mass[static_cast<std::size_t>(depth + 1)] = prefix_mass[static_cast<std::size_t>(depth)] * measure.mass[x];
      self(self, depth + 1);
      for (std::size_t j = 0; j < k; ++j) sum[j] -= c.index[x][j];
    }
  };
  recurse(recurse, 0);
  return table;
}

/// Exact oracle over type classes (count vectors): covers every order-independent quantity.
class TypeClassOracle {
 public:
  TypeClassOracle(const ConstraintSpec& c, std::int64_t n, const ExactMeasure& measure,
                  std::uint64_t cap = kEnumerationCap)
      : c_(&c), n_(n) {
    const std::size_t alphabet = c.outcomes();
    std::vector<std::int64_t> counts(alphabet, 0);
    std::vector<BigInt> factorial(static_cast<std::size_t>(n + 1));
    factorial[0] = 1;
    for (std::int64_t i = 1; i <= n; ++i) factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i - 1)] * i;
    std::vector<std::vector<Rational>> powers(alphabet);
    for (std::size_t x = 0; x < alphabet; ++x) {
      powers[x].push_back(1);
      for (std::int64_t e = 1; e <= n; ++e) powers[x].push_back(powers[x].back() * measure.mass[x]);
    }
    std::uint64_t visited = 0;
    auto recurse = [&](auto&& self, std::size_t x, std::int64_t left) -> void {
      if (++visited > cap) throw Error(ErrorCode::enumeration_infeasible, "type-class enumeration exceeded its cap");
      if (x + 1 == alphabet) {
        counts[x] = left;
        Type t;
        t.counts = counts;
        BigInt coeff = factorial[static_cast<std::size_t>(n)];
        Rational mass = 1;
        t.sum.assign(c.dim, 0);
        for (std::size_t y = 0; y < alphabet; ++y) {
          coeff /= factorial[static_cast<std::size_t>(counts[y])];
          mass *= powers[y][static_cast<std::size_t>(counts[y])];
          for (std::size_t j = 0; j < c.dim; ++j) t.sum[j] += counts[y] * c.index[y][j];
        }
        t.sequences = coeff;
        t.mass = mass * Rational(coeff);
        if (t.mass != 0) types_.push_back(std::move(t));
        return;
      }
      for (std::int64_t v = 0; v <= left; ++v) {
        counts[x] = v;
        self(self, x + 1, left - v);
      }
    };
    recurse(recurse, 0, n);
  }

  struct Type {
    std::vector<std::int64_t> counts;
    std::vector<std::int64_t> sum;
    BigInt sequences;
    Rational mass;  // total over the class
  };

  const std::vector<Type>& types() const { return types_; }

  std::map<std::vector<std::int64_t>, Rational> sum_distribution() const {
    std::map<std::vector<std::int64_t>, Rational> out;
    for (const auto& t : types_) out[t.sum] += t.mass;
    return out;
  }

  bool in_constraint(const Type& t) const {
    auto target = c_->target_sum_index(n_);
    return target && t.sum == *target;
  }

  Rational constraint_prob() const {
    Rational total = 0;
    for (const auto& t : types_)
      if (in_constraint(t)) total += t.mass;
    return total;
  }

  /// Joint mass of an order-independent event with C_n.
  Rational joint(const EventSpec& event) const {
    if (event.kind == EventSpec::Kind::bigram_deviation)
      throw Error(ErrorCode::invalid_input, "pair events depend on order; use the sequence oracle");
    Rational total = 0;
    for (const auto& t : types_)
      if (in_constraint(t) && event.holds(t.counts, 0, std::nullopt)) total += t.mass;
    return total;
  }

  Rational event(const EventSpec& event) const {
    if (event.kind == EventSpec::Kind::bigram_deviation)
      throw Error(ErrorCode::invalid_input, "pair events depend on order; use the sequence oracle");
    Rational total = 0;
    for (const auto& t : types_)
      if (event.holds(t.counts, 0, std::nullopt)) total += t.mass;
    return total;
  }

  std::int64_t n() const { return n_; }

 private:
  const ConstraintSpec* c_;
  std::int64_t n_;
  std::vector<Type> types_;
};

}  // namespace maxent_lab
