#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maxent_lab/error.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/lattice_dp.hpp"
#include "maxent_lab/rational.hpp"

namespace maxent_lab {

/// Closed event language over X^n.
struct EventSpec {
  enum class Kind { frequency_deviation, auxiliary_box, bigram_deviation };

  Kind kind = Kind::auxiliary_box;
  std::string name;
  /// frequency_deviation: sup_x |N_x/n - reference[x]| > epsilon.
  /// bigram_deviation: |N_j/n - pairs(j'->j)/N'_{j'}| > epsilon with N'_{j'} excluding the last position.
  Rational epsilon = 0;
  std::vector<Rational> reference;
  /// auxiliary_box: the sample average of S lies in [lower, upper] (inside) or not (outside).
  std::vector<std::vector<Rational>> statistic;  // [outcome][coordinate]
  std::vector<Rational> lower;
  std::vector<Rational> upper;
  bool inside = true;
  std::size_t j = 0;
  std::size_t j_prime = 0;

  static EventSpec always() {
    EventSpec e;
    e.name = "always";
    return e;
  }

  static EventSpec never() {
    EventSpec e;
    e.name = "never";
    e.inside = false;
    return e;
  }

  static EventSpec frequency_deviation(Rational eps, std::vector<Rational> reference) {
    EventSpec e;
    e.kind = Kind::frequency_deviation;
    e.name = "freq_dev";
    e.epsilon = std::move(eps);
    e.reference = std::move(reference);
    return e;
  }

  static EventSpec box(std::vector<std::vector<Rational>> statistic, std::vector<Rational> lower,
                       std::vector<Rational> upper, bool inside = true) {
    EventSpec e;
    e.kind = Kind::auxiliary_box;
    e.name = "box";
    e.statistic = std::move(statistic);
    e.lower = std::move(lower);
    e.upper = std::move(upper);
    e.inside = inside;
    return e;
  }

  static EventSpec bigram_deviation(std::size_t j, std::size_t j_prime, Rational eps) {
    EventSpec e;
    e.kind = Kind::bigram_deviation;
    e.name = "bigram_dev";
    e.j = j;
    e.j_prime = j_prime;
    e.epsilon = std::move(eps);
    return e;
  }

  void validate(std::size_t outcomes) const {
    switch (kind) {
      case Kind::frequency_deviation:
        if (epsilon <= 0) throw Error(ErrorCode::invalid_input, "event epsilon must be positive");
        if (reference.size() != outcomes)
          throw Error(ErrorCode::invalid_input, "frequency event needs one reference mass per outcome");
        break;
      case Kind::bigram_deviation:
        if (epsilon <= 0) throw Error(ErrorCode::invalid_input, "event epsilon must be positive");
        if (j >= outcomes || j_prime >= outcomes) throw Error(ErrorCode::invalid_input, "bigram outcome out of range");
        break;
      case Kind::auxiliary_box:
        if (!statistic.empty() && statistic.size() != outcomes)
          throw Error(ErrorCode::invalid_input, "auxiliary statistic needs one row per outcome");
        for (const auto& row : statistic)
          if (row.size() != lower.size()) throw Error(ErrorCode::invalid_input, "auxiliary statistic width mismatch");
        if (lower.size() != upper.size()) throw Error(ErrorCode::invalid_input, "box bounds size mismatch");
        break;
    }
  }

  /// Exact predicate from the per-outcome counts and (for bigram events) the pair count and last symbol.
  bool holds(std::span<const std::int64_t> counts, std::int64_t pairs, std::optional<std::size_t> last) const {
    std::int64_t n = 0;
    for (auto v : counts) n += v;
    switch (kind) {
      case Kind::frequency_deviation: {
        if (n == 0) return false;
        for (std::size_t x = 0; x < counts.size(); ++x) {
          Rational d = Rational(counts[x], n) - reference[x];
          if (abs(d) > epsilon) return true;
        }
        return false;
      }
      case Kind::bigram_deviation: {
        if (n == 0) return false;
        std::int64_t denom = counts[j_prime] - (last && *last == j_prime ? 1 : 0);
        if (denom == 0) return false;
        Rational d = Rational(counts[j], n) - Rational(pairs, denom);
        return abs(d) > epsilon;
      }
      case Kind::auxiliary_box: {
        bool in = true;
        if (!lower.empty()) {
          if (n == 0) {
            in = false;
          } else {
            for (std::size_t d = 0; d < lower.size() && in; ++d) {
              Rational s = 0;
              for (std::size_t x = 0; x < counts.size(); ++x) s += statistic[x][d] * counts[x];
              s /= n;
              in = s >= lower[d] && s <= upper[d];
            }
          }
        }
        return in == inside;
      }
    }
    return false;
  }
};

/// Step model for the joint (T-sum, event statistic[, pair count]) lattice program.
struct EventLattice {
  std::vector<std::vector<std::int64_t>> deltas;
  std::optional<PairCounter> pair;
  std::size_t constraint_dims = 0;
  /// Per outcome, which event coordinate is its indicator (frequency events track every outcome).
  std::vector<std::size_t> tracked;
  std::vector<LatticeAxis> aux_axes;
  EventSpec event;

  static EventLattice build(const ConstraintSpec& c, const EventSpec& event) {
    event.validate(c.outcomes());
    EventLattice el;
    el.constraint_dims = c.dim;
    el.event = event;
    const std::size_t outcomes = c.outcomes();
    switch (event.kind) {
      case EventSpec::Kind::frequency_deviation:
        for (std::size_t x = 0; x < outcomes; ++x) el.tracked.push_back(x);
        break;
      case EventSpec::Kind::bigram_deviation:
        el.tracked.push_back(event.j);
        if (event.j_prime != event.j) el.tracked.push_back(event.j_prime);
        break;
      case EventSpec::Kind::auxiliary_box:
        for (std::size_t d = 0; d < event.lower.size(); ++d) {
          std::vector<Rational> column;
          for (const auto& row : event.statistic) column.push_back(row[d]);
          el.aux_axes.push_back(detail::derive_axis(column));
        }
        break;
    }
    for (std::size_t x = 0; x < outcomes; ++x) {
      std::vector<std::int64_t> delta = c.index[x];
      for (auto t : el.tracked) delta.push_back(t == x ? 1 : 0);
      for (const auto& axis : el.aux_axes) delta.push_back(axis.index[x]);
      if (event.kind == EventSpec::Kind::bigram_deviation) delta.push_back(0);
      el.deltas.push_back(std::move(delta));
    }
    if (event.kind == EventSpec::Kind::bigram_deviation)
      el.pair = PairCounter{event.j_prime, event.j, c.dim + el.tracked.size()};
    return el;
  }

  bool trivial() const { return tracked.empty() && aux_axes.empty() && !pair; }

  /// Evaluates the event on a final DP state of a length-n run.
  bool holds(std::span<const std::int64_t> u, std::size_t layer, std::int64_t n) const {
    const std::size_t base = constraint_dims;
    switch (event.kind) {
      case EventSpec::Kind::frequency_deviation:
        return event.holds(u.subspan(base, tracked.size()), 0, std::nullopt);
      case EventSpec::Kind::bigram_deviation: {
        std::vector<std::int64_t> counts(std::max(event.j, event.j_prime) + 1, 0);
        counts[event.j] = u[base];
        counts[event.j_prime] = u[base + (event.j_prime == event.j ? 0 : 1)];
        std::int64_t others = n - counts[event.j] - (event.j_prime == event.j ? 0 : counts[event.j_prime]);
        // Remaining counts only matter through n; park them on a slot the predicate ignores.
        counts.push_back(others);
        std::optional<std::size_t> last;
        if (layer > 0) last = layer - 1;
        return event.holds(counts, u[pair->dim], last);
      }
      case EventSpec::Kind::auxiliary_box: {
        if (event.lower.empty()) return event.inside;
        if (n == 0) return !event.inside;
        bool in = true;
        for (std::size_t d = 0; d < aux_axes.size() && in; ++d) {
          const auto& axis = aux_axes[d];
          Rational avg = Rational(n * axis.offset + axis.span * u[base + d], axis.scale * n);
          in = avg >= event.lower[d] && avg <= event.upper[d];
        }
        return in == event.inside;
      }
    }
    return false;
  }
};

}  // namespace maxent_lab
