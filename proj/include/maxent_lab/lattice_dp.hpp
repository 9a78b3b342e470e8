#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "maxent_lab/error.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/maxent.hpp"
#include "maxent_lab/rational.hpp"

namespace maxent_lab {

enum class MeasureId { prior, maxent };

inline std::string_view to_string(MeasureId id) { return id == MeasureId::prior ? "prior" : "maxent"; }

enum class ArithmeticMode { float64, rational };

/// Per-outcome mass function used to drive a lattice computation.
template <class Scalar>
struct BasicMeasure {
  MeasureId id = MeasureId::prior;
  std::vector<Scalar> mass;
};

using Measure = BasicMeasure<double>;
using ExactMeasure = BasicMeasure<Rational>;

inline Measure prior_measure(const SampleSpace& space) { return {MeasureId::prior, space.prior_mass}; }

inline Measure maxent_measure(const MaxEntSolution& sol) { return {MeasureId::maxent, sol.pmf}; }

inline ExactMeasure exact_prior_measure(const SampleSpace& space) { return {MeasureId::prior, space.prior}; }

/// Exact exponential-family member q(x) prod_j r_j^{u_j(x)} / Z with r_j = exp(-beta_j h_j)
/// rounded once to a double. Ratios to q are constant on every T-level set, exactly.
inline ExactMeasure exact_maxent_measure(const SampleSpace& space, const ConstraintSpec& c,
                                         const MaxEntSolution& sol) {
  std::vector<Rational> ratio;
  for (std::size_t j = 0; j < c.dim; ++j)
    ratio.push_back(exact_from_double(std::exp(-sol.beta[static_cast<Eigen::Index>(j)] * c.unscaled_span(j))));
  ExactMeasure m{MeasureId::maxent, {}};
  Rational total = 0;
  for (std::size_t x = 0; x < c.outcomes(); ++x) {
    Rational w = space.prior[x];
    for (std::size_t j = 0; j < c.dim; ++j)
      for (std::int64_t e = 0; e < c.index[x][j]; ++e) w *= ratio[j];
    m.mass.push_back(w);
    total += w;
  }
  for (auto& w : m.mass) w /= total;
  return m;
}

inline Measure to_float(const ExactMeasure& m) {
  Measure out{m.id, {}};
  for (const auto& v : m.mass) out.mass.push_back(to_double(v));
  return out;
}

/// Marginal masses per coordinate when the pushforward of the measure onto index vectors
/// is a product measure (relative tolerance `rel_tol`); nullopt otherwise.
inline std::optional<std::vector<std::vector<double>>> product_factors(const ConstraintSpec& c,
                                                                       const std::vector<double>& mass,
                                                                       double rel_tol = 1e-12) {
  std::vector<std::vector<double>> marginal(c.dim);
  for (std::size_t j = 0; j < c.dim; ++j) marginal[j].assign(static_cast<std::size_t>(c.max_index[j] + 1), 0.0);
  std::map<std::vector<std::int64_t>, double> joint;
  for (std::size_t x = 0; x < c.outcomes(); ++x) {
    joint[c.index[x]] += mass[x];
    for (std::size_t j = 0; j < c.dim; ++j) marginal[j][static_cast<std::size_t>(c.index[x][j])] += mass[x];
  }
  if (c.dim == 1) return marginal;
  std::size_t product_size = 1;
  for (const auto& m : marginal)
    product_size *= static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](double v) { return v > 0; }));
  if (product_size != joint.size()) return std::nullopt;
  for (const auto& [u, p] : joint) {
    double expect = 1;
    for (std::size_t j = 0; j < c.dim; ++j) expect *= marginal[j][static_cast<std::size_t>(u[j])];
    if (std::abs(p - expect) > rel_tol * std::max(p, expect)) return std::nullopt;
  }
  return marginal;
}

/// Optional extra counter for ordered pairs (last symbol `from`, current symbol `to`).
struct PairCounter {
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t dim = 0;
};

enum class Storage { automatic, dense, sparse };

namespace detail {

template <class Scalar>
constexpr bool is_float_v = std::is_same_v<Scalar, double>;

inline long double binomial_estimate(std::int64_t n, std::int64_t r) {
  long double v = 1;
  for (std::int64_t i = 1; i <= r; ++i) v = v * static_cast<long double>(n - r + i) / static_cast<long double>(i);
  return v;
}

/// Iterates the rows (along the last dimension) of the box [0, hi] inside `grid`.
template <class F>
void for_each_row(const Grid& grid, std::span<const std::int64_t> hi, F&& f) {
  const std::size_t d = grid.dims();
  if (d == 0) {
    f(std::uint64_t{0}, std::int64_t{1});
    return;
  }
  std::vector<std::int64_t> pos(d, 0);
  const std::int64_t row = hi[d - 1] + 1;
  while (true) {
    std::uint64_t base = 0;
    for (std::size_t i = 0; i + 1 < d; ++i) base += static_cast<std::uint64_t>(pos[i]) * grid.stride[i];
    f(base, row);
    std::size_t i = d - 1;
    while (i-- > 0) {
      if (++pos[i] <= hi[i]) break;
      pos[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) return;
  }
}

}  // namespace detail

/// Forward dynamic program over sums of per-step index increments (all non-negative),
/// optionally layered by the last emitted symbol. Float mode renormalizes after every step
/// and keeps the discarded scale in `log_scale()`.
template <class Scalar>
class LatticeDP {
 public:
  LatticeDP(const std::vector<std::vector<std::int64_t>>& deltas, const std::vector<Scalar>& weights,
            std::int64_t horizon, std::optional<PairCounter> pair = std::nullopt,
            std::uint64_t budget = kDefaultCellBudget, Storage storage = Storage::automatic)
      : horizon_(horizon), pair_(pair) {
    if (deltas.empty() || deltas.size() != weights.size())
      throw Error(ErrorCode::invalid_input, "step model needs one weight per outcome");
    const std::size_t d = deltas.front().size();
    max_delta_.assign(d, 0);
    for (const auto& delta : deltas)
      for (std::size_t i = 0; i < d; ++i) {
        if (delta[i] < 0) throw Error(ErrorCode::invalid_input, "step increments must be non-negative");
        max_delta_[i] = std::max(max_delta_[i], delta[i]);
      }
    if (pair_) {
      if (pair_->dim >= d) throw Error(ErrorCode::invalid_input, "pair counter dimension out of range");
      // The pair count grows by at most one per step even though no outcome delta touches it.
      max_delta_[pair_->dim] = std::max<std::int64_t>(max_delta_[pair_->dim], 1);
    }
    std::vector<std::int64_t> extent(d);
    for (std::size_t i = 0; i < d; ++i) extent[i] = horizon * max_delta_[i] + 1;
    grid_ = Grid(extent);
    layers_ = pair_ ? deltas.size() + 1 : 1;

    if (pair_) {
      for (std::size_t x = 0; x < deltas.size(); ++x) {
        if (weights[x] == Scalar(0)) continue;
        outcomes_.push_back({grid_.pack(deltas[x]), weights[x], x});
      }
    } else {
      std::map<std::vector<std::int64_t>, Scalar> merged;
      for (std::size_t x = 0; x < deltas.size(); ++x)
        if (weights[x] != Scalar(0)) merged[deltas[x]] += weights[x];
      for (const auto& [delta, w] : merged) outcomes_.push_back({grid_.pack(delta), w, 0});
    }

    long double box = 1;
    for (auto m : max_delta_) box *= static_cast<long double>(m + 1);
    const long double density = static_cast<long double>(outcomes_.size()) / box;
    const long double dense_cells = static_cast<long double>(grid_.cells) * static_cast<long double>(layers_);
    const auto distinct = static_cast<std::int64_t>(outcomes_.size());
    long double sparse_bound = std::min<long double>(
        dense_cells, detail::binomial_estimate(horizon + distinct - 1, distinct - 1) * static_cast<long double>(layers_));
    if (pair_) sparse_bound = std::min<long double>(dense_cells, sparse_bound * static_cast<long double>(horizon + 1));

    if (storage == Storage::automatic) {
      bool dense_ok = dense_cells <= static_cast<long double>(budget) && density >= 0.05L &&
                      dense_cells <= 8.0L * sparse_bound;
      storage = dense_ok ? Storage::dense : Storage::sparse;
      if (!dense_ok && sparse_bound > static_cast<long double>(budget)) {
        if (dense_cells <= static_cast<long double>(budget)) storage = Storage::dense;
        else
          throw Error(ErrorCode::lattice_blowup,
                      "estimated table of " + std::to_string(static_cast<double>(sparse_bound)) +
                          " cells exceeds the budget of " + std::to_string(budget) +
                          "; reduce n, drop constraint coordinates, or raise the budget");
      }
    }
    if (storage == Storage::dense && dense_cells > static_cast<long double>(budget))
      throw Error(ErrorCode::lattice_blowup, "dense table of " + std::to_string(static_cast<double>(dense_cells)) +
                                                 " cells exceeds the budget of " + std::to_string(budget));
    dense_ = storage == Storage::dense;
    reach_.assign(d, 0);
    if (dense_) {
      data_.assign(static_cast<std::size_t>(layers_ * grid_.cells), Scalar(0));
      data_[0] = Scalar(1);
    } else {
      maps_.resize(layers_);
      maps_[0][0] = Scalar(1);
    }
  }

  std::int64_t steps() const { return steps_; }
  std::int64_t horizon() const { return horizon_; }
  const Grid& grid() const { return grid_; }
  std::size_t layers() const { return layers_; }
  bool dense() const { return dense_; }
  double log_scale() const { return log_scale_; }

  void advance() {
    if (steps_ >= horizon_) throw Error(ErrorCode::invalid_input, "lattice program advanced past its horizon");
    if (dense_) advance_dense();
    else advance_sparse();
    for (std::size_t i = 0; i < reach_.size(); ++i) reach_[i] += max_delta_[i];
    ++steps_;
    if constexpr (detail::is_float_v<Scalar>) renormalize();
  }

  void advance_to(std::int64_t n) {
    while (steps_ < n) advance();
  }

  /// Stored value (float mode: multiply by exp(log_scale()) for the probability).
  Scalar raw(std::size_t layer, std::span<const std::int64_t> u) const {
    if (!grid_.contains(u)) return Scalar(0);
    const auto idx = grid_.pack(u);
    if (dense_) return data_[layer * grid_.cells + idx];
    auto it = maps_[layer].find(idx);
    return it == maps_[layer].end() ? Scalar(0) : it->second;
  }

  /// f(layer, u, raw value) over non-zero cells.
  template <class F>
  void for_each(F&& f) const {
    std::vector<std::int64_t> u(grid_.dims());
    if (dense_) {
      for (std::size_t layer = 0; layer < layers_; ++layer) {
        const std::uint64_t base_layer = layer * grid_.cells;
        detail::for_each_row(grid_, reach_, [&](std::uint64_t base, std::int64_t len) {
          for (std::int64_t i = 0; i < len; ++i) {
            const auto& v = data_[base_layer + base + static_cast<std::uint64_t>(i)];
            if (v == Scalar(0)) continue;
            grid_.unpack(base + static_cast<std::uint64_t>(i), u);
            f(layer, std::span<const std::int64_t>(u), v);
          }
        });
      }
    } else {
      for (std::size_t layer = 0; layer < layers_; ++layer) {
        // Ordered iteration keeps float sums reproducible.
        std::vector<std::uint64_t> keys;
        keys.reserve(maps_[layer].size());
        for (const auto& kv : maps_[layer]) keys.push_back(kv.first);
        std::sort(keys.begin(), keys.end());
        for (auto key : keys) {
          grid_.unpack(key, u);
          f(layer, std::span<const std::int64_t>(u), maps_[layer].at(key));
        }
      }
    }
  }

 private:
  struct Outcome {
    std::uint64_t delta;
    Scalar weight;
    std::size_t symbol;
  };

  std::size_t next_layer(std::size_t, const Outcome& o) const { return pair_ ? o.symbol + 1 : 0; }

  std::uint64_t pair_shift(std::size_t layer, const Outcome& o) const {
    if (pair_ && layer == pair_->from + 1 && o.symbol == pair_->to) return grid_.stride[pair_->dim];
    return 0;
  }

  void advance_dense() {
    std::vector<std::int64_t> next_reach(reach_.size());
    for (std::size_t i = 0; i < reach_.size(); ++i) next_reach[i] = reach_[i] + max_delta_[i];
    next_.assign(data_.size(), Scalar(0));
    auto& next = next_;
    for (std::size_t layer = 0; layer < layers_; ++layer) {
      const std::uint64_t from_layer = layer * grid_.cells;
      for (const auto& o : outcomes_) {
        const std::uint64_t to_layer = next_layer(layer, o) * grid_.cells;
        const std::uint64_t shift = o.delta + pair_shift(layer, o);
        const Scalar w = o.weight;
        detail::for_each_row(grid_, reach_, [&](std::uint64_t base, std::int64_t len) {
          const Scalar* src = data_.data() + from_layer + base;
          Scalar* dst = next.data() + to_layer + base + shift;
          for (std::int64_t i = 0; i < len; ++i) {
            if constexpr (detail::is_float_v<Scalar>) {
              dst[i] += w * src[i];
            } else {
              if (src[i] != 0) dst[i] += w * src[i];
            }
          }
        });
      }
    }
    std::swap(data_, next_);
  }

  void advance_sparse() {
    std::vector<std::unordered_map<std::uint64_t, Scalar>> next(layers_);
    for (std::size_t layer = 0; layer < layers_; ++layer) {
      for (const auto& [idx, v] : maps_[layer]) {
        for (const auto& o : outcomes_) {
          next[next_layer(layer, o)][idx + o.delta + pair_shift(layer, o)] += o.weight * v;
        }
      }
    }
    maps_ = std::move(next);
  }

  void renormalize() {
    double top = 0;
    if (dense_) {
      for (double v : data_) top = std::max(top, v);
    } else {
      for (const auto& m : maps_)
        for (const auto& kv : m) top = std::max(top, kv.second);
    }
    if (top <= 0 || !std::isfinite(top)) throw Error(ErrorCode::lattice_blowup, "lattice program lost all mass");
    const double inv = 1.0 / top;
    if (dense_) {
      for (auto& v : data_) v *= inv;
    } else {
      for (auto& m : maps_)
        for (auto& kv : m) kv.second *= inv;
    }
    log_scale_ += std::log(top);
  }

  std::int64_t horizon_;
  std::optional<PairCounter> pair_;
  Grid grid_;
  std::size_t layers_ = 1;
  std::vector<std::int64_t> max_delta_;
  std::vector<std::int64_t> reach_;
  std::vector<Outcome> outcomes_;
  bool dense_ = true;
  std::vector<Scalar> data_;
  std::vector<Scalar> next_;
  std::vector<std::unordered_map<std::uint64_t, Scalar>> maps_;
  std::int64_t steps_ = 0;
  double log_scale_ = 0;
};

/// Distribution of the index sum u = sum_i u(X_i); the scaled lattice sum is s_j = n b_j + h_j u_j.
template <class Scalar>
class SumDistribution {
 public:
  SumDistribution() = default;

  SumDistribution(std::int64_t n, MeasureId measure, std::vector<std::int64_t> offset, std::vector<std::int64_t> span,
                  std::map<std::vector<std::int64_t>, Scalar> cells, double log_scale)
      : n_(n), measure_(measure), offset_(std::move(offset)), span_(std::move(span)), cells_(std::move(cells)),
        log_scale_(log_scale) {}

  std::int64_t n() const { return n_; }
  MeasureId measure() const { return measure_; }
  ArithmeticMode mode() const {
    return detail::is_float_v<Scalar> ? ArithmeticMode::float64 : ArithmeticMode::rational;
  }
  std::size_t dims() const { return offset_.size(); }
  std::size_t support_size() const { return cells_.size(); }
  double log_scale() const { return log_scale_; }

  /// Probability that the index sum equals u.
  Scalar at_index(const std::vector<std::int64_t>& u) const {
    auto it = cells_.find(u);
    if (it == cells_.end()) return Scalar(0);
    if constexpr (detail::is_float_v<Scalar>) return it->second * std::exp(log_scale_);
    else return it->second;
  }

  double log_at_index(const std::vector<std::int64_t>& u) const {
    auto it = cells_.find(u);
    if (it == cells_.end()) return -std::numeric_limits<double>::infinity();
    if constexpr (detail::is_float_v<Scalar>) return std::log(it->second) + log_scale_;
    else return std::log(to_double(it->second));
  }

  /// Probability that the scaled lattice sum equals s.
  Scalar at_lattice(const std::vector<std::int64_t>& s) const {
    std::vector<std::int64_t> u(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      const std::int64_t shifted = s[j] - n_ * offset_[j];
      if (shifted % span_[j] != 0) return Scalar(0);
      u[j] = shifted / span_[j];
    }
    return at_index(u);
  }

  /// Support keyed by scaled lattice vector, values as probabilities.
  std::map<std::vector<std::int64_t>, Scalar> support() const {
    std::map<std::vector<std::int64_t>, Scalar> out;
    for (const auto& [u, v] : cells_) {
      std::vector<std::int64_t> s(u.size());
      for (std::size_t j = 0; j < u.size(); ++j) s[j] = n_ * offset_[j] + span_[j] * u[j];
      if constexpr (detail::is_float_v<Scalar>) out[s] = v * std::exp(log_scale_);
      else out[s] = v;
    }
    return out;
  }

  /// Raw index-keyed cells (float mode: scaled by exp(-log_scale())).
  const std::map<std::vector<std::int64_t>, Scalar>& cells() const { return cells_; }

  Scalar total() const {
    Scalar t(0);
    for (const auto& kv : cells_) t += kv.second;
    if constexpr (detail::is_float_v<Scalar>) return t * std::exp(log_scale_);
    else return t;
  }

  const std::vector<std::int64_t>& offset() const { return offset_; }
  const std::vector<std::int64_t>& span() const { return span_; }

 private:
  std::int64_t n_ = 0;
  MeasureId measure_ = MeasureId::prior;
  std::vector<std::int64_t> offset_;
  std::vector<std::int64_t> span_;
  std::map<std::vector<std::int64_t>, Scalar> cells_;
  double log_scale_ = 0;
};

template <class Scalar>
SumDistribution<Scalar> snapshot(const LatticeDP<Scalar>& dp, const ConstraintSpec& c, MeasureId measure) {
  std::map<std::vector<std::int64_t>, Scalar> cells;
  dp.for_each([&](std::size_t, std::span<const std::int64_t> u, const Scalar& v) {
    cells[std::vector<std::int64_t>(u.begin(), u.end())] += v;
  });
  return SumDistribution<Scalar>(dp.steps(), measure, c.offset, c.span, std::move(cells), dp.log_scale());
}

/// Exact (rational) or rescaled float distribution of the lattice sum of n i.i.d. draws.
template <class Scalar>
SumDistribution<Scalar> sum_distribution(const ConstraintSpec& c, std::int64_t n, const BasicMeasure<Scalar>& measure,
                                         std::uint64_t budget = kDefaultCellBudget) {
  if (n < 0) throw Error(ErrorCode::invalid_input, "sample size must be non-negative");
  if (measure.mass.size() != c.outcomes()) throw Error(ErrorCode::invalid_input, "measure size mismatch");
  LatticeDP<Scalar> dp(c.index, measure.mass, n, std::nullopt, budget);
  dp.advance_to(n);
  return snapshot(dp, c, measure.id);
}

/// Convolution of two sum distributions over the same statistic.
template <class Scalar>
SumDistribution<Scalar> convolve(const SumDistribution<Scalar>& a, const SumDistribution<Scalar>& b) {
  if (a.dims() != b.dims() || a.offset() != b.offset() || a.span() != b.span())
    throw Error(ErrorCode::invalid_input, "convolution operands use different lattices");
  std::map<std::vector<std::int64_t>, Scalar> cells;
  std::vector<std::int64_t> u(a.dims());
  for (const auto& [ua, va] : a.cells())
    for (const auto& [ub, vb] : b.cells()) {
      for (std::size_t j = 0; j < u.size(); ++j) u[j] = ua[j] + ub[j];
      cells[u] += va * vb;
    }
  return SumDistribution<Scalar>(a.n() + b.n(), a.measure(), a.offset(), a.span(), std::move(cells),
                                 a.log_scale() + b.log_scale());
}

/// log W_m(u) = log P(index sum of m draws = u) for m = 0..max_length, stored in a window of
/// half-width `window` (index units, per coordinate) around floor(m tau). Product measures are
/// stored per coordinate.
class SumTable {
 public:
  static SumTable build(const ConstraintSpec& c, const Measure& measure, std::int64_t max_length,
                        std::optional<std::int64_t> window = std::nullopt, std::uint64_t budget = kDefaultCellBudget) {
    SumTable table;
    table.max_length_ = max_length;
    table.dim_ = c.dim;
    for (const auto& t : c.target_index) table.tau_.push_back(t);
    auto factors = product_factors(c, measure.mass);
    if (factors) {
      std::map<std::vector<double>, std::size_t> seen;
      for (std::size_t j = 0; j < c.dim; ++j) {
        std::vector<double> signature = (*factors)[j];
        signature.push_back(to_double(c.target_index[j]));
        auto it = seen.find(signature);
        if (it != seen.end()) {
          table.axis_of_.push_back(it->second);
          continue;
        }
        std::vector<std::vector<std::int64_t>> deltas;
        std::vector<double> weights;
        for (std::size_t v = 0; v < (*factors)[j].size(); ++v) {
          if ((*factors)[j][v] <= 0) continue;
          deltas.push_back({static_cast<std::int64_t>(v)});
          weights.push_back((*factors)[j][v]);
        }
        const std::int64_t half = window.value_or(max_length * c.max_index[j]);
        table.axes_.push_back(sweep(deltas, weights, {c.target_index[j]}, max_length, half, budget));
        table.axis_of_.push_back(table.axes_.size() - 1);
        seen.emplace(signature, table.axes_.size() - 1);
      }
      table.factorized_ = true;
    } else {
      std::int64_t half = 0;
      for (std::size_t j = 0; j < c.dim; ++j) half = std::max(half, window.value_or(max_length * c.max_index[j]));
      table.axes_.push_back(sweep(c.index, measure.mass, c.target_index, max_length, half, budget));
      table.factorized_ = false;
    }
    return table;
  }

  std::int64_t max_length() const { return max_length_; }
  bool factorized() const { return factorized_; }

  /// nullopt when u is outside the stored window; -inf when the mass is zero.
  std::optional<double> log_mass(std::int64_t m, std::span<const std::int64_t> u) const {
    if (m < 0 || m > max_length_) return std::nullopt;
    if (factorized_) {
      double total = 0;
      for (std::size_t j = 0; j < dim_; ++j) {
        auto v = axes_[axis_of_[j]].lookup(m, u.subspan(j, 1));
        if (!v) return std::nullopt;
        total += *v;
      }
      return total;
    }
    return axes_.front().lookup(m, u);
  }

  /// log P(C_m) when m tau is integral and inside the table; -inf otherwise.
  double log_constraint_mass(std::int64_t m) const {
    std::vector<std::int64_t> u(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
      Rational v = tau_[j] * m;
      if (!is_integer(v)) return -std::numeric_limits<double>::infinity();
      u[j] = boost::multiprecision::numerator(v).convert_to<std::int64_t>();
    }
    return log_mass(m, u).value_or(-std::numeric_limits<double>::infinity());
  }

 private:
  struct Block {
    std::size_t dims = 0;
    std::vector<std::vector<std::int64_t>> lo;   // per m
    std::vector<std::vector<std::int64_t>> ext;  // per m
    std::vector<std::vector<double>> values;     // per m, log mass over the box

    std::optional<double> lookup(std::int64_t m, std::span<const std::int64_t> u) const {
      const auto mi = static_cast<std::size_t>(m);
      std::size_t idx = 0;
      for (std::size_t j = 0; j < dims; ++j) {
        const std::int64_t off = u[j] - lo[mi][j];
        if (off < 0 || off >= ext[mi][j]) return std::nullopt;
        idx = idx * static_cast<std::size_t>(ext[mi][j]) + static_cast<std::size_t>(off);
      }
      return values[mi][idx];
    }
  };

  static Block sweep(const std::vector<std::vector<std::int64_t>>& deltas, const std::vector<double>& weights,
                     const std::vector<Rational>& tau, std::int64_t max_length, std::int64_t half,
                     std::uint64_t budget) {
    Block block;
    block.dims = tau.size();
    std::vector<std::int64_t> max_delta(block.dims, 0);
    for (const auto& d : deltas)
      for (std::size_t j = 0; j < block.dims; ++j) max_delta[j] = std::max(max_delta[j], d[j]);
    auto box_for = [&](std::int64_t m, std::vector<std::int64_t>& lo, std::vector<std::int64_t>& ext) {
      lo.assign(block.dims, 0);
      ext.assign(block.dims, 0);
      for (std::size_t j = 0; j < block.dims; ++j) {
        Rational v = tau[j] * m;
        const std::int64_t ctr =
            (boost::multiprecision::numerator(v) / boost::multiprecision::denominator(v)).convert_to<std::int64_t>();
        lo[j] = std::max<std::int64_t>(0, ctr - half);
        const std::int64_t hi = std::min<std::int64_t>(m * max_delta[j], ctr + half);
        ext[j] = std::max<std::int64_t>(0, hi - lo[j] + 1);
      }
    };
    long double cells = 0;
    {
      std::vector<std::int64_t> lo, ext;
      for (std::int64_t m = 0; m <= max_length; ++m) {
        box_for(m, lo, ext);
        long double c = 1;
        for (auto e : ext) c *= static_cast<long double>(e);
        cells += c;
      }
    }
    if (cells > static_cast<long double>(budget))
      throw Error(ErrorCode::lattice_blowup, "sum table of " + std::to_string(static_cast<double>(cells)) +
                                                 " cells exceeds the budget");
    LatticeDP<double> dp(deltas, weights, max_length, std::nullopt, budget);
    std::vector<std::int64_t> u(block.dims);
    for (std::int64_t m = 0; m <= max_length; ++m) {
      if (m > 0) dp.advance();
      std::vector<std::int64_t> lo, ext;
      box_for(m, lo, ext);
      std::size_t count = 1;
      for (auto e : ext) count *= static_cast<std::size_t>(e);
      std::vector<double> vals(count, -std::numeric_limits<double>::infinity());
      for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t rest = idx;
        for (std::size_t j = block.dims; j-- > 0;) {
          u[j] = lo[j] + static_cast<std::int64_t>(rest % static_cast<std::size_t>(ext[j]));
          rest /= static_cast<std::size_t>(ext[j]);
        }
        const double raw = dp.raw(0, u);
        if (raw > 0) vals[idx] = std::log(raw) + dp.log_scale();
      }
      block.lo.push_back(std::move(lo));
      block.ext.push_back(std::move(ext));
      block.values.push_back(std::move(vals));
    }
    return block;
  }

  std::int64_t max_length_ = 0;
  std::size_t dim_ = 0;
  std::vector<Rational> tau_;
  bool factorized_ = false;
  std::vector<Block> axes_;
  std::vector<std::size_t> axis_of_;
};

}  // namespace maxent_lab
