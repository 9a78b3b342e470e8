#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "maxent_lab/error.hpp"
#include "maxent_lab/rational.hpp"

namespace maxent_lab {

inline constexpr std::uint64_t kDefaultCellBudget = 50'000'000;

/// Finite outcome set with an exact prior mass function.
struct SampleSpace {
  std::vector<std::string> labels;
  std::vector<Rational> prior;
  std::vector<double> prior_mass;
  /// Position of each kept outcome in the caller's original list.
  std::vector<std::size_t> source_index;
  std::vector<std::string> warnings;

  std::size_t size() const { return labels.size(); }

  std::optional<std::size_t> find(std::string_view label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels.begin());
  }
};

inline SampleSpace build_space(const std::vector<std::string>& labels, const std::vector<Rational>& weights) {
  if (labels.empty()) throw Error(ErrorCode::empty_space, "at least one outcome is required");
  if (labels.size() != weights.size())
    throw Error(ErrorCode::invalid_input, "got " + std::to_string(labels.size()) + " labels but " +
                                              std::to_string(weights.size()) + " weights");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) throw Error(ErrorCode::invalid_input, "duplicate outcome label '" + l + "'");
  }
  Rational total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0) throw Error(ErrorCode::invalid_input, "negative weight for outcome '" + labels[i] + "'");
    total += weights[i];
  }
  if (total == 0) throw Error(ErrorCode::all_zero_weights, "prior weights must not all be zero");

  SampleSpace space;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (weights[i] == 0) {
      space.warnings.push_back("dropped zero-mass outcome '" + labels[i] + "'");
      continue;
    }
    space.labels.push_back(labels[i]);
    space.prior.push_back(weights[i] / total);
    space.prior_mass.push_back(to_double(space.prior.back()));
    space.source_index.push_back(i);
  }
  return space;
}

/// Mixed-radix packing of non-negative integer vectors inside a box.
struct Grid {
  std::vector<std::int64_t> extent;
  std::vector<std::uint64_t> stride;
  std::uint64_t cells = 1;

  Grid() = default;

  explicit Grid(std::vector<std::int64_t> extents) : extent(std::move(extents)) {
    stride.assign(extent.size(), 1);
    long double total = 1;
    for (std::size_t d = extent.size(); d-- > 0;) {
      stride[d] = cells;
      total *= static_cast<long double>(extent[d]);
      if (total > 1.8e19L) throw Error(ErrorCode::lattice_blowup, "lattice index space exceeds 64 bits");
      cells *= static_cast<std::uint64_t>(extent[d]);
    }
  }

  std::size_t dims() const { return extent.size(); }

  bool contains(std::span<const std::int64_t> v) const {
    for (std::size_t d = 0; d < extent.size(); ++d)
      if (v[d] < 0 || v[d] >= extent[d]) return false;
    return true;
  }

  std::uint64_t pack(std::span<const std::int64_t> v) const {
    std::uint64_t idx = 0;
    for (std::size_t d = 0; d < extent.size(); ++d) idx += static_cast<std::uint64_t>(v[d]) * stride[d];
    return idx;
  }

  void unpack(std::uint64_t idx, std::span<std::int64_t> out) const {
    for (std::size_t d = 0; d < extent.size(); ++d) {
      out[d] = static_cast<std::int64_t>(idx / stride[d]);
      idx %= stride[d];
    }
  }
};

/// Integer lattice representation of one real-valued statistic coordinate:
/// scale * value = offset + span * index, index in {0, ..., max_index}.
struct LatticeAxis {
  std::int64_t scale = 1;
  std::int64_t offset = 0;
  std::int64_t span = 1;
  std::int64_t max_index = 0;
  std::vector<std::int64_t> index;  // per outcome
};

namespace detail {

inline LatticeAxis derive_axis(const std::vector<Rational>& values) {
  BigInt scale = 1;
  for (const auto& v : values) scale = lcm(scale, boost::multiprecision::denominator(v));
  std::vector<BigInt> scaled;
  scaled.reserve(values.size());
  for (const auto& v : values) scaled.push_back(boost::multiprecision::numerator(v * Rational(scale)));
  BigInt lo = *std::min_element(scaled.begin(), scaled.end());
  BigInt span = 0;
  for (const auto& s : scaled) span = gcd(span, s - lo);
  LatticeAxis axis;
  axis.scale = to_int64(scale, "lattice scale");
  axis.offset = to_int64(lo, "lattice offset");
  axis.span = span == 0 ? 1 : to_int64(span, "lattice span");
  for (const auto& s : scaled) {
    axis.index.push_back(to_int64((s - lo) / (span == 0 ? BigInt(1) : span), "lattice index"));
    axis.max_index = std::max(axis.max_index, axis.index.back());
  }
  return axis;
}

}  // namespace detail

/// Lattice-form constraint statistic T with target t.
struct ConstraintSpec {
  std::size_t dim = 0;
  std::vector<std::vector<Rational>> values;  // [outcome][coordinate]
  std::vector<Rational> target;
  std::vector<std::int64_t> scale;
  std::vector<std::int64_t> span;
  std::vector<std::int64_t> offset;
  std::vector<std::int64_t> max_index;
  std::vector<std::vector<std::int64_t>> index;  // [outcome][coordinate]
  std::vector<Rational> target_index;            // (scale * t - offset) / span
  std::vector<std::vector<double>> values_f;
  std::vector<double> target_f;

  std::size_t outcomes() const { return values.size(); }

  /// Span in the statistic's own units.
  double unscaled_span(std::size_t j) const {
    return static_cast<double>(span[j]) / static_cast<double>(scale[j]);
  }

  /// n * target_index when every coordinate is an integer, i.e. n t lies on the lattice.
  std::optional<std::vector<std::int64_t>> target_sum_index(std::int64_t n) const {
    std::vector<std::int64_t> out(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      Rational v = target_index[j] * n;
      if (!is_integer(v)) return std::nullopt;
      out[j] = to_int64(boost::multiprecision::numerator(v), "target index");
    }
    return out;
  }

  /// Smallest n with n * target_index integral.
  std::int64_t target_period() const {
    BigInt d = 1;
    for (const auto& t : target_index) d = lcm(d, boost::multiprecision::denominator(t));
    return to_int64(d, "target period");
  }

  /// Scaled lattice coordinate s_j = n b_j + h_j u_j of an index sum.
  std::int64_t lattice_coordinate(std::size_t j, std::int64_t n, std::int64_t index_sum) const {
    return n * offset[j] + span[j] * index_sum;
  }
};

inline ConstraintSpec derive_lattice(const std::vector<std::vector<Rational>>& values,
                                     const std::vector<Rational>& target) {
  if (values.empty()) throw Error(ErrorCode::empty_space, "no outcomes");
  const std::size_t k = target.size();
  if (k == 0) throw Error(ErrorCode::invalid_input, "constraint dimension must be positive");
  for (std::size_t x = 0; x < values.size(); ++x)
    if (values[x].size() != k)
      throw Error(ErrorCode::invalid_input, "outcome " + std::to_string(x) + " has " +
                                                std::to_string(values[x].size()) + " statistic values, expected " +
                                                std::to_string(k));
  ConstraintSpec c;
  c.dim = k;
  c.values = values;
  c.target = target;
  c.index.assign(values.size(), std::vector<std::int64_t>(k));
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<Rational> column;
    for (const auto& row : values) column.push_back(row[j]);
    auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    if (*lo == *hi)
      throw Error(ErrorCode::degenerate_coordinate,
                  "coordinate " + std::to_string(j) + " is constant; the covariance matrix cannot be invertible");
    if (target[j] < *lo || target[j] > *hi)
      throw Error(ErrorCode::target_outside_hull, "target coordinate " + std::to_string(j) + " = " +
                                                     to_string(target[j]) + " lies outside [" + to_string(*lo) +
                                                     ", " + to_string(*hi) + "]");
    LatticeAxis axis = detail::derive_axis(column);
    c.scale.push_back(axis.scale);
    c.offset.push_back(axis.offset);
    c.span.push_back(axis.span);
    c.max_index.push_back(axis.max_index);
    for (std::size_t x = 0; x < values.size(); ++x) c.index[x][j] = axis.index[x];
    c.target_index.push_back((target[j] * axis.scale - axis.offset) / axis.span);
  }
  for (const auto& row : values) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(to_double(v));
    c.values_f.push_back(std::move(r));
  }
  for (const auto& t : target) c.target_f.push_back(to_double(t));
  return c;
}

/// True when the set of index vectors is the Cartesian product of its coordinate projections.
inline bool has_product_support(const ConstraintSpec& c) {
  if (c.dim == 1) return true;
  std::set<std::vector<std::int64_t>> points(c.index.begin(), c.index.end());
  std::size_t product = 1;
  for (std::size_t j = 0; j < c.dim; ++j) {
    std::set<std::int64_t> axis;
    for (const auto& p : points) axis.insert(p[j]);
    product *= axis.size();
    if (product > points.size()) return false;
  }
  return product == points.size();
}

/// Answers "can r steps sum to index vector v" for r up to a fixed horizon.
class Reachability {
 public:
  Reachability(const ConstraintSpec& c, std::int64_t max_steps, std::uint64_t cell_budget = kDefaultCellBudget)
      : dim_(c.dim), max_steps_(max_steps), product_(has_product_support(c)) {
    if (product_) {
      axes_.resize(dim_);
      long double cells = 0;
      for (std::size_t j = 0; j < dim_; ++j)
        cells += static_cast<long double>(max_steps + 1) * (max_steps * c.max_index[j] + 1) / 2.0L;
      if (cells > static_cast<long double>(cell_budget) * 8)
        throw Error(ErrorCode::lattice_blowup, "reachability table too large; reduce n_max");
      for (std::size_t j = 0; j < dim_; ++j) {
        std::set<std::int64_t> steps;
        for (const auto& row : c.index) steps.insert(row[j]);
        auto& table = axes_[j];
        table.push_back(std::vector<bool>{true});
        for (std::int64_t r = 1; r <= max_steps; ++r) {
          const auto& prev = table.back();
          std::vector<bool> next(static_cast<std::size_t>(r * c.max_index[j] + 1), false);
          for (std::size_t v = 0; v < prev.size(); ++v) {
            if (!prev[v]) continue;
            for (auto s : steps) next[v + static_cast<std::size_t>(s)] = true;
          }
          table.push_back(std::move(next));
        }
      }
    } else {
      std::vector<std::int64_t> ext;
      for (std::size_t j = 0; j < dim_; ++j) ext.push_back(max_steps * c.max_index[j] + 1);
      grid_ = Grid(ext);
      std::set<std::uint64_t> deltas;
      for (const auto& row : c.index) deltas.insert(grid_.pack(row));
      sets_.push_back({0});
      std::uint64_t total = 1;
      for (std::int64_t r = 1; r <= max_steps; ++r) {
        std::unordered_set<std::uint64_t> next;
        for (auto v : sets_.back())
          for (auto d : deltas) next.insert(v + d);
        total += next.size();
        if (total > cell_budget) throw Error(ErrorCode::lattice_blowup, "reachability sets exceed the cell budget");
        sets_.push_back(std::move(next));
      }
    }
  }

  std::int64_t max_steps() const { return max_steps_; }

  bool reachable(std::int64_t steps, std::span<const std::int64_t> v) const {
    if (steps < 0 || steps > max_steps_) throw Error(ErrorCode::invalid_input, "reachability query beyond horizon");
    if (product_) {
      for (std::size_t j = 0; j < dim_; ++j) {
        const auto& row = axes_[j][static_cast<std::size_t>(steps)];
        if (v[j] < 0 || v[j] >= static_cast<std::int64_t>(row.size()) || !row[static_cast<std::size_t>(v[j])])
          return false;
      }
      return true;
    }
    if (!grid_.contains(v)) return false;
    return sets_[static_cast<std::size_t>(steps)].count(grid_.pack(v)) > 0;
  }

 private:
  std::size_t dim_;
  std::int64_t max_steps_;
  bool product_;
  std::vector<std::vector<std::vector<bool>>> axes_;
  Grid grid_;
  std::vector<std::unordered_set<std::uint64_t>> sets_;
};

/// Whether C_n is non-empty for each n <= n_max.
struct FeasibilityTable {
  std::int64_t n_max = 0;
  std::vector<bool> feasible;  // index n, entry 0 unused

  bool is_feasible(std::int64_t n) const {
    return n >= 1 && n <= n_max && feasible[static_cast<std::size_t>(n)];
  }

  std::vector<std::int64_t> sizes() const {
    std::vector<std::int64_t> out;
    for (std::int64_t n = 1; n <= n_max; ++n)
      if (feasible[static_cast<std::size_t>(n)]) out.push_back(n);
    return out;
  }
};

namespace detail {

/// dst |= src << shift over packed 64-bit words.
inline void shift_or(const std::vector<std::uint64_t>& src, std::size_t shift, std::vector<std::uint64_t>& dst) {
  const std::size_t words = shift / 64, bits = shift % 64;
  for (std::size_t i = src.size(); i-- > 0;) {
    if (src[i] == 0) continue;
    const std::size_t lo = i + words;
    if (lo < dst.size()) dst[lo] |= src[i] << bits;
    if (bits != 0 && lo + 1 < dst.size()) dst[lo + 1] |= src[i] >> (64 - bits);
  }
}

inline bool test_bit(const std::vector<std::uint64_t>& row, std::int64_t v) {
  if (v < 0) return false;
  const auto i = static_cast<std::size_t>(v);
  return i / 64 < row.size() && ((row[i / 64] >> (i % 64)) & 1u) != 0;
}

}  // namespace detail

/// Rolling sweep; nothing beyond the current step is stored.
inline FeasibilityTable feasible_sizes(const SampleSpace& space, const ConstraintSpec& c, std::int64_t n_max,
                                       std::uint64_t cell_budget = kDefaultCellBudget) {
  if (n_max < 1) throw Error(ErrorCode::invalid_input, "n_max must be at least 1");
  if (space.size() != c.outcomes()) throw Error(ErrorCode::invalid_input, "constraint and sample space disagree");
  FeasibilityTable table;
  table.n_max = n_max;
  table.feasible.assign(static_cast<std::size_t>(n_max + 1), false);
  // Only multiples of the target period can be feasible.
  const std::int64_t period = c.target_period();
  if (period > n_max) return table;
  if (has_product_support(c)) {
    std::vector<std::vector<std::int64_t>> steps(c.dim);
    std::vector<std::vector<std::uint64_t>> rows(c.dim);
    for (std::size_t j = 0; j < c.dim; ++j) {
      std::set<std::int64_t> st;
      for (const auto& row : c.index) st.insert(row[j]);
      steps[j].assign(st.begin(), st.end());
      rows[j].assign(1, 1u);
    }
    for (std::int64_t r = 1; r <= n_max; ++r) {
      for (std::size_t j = 0; j < c.dim; ++j) {
        std::vector<std::uint64_t> next(static_cast<std::size_t>((r * c.max_index[j]) / 64 + 1), 0);
        for (auto s : steps[j]) detail::shift_or(rows[j], static_cast<std::size_t>(s), next);
        rows[j] = std::move(next);
      }
      if (r % period != 0) continue;
      auto t = c.target_sum_index(r);
      bool ok = t.has_value();
      for (std::size_t j = 0; j < c.dim && ok; ++j) ok = detail::test_bit(rows[j], (*t)[j]);
      table.feasible[static_cast<std::size_t>(r)] = ok;
    }
    return table;
  }
  std::vector<std::int64_t> ext;
  for (std::size_t j = 0; j < c.dim; ++j) ext.push_back(n_max * c.max_index[j] + 1);
  Grid grid(ext);
  std::set<std::uint64_t> deltas;
  for (const auto& row : c.index) deltas.insert(grid.pack(row));
  std::unordered_set<std::uint64_t> current{0};
  for (std::int64_t r = 1; r <= n_max; ++r) {
    std::unordered_set<std::uint64_t> next;
    for (auto v : current)
      for (auto d : deltas) next.insert(v + d);
    if (next.size() > cell_budget) throw Error(ErrorCode::lattice_blowup, "reachable sums exceed the cell budget");
    current = std::move(next);
    if (r % period != 0) continue;
    auto t = c.target_sum_index(r);
    table.feasible[static_cast<std::size_t>(r)] = t && current.count(grid.pack(*t)) > 0;
  }
  return table;
}

/// The first `count` feasible sizes in increasing order, searching up to `search_limit`.
inline std::vector<std::int64_t> first_feasible_sizes(const SampleSpace& space, const ConstraintSpec& c,
                                                      std::size_t count, std::int64_t search_limit) {
  std::int64_t horizon = std::max<std::int64_t>(16, 2 * c.target_period());
  while (true) {
    horizon = std::min(horizon, search_limit);
    auto sizes = feasible_sizes(space, c, horizon).sizes();
    if (sizes.size() >= count) {
      sizes.resize(count);
      return sizes;
    }
    if (horizon >= search_limit) {
      if (sizes.empty()) throw Error(ErrorCode::no_feasible_sizes, "no n <= " + std::to_string(search_limit) +
                                                                        " admits a sequence meeting the target");
      return sizes;
    }
    horizon *= 2;
  }
}

/// Builds one sequence in C_n by depth-first search. With `first_passage`, no proper
/// prefix may itself satisfy the constraint.
inline std::optional<std::vector<std::size_t>> witness_sequence(const ConstraintSpec& c, const Reachability& reach,
                                                                std::int64_t n, bool first_passage,
                                                                std::uint64_t node_budget = 50'000'000) {
  auto target = c.target_sum_index(n);
  if (!target || n < 1 || !reach.reachable(n, *target)) return std::nullopt;
  const std::size_t k = c.dim;
  const std::size_t alphabet = c.outcomes();
  std::vector<std::size_t> choice(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<std::int64_t>> sums(static_cast<std::size_t>(n + 1), std::vector<std::int64_t>(k, 0));
  std::vector<std::optional<std::vector<std::int64_t>>> hit(static_cast<std::size_t>(n + 1));
  if (first_passage)
    for (std::int64_t i = 1; i < n; ++i) hit[static_cast<std::size_t>(i)] = c.target_sum_index(i);
  std::vector<std::int64_t> remaining(k);
  std::int64_t depth = 0;
  std::uint64_t nodes = 0;
  while (true) {
    if (depth == n) return choice;
    auto d = static_cast<std::size_t>(depth);
    bool advanced = false;
    for (std::size_t x = choice[d]; x < alphabet; ++x) {
      if (++nodes > node_budget) throw Error(ErrorCode::enumeration_infeasible, "witness search budget exhausted");
      auto& next = sums[d + 1];
      for (std::size_t j = 0; j < k; ++j) {
        next[j] = sums[d][j] + c.index[x][j];
        remaining[j] = (*target)[j] - next[j];
      }
      if (hit[d + 1] && *hit[d + 1] == next) continue;
      if (!reach.reachable(n - depth - 1, remaining)) continue;
      choice[d] = x;
      ++depth;
      if (depth < n) choice[static_cast<std::size_t>(depth)] = 0;
      advanced = true;
      break;
    }
    if (advanced) continue;
    if (depth == 0) return std::nullopt;
    --depth;
    ++choice[static_cast<std::size_t>(depth)];
  }
}

}  // namespace maxent_lab
