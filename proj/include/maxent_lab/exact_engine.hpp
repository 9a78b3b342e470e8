#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "maxent_lab/error.hpp"
#include "maxent_lab/events.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/lattice_dp.hpp"
#include "maxent_lab/maxent.hpp"
#include "maxent_lab/rational.hpp"

namespace maxent_lab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Natural log of a probability held in either arithmetic.
template <class Scalar>
double log_of(const Scalar& v) {
  if constexpr (detail::is_float_v<Scalar>) {
    return v > 0 ? std::log(v) : kNegInf;
  } else {
    if (v == 0) return kNegInf;
    // Split off powers of two so tiny rationals do not underflow.
    const auto& num = boost::multiprecision::numerator(v);
    const auto& den = boost::multiprecision::denominator(v);
    const auto nb = static_cast<long>(boost::multiprecision::msb(num));
    const auto db = static_cast<long>(boost::multiprecision::msb(den));
    const long shift_n = std::max(0L, nb - 60);
    const long shift_d = std::max(0L, db - 60);
    const double a = static_cast<double>(BigInt(num >> shift_n).convert_to<long double>());
    const double b = static_cast<double>(BigInt(den >> shift_d).convert_to<long double>());
    return std::log(a) - std::log(b) + static_cast<double>(shift_n - shift_d) * std::numbers::ln2;
  }
}

/// P(T-bar^(n) = t) under `measure`; zero for infeasible n.
template <class Scalar>
Scalar constraint_prob(const ConstraintSpec& c, std::int64_t n, const BasicMeasure<Scalar>& measure,
                       std::uint64_t budget = kDefaultCellBudget) {
  if (n < 1) throw Error(ErrorCode::invalid_input, "constraint probability needs n >= 1");
  auto target = c.target_sum_index(n);
  if (!target) return Scalar(0);
  return sum_distribution(c, n, measure, budget).at_index(*target);
}

/// Natural log of P(T-bar^(n) = t) in float arithmetic; product measures are split per coordinate.
inline double log_constraint_prob(const ConstraintSpec& c, std::int64_t n, const Measure& measure,
                                  std::uint64_t budget = kDefaultCellBudget) {
  if (n < 1) throw Error(ErrorCode::invalid_input, "constraint probability needs n >= 1");
  auto target = c.target_sum_index(n);
  if (!target) return kNegInf;
  if (auto factors = product_factors(c, measure.mass); factors && c.dim > 1) {
    double total = 0;
    for (std::size_t j = 0; j < c.dim; ++j) {
      std::vector<std::vector<std::int64_t>> deltas;
      std::vector<double> weights;
      for (std::size_t v = 0; v < (*factors)[j].size(); ++v) {
        if ((*factors)[j][v] <= 0) continue;
        deltas.push_back({static_cast<std::int64_t>(v)});
        weights.push_back((*factors)[j][v]);
      }
      LatticeDP<double> dp(deltas, weights, n, std::nullopt, budget);
      dp.advance_to(n);
      const std::int64_t u = (*target)[j];
      const double raw = dp.raw(0, std::span<const std::int64_t>(&u, 1));
      if (raw <= 0) return kNegInf;
      total += std::log(raw) + dp.log_scale();
    }
    return total;
  }
  LatticeDP<double> dp(c.index, measure.mass, n, std::nullopt, budget);
  dp.advance_to(n);
  const double raw = dp.raw(0, *target);
  return raw > 0 ? std::log(raw) + dp.log_scale() : kNegInf;
}

/// Masses of A, A and C_n, and C_n from one joint program (float mode: scaled by exp(log_scale)).
template <class Scalar>
struct EventMasses {
  Scalar event{0};
  Scalar joint{0};
  Scalar constraint{0};
  double log_scale = 0;

  double log_event() const { return log_of(event) + log_scale; }
  double log_joint() const { return log_of(joint) + log_scale; }
  double log_constraint() const { return log_of(constraint) + log_scale; }

  /// P(A | C_n); nullopt for infeasible n.
  std::optional<Scalar> conditional() const {
    if (constraint == Scalar(0)) return std::nullopt;
    return joint / constraint;
  }
};

template <class Scalar>
EventMasses<Scalar> event_masses(const ConstraintSpec& c, const EventSpec& event, std::int64_t n,
                                 const BasicMeasure<Scalar>& measure, std::uint64_t budget = kDefaultCellBudget) {
  if (n < 1) throw Error(ErrorCode::invalid_input, "event probability needs n >= 1");
  auto el = EventLattice::build(c, event);
  auto target = c.target_sum_index(n);
  LatticeDP<Scalar> dp(el.deltas, measure.mass, n, el.pair, budget);
  dp.advance_to(n);
  EventMasses<Scalar> out;
  out.log_scale = dp.log_scale();
  dp.for_each([&](std::size_t layer, std::span<const std::int64_t> u, const Scalar& v) {
    const bool in_c = target && std::equal(target->begin(), target->end(), u.begin());
    const bool in_a = el.holds(u, layer, n);
    if (in_c) out.constraint += v;
    if (in_a) out.event += v;
    if (in_a && in_c) out.joint += v;
  });
  return out;
}

/// P(A_n | C_n) under `measure`; nullopt (an undefined record) for infeasible n.
template <class Scalar>
std::optional<Scalar> conditional_event_prob(const ConstraintSpec& c, const EventSpec& event, std::int64_t n,
                                             const BasicMeasure<Scalar>& measure,
                                             std::uint64_t budget = kDefaultCellBudget) {
  return event_masses(c, event, n, measure, budget).conditional();
}

inline constexpr std::int64_t kDefaultMarginalCap = 8;
inline constexpr std::uint64_t kEnumerationCap = 10'000'000;

/// Q^m(. | C_n) on X^m, rows in lexicographic order of outcome indices.
template <class Scalar>
struct ConditionalMarginal {
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::size_t alphabet = 0;
  std::vector<Scalar> mass;
  double tv = 0;  // against the product of `reference`

  std::vector<std::size_t> sequence(std::size_t row) const {
    std::vector<std::size_t> seq(static_cast<std::size_t>(m));
    for (std::size_t i = seq.size(); i-- > 0;) {
      seq[i] = row % alphabet;
      row /= alphabet;
    }
    return seq;
  }
};

template <class Scalar>
ConditionalMarginal<Scalar> conditional_marginal(const ConstraintSpec& c, std::int64_t m, std::int64_t n,
                                                 const BasicMeasure<Scalar>& measure,
                                                 const std::vector<double>& reference,
                                                 std::int64_t m_cap = kDefaultMarginalCap,
                                                 std::uint64_t budget = kDefaultCellBudget) {
  if (m < 1 || m > n - 1) throw Error(ErrorCode::invalid_input, "marginal length must satisfy 1 <= m <= n-1");
  if (m > m_cap)
    throw Error(ErrorCode::enumeration_infeasible,
                "marginal length " + std::to_string(m) + " exceeds the cap " + std::to_string(m_cap));
  const std::size_t alphabet = c.outcomes();
  long double rows = std::pow(static_cast<long double>(alphabet), static_cast<long double>(m));
  if (rows > static_cast<long double>(kEnumerationCap))
    throw Error(ErrorCode::enumeration_infeasible, "|X|^m exceeds the enumeration cap");
  auto target = c.target_sum_index(n);
  if (!target) throw Error(ErrorCode::infeasible_size, "n = " + std::to_string(n) + " is not feasible");

  LatticeDP<Scalar> dp(c.index, measure.mass, n, std::nullopt, budget);
  dp.advance_to(n - m);
  auto rest = snapshot(dp, c, measure.id);
  dp.advance_to(n);
  const Scalar total = dp.raw(0, *target);
  if (total == Scalar(0)) throw Error(ErrorCode::infeasible_size, "n = " + std::to_string(n) + " is not feasible");

  ConditionalMarginal<Scalar> out;
  out.m = m;
  out.n = n;
  out.alphabet = alphabet;
  out.mass.assign(static_cast<std::size_t>(rows), Scalar(0));
  std::vector<std::int64_t> need(c.dim);
  Scalar scale_ratio(1);
  if constexpr (detail::is_float_v<Scalar>) scale_ratio = std::exp(rest.log_scale() - dp.log_scale());
  for (std::size_t row = 0; row < out.mass.size(); ++row) {
    auto seq = out.sequence(row);
    Scalar w(1);
    for (std::size_t j = 0; j < c.dim; ++j) need[j] = (*target)[j];
    double ref = 1;
    for (auto x : seq) {
      w *= measure.mass[x];
      ref *= reference[x];
      for (std::size_t j = 0; j < c.dim; ++j) need[j] -= c.index[x][j];
    }
    auto it = rest.cells().find(need);
    if (it != rest.cells().end() && w != Scalar(0)) out.mass[row] = w * it->second * scale_ratio / total;
    double got;
    if constexpr (detail::is_float_v<Scalar>) got = out.mass[row];
    else got = to_double(out.mass[row]);
    out.tv += std::abs(got - ref);
  }
  out.tv *= 0.5;
  return out;
}

/// Marginalizes a length-(m+1) table over its last symbol.
template <class Scalar>
ConditionalMarginal<Scalar> drop_last(const ConditionalMarginal<Scalar>& t) {
  ConditionalMarginal<Scalar> out;
  out.m = t.m - 1;
  out.n = t.n;
  out.alphabet = t.alphabet;
  out.mass.assign(t.mass.size() / t.alphabet, Scalar(0));
  for (std::size_t row = 0; row < t.mass.size(); ++row) out.mass[row / t.alphabet] += t.mass[row];
  return out;
}

/// prod_j h_j / sqrt((2 pi)^k det Sigma) in the statistic's own units.
inline double concentration_limit(const ConstraintSpec& c, const MaxEntSolution& sol) {
  double spans = 1;
  for (std::size_t j = 0; j < c.dim; ++j) spans *= c.unscaled_span(j);
  const double det = sol.covariance.determinant();
  return spans / std::sqrt(std::pow(2 * std::numbers::pi, static_cast<double>(c.dim)) * det);
}

/// log2 of sqrt((2 pi n)^k det Sigma) / prod_j h_j, the local-CLT normalizer of P(C_n).
inline double clt_log2_normalizer(const ConstraintSpec& c, const MaxEntSolution& sol, std::int64_t n) {
  double v = 0.5 * static_cast<double>(c.dim) * std::log2(2 * std::numbers::pi * static_cast<double>(n)) +
             0.5 * std::log2(sol.covariance.determinant());
  for (std::size_t j = 0; j < c.dim; ++j) v -= std::log2(c.unscaled_span(j));
  return v;
}

struct EventRecord {
  std::string name;
  std::optional<double> q_given_c;  // Q(A_n | C_n)
  double p_event = 0;               // P~(A_n)
  double slack = 0;                 // P~(A_n) - n^{-k/2} c_n Q(A_n | C_n)
  double p_event_in_c = 0;          // P~(A_n and C_n)
  double slack_in_c = 0;            // same bound for the event intersected with C_n
  bool exact_zero_slack_in_c = false;
};

struct ConcentrationRecord {
  std::int64_t n = 0;
  bool feasible = false;
  double log_p_constraint = kNegInf;  // ln P~(C_n)
  double p_constraint = 0;
  double c_n = 0;
  double d_n = 0;
  double limit = 0;
  std::vector<EventRecord> events;
};

struct ConcentrationReport {
  ArithmeticMode mode = ArithmeticMode::float64;
  double limit = 0;
  std::vector<ConcentrationRecord> records;
};

/// c_n, d_n and the concentration bounds on each n. Rational mode uses
/// the exact tilted measure and is meant for small n.
inline ConcentrationReport concentration_constants(const SampleSpace& space, const ConstraintSpec& c,
                                                   const MaxEntSolution& sol, const std::vector<std::int64_t>& n_list,
                                                   const std::vector<EventSpec>& events = {},
                                                   ArithmeticMode mode = ArithmeticMode::float64,
                                                   std::uint64_t budget = kDefaultCellBudget) {
  ConcentrationReport report;
  report.mode = mode;
  report.limit = concentration_limit(c, sol);
  const Measure q = prior_measure(space);
  const Measure p = maxent_measure(sol);
  std::optional<ExactMeasure> q_exact, p_exact;
  if (mode == ArithmeticMode::rational) {
    q_exact = exact_prior_measure(space);
    p_exact = exact_maxent_measure(space, c, sol);
  }
  for (auto n : n_list) {
    ConcentrationRecord rec;
    rec.n = n;
    rec.limit = report.limit;
    std::optional<Rational> p_c_exact;
    if (mode == ArithmeticMode::rational) {
      p_c_exact = constraint_prob(c, n, *p_exact, budget);
      rec.log_p_constraint = log_of(*p_c_exact);
    } else {
      rec.log_p_constraint = log_constraint_prob(c, n, p, budget);
    }
    rec.feasible = std::isfinite(rec.log_p_constraint);
    if (rec.feasible) {
      rec.p_constraint = std::exp(rec.log_p_constraint);
      rec.c_n = std::exp(rec.log_p_constraint + 0.5 * static_cast<double>(c.dim) * std::log(static_cast<double>(n)));
      rec.d_n = std::exp(rec.log_p_constraint + clt_log2_normalizer(c, sol, n) * std::numbers::ln2);
    }
    for (const auto& ev : events) {
      EventRecord er;
      er.name = ev.name;
      if (mode == ArithmeticMode::rational) {
        auto qm = event_masses(c, ev, n, *q_exact, budget);
        auto pm = event_masses(c, ev, n, *p_exact, budget);
        auto cond = qm.conditional();
        er.p_event = to_double(pm.event);
        er.p_event_in_c = to_double(pm.joint);
        if (cond) {
          er.q_given_c = to_double(*cond);
          // n^{-k/2} c_n equals P~(C_n) by definition.
          const Rational bound = *p_c_exact * *cond;
          er.slack = to_double(pm.event - bound);
          er.slack_in_c = to_double(pm.joint - bound);
          er.exact_zero_slack_in_c = pm.joint == bound;
        }
      } else {
        auto qm = event_masses(c, ev, n, q, budget);
        auto pm = event_masses(c, ev, n, p, budget);
        auto cond = qm.conditional();
        er.p_event = std::exp(pm.log_event());
        er.p_event_in_c = std::exp(pm.log_joint());
        if (cond) {
          er.q_given_c = *cond;
          const double bound = std::exp(rec.log_p_constraint) * *cond;
          er.slack = er.p_event - bound;
          er.slack_in_c = er.p_event_in_c - bound;
        }
      }
      rec.events.push_back(std::move(er));
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

}  // namespace maxent_lab
