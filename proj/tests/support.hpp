#pragma once

// Test-side oracles. Everything here works on raw rationals and explicit sequence
// enumeration so it shares no code path with the library's lattice programs.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "maxent_lab.hpp"

#ifndef MAXENT_LAB_FIXTURE_DIR
#define MAXENT_LAB_FIXTURE_DIR "fixtures"
#endif

namespace testing_support {

using maxent_lab::Rational;

inline std::string fixture_path(const std::string& name) {
  return std::string(MAXENT_LAB_FIXTURE_DIR) + "/" + name + ".json";
}

inline maxent_lab::RunConfig load_config(const std::string& name) {
  std::vector<maxent_lab::Diagnostic> diags;
  auto cfg = maxent_lab::parse_config_text(maxent_lab::read_file(fixture_path(name)), diags);
  for (const auto& d : diags)
    if (d.severity == maxent_lab::Diagnostic::Severity::error) throw std::runtime_error(d.format());
  return cfg;
}

struct Instance {
  std::string name;
  maxent_lab::Problem problem;
  maxent_lab::MaxEntSolution sol;
  const maxent_lab::SampleSpace& space() const { return problem.space; }
  const maxent_lab::ConstraintSpec& c() const { return problem.constraint; }
};

inline Instance load_instance(const std::string& name) {
  auto cfg = load_config(name);
  Instance in{name, maxent_lab::build_problem(cfg.problem), {}};
  in.sol = maxent_lab::solve_maxent(in.problem.space, in.problem.constraint);
  return in;
}

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"brandeis", "brandeis-combined", "coin",          "coin-biased",
                                              "coin-recurrence", "cube3",        "two-constraint"};
  return names;
}

/// Calls f(seq) for every element of X^n in lexicographic order.
inline void for_each_sequence(std::size_t alphabet, std::int64_t n,
                              const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> seq(static_cast<std::size_t>(n), 0);
  while (true) {
    f(seq);
    std::int64_t i = n - 1;
    while (i >= 0 && ++seq[static_cast<std::size_t>(i)] == alphabet) seq[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) return;
  }
}

inline Rational sequence_mass(const std::vector<Rational>& mass, const std::vector<std::size_t>& seq) {
  Rational m = 1;
  for (auto x : seq) m *= mass[x];
  return m;
}

/// Sample average of T equals the target, decided on raw rational values.
inline bool meets_target(const maxent_lab::ConstraintSpec& c, const std::vector<std::size_t>& seq) {
  for (std::size_t j = 0; j < c.dim; ++j) {
    Rational sum = 0;
    for (auto x : seq) sum += c.values[x][j];
    if (sum != c.target[j] * static_cast<std::int64_t>(seq.size())) return false;
  }
  return true;
}

/// Distribution of the raw (unscaled) sum vector of n draws.
inline std::map<std::vector<Rational>, Rational> brute_sum_distribution(const maxent_lab::ConstraintSpec& c,
                                                                        const std::vector<Rational>& mass,
                                                                        std::int64_t n) {
  std::map<std::vector<Rational>, Rational> out;
  for_each_sequence(c.outcomes(), n, [&](const std::vector<std::size_t>& seq) {
    std::vector<Rational> sum(c.dim, Rational(0));
    for (auto x : seq)
      for (std::size_t j = 0; j < c.dim; ++j) sum[j] += c.values[x][j];
    out[sum] += sequence_mass(mass, seq);
  });
  return out;
}

inline Rational brute_constraint_prob(const maxent_lab::ConstraintSpec& c, const std::vector<Rational>& mass,
                                      std::int64_t n) {
  Rational total = 0;
  for_each_sequence(c.outcomes(), n, [&](const std::vector<std::size_t>& seq) {
    if (meets_target(c, seq)) total += sequence_mass(mass, seq);
  });
  return total;
}

/// Bigram event on an explicit sequence, straight from its definition.
inline bool brute_bigram(const std::vector<std::size_t>& seq, std::size_t j, std::size_t jp, const Rational& eps) {
  const auto n = static_cast<std::int64_t>(seq.size());
  std::int64_t nj = 0, den = 0, pairs = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (seq[static_cast<std::size_t>(i)] == j) ++nj;
    if (i + 1 < n && seq[static_cast<std::size_t>(i)] == jp) {
      ++den;
      if (seq[static_cast<std::size_t>(i + 1)] == j) ++pairs;
    }
  }
  if (den == 0) return false;
  Rational d = Rational(nj, n) - Rational(pairs, den);
  return abs(d) > eps;
}

inline bool brute_freq(const std::vector<std::size_t>& seq, std::size_t alphabet, const std::vector<Rational>& ref,
                       const Rational& eps) {
  const auto n = static_cast<std::int64_t>(seq.size());
  for (std::size_t x = 0; x < alphabet; ++x) {
    std::int64_t cnt = 0;
    for (auto s : seq) cnt += s == x;
    if (abs(Rational(cnt, n) - ref[x]) > eps) return true;
  }
  return false;
}

/// Q(A | C_n) and P(A), P(A and C_n) by enumeration of X^n.
struct BruteEvent {
  Rational constraint = 0;
  Rational joint = 0;
  Rational event = 0;
};

inline BruteEvent brute_event(const maxent_lab::ConstraintSpec& c, const std::vector<Rational>& mass, std::int64_t n,
                              const std::function<bool(const std::vector<std::size_t>&)>& pred) {
  BruteEvent out;
  for_each_sequence(c.outcomes(), n, [&](const std::vector<std::size_t>& seq) {
    const Rational m = sequence_mass(mass, seq);
    const bool in_c = meets_target(c, seq);
    const bool in_a = pred(seq);
    if (in_c) out.constraint += m;
    if (in_a) out.event += m;
    if (in_a && in_c) out.joint += m;
  });
  return out;
}

/// log C(n, r) via lgamma.
inline double log_binomial(double n, double r) {
  return std::lgamma(n + 1) - std::lgamma(r + 1) - std::lgamma(n - r + 1);
}

/// Expected number of returns to 0 of the simple symmetric walk within `steps` steps.
inline double simple_walk_returns(std::int64_t steps) {
  double total = 0;
  for (std::int64_t m = 1; 2 * m <= steps; ++m)
    total += std::exp(log_binomial(2.0 * m, static_cast<double>(m)) - 2.0 * m * std::log(2.0));
  return total;
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0 ? 0 : std::abs(a - b) / scale;
}

}  // namespace testing_support
