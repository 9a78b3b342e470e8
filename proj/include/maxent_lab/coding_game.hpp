#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "maxent_lab/error.hpp"
#include "maxent_lab/exact_engine.hpp"
#include "maxent_lab/integer_prior.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/lattice_dp.hpp"
#include "maxent_lab/maxent.hpp"
#include "maxent_lab/oracle.hpp"
#include "maxent_lab/predictors.hpp"
#include "maxent_lab/rng.hpp"

namespace maxent_lab {

/// Worker count: hardware concurrency capped by MAXENT_LAB_THREADS.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MAXENT_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers; each index is handled once.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// log2 p~(x^n) of a concrete sequence.
inline double log2_maxent(const MaxEntSolution& sol, std::span<const std::size_t> seq) {
  double s = 0;
  for (auto x : seq) s += std::log2(sol.pmf[x]);
  return s;
}

inline double log2_prior(const SampleSpace& space, std::span<const std::size_t> seq) {
  double s = 0;
  for (auto x : seq) s += std::log2(space.prior_mass[x]);
  return s;
}

// ---------------------------------------------------------------------------------------------
// Minimax constancy.

struct AlternativeRedundancy {
  std::string tag;
  double worst = 0;   // max over C_n of -(1/n) log2[p(x)/q(x)]
  double exact_bound = 0;  // (1/n) log2 Q(C_n), below every worst case
  double asymptotic_floor = 0;  // entropy_bits - (k / 2n) log2 n
  bool respects_bound = false;
};

struct MinimaxReport {
  std::int64_t n = 0;
  std::size_t members = 0;
  double entropy_bits = 0;
  double max_deviation = 0;  // of the per-symbol redundancy of p~ from entropy_bits
  double conditioned_advantage = 0;  // per-symbol redundancy of p~ minus that of q(.|C_n)
  double predicted_advantage = 0;    // (1/n)(normalizer - log2 d_n)
  std::vector<AlternativeRedundancy> alternatives;
};

inline MinimaxReport verify_minimax_constancy(const SampleSpace& space, const ConstraintSpec& c,
                                              const MaxEntSolution& sol, std::int64_t n,
                                              const std::vector<const Predictor*>& alternatives = {},
                                              std::uint64_t cap = kEnumerationCap) {
  auto members = enumerate_oracle(c, n, exact_prior_measure(space), cap);
  if (members.sequences.empty()) throw Error(ErrorCode::infeasible_size, "n = " + std::to_string(n) + " is infeasible");
  MinimaxReport r;
  r.n = n;
  r.members = members.sequences.size();
  r.entropy_bits = entropy_bits(sol);
  const double nd = static_cast<double>(n);
  const double log2_qc = log_of(members.constraint_prob) / std::numbers::ln2;
  double worst_maxent = -std::numeric_limits<double>::infinity();
  for (const auto& s : members.sequences) {
    const double red = -(log2_maxent(sol, s) - log2_prior(space, s)) / nd;
    r.max_deviation = std::max(r.max_deviation, std::abs(red - r.entropy_bits));
    worst_maxent = std::max(worst_maxent, red);
  }
  r.conditioned_advantage = worst_maxent - log2_qc / nd;
  const double log2_pc = log_constraint_prob(c, n, maxent_measure(sol)) / std::numbers::ln2;
  const double normalizer = clt_log2_normalizer(c, sol, n);
  const double log2_dn = log2_pc + normalizer;
  r.predicted_advantage = (normalizer - log2_dn) / nd;
  for (const auto* p : alternatives) {
    AlternativeRedundancy a;
    a.tag = p->tag();
    a.worst = -std::numeric_limits<double>::infinity();
    for (const auto& s : members.sequences) {
      const double red = -(-codelength(*p, s) - log2_prior(space, s)) / nd;
      a.worst = std::max(a.worst, red);
    }
    a.exact_bound = log2_qc / nd;
    a.asymptotic_floor = r.entropy_bits - static_cast<double>(c.dim) / (2 * nd) * std::log2(nd);
    a.respects_bound = a.worst >= a.exact_bound - 1e-12;
    r.alternatives.push_back(a);
  }
  return r;
}

// ---------------------------------------------------------------------------------------------
// Coding form of the concentration bound.

struct ResidualRecord {
  std::int64_t n = 0;
  double maxent_bits = 0;       // -log2 p~(x^n)
  double conditioned_bits = 0;  // -log2 q(x^n | C_n)
  double normalizer = 0;        // (k/2) log2 2 pi n + log2 sqrt(det Sigma) - sum log2 h_j
  double residual = 0;
  double minus_log2_dn = 0;     // from an independent p~ computation of P~(C_n)
};

/// Residuals on one witness x^n in C_n per n; Q(C_n) comes from a prior-measure program and d_n
/// from a MaxEnt-measure program, so the identity residual = -log2 d_n is a real cross-check.
inline std::vector<ResidualRecord> corollary1_residual(const SampleSpace& space, const ConstraintSpec& c,
                                                       const MaxEntSolution& sol,
                                                       const std::vector<std::int64_t>& n_list,
                                                       std::uint64_t budget = kDefaultCellBudget) {
  std::vector<ResidualRecord> out;
  if (n_list.empty()) return out;
  const std::int64_t n_top = *std::max_element(n_list.begin(), n_list.end());
  Reachability reach(c, n_top, budget);
  for (auto n : n_list) {
    auto w = witness_sequence(c, reach, n, false);
    if (!w) throw Error(ErrorCode::infeasible_size, "n = " + std::to_string(n) + " is infeasible");
    ResidualRecord r;
    r.n = n;
    r.maxent_bits = -log2_maxent(sol, *w);
    const double log2_qc = log_constraint_prob(c, n, prior_measure(space), budget) / std::numbers::ln2;
    r.conditioned_bits = -(log2_prior(space, *w) - log2_qc);
    r.normalizer = clt_log2_normalizer(c, sol, n);
    r.residual = r.maxent_bits - r.conditioned_bits - r.normalizer;
    const double log2_pc = log_constraint_prob(c, n, maxent_measure(sol), budget) / std::numbers::ln2;
    r.minus_log2_dn = -(log2_pc + r.normalizer);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Closed-form gap of the integer mixture of conditioned priors.

struct GapRecord {
  std::int64_t n = 0;
  std::size_t j = 0;       // rank of n among feasible sizes
  double gap_bits = 0;     // min over C_n of log2[p'(x)/p~(x)]
  double gap_over_log2n = 0;
  bool first_passage = false;  // a member of C_n with no earlier constraint hit exists
};

/// Lengths l <= l_max for which some sequence first satisfies the constraint at time l.
inline std::vector<bool> first_passage_lengths(const ConstraintSpec& c, std::int64_t l_max,
                                               std::uint64_t budget = kDefaultCellBudget) {
  std::vector<bool> out(static_cast<std::size_t>(l_max + 1), false);
  Reachability reach(c, l_max, budget);
  for (std::int64_t l = 1; l <= l_max; ++l) {
    auto t = c.target_sum_index(l);
    if (!t || !reach.reachable(l, *t)) continue;
    out[static_cast<std::size_t>(l)] = witness_sequence(c, reach, l, true).has_value();
  }
  return out;
}

/// For x in C_n, p'(x)/p~(x) depends on x only through which earlier sizes it hits:
///   sum_{n_j >= n} w_j P~(C_{n_j - n}) / P~(C_{n_j}) + rho^n sum_{hits h} w_{j(h)} rho^{-h} / P~(C_h)
/// with rho = 2^{entropy_bits}; the minimizing hit pattern is a shortest path over first-passage blocks.
inline std::vector<GapRecord> mixture_min_gap(const SampleSpace& space, const ConstraintSpec& c,
                                              const MaxEntSolution& sol, const IntegerPrior& prior,
                                              std::size_t components, std::int64_t n_max,
                                              std::uint64_t budget = kDefaultCellBudget) {
  auto sizes = first_feasible_sizes(space, c, components, std::int64_t{1} << 22);
  auto weights = prior.normalized_head(sizes.size());
  const std::int64_t top = sizes.back();
  auto table = SumTable::build(c, maxent_measure(sol), top, std::int64_t{0}, budget);
  auto log_pc = [&](std::int64_t m) { return m == 0 ? 0.0 : table.log_constraint_mass(m); };
  const double log_rho = entropy_bits(sol) * std::numbers::ln2;

  std::vector<std::int64_t> tested;
  for (auto n : sizes)
    if (n <= n_max) tested.push_back(n);
  if (tested.empty()) return {};
  auto fp = first_passage_lengths(c, tested.back(), budget);

  // log of the hit cost w_j rho^{-h} / P~(C_h) by size h.
  std::map<std::int64_t, double> hit_cost;
  std::map<std::int64_t, std::size_t> rank;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    rank[sizes[i]] = i;
    if (sizes[i] <= tested.back())
      hit_cost[sizes[i]] = std::log(weights[i]) - static_cast<double>(sizes[i]) * log_rho - log_pc(sizes[i]);
  }
  auto log_add = [](double a, double b) {
    if (!std::isfinite(a)) return b;
    if (!std::isfinite(b)) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
  };
  // best[h]: log of the cheapest total hit cost of a path 0 -> h that ends with a hit at h (h itself included).
  std::map<std::int64_t, double> best;
  best[0] = -std::numeric_limits<double>::infinity();
  std::vector<GapRecord> out;
  for (auto n : tested) {
    double lead = -std::numeric_limits<double>::infinity();
    for (std::size_t i = rank[n]; i < sizes.size(); ++i) {
      const double lp = log_pc(sizes[i] - n);
      if (!std::isfinite(lp)) continue;
      lead = log_add(lead, std::log(weights[i]) + lp - log_pc(sizes[i]));
    }
    // Cheapest earlier hit pattern that can be completed by one first-passage block to n.
    double tail = std::numeric_limits<double>::infinity();
    bool reachable = false;
    for (const auto& [h, lb] : best) {
      const std::int64_t l = n - h;
      if (l < 1 || !fp[static_cast<std::size_t>(l)]) continue;
      reachable = true;
      if (h == 0) {
        tail = -std::numeric_limits<double>::infinity();
        break;
      }
      tail = std::min(tail, lb);
    }
    if (!reachable) throw Error(ErrorCode::infeasible_size, "no hit pattern reaches n = " + std::to_string(n));
    GapRecord g;
    g.n = n;
    g.j = rank[n] + 1;
    g.first_passage = fp[static_cast<std::size_t>(n)];
    const double total = std::isfinite(tail) ? log_add(lead, static_cast<double>(n) * log_rho + tail) : lead;
    g.gap_bits = total / std::numbers::ln2;
    g.gap_over_log2n = g.gap_bits / std::log2(static_cast<double>(n));
    out.push_back(g);
    // Register n as a possible intermediate hit for later sizes.
    double via = std::numeric_limits<double>::infinity();
    for (const auto& [h, lb] : best) {
      const std::int64_t l = n - h;
      if (l < 1 || !fp[static_cast<std::size_t>(l)]) continue;
      via = std::min(via, lb);
    }
    if (reachable) best[n] = log_add(std::isfinite(via) ? via : -std::numeric_limits<double>::infinity(), hit_cost[n]);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Renewal lower bound: p°(x) >= alpha^m (1 - alpha) 2^{m c''} p~(x).

struct RenewalBoundRecord {
  std::vector<std::size_t> sequence;
  std::size_t hits = 0;  // m: constraint hits strictly before the end
  double log2_composed = 0;
  double log2_bound = 0;
  bool holds = false;
};

/// c'' is taken as the smallest log2[block(z)/p~(z)] over the completed blocks z of the inputs.
inline std::vector<RenewalBoundRecord> renewal_bound_check(const ConstraintSpec& c, const MaxEntSolution& sol,
                                                           const Predictor& block, double alpha,
                                                           const std::vector<std::vector<std::size_t>>& sequences,
                                                           double* c_double_prime = nullptr) {
  auto split = [&](const std::vector<std::size_t>& s) {
    std::vector<std::size_t> cuts;
    std::vector<std::int64_t> sum(c.dim, 0);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      for (std::size_t j = 0; j < c.dim; ++j) sum[j] += c.index[s[i]][j];
      auto t = c.target_sum_index(static_cast<std::int64_t>(i + 1));
      if (t && *t == sum) cuts.push_back(i + 1);
    }
    return cuts;
  };
  double cpp = std::numeric_limits<double>::infinity();
  for (const auto& s : sequences) {
    auto cuts = split(s);
    std::size_t start = 0;
    for (auto cut : cuts) {
      std::span<const std::size_t> z(s.data() + start, cut - start);
      cpp = std::min(cpp, -codelength(block, z) - log2_maxent(sol, z));
      start = cut;
    }
  }
  if (!std::isfinite(cpp)) cpp = 0;
  if (c_double_prime) *c_double_prime = cpp;
  auto composed = renewal_compose(alpha_mixture(block.clone(), sol, alpha), c);
  std::vector<RenewalBoundRecord> out;
  for (const auto& s : sequences) {
    RenewalBoundRecord r;
    r.sequence = s;
    r.hits = split(s).size();
    r.log2_composed = -codelength(*composed, s);
    const double m = static_cast<double>(r.hits);
    r.log2_bound = m * std::log2(alpha) + std::log2(1 - alpha) + m * cpp + log2_maxent(sol, s);
    r.holds = r.log2_composed >= r.log2_bound - 1e-9;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Recurrence of the centered constraint walk.

struct RecurrenceReport {
  std::uint64_t seed = 0;
  std::int64_t reps = 0;
  std::vector<std::int64_t> checkpoints;
  std::vector<double> mean_visits;
  std::vector<double> stderr_visits;
};

/// Expected returns to 0 within `steps` steps of the simple symmetric walk: sum_{m=1}^{steps/2} C(2m,m) 4^-m.
inline double binomial_return_oracle(std::int64_t steps) {
  double a = 1, total = 0;
  for (std::int64_t m = 1; m <= steps / 2; ++m) {
    a *= static_cast<double>(2 * m - 1) / static_cast<double>(2 * m);
    total += a;
  }
  return total;
}

inline RecurrenceReport recurrence_simulation(const MaxEntSolution& sol, const ConstraintSpec& c,
                                              std::vector<std::int64_t> checkpoints, std::int64_t reps,
                                              std::uint64_t seed, unsigned threads = worker_count()) {
  if (reps < 1) throw Error(ErrorCode::invalid_input, "reps must be at least 1");
  std::sort(checkpoints.begin(), checkpoints.end());
  if (checkpoints.empty() || checkpoints.front() < 0) throw Error(ErrorCode::invalid_input, "checkpoints must be >= 0");
  if (!c.target_sum_index(c.target_period()))
    throw Error(ErrorCode::no_feasible_sizes, "target is not representable on the lattice");
  const std::int64_t period = c.target_period();
  std::vector<std::int64_t> drift(c.dim);  // period * target index, per step scaled by period
  for (std::size_t j = 0; j < c.dim; ++j) drift[j] = to_int64(boost::multiprecision::numerator(Rational(c.target_index[j] * period)), "drift");
  std::vector<std::vector<std::int64_t>> step(c.outcomes(), std::vector<std::int64_t>(c.dim));
  for (std::size_t x = 0; x < c.outcomes(); ++x)
    for (std::size_t j = 0; j < c.dim; ++j) step[x][j] = period * c.index[x][j] - drift[j];
  const DiscreteSampler sampler(sol.pmf);
  const std::int64_t steps = checkpoints.back();
  std::vector<std::vector<std::int64_t>> visits(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
    CounterRng rng(seed, rep);
    std::vector<std::int64_t> pos(c.dim, 0);
    std::vector<std::int64_t> counts;
    std::int64_t seen = 0;
    std::size_t next_cp = 0;
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == 0) {
      counts.push_back(0);
      ++next_cp;
    }
    for (std::int64_t i = 1; i <= steps; ++i) {
      const auto& d = step[sampler(rng)];
      bool zero = true;
      for (std::size_t j = 0; j < c.dim; ++j) {
        pos[j] += d[j];
        zero = zero && pos[j] == 0;
      }
      if (zero) ++seen;
      while (next_cp < checkpoints.size() && checkpoints[next_cp] == i) {
        counts.push_back(seen);
        ++next_cp;
      }
    }
    visits[rep] = std::move(counts);
  });
  RecurrenceReport r;
  r.seed = seed;
  r.reps = reps;
  r.checkpoints = checkpoints;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    double s = 0, s2 = 0;
    for (const auto& v : visits) {
      s += static_cast<double>(v[k]);
      s2 += static_cast<double>(v[k]) * static_cast<double>(v[k]);
    }
    const double mean = s / static_cast<double>(reps);
    const double var = reps > 1 ? (s2 - s * mean) / static_cast<double>(reps - 1) : 0.0;
    r.mean_visits.push_back(mean);
    r.stderr_visits.push_back(std::sqrt(std::max(var, 0.0) / static_cast<double>(reps)));
  }
  return r;
}

// ---------------------------------------------------------------------------------------------
// No-hypercompression.

struct HypercompressionRecord {
  double K = 0;
  std::int64_t samples = 0;
  std::int64_t exceed = 0;
  double exceed_freq = 0;
  double bound = 0;  // 2^-K
  double sigma = 0;
  bool within = false;
};

struct HypercompressionReport {
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  std::string base;
  std::string challenger;
  std::vector<HypercompressionRecord> records;
};

/// Samples i.i.d. p~ sequences and counts {L_base >= L_challenger + K} for each K.
inline HypercompressionReport hypercompression_check(const Predictor& base, const Predictor& challenger,
                                                     const MaxEntSolution& sol, std::int64_t n,
                                                     const std::vector<double>& Ks, std::int64_t samples,
                                                     std::uint64_t seed, unsigned threads = worker_count()) {
  if (samples < 1) throw Error(ErrorCode::invalid_input, "samples must be at least 1");
  for (double K : Ks)
    if (!(K > 0)) throw Error(ErrorCode::invalid_input, "K must be positive");
  const DiscreteSampler sampler(sol.pmf);
  std::vector<double> diff(static_cast<std::size_t>(samples));
  threads = std::max(1u, threads);
  std::vector<std::unique_ptr<Predictor>> bases, challengers;
  for (unsigned t = 0; t < threads; ++t) {
    bases.push_back(base.clone());
    challengers.push_back(challenger.clone());
  }
  parallel_for(threads, threads, [&](std::size_t t) {
    auto& b = *bases[t];
    auto& ch = *challengers[t];
    for (std::size_t s = t; s < diff.size(); s += threads) {
      CounterRng rng(seed, s);
      b.reset();
      ch.reset();
      for (std::int64_t i = 0; i < n; ++i) {
        const auto x = sampler(rng);
        b.observe(x);
        ch.observe(x);
      }
      diff[s] = b.codelength_bits() - ch.codelength_bits();
    }
  });
  HypercompressionReport r;
  r.n = n;
  r.seed = seed;
  r.base = base.tag();
  r.challenger = challenger.tag();
  for (double K : Ks) {
    HypercompressionRecord rec;
    rec.K = K;
    rec.samples = samples;
    for (double d : diff)
      if (d >= K) ++rec.exceed;
    rec.exceed_freq = static_cast<double>(rec.exceed) / static_cast<double>(samples);
    rec.bound = std::exp2(-K);
    rec.sigma = std::sqrt(rec.bound * (1 - rec.bound) / static_cast<double>(samples));
    rec.within = rec.exceed_freq <= rec.bound + 3 * rec.sigma;
    r.records.push_back(rec);
  }
  return r;
}

/// Exact P~(-log2 p~(X^n) >= -log2 q(X^n) + K): the log ratio is (beta . sum T + n ln Z) / ln 2,
/// so it is read off the distribution of the T-sum.
inline double exact_prior_exceedance(const ConstraintSpec& c, const MaxEntSolution& sol, std::int64_t n, double K,
                                     std::uint64_t budget = kDefaultCellBudget) {
  auto dist = sum_distribution(c, n, maxent_measure(sol), budget);
  double total = 0;
  for (const auto& [u, raw] : dist.cells()) {
    double dot = 0;
    for (std::size_t j = 0; j < c.dim; ++j) {
      const double s = static_cast<double>(c.lattice_coordinate(j, n, u[j])) / static_cast<double>(c.scale[j]);
      dot += sol.beta[static_cast<Eigen::Index>(j)] * s;
    }
    const double bits = (dot + static_cast<double>(n) * sol.log_partition) / std::numbers::ln2;
    if (bits >= K) total += raw;
  }
  return total * std::exp(dist.log_scale());
}

}  // namespace maxent_lab
