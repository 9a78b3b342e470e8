#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace maxent_lab;
using namespace testing_support;

namespace {

std::vector<std::vector<Rational>> column(std::initializer_list<Rational> values) {
  std::vector<std::vector<Rational>> out;
  for (const auto& v : values) out.push_back({v});
  return out;
}

SampleSpace uniform_space(std::size_t n) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return build_space(labels, std::vector<Rational>(n, Rational(1)));
}

ConstraintSpec coin(Rational t = Rational(1, 2)) { return derive_lattice(column({0, 1}), {t}); }
ConstraintSpec dice(Rational t = Rational(9, 2)) { return derive_lattice(column({1, 2, 3, 4, 5, 6}), {t}); }

// The scaled lattice vector of a raw sum.
std::vector<std::int64_t> scaled(const ConstraintSpec& c, const std::vector<Rational>& raw) {
  std::vector<std::int64_t> s;
  for (std::size_t j = 0; j < c.dim; ++j) {
    Rational v = raw[j] * c.scale[j];
    EXPECT_TRUE(is_integer(v));
    s.push_back(to_int64(boost::multiprecision::numerator(v), "test"));
  }
  return s;
}

std::vector<Rational> exact_reference(const std::vector<double>& pmf) {
  std::vector<Rational> out;
  for (double v : pmf) out.push_back(exact_from_double(v));
  return out;
}

}  // namespace

TEST(SumDistribution, CoinBinomial) {
  auto c = coin();
  auto d = sum_distribution(c, 3, exact_prior_measure(uniform_space(2)));
  EXPECT_EQ(d.support_size(), 4u);
  EXPECT_EQ(d.at_lattice({0}), Rational(1, 8));
  EXPECT_EQ(d.at_lattice({1}), Rational(3, 8));
  EXPECT_EQ(d.at_lattice({2}), Rational(3, 8));
  EXPECT_EQ(d.at_lattice({3}), Rational(1, 8));
  EXPECT_EQ(d.total(), Rational(1));
}

TEST(SumDistribution, EmptySumIsPointMass) {
  auto c = dice();
  auto d = sum_distribution(c, 0, exact_prior_measure(uniform_space(6)));
  ASSERT_EQ(d.support_size(), 1u);
  EXPECT_EQ(d.at_lattice({0}), Rational(1));
}

TEST(SumDistribution, DicePairNine) {
  auto c = dice();
  auto d = sum_distribution(c, 2, exact_prior_measure(uniform_space(6)));
  EXPECT_EQ(d.at_lattice({9}), Rational(4, 36));
  EXPECT_EQ(d.support_size(), 11u);
  auto f = sum_distribution(c, 2, prior_measure(uniform_space(6)));
  EXPECT_NEAR(f.at_lattice({9}), 4.0 / 36, 1e-15);
  EXPECT_NEAR(f.total(), 1.0, 1e-12);
}

TEST(SumDistribution, MatchesBruteForceOnFixtures) {
  for (const auto& name : fixture_names()) {
    auto in = load_instance(name);
    const auto& c = in.c();
    const std::int64_t n_max = c.outcomes() >= 6 ? 3 : 5;
    for (std::int64_t n = 1; n <= n_max; ++n) {
      for (const auto& mass : {in.space().prior, exact_maxent_measure(in.space(), c, in.sol).mass}) {
        auto brute = brute_sum_distribution(c, mass, n);
        auto d = sum_distribution(c, n, ExactMeasure{MeasureId::prior, mass});
        EXPECT_EQ(d.total(), Rational(1)) << name;
        std::size_t nonzero = 0;
        for (const auto& [raw, p] : brute) {
          if (p == 0) continue;
          ++nonzero;
          EXPECT_EQ(d.at_lattice(scaled(c, raw)), p) << name << " n=" << n;
        }
        EXPECT_EQ(d.support_size(), nonzero) << name << " n=" << n;
      }
    }
  }
}

TEST(SumDistribution, ConvolutionConsistencyExact) {
  for (const auto& name : fixture_names()) {
    auto in = load_instance(name);
    auto q = exact_prior_measure(in.space());
    for (std::int64_t n1 = 0; n1 <= 4; ++n1)
      for (std::int64_t n2 = 0; n2 <= 4; ++n2) {
        auto whole = sum_distribution(in.c(), n1 + n2, q);
        auto conv = convolve(sum_distribution(in.c(), n1, q), sum_distribution(in.c(), n2, q));
        EXPECT_EQ(whole.cells(), conv.cells()) << name << " " << n1 << "+" << n2;
      }
  }
}

TEST(SumDistribution, ConvolutionConsistencyFloat) {
  auto in = load_instance("brandeis");
  auto p = maxent_measure(in.sol);
  auto whole = sum_distribution(in.c(), 60, p).support();
  auto conv = convolve(sum_distribution(in.c(), 25, p), sum_distribution(in.c(), 35, p)).support();
  ASSERT_EQ(whole.size(), conv.size());
  for (const auto& [s, v] : whole) EXPECT_LE(rel_err(v, conv.at(s)), 1e-11);
}

TEST(SumDistribution, SupportWithinRange) {
  auto in = load_instance("cube3");
  auto d = sum_distribution(in.c(), 7, prior_measure(in.space()));
  for (const auto& [s, v] : d.support())
    for (auto x : s) {
      EXPECT_GE(x, 0);
      EXPECT_LE(x, 7);
    }
  EXPECT_NEAR(d.total(), 1.0, 1e-9);
}

TEST(SumDistribution, BlowupGuard) {
  std::vector<std::vector<Rational>> rows;
  for (int a = 0; a < 4; ++a) rows.push_back({Rational(a), Rational(a * a), Rational(a * a * a), Rational(a % 2)});
  auto c = derive_lattice(rows, {Rational(3, 2), Rational(7, 2), Rational(9), Rational(1, 2)});
  try {
    sum_distribution(c, 2000, prior_measure(uniform_space(4)), 1'000'000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::lattice_blowup);
  }
}

TEST(ConstraintProb, Examples) {
  EXPECT_EQ(constraint_prob(coin(), 2, exact_prior_measure(uniform_space(2))), Rational(1, 2));
  EXPECT_EQ(constraint_prob(dice(), 1, exact_prior_measure(uniform_space(6))), Rational(0));
  EXPECT_EQ(constraint_prob(dice(), 2, exact_prior_measure(uniform_space(6))), Rational(1, 9));
  EXPECT_EQ(log_constraint_prob(dice(), 3, prior_measure(uniform_space(6))), kNegInf);
}

TEST(ConstraintProb, MatchesBruteForce) {
  for (const auto& name : fixture_names()) {
    auto in = load_instance(name);
    const std::int64_t n_max = in.c().outcomes() >= 6 ? 4 : 8;
    for (std::int64_t n = 1; n <= n_max; ++n) {
      auto exact = constraint_prob(in.c(), n, exact_prior_measure(in.space()));
      EXPECT_EQ(exact, brute_constraint_prob(in.c(), in.space().prior, n)) << name << " n=" << n;
      const double lf = log_constraint_prob(in.c(), n, prior_measure(in.space()));
      if (exact == 0) EXPECT_EQ(lf, kNegInf);
      else EXPECT_LE(rel_err(std::exp(lf), to_double(exact)), 1e-12) << name << " n=" << n;
    }
  }
}

TEST(Events, AlwaysAndNever) {
  auto c = dice();
  auto q = prior_measure(uniform_space(6));
  for (std::int64_t n : {2, 4, 6}) {
    EXPECT_NEAR(*conditional_event_prob(c, EventSpec::always(), n, q), 1.0, 1e-14);
    EXPECT_EQ(*conditional_event_prob(c, EventSpec::never(), n, q), 0.0);
  }
  EXPECT_FALSE(conditional_event_prob(c, EventSpec::always(), 3, q).has_value());
}

TEST(Events, DiceFrequencyDeviationMatchesEnumeration) {
  auto in = load_instance("brandeis");
  const auto ref = exact_reference(in.sol.pmf);
  auto ev = EventSpec::frequency_deviation(Rational(3, 10), ref);
  auto brute = brute_event(in.c(), in.space().prior, 4, [&](const auto& s) { return brute_freq(s, 6, ref, ev.epsilon); });
  ASSERT_GT(brute.constraint, 0);
  const Rational want = brute.joint / brute.constraint;
  EXPECT_EQ(*conditional_event_prob(in.c(), ev, 4, exact_prior_measure(in.space())), want);
  EXPECT_LE(rel_err(*conditional_event_prob(in.c(), ev, 4, prior_measure(in.space())), to_double(want)), 1e-12);
}

TEST(Events, FrequencyEventsMatchEnumerationOnSmallSizes) {
  for (const auto& name : {"coin", "coin-biased", "cube3", "two-constraint", "brandeis-combined"}) {
    auto in = load_instance(name);
    const auto ref = exact_reference(in.sol.pmf);
    const auto p = exact_maxent_measure(in.space(), in.c(), in.sol).mass;
    for (const Rational& eps : {Rational(1, 10), Rational(1, 4)}) {
      auto ev = EventSpec::frequency_deviation(eps, ref);
      for (std::int64_t n = 1; n <= (in.c().outcomes() > 4 ? 4 : 7); ++n) {
        auto pred = [&](const auto& s) { return brute_freq(s, in.c().outcomes(), ref, eps); };
        auto bq = brute_event(in.c(), in.space().prior, n, pred);
        auto bp = brute_event(in.c(), p, n, pred);
        auto mq = event_masses(in.c(), ev, n, exact_prior_measure(in.space()));
        auto mp = event_masses(in.c(), ev, n, ExactMeasure{MeasureId::maxent, p});
        EXPECT_EQ(mq.joint, bq.joint) << name << " n=" << n;
        EXPECT_EQ(mq.constraint, bq.constraint) << name << " n=" << n;
        EXPECT_EQ(mp.event, bp.event) << name << " n=" << n;
        EXPECT_EQ(mp.joint, bp.joint) << name << " n=" << n;
      }
    }
  }
}

TEST(Events, BoxEventsMatchEnumeration) {
  auto c = dice();
  auto q = exact_prior_measure(uniform_space(6));
  // Fraction of sixes in [1/2, 1], and the mean of a squared statistic outside [10, 20].
  std::vector<std::vector<Rational>> six, square;
  for (int x = 1; x <= 6; ++x) {
    six.push_back({Rational(x == 6 ? 1 : 0)});
    square.push_back({Rational(x * x)});
  }
  auto ev_six = EventSpec::box(six, {Rational(1, 2)}, {Rational(1)}, true);
  auto ev_sq = EventSpec::box(square, {Rational(10)}, {Rational(20)}, false);
  for (std::int64_t n = 2; n <= 5; ++n) {
    auto b1 = brute_event(c, q.mass, n, [](const auto& s) {
      std::int64_t k = 0;
      for (auto x : s) k += x == 5;
      return Rational(k, static_cast<std::int64_t>(s.size())) >= Rational(1, 2);
    });
    auto b2 = brute_event(c, q.mass, n, [](const auto& s) {
      Rational sum = 0;
      for (auto x : s) sum += Rational(static_cast<std::int64_t>((x + 1) * (x + 1)));
      sum /= static_cast<std::int64_t>(s.size());
      return !(sum >= 10 && sum <= 20);
    });
    auto m1 = event_masses(c, ev_six, n, q);
    auto m2 = event_masses(c, ev_sq, n, q);
    EXPECT_EQ(m1.event, b1.event) << n;
    EXPECT_EQ(m1.joint, b1.joint) << n;
    EXPECT_EQ(m2.event, b2.event) << n;
    EXPECT_EQ(m2.joint, b2.joint) << n;
  }
}

TEST(Events, BigramEventsMatchEnumeration) {
  auto in = load_instance("brandeis-combined");
  auto p = exact_maxent_measure(in.space(), in.c(), in.sol);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t jp = 0; jp < 2; ++jp)
      for (const Rational& eps : {Rational(1, 4), Rational(1, 10)}) {
        auto ev = EventSpec::bigram_deviation(j, jp, eps);
        for (std::int64_t n = 1; n <= 10; ++n) {
          auto pred = [&](const auto& s) { return brute_bigram(s, j, jp, eps); };
          auto bq = brute_event(in.c(), in.space().prior, n, pred);
          auto bp = brute_event(in.c(), p.mass, n, pred);
          auto mq = event_masses(in.c(), ev, n, exact_prior_measure(in.space()));
          auto mp = event_masses(in.c(), ev, n, p);
          EXPECT_EQ(mq.event, bq.event) << j << jp << " n=" << n;
          EXPECT_EQ(mq.joint, bq.joint) << j << jp << " n=" << n;
          EXPECT_EQ(mp.event, bp.event) << j << jp << " n=" << n;
          EXPECT_EQ(mp.joint, bp.joint) << j << jp << " n=" << n;
        }
      }
}

TEST(Events, BigramOnThreeSymbols) {
  // Pair counts with an outcome that neither event symbol touches.
  auto c = derive_lattice(column({0, 1, 2}), {Rational(1)});
  auto q = exact_prior_measure(uniform_space(3));
  for (auto [j, jp] : {std::pair<std::size_t, std::size_t>{0, 2}, {1, 1}, {2, 0}}) {
    auto ev = EventSpec::bigram_deviation(j, jp, Rational(1, 5));
    for (std::int64_t n = 2; n <= 7; ++n) {
      auto b = brute_event(c, q.mass, n, [&](const auto& s) { return brute_bigram(s, j, jp, ev.epsilon); });
      auto m = event_masses(c, ev, n, q);
      EXPECT_EQ(m.event, b.event) << j << jp << " n=" << n;
      EXPECT_EQ(m.joint, b.joint) << j << jp << " n=" << n;
    }
  }
}

TEST(Oracle, CoinPair) {
  auto t = enumerate_oracle(coin(), 2, exact_prior_measure(uniform_space(2)));
  ASSERT_EQ(t.sequences.size(), 2u);
  EXPECT_EQ(t.sequences[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(t.sequences[1], (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(t.conditional(0), Rational(1, 2));
  EXPECT_EQ(t.conditional(1), Rational(1, 2));
}

TEST(Oracle, DicePair) {
  auto t = enumerate_oracle(dice(), 2, exact_prior_measure(uniform_space(6)));
  ASSERT_EQ(t.sequences.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(t.conditional(i), Rational(1, 4));
  EXPECT_EQ(t.constraint_prob, Rational(1, 9));
}

TEST(Oracle, EnumerationGuard) {
  try {
    enumerate_oracle(dice(), 12, exact_prior_measure(uniform_space(6)), 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::enumeration_infeasible);
  }
  EXPECT_TRUE(enumerate_oracle(dice(), 3, exact_prior_measure(uniform_space(6))).sequences.empty());
}

TEST(Oracle, SequenceAndTypeClassOraclesAgree) {
  auto in = load_instance("brandeis");
  auto q = exact_prior_measure(in.space());
  auto ev = EventSpec::frequency_deviation(Rational(1, 5), exact_reference(in.sol.pmf));
  for (std::int64_t n : {2, 4, 6}) {
    auto seq = enumerate_oracle(in.c(), n, q);
    TypeClassOracle types(in.c(), n, q);
    EXPECT_EQ(seq.constraint_prob, types.constraint_prob());
    EXPECT_EQ(seq.joint(ev, 6), types.joint(ev));
  }
}

TEST(Oracle, FloatDpAgreesOnDiceUpToTen) {
  auto in = load_instance("brandeis");
  const auto ref = exact_reference(in.sol.pmf);
  std::vector<EventSpec> events{EventSpec::frequency_deviation(Rational(1, 10), ref),
                                EventSpec::frequency_deviation(Rational(1, 5), ref)};
  for (const Measure& m : {prior_measure(in.space()), maxent_measure(in.sol)}) {
    ExactMeasure exact = m.id == MeasureId::prior ? exact_prior_measure(in.space())
                                                  : ExactMeasure{MeasureId::maxent, exact_reference(m.mass)};
    for (std::int64_t n = 2; n <= 10; n += 2) {
      TypeClassOracle oracle(in.c(), n, exact);
      const Rational pc = oracle.constraint_prob();
      EXPECT_LE(rel_err(std::exp(log_constraint_prob(in.c(), n, m)), to_double(pc)), 1e-12) << n;
      for (const auto& ev : events) {
        const double want = to_double(oracle.joint(ev) / pc);
        EXPECT_LE(rel_err(*conditional_event_prob(in.c(), ev, n, m), want), 1e-12) << n;
      }
    }
  }
}

TEST(ConditionalMarginal, CoinSymmetry) {
  auto m = conditional_marginal(coin(), 1, 2, exact_prior_measure(uniform_space(2)), {0.5, 0.5});
  ASSERT_EQ(m.mass.size(), 2u);
  EXPECT_EQ(m.mass[0], Rational(1, 2));
  EXPECT_EQ(m.mass[1], Rational(1, 2));
  EXPECT_EQ(m.tv, 0.0);
}

TEST(ConditionalMarginal, MatchesOracleAndTower) {
  for (const auto& name : {"brandeis", "coin-biased", "two-constraint", "brandeis-combined"}) {
    auto in = load_instance(name);
    auto q = exact_prior_measure(in.space());
    auto sizes = first_feasible_sizes(in.space(), in.c(), 2, 30);
    for (auto n : sizes) {
      if (std::pow(static_cast<double>(in.c().outcomes()), static_cast<double>(n)) > 2e6) continue;
      auto oracle = enumerate_oracle(in.c(), n, q);
      for (std::int64_t m = 1; m < std::min<std::int64_t>(n, 4); ++m) {
        auto cm = conditional_marginal(in.c(), m, n, q, in.sol.pmf);
        std::vector<Rational> want(cm.mass.size(), Rational(0));
        for (std::size_t i = 0; i < oracle.sequences.size(); ++i) {
          std::size_t row = 0;
          for (std::int64_t k = 0; k < m; ++k) row = row * in.c().outcomes() + oracle.sequences[i][static_cast<std::size_t>(k)];
          want[row] += oracle.conditional(i);
        }
        EXPECT_EQ(cm.mass, want) << name << " m=" << m << " n=" << n;
        if (m + 1 < n) {
          auto next = conditional_marginal(in.c(), m + 1, n, q, in.sol.pmf);
          EXPECT_EQ(drop_last(next).mass, cm.mass) << name;
        }
      }
    }
  }
}

TEST(ConditionalMarginal, TowerPropertyExactAtLargerSizes) {
  auto in = load_instance("brandeis");
  auto q = exact_prior_measure(in.space());
  for (std::int64_t n : {10, 20}) {
    auto prev = conditional_marginal(in.c(), 1, n, q, in.sol.pmf);
    for (std::int64_t m = 2; m <= 3; ++m) {
      auto cur = conditional_marginal(in.c(), m, n, q, in.sol.pmf);
      Rational total = 0;
      for (const auto& v : cur.mass) total += v;
      EXPECT_EQ(total, Rational(1));
      EXPECT_EQ(drop_last(cur).mass, prev.mass);
      prev = cur;
    }
  }
}

TEST(ConditionalMarginal, FloatRowsAreDistributions) {
  for (const auto& name : {"brandeis", "cube3", "two-constraint"}) {
    auto in = load_instance(name);
    auto sizes = first_feasible_sizes(in.space(), in.c(), 3, 200);
    for (auto n : sizes) {
      for (std::int64_t m = 1; m <= 2 && m < n; ++m) {
        auto cm = conditional_marginal(in.c(), m, n, prior_measure(in.space()), in.sol.pmf);
        double total = 0;
        for (double v : cm.mass) {
          EXPECT_GE(v, 0);
          total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-9) << name << " n=" << n;
      }
    }
  }
}

TEST(ConditionalMarginal, DiceTotalVariationShrinks) {
  auto in = load_instance("brandeis");
  double prev = 1;
  for (std::int64_t n : {2, 10, 50, 200}) {
    auto cm = conditional_marginal(in.c(), 1, n, prior_measure(in.space()), in.sol.pmf);
    EXPECT_LT(cm.tv, prev) << n;
    prev = cm.tv;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(ConditionalMarginal, Guards) {
  auto q = exact_prior_measure(uniform_space(6));
  try {
    conditional_marginal(dice(), 9, 20, q, std::vector<double>(6, 1.0 / 6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::enumeration_infeasible);
  }
  EXPECT_THROW(conditional_marginal(dice(), 2, 2, q, std::vector<double>(6, 1.0 / 6)), Error);
  try {
    conditional_marginal(dice(), 1, 3, q, std::vector<double>(6, 1.0 / 6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible_size);
  }
}

TEST(Concentration, TiltedRatioConstantOnConstraintSet) {
  for (const auto& name : fixture_names()) {
    auto in = load_instance(name);
    auto q = exact_prior_measure(in.space());
    auto p = exact_maxent_measure(in.space(), in.c(), in.sol);
    for (auto n : first_feasible_sizes(in.space(), in.c(), 2, 30)) {
      if (std::pow(static_cast<double>(in.c().outcomes()), static_cast<double>(n)) > 2e6) continue;
      auto oracle = enumerate_oracle(in.c(), n, q);
      ASSERT_FALSE(oracle.sequences.empty());
      const Rational first = sequence_mass(p.mass, oracle.sequences[0]) / oracle.mass[0];
      double lo = HUGE_VAL, hi = -HUGE_VAL;
      for (std::size_t i = 0; i < oracle.sequences.size(); ++i) {
        EXPECT_EQ(sequence_mass(p.mass, oracle.sequences[i]) / oracle.mass[i], first) << name;
        double f = 1;
        for (auto x : oracle.sequences[i]) f *= in.sol.pmf[x] / in.space().prior_mass[x];
        lo = std::min(lo, f);
        hi = std::max(hi, f);
      }
      EXPECT_LE(rel_err(lo, hi), 1e-12) << name;
    }
  }
}

TEST(Concentration, CoinLimitAndCn) {
  auto in = load_instance("coin");
  auto r = concentration_constants(in.space(), in.c(), in.sol, {100, 1000});
  EXPECT_NEAR(r.limit, std::sqrt(2 / std::numbers::pi), 1e-12);
  const auto& rec = r.records[1];
  ASSERT_TRUE(rec.feasible);
  // Central binomial term times sqrt(n).
  const double want = std::exp(log_binomial(1000, 500) - 1000 * std::log(2.0) + 0.5 * std::log(1000.0));
  EXPECT_LE(rel_err(rec.c_n, want), 1e-10);
  EXPECT_LT(std::abs(rec.c_n / r.limit - 1), 0.02);
  EXPECT_LT(std::abs(r.records[1].d_n - 1), std::abs(r.records[0].d_n - 1));
}

TEST(Concentration, DnApproachesOneOnFixtures) {
  for (const auto& name : fixture_names()) {
    auto in = load_instance(name);
    auto table = feasible_sizes(in.space(), in.c(), 1100);
    auto nearest = [&](std::int64_t n) {
      for (std::int64_t d = 0;; ++d) {
        if (table.is_feasible(n + d)) return n + d;
        if (n - d >= 1 && table.is_feasible(n - d)) return n - d;
      }
    };
    auto r = concentration_constants(in.space(), in.c(), in.sol, {nearest(100), nearest(1000)});
    ASSERT_TRUE(r.records[0].feasible && r.records[1].feasible) << name;
    EXPECT_GT(r.records[0].d_n, 0);
    EXPECT_GT(r.records[1].d_n, 0);
    EXPECT_LT(std::abs(r.records[1].d_n - 1), std::abs(r.records[0].d_n - 1)) << name;
  }
}

TEST(Concentration, InfeasibleSizesAreUndefinedRecords) {
  auto in = load_instance("brandeis");
  auto r = concentration_constants(in.space(), in.c(), in.sol, {3, 4},
                                   {EventSpec::frequency_deviation(Rational(1, 10), exact_reference(in.sol.pmf))});
  EXPECT_FALSE(r.records[0].feasible);
  EXPECT_EQ(r.records[0].c_n, 0.0);
  EXPECT_FALSE(r.records[0].events[0].q_given_c.has_value());
  EXPECT_TRUE(r.records[1].feasible);
  EXPECT_TRUE(r.records[1].events[0].q_given_c.has_value());
}

TEST(Concentration, BoundInequalityAndEqualityOnConstraintSet) {
  for (const auto& name : fixture_names()) {
    auto in = load_instance(name);
    const auto ref = exact_reference(in.sol.pmf);
    std::vector<EventSpec> events{EventSpec::always(), EventSpec::never(),
                                  EventSpec::frequency_deviation(Rational(1, 10), ref),
                                  EventSpec::frequency_deviation(Rational(1, 3), ref)};
    if (in.c().outcomes() == 2) events.push_back(EventSpec::bigram_deviation(0, 1, Rational(1, 5)));
    auto sizes = first_feasible_sizes(in.space(), in.c(), 3, 10);
    if (sizes.empty()) sizes = first_feasible_sizes(in.space(), in.c(), 1, 100);
    for (auto mode : {ArithmeticMode::rational, ArithmeticMode::float64}) {
      auto r = concentration_constants(in.space(), in.c(), in.sol, sizes, events, mode);
      for (const auto& rec : r.records)
        for (const auto& er : rec.events) {
          EXPECT_GE(er.slack + 1e-12, 0) << name << " " << er.name << " n=" << rec.n;
          if (mode == ArithmeticMode::rational) {
            EXPECT_TRUE(er.exact_zero_slack_in_c) << name << " " << er.name << " n=" << rec.n;
            EXPECT_EQ(er.slack_in_c, 0.0);
          } else {
            EXPECT_LE(std::abs(er.slack_in_c), 1e-12) << name << " " << er.name << " n=" << rec.n;
          }
        }
    }
  }
}

TEST(Concentration, SingleSequenceEventAttainsEquality) {
  // A_n = {one member of C_n}: P~(A_n) = P~(C_n) Q(A_n | C_n) exactly.
  auto in = load_instance("brandeis");
  auto q = exact_prior_measure(in.space());
  auto p = exact_maxent_measure(in.space(), in.c(), in.sol);
  for (std::int64_t n : {2, 4, 6}) {
    auto oq = enumerate_oracle(in.c(), n, q);
    auto pc = constraint_prob(in.c(), n, p);
    for (std::size_t i = 0; i < oq.sequences.size(); i += 7)
      EXPECT_EQ(sequence_mass(p.mass, oq.sequences[i]), pc * oq.conditional(i));
  }
}
