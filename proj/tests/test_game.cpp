#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace maxent_lab;
using namespace testing_support;

namespace {

// Every sequence of length n with its predictor mass.
double total_mass(const Predictor& p, std::int64_t n) {
  double total = 0;
  for_each_sequence(p.alphabet(), n, [&](const auto& s) { total += std::exp2(-codelength(p, s)); });
  return total;
}

void expect_prefix_consistent(const Predictor& p, std::int64_t m_max, const std::string& what) {
  for (std::int64_t m = 0; m < m_max; ++m) {
    for_each_sequence(p.alphabet(), m, [&](const auto& s) {
      const double here = std::exp2(-codelength(p, s));
      double children = 0;
      auto ext = s;
      ext.push_back(0);
      for (std::size_t x = 0; x < p.alphabet(); ++x) {
        ext.back() = x;
        children += std::exp2(-codelength(p, ext));
      }
      EXPECT_NEAR(children, here, 1e-12 * std::max(1.0, here)) << what << " m=" << m;
    });
  }
}

std::vector<std::vector<std::size_t>> constraint_members(const Instance& in, std::int64_t n) {
  return enumerate_oracle(in.c(), n, exact_prior_measure(in.space())).sequences;
}

}  // namespace

TEST(IntegerPrior, ShapeAndNormalization) {
  auto p = IntegerPrior::rissanen(4096);
  EXPECT_EQ(p.j_max(), 4096u);
  double head = 0;
  for (std::size_t j = 1; j <= 4096; ++j) head += p(j);
  EXPECT_NEAR(head + p.tail, 1.0, 1e-12);
  EXPECT_GT(p.tail, 0);
  EXPECT_LT(p.tail, 1);
  for (std::size_t j : {1u, 2u, 10u, 1000u})
    EXPECT_NEAR(p(j) * p.normalizer, 1.0 / (j * std::pow(std::log2(j + 1.0), 2)), 1e-12);
  for (std::size_t j = 1; j < 4096; ++j) EXPECT_GT(p(j), p(j + 1));
  // The full series converges to a normalizer independent of J_max.
  auto small = IntegerPrior::rissanen(8);
  EXPECT_NEAR(small.normalizer, p.normalizer, 1e-12);
  auto head8 = p.normalized_head(8);
  double s = 0;
  for (double v : head8) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_THROW(IntegerPrior::rissanen(0), Error);
}

TEST(Codelength, Examples) {
  auto in = load_instance("brandeis");
  auto p = maxent_predictor(in.sol);
  const std::vector<std::size_t> six{5};
  EXPECT_NEAR(codelength(*p, six), -std::log2(0.34749), 1e-4);
  EXPECT_DOUBLE_EQ(codelength(*p, six), -std::log2(in.sol.pmf[5]));
  auto u = IidPredictor("uniform", std::vector<double>(6, 1.0 / 6));
  EXPECT_NEAR(codelength(u, std::vector<std::size_t>{2, 4}), 2 * std::log2(6.0), 1e-12);
  const std::vector<std::size_t> a{0, 3, 5}, b{1, 1, 4, 2};
  std::vector<std::size_t> ab(a);
  ab.insert(ab.end(), b.begin(), b.end());
  EXPECT_NEAR(codelength(*p, ab), codelength(*p, a) + codelength(*p, b), 1e-12);
}

TEST(ConditionedPrior, CoinPair) {
  auto in = load_instance("coin");
  auto q2 = conditioned_prior_predictor(in.space(), in.c(), in.sol, 2);
  EXPECT_NEAR(std::exp2(-codelength(*q2, std::vector<std::size_t>{0, 1})), 0.5, 1e-15);
  EXPECT_NEAR(std::exp2(-codelength(*q2, std::vector<std::size_t>{1, 0})), 0.5, 1e-15);
  EXPECT_EQ(codelength(*q2, std::vector<std::size_t>{0, 0}), HUGE_VAL);
  EXPECT_EQ(codelength(*q2, std::vector<std::size_t>{1, 1}), HUGE_VAL);
  EXPECT_THROW(conditioned_prior_predictor(in.space(), in.c(), in.sol, 3), Error);
}

TEST(ConditionedPrior, CodelengthIsConditionalProbability) {
  for (const auto& name : {"brandeis", "coin-biased", "two-constraint", "cube3"}) {
    auto in = load_instance(name);
    auto n = first_feasible_sizes(in.space(), in.c(), 2, 40).back();
    if (std::pow(static_cast<double>(in.c().outcomes()), static_cast<double>(n)) > 1e6)
      n = first_feasible_sizes(in.space(), in.c(), 1, 40).back();
    auto oracle = enumerate_oracle(in.c(), n, exact_prior_measure(in.space()));
    auto qn = conditioned_prior_predictor(in.space(), in.c(), in.sol, n);
    for (std::size_t i = 0; i < oracle.sequences.size(); ++i) {
      const double want = -std::log2(to_double(oracle.conditional(i)));
      EXPECT_NEAR(codelength(*qn, oracle.sequences[i]), want, 1e-10) << name;
    }
  }
}

TEST(ConditionedPrior, KillingStep) {
  auto in = load_instance("brandeis");
  auto q4 = conditioned_prior_predictor(in.space(), in.c(), in.sol, 4);
  // Two ones leave 16 for two throws, which is out of reach: the second one gets mass zero.
  q4->reset();
  EXPECT_GT(q4->observe(0), 0);
  EXPECT_EQ(q4->observe(0), 0.0);
  EXPECT_EQ(q4->codelength_bits(), HUGE_VAL);
  // Past the horizon it emits the prior.
  auto q2 = conditioned_prior_predictor(in.space(), in.c(), in.sol, 2);
  q2->reset();
  q2->observe(3);
  q2->observe(4);
  std::vector<double> m(6);
  q2->next_masses(m);
  for (double v : m) EXPECT_DOUBLE_EQ(v, 1.0 / 6);
}

TEST(Mixture, SingleComponentEqualsConditioned) {
  auto in = load_instance("coin-biased");
  auto mix = mixture_predictor(in.space(), in.c(), in.sol, IntegerPrior::rissanen(16), 1);
  auto q = conditioned_prior_predictor(in.space(), in.c(), in.sol, 10);
  ASSERT_EQ(mix->size(), 1u);
  for_each_sequence(2, 12, [&](const auto& s) {
    const double a = codelength(*mix, s), b = codelength(*q, s);
    if (std::isinf(b)) EXPECT_TRUE(std::isinf(a));
    else EXPECT_NEAR(a, b, 1e-12);
  });
}

TEST(Mixture, DominatesEachComponent) {
  for (const auto& name : {"coin", "cube3", "two-constraint"}) {
    auto in = load_instance(name);
    auto prior = IntegerPrior::rissanen(64);
    auto mix = mixture_predictor(in.space(), in.c(), in.sol, prior, 12);
    for (std::size_t j = 0; j < mix->size(); ++j) {
      const auto& comp = mix->component(j);
      auto sizes = first_feasible_sizes(in.space(), in.c(), j + 1, 1 << 20);
      const auto n = sizes.back();
      Reachability reach(in.c(), n);
      for (bool first : {false, true}) {
        auto w = witness_sequence(in.c(), reach, n, first);
        if (!w) continue;
        const double cj = codelength(comp, *w);
        ASSERT_TRUE(std::isfinite(cj));
        EXPECT_LE(codelength(*mix, *w), -std::log2(prior(j + 1)) + cj + 1e-9) << name << " j=" << j + 1;
      }
    }
  }
}

TEST(Predictors, PrefixConsistency) {
  auto coin = load_instance("coin");
  auto dice = load_instance("brandeis");
  for (auto* in : {&coin, &dice}) {
    const std::int64_t m_max = in->c().outcomes() == 2 ? 6 : 4;
    std::vector<std::unique_ptr<Predictor>> preds;
    preds.push_back(maxent_predictor(in->sol));
    preds.push_back(prior_predictor(in->space()));
    for (auto n : first_feasible_sizes(in->space(), in->c(), 2, 100))
      preds.push_back(conditioned_prior_predictor(in->space(), in->c(), in->sol, n));
    preds.push_back(mixture_predictor(in->space(), in->c(), in->sol, IntegerPrior::rissanen(16), 8));
    preds.push_back(alpha_mixture(mixture_predictor(in->space(), in->c(), in->sol, IntegerPrior::rissanen(16), 8),
                                  in->sol, 0.75));
    preds.push_back(renewal_compose(
        alpha_mixture(conditioned_prior_predictor(in->space(), in->c(), in->sol,
                                                  first_feasible_sizes(in->space(), in->c(), 1, 100)[0]),
                      in->sol, 0.5),
        in->c()));
    for (const auto& p : preds) expect_prefix_consistent(*p, m_max, in->name + " " + p->tag());
  }
}

TEST(Renewal, IidBlockIsUnchanged) {
  auto in = load_instance("coin-biased");
  auto r = renewal_compose(maxent_predictor(in.sol), in.c());
  auto p = maxent_predictor(in.sol);
  for_each_sequence(2, 12, [&](const auto& s) { EXPECT_NEAR(codelength(*r, s), codelength(*p, s), 1e-12); });
}

TEST(Renewal, MassesSumToOne) {
  auto in = load_instance("coin");
  auto r = renewal_compose(alpha_mixture(conditioned_prior_predictor(in.space(), in.c(), in.sol, 4), in.sol, 0.75),
                           in.c());
  for (std::int64_t n = 1; n <= 6; ++n) EXPECT_NEAR(total_mass(*r, n), 1.0, 1e-12) << n;
}

TEST(Renewal, HitTimesAreRecorded) {
  auto in = load_instance("coin");
  auto r = renewal_compose(maxent_predictor(in.sol), in.c());
  auto* rp = dynamic_cast<RenewalPredictor*>(r.get());
  ASSERT_NE(rp, nullptr);
  rp->reset();
  for (std::size_t x : {0u, 1u, 1u, 1u, 0u, 0u, 1u}) rp->observe(x);
  EXPECT_EQ(rp->hits(), (std::vector<std::int64_t>{2, 6}));
}

TEST(Renewal, LowerBoundPattern) {
  auto in = load_instance("coin");
  auto block = mixture_predictor(in.space(), in.c(), in.sol, IntegerPrior::rissanen(64), 8);
  std::vector<std::vector<std::size_t>> seqs;
  for (std::int64_t n = 1; n <= 8; ++n) for_each_sequence(2, n, [&](const auto& s) { seqs.push_back(s); });
  for (double alpha : {0.25, 0.75}) {
    double cpp = 0;
    auto recs = renewal_bound_check(in.c(), in.sol, *block, alpha, seqs, &cpp);
    EXPECT_TRUE(std::isfinite(cpp));
    ASSERT_EQ(recs.size(), seqs.size());
    for (const auto& r : recs) EXPECT_TRUE(r.holds) << alpha;
  }
}

TEST(Minimax, BiasedCoinConstancy) {
  auto in = load_instance("coin-biased");
  auto r = verify_minimax_constancy(in.space(), in.c(), in.sol, 10);
  EXPECT_EQ(r.members, 120u);
  EXPECT_LE(r.max_deviation, 1e-10);
  EXPECT_DOUBLE_EQ(r.entropy_bits, entropy_bits(in.sol));
  EXPECT_LT(r.entropy_bits, 0);
  // Same constant at another size.
  auto r20 = verify_minimax_constancy(in.space(), in.c(), in.sol, 20);
  EXPECT_LE(r20.max_deviation, 1e-10);
}

TEST(Minimax, TrivialProjectionGivesZero) {
  auto in = load_instance("coin");
  auto r = verify_minimax_constancy(in.space(), in.c(), in.sol, 10);
  EXPECT_LE(std::abs(r.entropy_bits), 1e-12);
  EXPECT_LE(r.max_deviation, 1e-12);
}

TEST(Minimax, ConditionedAdvantageMatchesNormalizer) {
  for (const auto& name : {"coin-biased", "brandeis", "two-constraint"}) {
    auto in = load_instance(name);
    auto n = first_feasible_sizes(in.space(), in.c(), 2, 40).back();
    auto qn = conditioned_prior_predictor(in.space(), in.c(), in.sol, n);
    auto mx = maxent_predictor(in.sol);
    auto pr = prior_predictor(in.space());
    auto r = verify_minimax_constancy(in.space(), in.c(), in.sol, n, {qn.get(), mx.get(), pr.get()});
    EXPECT_NEAR(r.conditioned_advantage, r.predicted_advantage, 1e-10) << name;
    EXPECT_GT(r.conditioned_advantage, 0) << name;
    ASSERT_EQ(r.alternatives.size(), 3u);
    for (const auto& a : r.alternatives) EXPECT_TRUE(a.respects_bound) << name << " " << a.tag;
    // q(.|C_n) attains the exact bound on every member.
    EXPECT_NEAR(r.alternatives[0].worst, r.alternatives[0].exact_bound, 1e-10) << name;
  }
}

TEST(Residual, ResidualIdentityOnFixtures) {
  for (const auto& name : fixture_names()) {
    auto in = load_instance(name);
    auto sizes = first_feasible_sizes(in.space(), in.c(), 4, 1000);
    sizes.push_back(first_feasible_sizes(in.space(), in.c(), 60, 1 << 20).back());
    for (const auto& r : corollary1_residual(in.space(), in.c(), in.sol, sizes))
      EXPECT_NEAR(r.residual, r.minus_log2_dn, 1e-9) << name << " n=" << r.n;
  }
}

TEST(Residual, CoinResidualAgainstBinomial) {
  // d_n = sqrt(pi n / 2) C(n, n/2) 2^-n < 1, so -log2 d_n is positive and shrinks to zero.
  auto in = load_instance("coin");
  std::vector<std::int64_t> ns{2, 4, 10, 20, 100, 1000, 2000};
  auto recs = corollary1_residual(in.space(), in.c(), in.sol, ns);
  double prev = HUGE_VAL;
  for (const auto& r : recs) {
    const double nd = static_cast<double>(r.n);
    const double log2_dn =
        (0.5 * std::log(std::numbers::pi * nd / 2) + log_binomial(nd, nd / 2) - nd * std::log(2.0)) / std::log(2.0);
    EXPECT_NEAR(r.residual, -log2_dn, 1e-9) << r.n;
    EXPECT_GT(r.residual, 0) << r.n;
    EXPECT_LT(r.residual, prev) << r.n;
    prev = r.residual;
  }
}

TEST(Residual, DiceResidualShrinks) {
  auto in = load_instance("brandeis");
  auto recs = corollary1_residual(in.space(), in.c(), in.sol, {100, 2000});
  EXPECT_LT(std::abs(recs[1].residual), 0.05);
  EXPECT_LT(std::abs(recs[1].residual), std::abs(recs[0].residual));
}

TEST(MixtureGap, ClosedFormMatchesPredictor) {
  for (const auto& name : {"coin", "cube3", "two-constraint"}) {
    auto in = load_instance(name);
    auto prior = IntegerPrior::rissanen(64);
    const std::size_t comps = 10;
    auto mix = mixture_predictor(in.space(), in.c(), in.sol, prior, comps);
    auto sizes = first_feasible_sizes(in.space(), in.c(), comps, 1 << 20);
    auto gaps = mixture_min_gap(in.space(), in.c(), in.sol, prior, comps, sizes.back());
    ASSERT_EQ(gaps.size(), sizes.size());
    Reachability reach(in.c(), sizes.back());
    for (const auto& g : gaps) {
      // The minimum is a lower bound on every member and is attained by some witness.
      double best = HUGE_VAL;
      std::vector<std::vector<std::size_t>> cands;
      for (bool first : {false, true})
        if (auto w = witness_sequence(in.c(), reach, g.n, first)) cands.push_back(*w);
      if (std::pow(static_cast<double>(in.c().outcomes()), static_cast<double>(g.n)) <= 70000)
        cands = constraint_members(in, g.n);
      for (const auto& s : cands) {
        const double v = -codelength(*mix, s) - log2_maxent(in.sol, s);
        EXPECT_GE(v, g.gap_bits - 1e-8) << name << " n=" << g.n;
        best = std::min(best, v);
      }
      if (std::pow(static_cast<double>(in.c().outcomes()), static_cast<double>(g.n)) <= 70000)
        EXPECT_NEAR(best, g.gap_bits, 1e-8) << name << " n=" << g.n;
    }
  }
}

TEST(MixtureGap, CubeGapPositive) {
  auto in = load_instance("cube3");
  auto gaps = mixture_min_gap(in.space(), in.c(), in.sol, IntegerPrior::rissanen(4096), 4096, 200);
  ASSERT_FALSE(gaps.empty());
  double lowest_ratio = HUGE_VAL;
  for (const auto& g : gaps)
    if (g.n >= 20) {
      EXPECT_GT(g.gap_bits, 0) << g.n;
      lowest_ratio = std::min(lowest_ratio, g.gap_over_log2n);
    }
  EXPECT_GT(lowest_ratio, 0);
}

TEST(MixtureGap, LowDimensionalGapsTurnNegative) {
  for (const auto& name : {"coin", "two-constraint"}) {
    auto in = load_instance(name);
    auto gaps = mixture_min_gap(in.space(), in.c(), in.sol, IntegerPrior::rissanen(4096), 4096, 400);
    double lowest = HUGE_VAL;
    for (const auto& g : gaps) lowest = std::min(lowest, g.gap_bits);
    EXPECT_LT(lowest, 0) << name;
  }
}

TEST(Recurrence, ZeroStepsZeroVisits) {
  auto in = load_instance("coin");
  auto r = recurrence_simulation(in.sol, in.c(), {0}, 10, 1);
  EXPECT_EQ(r.mean_visits, (std::vector<double>{0.0}));
}

TEST(Recurrence, BinomialOracle) {
  EXPECT_DOUBLE_EQ(binomial_return_oracle(0), 0.0);
  EXPECT_DOUBLE_EQ(binomial_return_oracle(2), 0.5);
  EXPECT_DOUBLE_EQ(binomial_return_oracle(4), 0.5 + 0.375);
  for (std::int64_t s : {10, 1000, 100000}) EXPECT_LE(rel_err(binomial_return_oracle(s), simple_walk_returns(s)), 1e-9);
}

TEST(Recurrence, CoinMeanNearOracle) {
  auto in = load_instance("coin");
  auto r = recurrence_simulation(in.sol, in.c(), {100, 10000}, 2000, 3);
  EXPECT_LT(rel_err(r.mean_visits[1], binomial_return_oracle(10000)), 0.1);
  EXPECT_LT(r.mean_visits[0], r.mean_visits[1]);
}

TEST(Recurrence, DeterministicAcrossThreads) {
  auto in = load_instance("cube3");
  auto a = recurrence_simulation(in.sol, in.c(), {100, 2000}, 64, 99, 1);
  auto b = recurrence_simulation(in.sol, in.c(), {100, 2000}, 64, 99, 4);
  auto c = recurrence_simulation(in.sol, in.c(), {100, 2000}, 64, 100, 1);
  EXPECT_EQ(a.mean_visits, b.mean_visits);
  EXPECT_EQ(a.stderr_visits, b.stderr_visits);
  EXPECT_NE(a.mean_visits, c.mean_visits);
}

TEST(Hypercompression, SelfChallengeNeverExceeds) {
  auto in = load_instance("brandeis");
  auto p = maxent_predictor(in.sol);
  auto r = hypercompression_check(*p, *p, in.sol, 50, {1, 5, 10}, 2000, 4);
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.exceed, 0);
    EXPECT_TRUE(rec.within);
  }
}

TEST(Hypercompression, SampledMatchesExact) {
  auto in = load_instance("brandeis");
  auto base = maxent_predictor(in.sol);
  auto prior = prior_predictor(in.space());
  auto r = hypercompression_check(*base, *prior, in.sol, 100, {1, 5}, 20000, 11);
  for (const auto& rec : r.records) {
    const double exact = exact_prior_exceedance(in.c(), in.sol, 100, rec.K);
    EXPECT_LE(exact, rec.bound);
    EXPECT_NEAR(rec.exceed_freq, exact, 4 * std::sqrt(std::max(exact * (1 - exact), 1e-6) / 20000.0)) << rec.K;
    EXPECT_TRUE(rec.within);
  }
}

TEST(Hypercompression, DeterministicAcrossThreads) {
  auto in = load_instance("coin-biased");
  auto base = maxent_predictor(in.sol);
  auto ch = mixture_predictor(in.space(), in.c(), in.sol, IntegerPrior::rissanen(16), 4);
  auto a = hypercompression_check(*base, *ch, in.sol, 20, {1, 2}, 500, 5, 1);
  auto b = hypercompression_check(*base, *ch, in.sol, 20, {1, 2}, 500, 5, 3);
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].exceed, b.records[i].exceed);
}

TEST(Hypercompression, InvalidArguments) {
  auto in = load_instance("coin");
  auto p = maxent_predictor(in.sol);
  EXPECT_THROW(hypercompression_check(*p, *p, in.sol, 5, {0}, 10, 1), Error);
  EXPECT_THROW(hypercompression_check(*p, *p, in.sol, 5, {1}, 0, 1), Error);
}
