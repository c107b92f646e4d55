#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "riskelicit/errors.hpp"
#include "riskelicit/experiments.hpp"
#include "riskelicit/learner.hpp"
#include "riskelicit/separation.hpp"

using namespace riskelicit;

namespace {

CandidateSet small_grid() {
  CandidateSet out;
  for (double kappa : {0.1, 0.3, 0.6})
    for (double gamma : {0.0, 0.5}) out.push_back({CostFunction({1.0, 0.5, 0.0}), family_spectrum(kappa, gamma)});
  return out;
}

// Sum over ordered pairs i != j of w_ij design_psi(i, j), written out directly.
double expected_brute(const RegretBank& bank, std::size_t p, const std::vector<double>& probs) {
  const std::size_t n = probs.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double rest = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) rest += probs[k];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = rest > 0 ? probs[i] * probs[j] / rest : probs[i] / static_cast<double>(n - 1);
      total += w * design_psi(bank.view(p, i), bank.view(p, j));
    }
  }
  return total;
}

}  // namespace

TEST(RegretOne, ZeroAtBestAndMatchesOracle) {
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    const RiskAversion av{CostFunction({1.0, 0.3 + 0.4 * rng.uniform(), 0.0}), oracle::random_spectrum(rng)};
    const auto env = sample_one_period(rng, 3, 2);
    EXPECT_EQ(regret_one(best_action(av, env), env, av), 0.0);
    std::vector<double> costs(av.cost.costs().begin(), av.cost.costs().end());
    double r[2];
    for (std::size_t a = 0; a < 2; ++a)
      r[a] = oracle::rho_support(av.spectrum, costs, {env.column(a).begin(), env.column(a).end()});
    for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(regret_one(a, env, av), r[a] - std::min(r[0], r[1]), 1e-12);
  }
}

TEST(RegretOne, SingleAction) {
  const RiskAversion av{CostFunction({1.0, 0.0}), Spectrum::avar_level(0.2)};
  EXPECT_EQ(regret_one(0, OnePeriodEnv({{0.4, 0.6}}), av), 0.0);
}

TEST(RegretState, SpaceHomogeneousIsScaledOnePeriodRegret) {
  Rng rng(32);
  for (int t = 0; t < 50; ++t) {
    const double r = 0.1 + 0.8 * rng.uniform();
    const RiskAversionInf av(CostFunction({1.0, 0.2 + 0.6 * rng.uniform(), 0.0}), oracle::random_spectrum(rng), r);
    const auto env = sample_one_period(rng, 3, 2);
    const auto trans = ControlledTransition::space_homogeneous(env);
    const double tol = 1e-9;
    const auto v = value_iteration(av, trans, tol);
    for (std::size_t x = 0; x < 3; ++x)
      for (std::size_t a = 0; a < 2; ++a)
        EXPECT_NEAR(regret_state(x, a, trans, av, v, tol), r * regret_one(a, env, av.one_period()), 1e-7);
    const auto pi = greedy_policy(av, trans, v);
    EXPECT_LE(regret_policy(pi, trans, av, v, tol), 3 * 10 * tol);
  }
}

TEST(RegretState, StaleValueFunctionRejected) {
  const RiskAversionInf av(CostFunction({1.0, 0.5, 0.0}), Spectrum::avar_level(0.3), 0.5);
  Rng rng(33);
  const auto trans = sample_controlled(rng, 3, 2);
  auto v = value_iteration(av, trans);
  v.values[1] += 0.1;
  EXPECT_THROW(regret_state(1, 0, trans, av, v), ContractError);
}

// Sign agreement between the per-state regret and the evaluated-policy gap.
TEST(RegretPolicy, SignMatchesPolicyValueGap) {
  Rng rng(34);
  const double tol = 1e-9;
  for (int t = 0; t < 200; ++t) {
    const RiskAversionInf av(CostFunction({1.0, 0.2 + 0.6 * rng.uniform(), 0.0}), oracle::random_spectrum(rng),
                             0.1 + 0.8 * rng.uniform());
    const auto trans = sample_controlled(rng, 3, 2);
    const auto v = value_iteration(av, trans, tol);
    Policy pi{{rng.index(2), rng.index(2), rng.index(2)}};
    const double reg = regret_policy(pi, trans, av, v, tol);
    const auto pv = policy_eval(av, trans, pi, tol);
    double gap = 0.0;
    for (std::size_t x = 0; x < 3; ++x) gap += pv.values[x] - v.values[x];
    if (reg > 1e-6) { EXPECT_GT(gap, 1e-7) << reg; }
    if (reg < 1e-9) { EXPECT_LT(std::abs(gap), 1e-6) << gap; }
  }
}

TEST(Gibbs, ReferenceProbabilities) {
  const GibbsState g({0.0, 1.0, 2.0}, 4.0);
  const double z = 1 + std::exp(-4.0) + std::exp(-8.0);
  EXPECT_NEAR(g.probs()[0], 1 / z, 1e-15);
  // Published digits, as truncated decimals.
  EXPECT_NEAR(g.probs()[0], 0.98168, 5e-5);
  EXPECT_NEAR(g.probs()[1], 0.01798, 5e-5);
  EXPECT_NEAR(g.probs()[2], 0.00033, 5e-5);
  EXPECT_EQ(g.map_estimate(), 0u);
}

TEST(Gibbs, ZeroRegretStaysUniform) {
  GibbsState g(4, 4.0);
  const std::vector<double> zero(4, 0.0);
  for (int i = 0; i < 100; ++i) g = g.update(zero);
  for (double p : g.probs()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Gibbs, KZeroIsUniform) {
  const GibbsState g({0.0, 5.0, 9.0}, 0.0);
  for (double p : g.probs()) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(Gibbs, Validation) {
  EXPECT_THROW(GibbsState(3, -1.0), DomainError);
  EXPECT_THROW(GibbsState(0, 1.0), DomainError);
  const GibbsState g(2, 1.0);
  EXPECT_THROW(g.update(std::vector<double>{0.0, -0.1}), ContractError);
  EXPECT_THROW(g.update(std::vector<double>{0.0}), DomainError);
}

TEST(Gibbs, LargeRegretsStayFinite) {
  const GibbsState g({1e6, 1e6 + 1.0}, 50.0);
  EXPECT_NEAR(g.probs()[0], 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(g.probs()[1]));
}

TEST(Psi, TwoActionFormAndSeparatedNegative) {
  const auto cands = small_grid();
  for (std::size_t i = 0; i < cands.size(); ++i)
    for (std::size_t j = 0; j < cands.size(); ++j) {
      if (i == j) continue;
      const auto sep = separate_one_period(cands[i], cands[j]);
      EXPECT_LT(psi_one(sep.env, i, j, cands), 0.0);
      EXPECT_LT(psi_one_multi(sep.env, i, j, cands), 0.0);
    }
  EXPECT_THROW(psi_one(OnePeriodEnv({{1, 0, 0}, {0, 0, 1}}), 1, 1, cands), DomainError);
}

TEST(Psi, ZeroOnAgreement) {
  const auto cands = small_grid();
  // Action 1 is a sure zero cost: every candidate prefers it.
  const OnePeriodEnv env({{0.3, 0.3, 0.4}, {0.0, 0.0, 1.0}});
  EXPECT_EQ(psi_one(env, 0, 3, cands), 0.0);
  EXPECT_EQ(psi_one_multi(env, 0, 3, cands), 0.0);
}

TEST(Psi, MultiSignAgreesForTwoActions) {
  const auto cands = small_grid();
  Rng rng(35);
  for (int t = 0; t < 500; ++t) {
    const auto env = sample_one_period(rng, 3, 2);
    const std::size_t i = rng.index(cands.size());
    std::size_t j = rng.index(cands.size() - 1);
    if (j >= i) ++j;
    EXPECT_EQ(psi_one(env, i, j, cands) < 0, psi_one_multi(env, i, j, cands) < 0);
  }
}

TEST(Strategy, Parse) {
  EXPECT_EQ(parse_strategy("largest"), Strategy::largest);
  EXPECT_EQ(to_string(Strategy::expected), "expected");
  EXPECT_THROW(parse_strategy("greedy"), ConfigError);
}

TEST(Design, TopTwoTies) {
  EXPECT_EQ(top_two(std::vector<double>{0.2, 0.4, 0.4}), std::make_pair(std::size_t{1}, std::size_t{2}));
  EXPECT_EQ(top_two(std::vector<double>{0.25, 0.25, 0.25, 0.25}), std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(Design, PairWeights) {
  const std::vector<double> p{0.5, 0.3, 0.2};
  const auto w = expected_pair_weights(p);
  EXPECT_NEAR(w[0 * 3 + 1], 0.5 * 0.3 / 0.5, 1e-15);
  EXPECT_NEAR(w[2 * 3 + 0], 0.2 * 0.5 / 0.8, 1e-15);
  EXPECT_EQ(w[1 * 3 + 1], 0.0);
  double total = 0.0;
  for (double x : w) total += x;
  EXPECT_NEAR(total, 1.0, 1e-15);
  // Point mass: row 0 spreads uniformly over the others.
  const auto d = expected_pair_weights(std::vector<double>{1.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(d[0 * 3 + 1], 0.5);
  EXPECT_DOUBLE_EQ(d[0 * 3 + 2], 0.5);
  EXPECT_DOUBLE_EQ(d[1 * 3 + 2], 0.0);
}

TEST(Design, FactorizedExpectedMatchesBruteForce) {
  const auto cands = small_grid();
  const auto pool = build_one_period_pool(41, 60, 3, 2);
  const auto bank = RegretBank::build(pool, cands);
  Rng rng(36);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> probs(cands.size());
    double z = 0;
    for (auto& p : probs) z += (p = rng.exponential() * (rng.uniform() < 0.3 ? 0.0 : 1.0));
    if (z == 0) probs[0] = z = 1.0;
    for (auto& p : probs) p /= z;
    for (std::size_t p = 0; p < pool.size(); ++p)
      EXPECT_NEAR(expected_psi(bank, p, probs), expected_brute(bank, p, probs), 1e-12);
  }
}

TEST(Design, FactorizedExpectedMatchesBruteForceMultiAction) {
  const auto cands = small_grid();
  const auto pool = build_one_period_pool(42, 40, 3, 3);
  const auto bank = RegretBank::build(pool, cands);
  const std::vector<double> probs{0.3, 0.1, 0.2, 0.15, 0.05, 0.2};
  for (std::size_t p = 0; p < pool.size(); ++p)
    EXPECT_NEAR(expected_psi(bank, p, probs), expected_brute(bank, p, probs), 1e-12);
}

TEST(Design, SingletonPoolAlwaysZero) {
  const auto cands = small_grid();
  const auto bank = RegretBank::build(build_one_period_pool(1, 1, 3, 2), cands);
  Rng rng(1);
  const GibbsState g(cands.size(), 4.0);
  for (auto s : {Strategy::uniform, Strategy::largest, Strategy::expected}) EXPECT_EQ(design_next(bank, g, s, rng), 0u);
}

TEST(Design, LargestPicksPairMinimizer) {
  const auto cands = small_grid();
  const auto pool = build_one_period_pool(43, 100, 3, 2);
  const auto bank = RegretBank::build(pool, cands);
  const GibbsState g({5.0, 0.0, 5.0, 0.1, 5.0, 5.0}, 4.0);
  Rng rng(1);
  const std::size_t got = design_next(bank, g, Strategy::largest, rng);
  double best = 1e300;
  std::size_t arg = 0;
  for (std::size_t p = 0; p < pool.size(); ++p) {
    const double s = psi_one(pool[p], 1, 3, cands);
    if (s < best) best = s, arg = p;
  }
  EXPECT_EQ(got, arg);
}

TEST(Design, UniformCoversPool) {
  const auto cands = small_grid();
  const auto bank = RegretBank::build(build_one_period_pool(44, 10, 3, 2), cands);
  const GibbsState g(cands.size(), 4.0);
  Rng rng(2);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 20000; ++i) ++counts[design_next(bank, g, Strategy::uniform, rng)];
  for (int c : counts) EXPECT_NEAR(c / 20000.0, 0.1, 0.01);
}

TEST(Design, NonUniformNeedsTwoCandidates) {
  const CandidateSet one{{CostFunction({1.0, 0.5, 0.0}), Spectrum::expectation()}};
  const auto bank = RegretBank::build(build_one_period_pool(1, 5, 3, 2), one);
  Rng rng(1);
  EXPECT_THROW(design_next(bank, GibbsState(1, 4.0), Strategy::largest, rng), DomainError);
  EXPECT_LT(design_next(bank, GibbsState(1, 4.0), Strategy::uniform, rng), 5u);
}

// Once the posterior concentrates, `largest` keeps asking about the same
// top pair and so keeps returning to a very small set of environments.
TEST(Design, LargestSettlesOnFewEnvironments) {
  ScenarioConfig cfg;
  cfg.grid.kappa = {0.1, 0.3, 0.5};
  cfg.grid.gamma = {0.0, 0.25};
  cfg.grid.costs = {{1.0, 0.5, 0.0}};
  cfg.truth_index = 1;
  cfg.pool_size = 200;
  cfg.rounds = 300;
  cfg.strategy = Strategy::largest;
  cfg.master_seed = 77;
  const auto trace = run_scenario(cfg);
  std::set<std::size_t> late;
  for (std::size_t n = 201; n <= 300; ++n) late.insert(trace.at(0, n).env_index);
  EXPECT_LE(late.size(), 3u);
}

TEST(Validate, Candidates) {
  CandidateSet dup{{CostFunction({1.0, 0.0}), Spectrum::expectation()},
                   {CostFunction({1.0, 0.0}), Spectrum::expectation()}};
  EXPECT_THROW(validate_candidates(dup), DomainError);
  EXPECT_THROW(validate_candidates(CandidateSet{}), DomainError);
}
