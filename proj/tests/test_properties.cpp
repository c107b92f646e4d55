// Randomized invariant sweeps over the core math.
#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "riskelicit/experiments.hpp"
#include "riskelicit/learner.hpp"

using namespace riskelicit;

namespace {

CostFunction random_cost(Rng& rng) { return CostFunction({1.0, 0.05 + 0.9 * rng.uniform(), 0.0}); }

}  // namespace

TEST(Property, OnePeriodRegretNonNegative) {
  Rng rng(61);
  for (int t = 0; t < 2000; ++t) {
    const RiskAversion av{random_cost(rng), oracle::random_spectrum(rng)};
    const auto env = sample_one_period(rng, 3, 1 + rng.index(4));
    const auto table = regret_table(av, env);
    for (std::size_t a = 0; a < env.num_actions(); ++a) EXPECT_GE(table.regrets[a], 0.0);
    EXPECT_EQ(table.regrets[table.greedy[0]], 0.0);
  }
}

TEST(Property, InfiniteRegretNonNegative) {
  Rng rng(62);
  for (int t = 0; t < 300; ++t) {
    const RiskAversionInf av(random_cost(rng), oracle::random_spectrum(rng), 0.05 + 0.9 * rng.uniform());
    const auto trans = sample_controlled(rng, 3, 2 + rng.index(2));
    const auto table = regret_table(av, trans, value_iteration(av, trans));
    for (double r : table.regrets) EXPECT_GE(r, 0.0);
    const auto view = table.view();
    for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(view.regret(x, view.greedy[x]), 0.0);
  }
}

TEST(Property, PsiNonPositiveSymmetricZeroIffAgreement) {
  Rng rng(63);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t actions = 2 + (t % 3 == 0 ? rng.index(3) : 0);
    CandidateSet cands{{random_cost(rng), oracle::random_spectrum(rng)},
                       {random_cost(rng), oracle::random_spectrum(rng)}};
    if (cands[0] == cands[1]) continue;
    const auto env = sample_one_period(rng, 3, actions);
    const auto ti = regret_table(cands[0], env), tj = regret_table(cands[1], env);
    const double a = design_psi(ti.view(), tj.view());
    const double b = design_psi(tj.view(), ti.view());
    EXPECT_LE(a, 0.0);
    EXPECT_EQ(a, b);
    EXPECT_LE(psi_one_multi(env, 0, 1, cands), 0.0);
    if (actions == 2) { EXPECT_EQ(psi_one(env, 0, 1, cands), psi_one(env, 1, 0, cands)); }
    const bool agree = ti.greedy[0] == tj.greedy[0];
    if (agree) { EXPECT_EQ(a, 0.0); }
    if (!agree && ti.view().gap(0) > 0 && tj.view().gap(0) > 0) { EXPECT_LT(a, 0.0); }
  }
}

TEST(Property, InfinitePsiNonPositiveSymmetric) {
  Rng rng(64);
  for (int t = 0; t < 200; ++t) {
    CandidateSetInf cands{{random_cost(rng), oracle::random_spectrum(rng), 0.1 + 0.8 * rng.uniform()},
                          {random_cost(rng), oracle::random_spectrum(rng), 0.1 + 0.8 * rng.uniform()}};
    const auto trans = sample_controlled(rng, 3, 2);
    std::vector<ValueFunction> v{value_iteration(cands[0], trans), value_iteration(cands[1], trans)};
    const double a = psi_inf(trans, 0, 1, cands, v);
    EXPECT_LE(a, 0.0);
    EXPECT_EQ(a, psi_inf(trans, 1, 0, cands, v));
    const auto p0 = greedy_policy(cands[0], trans, v[0]), p1 = greedy_policy(cands[1], trans, v[1]);
    if (p0 == p1) { EXPECT_EQ(a, 0.0); }
  }
}

TEST(Property, GibbsNormalizedAndMonotone) {
  Rng rng(65);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + rng.index(40);
    std::vector<double> cum(n);
    for (auto& c : cum) c = rng.uniform() * 50;
    const double k = rng.uniform() * 10;
    const GibbsState g(cum, k);
    const double total = std::accumulate(g.probs().begin(), g.probs().end(), 0.0);
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (cum[i] < cum[j]) { EXPECT_GE(g.probs()[i], g.probs()[j]); }
    // Charging one candidate a positive regret lowers its mass and raises the others.
    if (n > 1 && k > 0) {
      std::vector<double> round(n, 0.0);
      const std::size_t i = rng.index(n);
      round[i] = 0.1 + rng.uniform();
      const auto next = g.update(round);
      if (g.probs()[i] > 1e-12 && g.probs()[i] < 1.0 - 1e-12) { EXPECT_LT(next.probs()[i], g.probs()[i]); }
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) { EXPECT_GE(next.probs()[j], g.probs()[j]); }
    }
  }
}

TEST(Property, GibbsPermutationEquivariant) {
  Rng rng(66);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng.index(20);
    std::vector<double> cum(n);
    for (auto& c : cum) c = rng.uniform() * 5;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    std::vector<double> permuted(n);
    for (std::size_t i = 0; i < n; ++i) permuted[i] = cum[perm[i]];
    const double k = rng.uniform() * 8;
    const GibbsState a(cum, k), b(permuted, k);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(b.probs()[i], a.probs()[perm[i]], 1e-15);
  }
}

TEST(Property, GibbsRankingInvariantUnderK) {
  Rng rng(67);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> cum(6);
    for (auto& c : cum) c = rng.uniform();
    const GibbsState a(cum, 2.0), b(cum, 4.0);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        if (a.probs()[i] < a.probs()[j]) { EXPECT_LT(b.probs()[i], b.probs()[j]); }
  }
}

TEST(Property, TraceDeterminism) {
  Rng rng(68);
  for (int t = 0; t < 5; ++t) {
    ScenarioConfig cfg;
    cfg.grid.kappa = {0.2, 0.5, 0.8};
    cfg.grid.gamma = {0.0, 0.3};
    cfg.grid.costs = {{1.0, 0.5, 0.0}};
    cfg.truth_index = rng.index(6);
    cfg.pool_size = 40;
    cfg.rounds = 20;
    cfg.runs = 2;
    cfg.strategy = static_cast<Strategy>(rng.index(3));
    cfg.master_seed = rng.next_u64();
    const auto a = run_scenario(cfg), b = run_scenario(cfg);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      EXPECT_EQ(a.rows[i].env_index, b.rows[i].env_index);
      EXPECT_EQ(a.rows[i].response, b.rows[i].response);
      EXPECT_EQ(a.rows[i].regrets, b.rows[i].regrets);
      EXPECT_EQ(a.rows[i].posterior, b.rows[i].posterior);
    }
  }
}

TEST(Property, RoundRegretsFeedGibbsExactly) {
  ScenarioConfig cfg;
  cfg.grid.kappa = {0.2, 0.5};
  cfg.grid.gamma = {0.0, 0.3};
  cfg.grid.costs = {{1.0, 0.5, 0.0}};
  cfg.truth_index = 2;
  cfg.pool_size = 30;
  cfg.rounds = 25;
  cfg.strategy = Strategy::expected;
  cfg.master_seed = 5;
  const auto trace = run_scenario(cfg);
  GibbsState g(4, cfg.k);
  for (std::size_t n = 1; n <= 25; ++n) {
    g = g.update(trace.at(0, n).regrets);
    EXPECT_EQ(std::vector<double>(g.probs().begin(), g.probs().end()), trace.at(0, n).posterior);
  }
}
