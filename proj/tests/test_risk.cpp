#include <gtest/gtest.h>

#include "oracles.hpp"
#include "riskelicit/errors.hpp"
#include "riskelicit/risk.hpp"

using namespace riskelicit;

TEST(DiscreteDistribution, CanonicalizesUnsortedDuplicates) {
  DiscreteDistribution d({1.0, 0.0, 1.0, 0.5}, {0.25, 0.25, 0.25, 0.25});
  ASSERT_EQ(d.size(), 3u);
  EXPECT_DOUBLE_EQ(d.values()[0], 0.0);
  EXPECT_DOUBLE_EQ(d.values()[2], 1.0);
  EXPECT_DOUBLE_EQ(d.probs()[2], 0.5);
}

TEST(DiscreteDistribution, DropsZeroMass) {
  DiscreteDistribution d({0.0, 3.0}, {1.0, 0.0});
  EXPECT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.mean(), 0.0);
}

TEST(DiscreteDistribution, RejectsBadProbabilities) {
  EXPECT_THROW(DiscreteDistribution({0.0, 1.0}, {0.5, 0.6}), DomainError);
  EXPECT_THROW(DiscreteDistribution({0.0, 1.0}, {1.2, -0.2}), DomainError);
  EXPECT_THROW(DiscreteDistribution({0.0}, {0.5, 0.5}), DomainError);
  EXPECT_THROW(DiscreteDistribution({}, {}), DomainError);
}

TEST(Spectrum, Validation) {
  EXPECT_THROW(Spectrum({{1.0, 1.0}}), DomainError);
  EXPECT_THROW(Spectrum({{0.2, 0.5}, {0.4, 0.6}}), DomainError);
  EXPECT_THROW(Spectrum({{-0.1, 1.0}}), DomainError);
  EXPECT_THROW(Spectrum({}), DomainError);
  Spectrum merged({{0.3, 0.5}, {0.3, 0.5}});
  ASSERT_EQ(merged.atoms().size(), 1u);
  EXPECT_DOUBLE_EQ(merged.atoms()[0].weight, 1.0);
}

TEST(Spectrum, MixtureOmitsZeroWeights) {
  EXPECT_EQ(Spectrum::mixture(1.0, 0.7), Spectrum::expectation());
  EXPECT_EQ(Spectrum::mixture(0.0, 0.7), Spectrum::avar_level(0.3));
  EXPECT_EQ(Spectrum::mixture(0.4, 0.0), Spectrum::expectation());
}

TEST(CostFunction, Validation) {
  EXPECT_NO_THROW(CostFunction({1.0, 0.5, 0.0}));
  EXPECT_THROW(CostFunction({1.0, 0.5, 0.5, 0.0}), DomainError);
  EXPECT_THROW(CostFunction({0.9, 0.0}), DomainError);
  EXPECT_THROW(CostFunction({1.0, 0.1}), DomainError);
}

TEST(Avar, Examples) {
  EXPECT_NEAR(avar(DiscreteDistribution({5.0}, {1.0}), 0.3), 5.0, 1e-12);
  const DiscreteDistribution coin({0.0, 1.0}, {0.5, 0.5});
  EXPECT_NEAR(avar(coin, 1.0), 0.5, 1e-12);
  EXPECT_NEAR(avar(coin, 0.5), oracle::avar_grid({0.0, 1.0}, {0.5, 0.5}, 0.5), 1e-6);
  EXPECT_NEAR(avar(coin, 0.5), 1.0, 1e-12);
  EXPECT_THROW(avar(coin, 0.0), DomainError);
  EXPECT_THROW(avar(coin, 1.5), DomainError);
}

TEST(Avar, MatchesGridOracle) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto law = oracle::random_law(rng);
    const double eta = 0.02 + 0.98 * rng.uniform();
    EXPECT_NEAR(avar(DiscreteDistribution(law.values, law.probs), eta),
                oracle::avar_grid(law.values, law.probs, eta, 20001), 2e-4);
  }
}

TEST(SigmaIntegral, Examples) {
  EXPECT_NEAR(sigma_integral(Spectrum::expectation(), 0.25, 0.75), 0.5, 1e-15);
  const Spectrum s({{0.0, 0.25}, {0.3, 0.75}});
  EXPECT_NEAR(sigma_integral(s, 0.5, 1.0), 0.25 * 0.5 + 0.75 / 0.7 * 0.5, 1e-14);
  EXPECT_NEAR(sigma_integral(s, 0.5, 1.0), 0.6607142857142857, 1e-12);
  // Riemann sum of the step function as an independent check.
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += oracle::sigma(s, 0.5 + 0.5 * (i + 0.5) / n);
  EXPECT_NEAR(sigma_integral(s, 0.5, 1.0), sum * 0.5 / n, 1e-6);
  EXPECT_THROW(sigma_integral(s, 0.6, 0.5), DomainError);
  EXPECT_THROW(sigma_integral(s, -0.1, 0.5), DomainError);
}

TEST(Rho, Examples) {
  EXPECT_NEAR(rho(Spectrum::expectation(), DiscreteDistribution({0.0, 0.5, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3})), 0.5,
              1e-12);
  const Spectrum s({{0.0, 0.25}, {0.3, 0.75}});
  const DiscreteDistribution bern({0.0, 1.0}, {0.7, 0.3});
  EXPECT_NEAR(rho(s, bern), 0.25 * 0.3 + 0.75 * (0.3 / 0.7), 1e-12);
  EXPECT_NEAR(rho(s, bern), 0.25 * 0.3 + 0.75 * oracle::avar_grid({0.0, 1.0}, {0.7, 0.3}, 0.7), 1e-5);
  EXPECT_NEAR(rho(s, bern.shifted(2.0)) - rho(s, bern), 2.0, 1e-12);
}

TEST(Rho, MatchesQuadratureOracle) {
  Rng rng(12);
  for (int t = 0; t < 30; ++t) {
    const auto s = oracle::random_spectrum(rng);
    const auto law = oracle::random_law(rng);
    EXPECT_NEAR(rho(s, DiscreteDistribution(law.values, law.probs)), oracle::rho_quadrature(s, law.values, law.probs),
                1e-3);
  }
}

TEST(Rho, OutcomesVariantsAgree) {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const auto s = oracle::random_spectrum(rng);
    const auto law = oracle::random_law(rng);
    const double a = rho(s, DiscreteDistribution(law.values, law.probs));
    EXPECT_NEAR(rho_outcomes(s, law.values, law.probs), a, 1e-12);
    std::vector<std::size_t> order(law.values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return law.values[x] < law.values[y]; });
    EXPECT_NEAR(rho_outcomes_sorted(s, law.values, law.probs, order), a, 1e-12);
  }
}

TEST(RhoOracle, Examples) {
  Rng rng(14);
  for (int t = 0; t < 20; ++t) {
    const auto law = oracle::random_law(rng);
    const DiscreteDistribution d(law.values, law.probs);
    EXPECT_NEAR(rho_oracle(Spectrum::expectation(), d, 1000), d.mean(), 1e-9);
  }
  const DiscreteDistribution bern({0.0, 1.0}, {0.7, 0.3});
  EXPECT_NEAR(rho_oracle(Spectrum({{0.3, 1.0}}), bern, 100000), 0.3 / 0.7, 1e-5);
}

// Translation equivariance, positive homogeneity and monotonicity hold for every spectral measure.
TEST(Rho, CoherenceProperties) {
  Rng rng(15);
  for (int t = 0; t < 300; ++t) {
    const auto s = oracle::random_spectrum(rng);
    const auto law = oracle::random_law(rng);
    const DiscreteDistribution d(law.values, law.probs);
    const double base = rho(s, d);
    const double c = rng.uniform() * 4 - 2;
    const double lam = 0.1 + rng.uniform() * 3;
    EXPECT_NEAR(rho(s, d.shifted(c)), base + c, 1e-12);
    EXPECT_NEAR(rho(s, d.scaled(lam)), lam * base, 1e-12);
    EXPECT_LE(d.mean() - 1e-12, base);
    EXPECT_LE(base, d.max() + 1e-12);
    auto bumped = law.values;
    for (auto& v : bumped) v += 0.1 * rng.uniform();
    EXPECT_LE(base, rho_outcomes(s, bumped, law.probs) + 1e-12);
  }
}

TEST(Lemma, CumulativeReconstruction) {
  Rng rng(16);
  for (int t = 0; t < 50; ++t) {
    const auto s = oracle::random_spectrum(rng);
    EXPECT_NEAR(sigma_integral(s, 0.0, 1.0), 1.0, 1e-14);
    for (int i = 0; i < 20; ++i) {
      const double r = rng.uniform();
      EXPECT_NEAR(s.cumulative(r), (1.0 - r) * s.density(r) + sigma_integral(s, 0.0, r), 1e-9);
    }
  }
}
