#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "maxent/simplex.hpp"
#include "oracles.hpp"

using namespace maxent;

namespace {

Distribution random_distribution(std::size_t n, Rng& rng, double zero_prob = 0.0) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::bernoulli_distribution zero(zero_prob);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = zero(rng) ? 0.0 : gamma(rng) + 1e-12;
  if (v.maxCoeff() == 0.0) v[0] = 1.0;
  return Distribution::normalized(v, INFINITY);
}

Distribution dist(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return Distribution(v);
}

}  // namespace

TEST(MicrostateSpace, SpinLabelsAreLexicographic) {
  const auto s = MicrostateSpace::spins(3);
  ASSERT_EQ(s.size(), 8u);
  EXPECT_EQ(s.label(0), "000");
  EXPECT_EQ(s.label(1), "001");
  EXPECT_EQ(s.label(6), "110");
  EXPECT_EQ(s.index_of("101"), 5u);
  EXPECT_FALSE(s.index_of("2").has_value());
}

TEST(MicrostateSpace, RejectsDuplicatesAndTinySpaces) {
  EXPECT_THROW(MicrostateSpace({"a", "a"}), invalid_input);
  EXPECT_THROW(MicrostateSpace({"a"}), invalid_input);
}

TEST(Distribution, ValidatesSumAndSign) {
  EXPECT_THROW(dist({0.5, 0.6}), invalid_input);
  EXPECT_THROW(dist({1.5, -0.5}), invalid_input);
  EXPECT_NO_THROW(dist({0.5, 0.5 + 5e-13}));
  const auto p = dist({1.0, 0.0});
  EXPECT_TRUE(p.excluded(1));
  EXPECT_FALSE(p.strictly_positive());
}

TEST(Distribution, NormalizesWithinIngestTolerance) {
  Eigen::VectorXd v(2);
  v << 0.5, 0.5000005;
  EXPECT_NEAR(Distribution::normalized(v).probs().sum(), 1.0, 1e-15);
  v << 0.5, 0.51;
  EXPECT_THROW(Distribution::normalized(v), invalid_input);
}

TEST(Entropy, UniformPointMassAndFrozenValue) {
  EXPECT_NEAR(entropy(Distribution::uniform(4)), std::log(4.0), 1e-15);
  EXPECT_EQ(entropy(dist({1.0, 0.0, 0.0})), 0.0);
  // 1.5 log 2 evaluated at high precision
  EXPECT_NEAR(entropy(dist({0.5, 0.25, 0.25})), 1.0397207708399179, 1e-15);
  EXPECT_NEAR(entropy(dist({0.5, 0.25, 0.25})), static_cast<double>(oracle::entropy({0.5, 0.25, 0.25})), 1e-15);
}

TEST(Entropy, BoundedByLogSize) {
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + t % 30;
    const auto p = random_distribution(n, rng, 0.2);
    const double h = entropy(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(n)) + 1e-12);
    EXPECT_NEAR(h, static_cast<double>(oracle::entropy(std::vector<double>(p.probs().data(), p.probs().data() + n))),
                1e-12);
  }
}

TEST(KlDivergence, ExamplesAndSupportViolation) {
  const auto q = dist({0.2, 0.3, 0.5});
  EXPECT_EQ(kl_divergence(q, q), 0.0);
  EXPECT_NEAR(kl_divergence(dist({1.0, 0.0}), dist({0.5, 0.5})), std::log(2.0), 1e-15);
  EXPECT_THROW(kl_divergence(dist({0.5, 0.5}), dist({1.0, 0.0})), support_violation);
}

TEST(KlDivergence, GibbsInequalityOnRandomPairs) {
  Rng rng(12);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + t % 20;
    const auto f = random_distribution(n, rng, 0.3);
    const auto q = random_distribution(n, rng);
    EXPECT_GE(kl_divergence(f, q), 0.0);
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (f[i] > 0) cross -= f[i] * std::log(q[i]);
    EXPECT_GE(cross, entropy(f) - 1e-12);
  }
}

TEST(LogMultinomialPmf, SmallCases) {
  EXPECT_NEAR(log_multinomial_pmf(CountVector({1, 0}), dist({0.3, 0.7})), std::log(0.3), 1e-14);
  EXPECT_NEAR(log_multinomial_pmf(CountVector({1, 1}), dist({0.5, 0.5})), std::log(0.5), 1e-14);
  EXPECT_THROW(log_multinomial_pmf(CountVector({1, 1}), dist({1.0, 0.0})), support_violation);
}

TEST(LogMultinomialPmf, SumsToOneByEnumeration) {
  const auto q = dist({0.2, 0.5, 0.3});
  const std::vector<double> qv{0.2, 0.5, 0.3};
  for (int N = 1; N <= 6; ++N) {
    double total = 0.0;
    oracle::compositions(N, 3, [&](const std::vector<int>& c) {
      const double lp = log_multinomial_pmf(CountVector({c[0], c[1], c[2]}), q);
      EXPECT_NEAR(std::exp(lp), static_cast<double>(oracle::multinomial_pmf(c, qv)), 1e-13);
      total += std::exp(lp);
    });
    EXPECT_NEAR(total, 1.0, 1e-10) << "N = " << N;
  }
}

TEST(LogMultinomialPmf, TracksKlExpansion) {
  const auto q = dist({0.1, 0.2, 0.3, 0.4});
  std::vector<double> residual;
  for (std::int64_t N = 10000; N <= 1280000; N *= 2) {
    std::vector<std::int64_t> c;
    std::int64_t used = 0;
    for (std::size_t i = 0; i + 1 < q.size(); ++i) {
      c.push_back(std::llround(static_cast<double>(N) * q[i]));
      used += c.back();
    }
    c.push_back(N - used);
    const CountVector counts(c);
    const double kl = kl_divergence(counts.frequencies(), q);
    residual.push_back(log_multinomial_pmf(counts, q) + static_cast<double>(N) * kl + 1.5 * std::log(double(N)));
  }
  for (std::size_t i = 1; i < residual.size(); ++i) EXPECT_NEAR(residual[i], residual[0], 1e-2);
}

TEST(MultinomialSample, PointMassUniformAndDeterminism) {
  Rng rng(3);
  const auto c = multinomial_sample(dist({0.0, 1.0, 0.0}), 1234, rng);
  EXPECT_EQ(c[1], 1234);
  EXPECT_EQ(c.total(), 1234);

  const std::int64_t N = 1000000;
  const auto u = multinomial_sample(Distribution::uniform(2), N, rng);
  EXPECT_LE(std::abs(static_cast<double>(u[0]) - N / 2.0), 5.0 * std::sqrt(N / 4.0));

  Rng a(99), b(99);
  const auto q = dist({0.1, 0.2, 0.3, 0.4});
  EXPECT_EQ(multinomial_sample(q, 5000, a), multinomial_sample(q, 5000, b));
}

TEST(MultinomialSample, MeansMatchProbabilities) {
  Rng rng(5);
  const auto q = dist({0.05, 0.15, 0.3, 0.5});
  std::vector<double> sum(4, 0.0);
  const int reps = 2000;
  const std::int64_t N = 1000;
  for (int r = 0; r < reps; ++r) {
    const auto c = multinomial_sample(q, N, rng);
    for (std::size_t i = 0; i < 4; ++i) sum[i] += static_cast<double>(c[i]);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double mean = sum[i] / reps;
    const double se = std::sqrt(N * q[i] * (1 - q[i]) / reps);
    EXPECT_NEAR(mean, N * q[i], 5 * se);
  }
}

TEST(CountVector, FrequenciesAndValidation) {
  const CountVector c({1, 3, 0});
  EXPECT_EQ(c.total(), 4);
  EXPECT_DOUBLE_EQ(c.frequencies()[1], 0.75);
  EXPECT_THROW(CountVector({1, -1}), invalid_input);
  EXPECT_THROW(CountVector({0, 0}).frequencies(), invalid_input);
}
