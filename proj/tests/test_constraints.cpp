#include <gtest/gtest.h>

#include <random>

#include "maxent/constraints.hpp"
#include "maxent/ising.hpp"
#include "maxent/solver.hpp"

using namespace maxent;

namespace {

Distribution random_positive(std::size_t n, Rng& rng) {
  std::gamma_distribution<double> gamma(2.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = gamma(rng) + 1e-3;
  return Distribution::normalized(v, INFINITY);
}

// Random binary rows plus the all-ones row, moments taken from f.
CoefficientMatrix random_binary_system(std::size_t n, int rows, const Distribution& f, Rng& rng) {
  std::bernoulli_distribution bit(0.5);
  CoefficientMatrix c{Eigen::MatrixXd::Zero(rows + 1, static_cast<Eigen::Index>(n)), Eigen::VectorXd(rows + 1)};
  c.rows.row(0).setOnes();
  for (int a = 1; a <= rows; ++a) {
    do {
      for (Eigen::Index j = 0; j < c.rows.cols(); ++j) c.rows(a, j) = bit(rng) ? 1.0 : 0.0;
    } while (c.rows.row(a).sum() == 0.0);
  }
  c.moments = c.rows * f.probs();
  return c;
}

bool is_rref(const ArchitectureMatrix& r) {
  Eigen::Index last = -1;
  for (Eigen::Index a = 0; a < r.rank(); ++a) {
    const Eigen::Index p = r.pivots()[static_cast<std::size_t>(a)];
    if (p <= last) return false;
    if (r.rows()(a, p) != 1.0) return false;
    for (Eigen::Index j = 0; j < p; ++j)
      if (r.rows()(a, j) != 0.0) return false;
    for (Eigen::Index b = 0; b < r.rank(); ++b)
      if (b != a && r.rows()(b, p) != 0.0) return false;
    last = p;
  }
  return true;
}

}  // namespace

TEST(ToArchitecture, DropsDuplicateRows) {
  CoefficientMatrix c{Eigen::MatrixXd(3, 3), Eigen::VectorXd(3)};
  c.rows << 1, 1, 1, 1, 1, 0, 1, 1, 0;
  c.moments << 1, 0.4, 0.4;
  const auto r = to_architecture(c);
  EXPECT_EQ(r.rank(), 2);
  EXPECT_TRUE(is_rref(r));
}

TEST(ToArchitecture, NormalizationOnlyAndIdentity) {
  CoefficientMatrix ones{Eigen::MatrixXd::Ones(1, 5), Eigen::VectorXd::Ones(1)};
  const auto r = to_architecture(ones);
  EXPECT_EQ(r.rank(), 1);
  EXPECT_TRUE(r.satisfies_normalization());

  Eigen::VectorXd f(4);
  f << 0.1, 0.2, 0.3, 0.4;
  CoefficientMatrix id{Eigen::MatrixXd::Identity(4, 4), f};
  id.rows.row(0).setOnes();  // the normalization row replaces e_0
  id.moments[0] = 1.0;
  const auto ri = to_architecture(id);
  EXPECT_EQ(ri.rank(), 4);
  EXPECT_TRUE(ri.rows().isIdentity(0.0));
  EXPECT_LT((ri.moments() - f).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ToArchitecture, InconsistentMomentsNameTheRow) {
  CoefficientMatrix c{Eigen::MatrixXd(3, 3), Eigen::VectorXd(3)};
  c.rows << 1, 1, 1, 1, 1, 0, 1, 1, 0;
  c.moments << 1, 0.5, 0.7;
  try {
    to_architecture(c);
    FAIL() << "expected inconsistent_system";
  } catch (const inconsistent_system& e) {
    EXPECT_NE(std::string(e.what()).find("infeasible"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("constraint 2"), std::string::npos);
  }
}

TEST(ToArchitecture, ValidatesInput) {
  CoefficientMatrix no_norm{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Constant(2, 0.5)};
  EXPECT_THROW(to_architecture(no_norm), invalid_input);
  CoefficientMatrix zero_row{Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2)};
  zero_row.rows.row(0).setOnes();
  EXPECT_THROW(to_architecture(zero_row), invalid_input);
}

TEST(ToArchitecture, NonBinaryRowsStillNormalize) {
  // the ones row survives elimination, so column sums of R stay 1
  CoefficientMatrix c{Eigen::MatrixXd(2, 3), Eigen::VectorXd(2)};
  c.rows << 1, 1, 1, 0, 1, 2;
  c.moments << 1, 0.9;
  const auto r = to_architecture(c);
  EXPECT_TRUE(r.warnings().empty());
  EXPECT_TRUE(r.satisfies_normalization(1e-12));
}

TEST(ToArchitecture, PropertiesOnRandomSystems) {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + t % 14;
    const auto f = random_positive(n, rng);
    const auto c = random_binary_system(n, 1 + t % 9, f, rng);
    const auto r = to_architecture(c);
    EXPECT_TRUE(is_rref(r));
    EXPECT_EQ(r.rank(), matrix_rank(c.rows));
    // binary rows with normalization: columns of R sum to 1, moments too
    EXPECT_TRUE(r.satisfies_normalization(1e-10)) << "trial " << t;
    // the generating distribution satisfies the canonical system
    EXPECT_LT((r.rows() * f.probs() - r.moments()).cwiseAbs().maxCoeff(), 1e-10);
    // idempotent
    const auto again = canonicalize(r.rows(), r.moments());
    EXPECT_TRUE(again.same_rows(r, 1e-12));
    EXPECT_LT((again.moments() - r.moments()).cwiseAbs().maxCoeff(), 1e-12);
    // another feasible point of the input stays feasible for R
    const auto g = random_positive(n, rng);
    const Eigen::VectorXd m = c.rows * g.probs();
    const auto rg = to_architecture({c.rows, m});
    EXPECT_LT((r.rows() * g.probs() - rg.moments()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(InducedMoments, Examples) {
  CoefficientMatrix ones{Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Ones(1)};
  EXPECT_NEAR(induced_moments(to_architecture(ones), Distribution::uniform(3))[0], 1.0, 1e-15);

  // pair moment sigma_1 sigma_2 on uniform five-spin states
  const auto c = ising::to_coefficients(ising::closure(ising::Hypergraph::from_lists(5, {{1, 2}})), 5);
  const Eigen::VectorXd raw = c.rows * Distribution::uniform(32).probs();
  EXPECT_NEAR(raw[3], 0.25, 1e-15);
}

TEST(KernelBasis, Examples) {
  const auto id = ArchitectureMatrix::identity(Distribution::uniform(4));
  EXPECT_EQ(kernel_basis(id, Distribution::uniform(4)).dimension(), 0);

  CoefficientMatrix ones{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)};
  const auto k = kernel_basis(to_architecture(ones), Distribution::uniform(2));
  ASSERT_EQ(k.dimension(), 1);
  EXPECT_NEAR(std::abs(k.vectors(0, 0)), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(k.vectors(0, 0), -k.vectors(0, 1), 1e-14);
}

TEST(KernelBasis, InvariantsAtMaxEnt) {
  Rng rng(22);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 4 + t % 12;
    const auto f = random_positive(n, rng);
    const auto r = to_architecture(random_binary_system(n, 1 + t % 4, f, rng));
    const auto phat = solve_newton(r).distribution;
    const auto k = kernel_basis(r, phat);
    ASSERT_EQ(k.dimension(), static_cast<Eigen::Index>(n) - r.rank());
    const Eigen::MatrixXd scaled = r.rows() * phat.probs().cwiseSqrt().asDiagonal();
    if (k.dimension() == 0) continue;
    EXPECT_LT((scaled * k.vectors.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::MatrixXd gram = k.vectors * k.vectors.transpose();
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(k.dimension(), k.dimension())).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(KernelBasis, RejectsNonPositiveAnchor) {
  CoefficientMatrix ones{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)};
  EXPECT_THROW(kernel_basis(to_architecture(ones), Distribution::point_mass(2, 0)), invalid_input);
}

TEST(NestingMap, Examples) {
  const auto arch = [](std::vector<std::vector<int>> edges) {
    return ising::architecture_of(ising::closure(ising::Hypergraph::from_lists(5, edges)));
  };
  const auto small = arch({{3, 5}});
  const auto big = arch({{1, 2, 3}, {3, 5}});
  const auto self = nesting_map(small, small);
  ASSERT_TRUE(self.has_value());
  EXPECT_TRUE(self->matrix.isIdentity(1e-9));

  const auto t = nesting_map(small, big);
  ASSERT_TRUE(t.has_value());
  EXPECT_LT((t->matrix * big.rows() - small.rows()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(matrix_rank(t->matrix), small.rank());
  EXPECT_FALSE(nesting_map(big, small).has_value());

  // disjoint edges: neither implies the other; the least-squares residual is large
  const auto a = arch({{1, 2}});
  const auto b = arch({{4, 5}});
  EXPECT_FALSE(nesting_map(a, b).has_value());
  EXPECT_FALSE(nesting_map(b, a).has_value());
  const Eigen::MatrixXd tt = b.rows().transpose().colPivHouseholderQr().solve(a.rows().transpose());
  EXPECT_GT((tt.transpose() * b.rows() - a.rows()).cwiseAbs().maxCoeff(), 0.1);
}

TEST(NestingMap, TransitiveOnSampledTriples) {
  const auto models = ising::enumerate_models(3);
  std::vector<ArchitectureMatrix> archs;
  for (const auto& m : models) archs.push_back(ising::architecture_of(ising::InteractionClosure::from_family(3, m.family)));
  for (std::size_t i = 0; i < archs.size(); ++i)
    for (std::size_t j = 0; j < archs.size(); ++j)
      for (std::size_t k = 0; k < archs.size(); ++k)
        if (nesting_map(archs[i], archs[j]) && nesting_map(archs[j], archs[k])) {
          EXPECT_TRUE(nesting_map(archs[i], archs[k]).has_value()) << i << ' ' << j << ' ' << k;
        }
}

TEST(ZeroMarginalSupport, ExcludesStatesUnderZeroRows) {
  Eigen::MatrixXd rows(3, 4);
  rows << 1, 1, 1, 1, 1, 1, 0, 0, 0, 1, 0, 1;
  Eigen::VectorXd m(3);
  m << 1, 0, 0.5;
  const auto keep = zero_marginal_support(rows, m);
  EXPECT_EQ(keep, (std::vector<bool>{false, false, true, true}));
  const CoefficientMatrix c{rows, m};
  const auto reduced = restrict_columns(c, keep);
  EXPECT_EQ(reduced.rows.cols(), 2);
  EXPECT_EQ(reduced.rows.rows(), 2);  // the zero row vanished
}
