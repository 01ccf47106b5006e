#pragma once

// MaxEnt distribution of an equivalence class: Newton-Raphson on the
// canonical architecture, iterative proportional fitting on binary
// coefficient rows, and Gaussian sampling of class members around the
// MaxEnt point.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "maxent/constraints.hpp"
#include "maxent/error.hpp"
#include "maxent/random.hpp"
#include "maxent/simplex.hpp"

namespace maxent {

struct SolveOptions {
  double tolerance = 1e-10;  // max |R p - m|
  int max_iterations = 500;  // Newton steps, or single-constraint IPF updates
  int max_halvings = 30;     // Newton step shrinks before declaring a stall

  static SolveOptions ipf_defaults() {
    SolveOptions o;
    o.max_iterations = 50000;
    return o;
  }

  void validate() const {
    if (!(tolerance > 0.0)) throw invalid_input("solver tolerance must be positive");
    if (max_iterations < 1) throw invalid_input("solver max_iterations must be >= 1");
    if (max_halvings < 0) throw invalid_input("solver max_halvings must be >= 0");
  }
};

struct MaxEntSolution {
  Distribution distribution;
  std::optional<Eigen::VectorXd> multipliers;  // Newton only
  int iterations = 0;
  double residual = 0.0;
};

enum class SolverKind { newton, ipf };

namespace detail {

inline Eigen::Index worst_row(const Eigen::VectorXd& g) {
  Eigen::Index i = 0;
  if (g.size() > 0) g.cwiseAbs().maxCoeff(&i);
  return i;
}

inline bool columns_sum_to_one(const Eigen::MatrixXd& r, double tol) {
  return ((r.colwise().sum().array() - 1.0).abs() <= tol).all();
}

}  // namespace detail

/// Least-squares multipliers theta with R^T theta ~ log p.
inline Eigen::VectorXd multipliers_from(const ArchitectureMatrix& r, const Distribution& p) {
  if (!p.strictly_positive()) throw invalid_input("multipliers_from: distribution must be strictly positive");
  const Eigen::VectorXd logp = p.probs().array().log().matrix();
  return r.rows().transpose().colPivHouseholderQr().solve(logp);
}

/// Distance of log p from the row space of R (max norm). Zero exactly when p
/// has the exponential form exp(R^T theta).
inline double exponential_form_residual(const ArchitectureMatrix& r, const Distribution& p) {
  const Eigen::VectorXd logp = p.probs().array().log().matrix();
  const Eigen::VectorXd theta = r.rows().transpose().colPivHouseholderQr().solve(logp);
  return (r.rows().transpose() * theta - logp).cwiseAbs().maxCoeff();
}

/// Newton-Raphson on the multipliers, started from the uniform distribution
/// (or from `start`). Each step solves J delta = -(m - m_hat) with
/// J = R diag(p) R^T; a step that does not reduce the residual norm is halved.
inline MaxEntSolution solve_newton(const ArchitectureMatrix& r, const SolveOptions& opts = {},
                                   std::optional<Eigen::VectorXd> start = std::nullopt) {
  opts.validate();
  const Eigen::MatrixXd& R = r.rows();
  const Eigen::VectorXd& target = r.moments();
  const Eigen::Index n = r.states();
  const Eigen::Index d = r.rank();
  if (d == 0 || n == 0) throw invalid_input("solve_newton: empty architecture");
  if (!detail::columns_sum_to_one(R, 1e-8))
    throw invalid_input("solve_newton: the normalization row is not in the span of the architecture");
  // a nonnegative row with zero moment pins states at p = 0, where no finite theta exists
  for (Eigen::Index a = 0; a < d; ++a)
    if (std::abs(target[a]) <= 1e-12 && (R.row(a).array() >= -1e-12).all() && (R.row(a).array() > 1e-12).any())
      throw infeasible_moments("newton: moments on the boundary, constraint " + std::to_string(a) +
                                   " forces states to zero; exclude them first",
                               static_cast<int>(a));

  Eigen::VectorXd theta;
  if (start) {
    if (start->size() != d) throw invalid_input("solve_newton: start has wrong length");
    theta = *start;
  } else {
    // columns of R sum to 1, so a constant theta gives the uniform start
    theta = Eigen::VectorXd::Constant(d, -std::log(static_cast<double>(n)));
  }

  Eigen::VectorXd p(n), g(d);
  auto evaluate = [&](const Eigen::VectorXd& th, Eigen::VectorXd& pp, Eigen::VectorXd& gg) {
    pp = (R.transpose() * th).array().exp().matrix();
    gg = R * pp - target;
    return gg.allFinite() ? gg.norm() : std::numeric_limits<double>::infinity();
  };

  double norm = evaluate(theta, p, g);
  if (!std::isfinite(norm)) throw invalid_input("solve_newton: start point overflows");
  int it = 0;
  Eigen::VectorXd p_try(n), g_try(d);
  while (g.cwiseAbs().maxCoeff() > opts.tolerance) {
    if (it >= opts.max_iterations)
      throw no_convergence("newton: no convergence after " + std::to_string(it) + " iterations (residual " +
                               std::to_string(g.cwiseAbs().maxCoeff()) + ")",
                           static_cast<int>(detail::worst_row(g)));
    const Eigen::MatrixXd J = R * p.asDiagonal() * R.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(J);
    // rcond() is fooled by subnormal entries, so also compare the Cholesky pivots
    const Eigen::VectorXd piv = llt.matrixLLT().diagonal().cwiseAbs2();
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15) || !(piv.minCoeff() > 1e-15 * piv.maxCoeff()))
      throw singular_jacobian("newton: singular Jacobian (degenerate or inconsistent constraints)",
                              static_cast<int>(detail::worst_row(g)));
    const Eigen::VectorXd delta = -llt.solve(g);

    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, step *= 0.5) {
      const Eigen::VectorXd cand = theta + step * delta;
      const double cand_norm = evaluate(cand, p_try, g_try);
      if (cand_norm < norm) {
        theta = cand;
        p.swap(p_try);
        g.swap(g_try);
        norm = cand_norm;
        accepted = true;
        break;
      }
    }
    ++it;
    if (!accepted)
      throw infeasible_moments("newton: infeasible moments, residual stalls at " +
                                   std::to_string(g.cwiseAbs().maxCoeff()),
                               static_cast<int>(detail::worst_row(g)));
    if (theta.cwiseAbs().maxCoeff() > 700.0 || p.minCoeff() < 1e-250)
      throw infeasible_moments("newton: infeasible moments, multipliers diverge toward the boundary of the "
                               "marginal polytope",
                               static_cast<int>(detail::worst_row(g)));
  }

  const double sum = p.sum();
  p /= sum;
  theta.array() -= std::log(sum);
  MaxEntSolution sol{Distribution::normalized(p, 1e-6), theta, it, 0.0};
  sol.residual = (R * sol.distribution.probs() - target).cwiseAbs().maxCoeff();
  return sol;
}

/// Iterative proportional fitting: cycles through the binary rows applying
/// p <- p (m_hat_a / m_a)^{C_a}. Converged once every row matches within
/// tolerance after a full cycle.
inline MaxEntSolution solve_ipf(const CoefficientMatrix& c, const SolveOptions& opts = SolveOptions::ipf_defaults()) {
  opts.validate();
  c.validate();
  if (!c.is_binary()) throw invalid_input("solve_ipf: coefficient rows must be binary");
  const Eigen::Index n = c.states();
  const Eigen::Index m = c.constraints();
  std::vector<std::vector<Eigen::Index>> support(static_cast<std::size_t>(m));
  for (Eigen::Index a = 0; a < m; ++a) {
    if (c.moments[a] < 0.0)
      throw infeasible_moments("ipf: infeasible negative moment on constraint " + std::to_string(a), static_cast<int>(a));
    for (Eigen::Index j = 0; j < n; ++j)
      if (c.rows(a, j) != 0.0) support[static_cast<std::size_t>(a)].push_back(j);
  }

  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  auto residuals = [&]() { return Eigen::VectorXd(c.rows * p - c.moments); };

  int updates = 0;
  Eigen::VectorXd g = residuals();
  while (g.cwiseAbs().maxCoeff() > opts.tolerance) {
    for (Eigen::Index a = 0; a < m; ++a) {
      if (updates >= opts.max_iterations)
        throw no_convergence("ipf: no convergence after " + std::to_string(updates) + " updates (residual " +
                                 std::to_string(g.cwiseAbs().maxCoeff()) + ")",
                             static_cast<int>(detail::worst_row(g)));
      const auto& s = support[static_cast<std::size_t>(a)];
      double running = 0.0;
      for (auto j : s) running += p[j];
      const double want = c.moments[a];
      if (want == 0.0) {
        for (auto j : s) p[j] = 0.0;
      } else if (running <= 0.0) {
        throw zero_marginal("ipf: running marginal of constraint " + std::to_string(a) +
                                " is zero but its target is positive (infeasible support)",
                            static_cast<int>(a));
      } else {
        const double ratio = want / running;
        for (auto j : s) p[j] *= ratio;
      }
      ++updates;
    }
    g = residuals();
    if (!g.allFinite()) throw infeasible_moments("ipf: iterates diverged", static_cast<int>(detail::worst_row(g)));
  }

  MaxEntSolution sol{Distribution::normalized(p, 1e-6), std::nullopt, updates, 0.0};
  sol.residual = (c.rows * sol.distribution.probs() - c.moments).cwiseAbs().maxCoeff();
  return sol;
}

/// Draws a member of the equivalence class around the MaxEnt point:
/// p = p_hat + sqrt(p_hat / N) * (X^T x), x standard normal. Draws leaving
/// the simplex are rejected.
inline Distribution sample_equivalence_class(const MaxEntSolution& sol, const KernelBasis& k, double N, Rng& rng,
                                             int max_rejections = 1000) {
  const Eigen::VectorXd& phat = sol.distribution.probs();
  if (k.vectors.cols() != phat.size()) throw invalid_input("sample_equivalence_class: kernel size mismatch");
  if (!(N > 0.0)) throw invalid_input("sample_equivalence_class: N must be positive");
  const Eigen::Index dim = k.dimension();
  if (dim == 0) return sol.distribution;
  const Eigen::VectorXd scale = (phat / N).cwiseSqrt();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(dim);
  for (int attempt = 0; attempt < max_rejections; ++attempt) {
    for (Eigen::Index i = 0; i < dim; ++i) x[i] = normal(rng);
    const Eigen::VectorXd pi = k.vectors.transpose() * x;
    Eigen::VectorXd p = phat + scale.cwiseProduct(pi);
    if ((p.array() < 0.0).any()) continue;
    return Distribution::normalized(std::move(p), 1e-9);
  }
  throw rejection_exhausted("sample_equivalence_class: " + std::to_string(max_rejections) +
                            " consecutive draws left the simplex; N is too small for the Gaussian regime");
}

/// A solve on the microstates that survive the zero-marginal rule, mapped
/// back to the full space.
struct FitResult {
  MaxEntSolution solution;          // distribution over the full space
  std::vector<bool> support;        // kept microstates
  ArchitectureMatrix architecture;  // canonical form on the kept microstates
};

/// Excludes structural zeros, canonicalizes and solves.
inline FitResult fit_maxent(const CoefficientMatrix& c, SolverKind kind, const SolveOptions& opts) {
  c.validate();
  std::vector<bool> keep = zero_marginal_support(c.rows, c.moments);
  std::optional<CoefficientMatrix> reduced;
  std::optional<ArchitectureMatrix> canon;
  for (;;) {
    if (count_kept(keep) == 0) throw infeasible_moments("fit: every microstate is excluded by a zero marginal", -1);
    reduced = restrict_columns(c, keep);
    canon = to_architecture(*reduced);
    // zeros implied only by combinations of rows show up in the reduced echelon form
    const auto more = zero_marginal_support(canon->rows(), canon->moments(), 1e-12);
    if (count_kept(more) == more.size()) break;
    std::size_t k = 0;
    for (std::size_t j = 0; j < keep.size(); ++j)
      if (keep[j] && !more[k++]) keep[j] = false;
  }
  ArchitectureMatrix arch = std::move(*canon);
  if (count_kept(keep) == 1) {
    // a single surviving state is fixed by normalization alone
    MaxEntSolution one{Distribution(Eigen::VectorXd::Ones(1)), std::nullopt, 0, 0.0};
    if (kind == SolverKind::newton) one.multipliers = Eigen::VectorXd::Zero(arch.rank());
    one.residual = (arch.rows() * one.distribution.probs() - arch.moments()).cwiseAbs().maxCoeff();
    if (one.residual > opts.tolerance) throw infeasible_moments("fit: infeasible moments on the single kept state", 0);
    one.distribution = expand_distribution(one.distribution, keep);
    return {std::move(one), std::move(keep), std::move(arch)};
  }
  MaxEntSolution sol = kind == SolverKind::newton ? solve_newton(arch, opts) : solve_ipf(*reduced, opts);
  sol.distribution = expand_distribution(sol.distribution, keep);
  return {std::move(sol), std::move(keep), std::move(arch)};
}

}  // namespace maxent
