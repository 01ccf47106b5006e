#pragma once

// Entropy-based model scoring and selection.
//
// Scores are standardized as
//   bic = 2N H[p_hat] + D log N
//   aic = 2N H[p_hat] + 2 D
// which differ from the textbook scores only by model-independent terms
// (N H[f], |A| log N / 2, ...). Differences between two models are exact.
//
// When a sample leaves microstates empty, the zero-marginal rule removes
// them first; |A| and D then refer to the working space of that model.

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maxent/constraints.hpp"
#include "maxent/error.hpp"
#include "maxent/simplex.hpp"
#include "maxent/solver.hpp"

namespace maxent {

// --- chi-squared -------------------------------------------------------------

/// Cumulative chi-squared distribution with k degrees of freedom. k = 0 is the
/// point mass at zero.
inline double chi2_cdf(int k, double x) {
  if (k < 0) throw invalid_input("chi2_cdf: negative degrees of freedom");
  if (x < 0.0 || std::isnan(x)) throw invalid_input("chi2_cdf: x must be >= 0");
  if (k == 0) return 1.0;
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * k, 0.5 * x);
}

/// Upper tail 1 - F_k(x), computed directly so that tiny p-values keep their
/// relative precision. k = 0 yields 1: the saturated model always passes.
inline double chi2_sf(int k, double x) {
  if (k < 0) throw invalid_input("chi2_sf: negative degrees of freedom");
  if (x < 0.0 || std::isnan(x)) throw invalid_input("chi2_sf: x must be >= 0");
  if (k == 0 || x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * k, 0.5 * x);
}

// --- scores from primitive quantities ---------------------------------------

inline double p_value_of(double delta, Eigen::Index dof, double N) {
  return chi2_sf(static_cast<int>(std::max<Eigen::Index>(dof, 0)), 2.0 * N * std::max(delta, 0.0));
}
inline double bic_of(double h_maxent, Eigen::Index rank, double N) {
  return 2.0 * N * h_maxent + static_cast<double>(rank) * std::log(N);
}
inline double aic_of(double h_maxent, Eigen::Index rank, double N) {
  return 2.0 * N * h_maxent + 2.0 * static_cast<double>(rank);
}
inline double expected_entropy_of(double h_maxent, Eigen::Index dof, double N) {
  return h_maxent - static_cast<double>(dof) / (2.0 * N);
}

struct ModelScore {
  std::string id;
  std::size_t index = 0;    // position in the candidate list
  Eigen::Index rank = 0;    // D on the working space
  Eigen::Index states = 0;  // |A| of the working space
  double maxent_entropy = 0.0;
  double empirical_delta = 0.0;  // H[p_hat] - H[f], clipped at 0
  double p_value = 1.0;
  double bic = 0.0;
  double aic = 0.0;
  double expected_entropy = 0.0;

  Eigen::Index kernel_dim() const noexcept { return states - rank; }
};

inline ModelScore make_score(std::string id, std::size_t index, Eigen::Index rank, Eigen::Index states,
                             double h_maxent, double h_empirical, double N) {
  ModelScore s;
  s.id = std::move(id);
  s.index = index;
  s.rank = rank;
  s.states = states;
  s.maxent_entropy = h_maxent;
  s.empirical_delta = std::max(0.0, h_maxent - h_empirical);
  s.p_value = p_value_of(s.empirical_delta, s.kernel_dim(), N);
  s.bic = bic_of(h_maxent, rank, N);
  s.aic = aic_of(h_maxent, rank, N);
  s.expected_entropy = expected_entropy_of(h_maxent, s.kernel_dim(), N);
  return s;
}

/// LRT p-value of a simpler model against one implying it. The degrees of
/// freedom are the kernel-dimension difference, D' - D on a common space.
inline double lrt_p_value_of(const ModelScore& simple, const ModelScore& complex, double N) {
  const Eigen::Index dof = simple.kernel_dim() - complex.kernel_dim();
  if (dof <= 0) return 1.0;
  const double stat = 2.0 * N * std::max(0.0, simple.maxent_entropy - complex.maxent_entropy);
  return chi2_sf(static_cast<int>(dof), stat);
}

// --- fitting an architecture to data ------------------------------------------

struct ArchitectureFit {
  Distribution maxent;  // over the full space
  Eigen::Index rank = 0;
  Eigen::Index states = 0;
};

/// MaxEnt of r on the moments of f. Microstates under a non-negative row of R
/// with zero moment are removed first.
inline ArchitectureFit fit_architecture(const ArchitectureMatrix& r, const Distribution& f, const SolveOptions& opts = {}) {
  if (static_cast<Eigen::Index>(f.size()) != r.states()) throw invalid_input("fit_architecture: size mismatch");
  const Eigen::VectorXd m = r.rows() * f.probs();
  std::vector<bool> keep(static_cast<std::size_t>(r.states()), true);
  std::optional<ArchitectureMatrix> reduced;
  for (;;) {
    const auto kept = static_cast<Eigen::Index>(count_kept(keep));
    Eigen::MatrixXd cols(r.rank(), kept);
    for (Eigen::Index j = 0, k = 0; j < r.states(); ++j)
      if (keep[static_cast<std::size_t>(j)]) cols.col(k++) = r.rows().col(j);
    reduced = kept == r.states() ? r.with_moments(m) : canonicalize(cols, m);
    // rounding in R f leaves exact zeros at the 1e-17 level
    const auto more = zero_marginal_support(reduced->rows(), reduced->moments(), 1e-12);
    if (count_kept(more) == more.size()) break;
    for (std::size_t j = 0, k = 0; j < keep.size(); ++j)
      if (keep[j] && !more[k++]) keep[j] = false;
  }
  const auto kept = static_cast<Eigen::Index>(count_kept(keep));
  if (kept == 1) return {expand_distribution(Distribution(Eigen::VectorXd::Ones(1)), keep), reduced->rank(), 1};
  MaxEntSolution sol = solve_newton(*reduced, opts);
  return {expand_distribution(sol.distribution, keep), reduced->rank(), kept};
}

inline ModelScore score_architecture(std::string id, std::size_t index, const ArchitectureMatrix& r,
                                     const Distribution& f, double N, const SolveOptions& opts = {}) {
  const ArchitectureFit fit = fit_architecture(r, f, opts);
  return make_score(std::move(id), index, fit.rank, fit.states, entropy(fit.maxent), entropy(f), N);
}

/// 1 - F_{|A|-D}(2 N (H[p_hat] - H[f])).
inline double empirical_p_value(const ArchitectureMatrix& r, const Distribution& f, double N) {
  return score_architecture("", 0, r, f, N).p_value;
}

/// 1 - F_{D'-D}(2 N (H[p_hat] - H[p_hat'])). Throws not_nested unless
/// r_complex implies r.
inline double lrt_p_value(const ArchitectureMatrix& r, const ArchitectureMatrix& r_complex, const Distribution& f,
                          double N) {
  if (!nesting_map(r, r_complex)) throw not_nested("lrt_p_value: the complex architecture does not imply the simple one");
  const ModelScore s = score_architecture("", 0, r, f, N);
  const ModelScore c = score_architecture("", 1, r_complex, f, N);
  return lrt_p_value_of(s, c, N);
}

inline double bic(const ArchitectureMatrix& r, const Distribution& f, double N) {
  return score_architecture("", 0, r, f, N).bic;
}
inline double aic(const ArchitectureMatrix& r, const Distribution& f, double N) {
  return score_architecture("", 0, r, f, N).aic;
}
/// H[p_hat] - (|A| - D) / (2N): mean entropy over the equivalence class.
inline double expected_entropy(const ArchitectureMatrix& r, const Distribution& f, double N) {
  return score_architecture("", 0, r, f, N).expected_entropy;
}

// --- selection ------------------------------------------------------------------

enum class Method { bic, aic, hyper_maxent, hyper_maxent_lrt };

inline constexpr Method kAllMethods[] = {Method::bic, Method::aic, Method::hyper_maxent, Method::hyper_maxent_lrt};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::bic: return "bic";
    case Method::aic: return "aic";
    case Method::hyper_maxent: return "hyper_maxent";
    case Method::hyper_maxent_lrt: return "hyper_maxent_lrt";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : kAllMethods)
    if (method_name(m) == s) return m;
  throw invalid_input("unknown selection method '" + std::string(s) + "'");
}

struct SelectionConfig {
  Method method = Method::bic;
  /// Multiplies both hyper-MaxEnt thresholds.
  double alpha_prefactor = 1.0;
};

/// (|A| - D) / N
inline double alpha_empirical(const ModelScore& s, double N, double prefactor = 1.0) {
  return prefactor * static_cast<double>(s.kernel_dim()) / N;
}
/// (2|A| - D - D') / N
inline double alpha_lrt(const ModelScore& simple, const ModelScore& complex, double N, double prefactor = 1.0) {
  return prefactor * static_cast<double>(simple.kernel_dim() + complex.kernel_dim()) / N;
}

struct Choice {
  std::optional<std::size_t> position;  // into the score table
  bool fallback = false;
};

/// Applies one selection procedure to a score table. `implies(i, j)` answers
/// whether model j is a strict refinement of model i (j's constraints imply
/// i's). Ties: lower rank, then larger p-value (hyper methods), then table
/// order.
template <class Implies>
Choice choose(const std::vector<ModelScore>& scores, double N, const SelectionConfig& cfg, Implies&& implies) {
  Choice out;
  if (scores.empty()) return out;
  auto by_score = [&](auto key) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      const double a = key(scores[i]), b = key(scores[best]);
      if (a < b || (a == b && scores[i].rank < scores[best].rank)) best = i;
    }
    return best;
  };
  switch (cfg.method) {
    case Method::bic: out.position = by_score([](const ModelScore& s) { return s.bic; }); return out;
    case Method::aic: out.position = by_score([](const ModelScore& s) { return s.aic; }); return out;
    default: break;
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].rank != scores[b].rank) return scores[a].rank < scores[b].rank;
    return scores[a].p_value > scores[b].p_value;
  });

  for (std::size_t i : order) {
    const ModelScore& s = scores[i];
    if (s.p_value < alpha_empirical(s, N, cfg.alpha_prefactor)) continue;
    if (cfg.method == Method::hyper_maxent_lrt) {
      bool typical = true;
      for (std::size_t j = 0; j < scores.size() && typical; ++j) {
        if (j == i || !implies(i, j)) continue;
        typical = lrt_p_value_of(s, scores[j], N) >= alpha_lrt(s, scores[j], N, cfg.alpha_prefactor);
      }
      if (!typical) continue;
    }
    out.position = i;
    return out;
  }

  out.fallback = true;
  for (std::size_t i : order)
    if (scores[i].kernel_dim() == 0) {
      out.position = i;
      break;
    }
  return out;
}

struct ScoreTable {
  std::vector<ModelScore> scores;     // solvable candidates, candidate order
  std::vector<std::string> warnings;  // one per excluded candidate
};

/// Scores every candidate on f. Candidates whose solve fails are excluded
/// with a warning.
inline ScoreTable score_candidates(std::span<const ArchitectureMatrix> candidates, const Distribution& f, double N,
                                   std::span<const std::string> ids = {}, const SolveOptions& opts = {}) {
  if (candidates.empty()) throw invalid_input("select: no candidates");
  if (!ids.empty() && ids.size() != candidates.size()) throw invalid_input("select: id list length mismatch");
  ScoreTable out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::string id = ids.empty() ? std::to_string(i) : ids[i];
    try {
      out.scores.push_back(score_architecture(id, i, candidates[i], f, N, opts));
    } catch (const error& e) {
      out.warnings.push_back("candidate " + id + " excluded: " + e.what());
    }
  }
  return out;
}

/// Whether candidate b strictly refines candidate a (indices into the
/// candidate list).
using ImpliesFn = std::function<bool(std::size_t, std::size_t)>;

/// Nesting decided by nesting_map on the full-space architectures.
inline ImpliesFn nesting_relation(std::span<const ArchitectureMatrix> candidates) {
  auto memo = std::make_shared<std::map<std::pair<std::size_t, std::size_t>, bool>>();
  return [candidates, memo](std::size_t a, std::size_t b) {
    auto [it, fresh] = memo->try_emplace({a, b}, false);
    if (fresh) {
      const auto& ra = candidates[a];
      const auto& rb = candidates[b];
      it->second = ra.rank() < rb.rank() && nesting_map(ra, rb).has_value();
    }
    return it->second;
  };
}

struct SelectionResult {
  std::optional<std::size_t> chosen;  // candidate index
  std::string chosen_id;              // "saturated" for an absent fallback
  bool fallback = false;
};

inline SelectionResult select_from(const ScoreTable& table, double N, const SelectionConfig& cfg,
                                   const ImpliesFn& implies) {
  SelectionResult out;
  if (table.scores.empty()) return out;
  const auto& sc = table.scores;
  const Choice c = choose(sc, N, cfg, [&](std::size_t i, std::size_t j) { return implies(sc[i].index, sc[j].index); });
  out.fallback = c.fallback;
  if (c.position) {
    out.chosen = sc[*c.position].index;
    out.chosen_id = sc[*c.position].id;
  } else {
    out.chosen_id = "saturated";
  }
  return out;
}

/// Scores every candidate on f and applies cfg.method.
inline SelectionResult select(std::span<const ArchitectureMatrix> candidates, const Distribution& f, double N,
                              const SelectionConfig& cfg, std::span<const std::string> ids = {},
                              const SolveOptions& opts = {}) {
  const ScoreTable table = score_candidates(candidates, f, N, ids, opts);
  return select_from(table, N, cfg, nesting_relation(candidates));
}

// --- training and test error ----------------------------------------------------

struct ErrorEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

namespace detail {
inline ErrorEstimate summarize(const std::vector<double>& values) {
  ErrorEstimate e;
  e.trials = static_cast<int>(values.size());
  if (values.empty()) return e;
  const double n = static_cast<double>(values.size());
  e.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}
}  // namespace detail

/// Mean of N KL(q || p_hat) over training samples of size N drawn from q,
/// p_hat being the MaxEnt of r_model on each sample.
inline ErrorEstimate mc_training_error(const ArchitectureMatrix& r_model, const Distribution& q, std::int64_t N,
                                       int trials, Rng& rng, const SolveOptions& opts = {}) {
  if (trials < 1) throw invalid_input("mc_training_error: trials must be >= 1");
  if (!q.strictly_positive()) throw invalid_input("mc_training_error: q must be strictly positive");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const Distribution f = multinomial_sample(q, N, rng).frequencies();
    const ArchitectureFit fit = fit_architecture(r_model, f, opts);
    values.push_back(static_cast<double>(N) * kl_divergence(q, fit.maxent));
  }
  return detail::summarize(values);
}

/// Mean of N KL(g || p_hat_f) over independent training samples f and test
/// samples g of size N. The standard error is taken across training samples.
inline ErrorEstimate mc_test_error(const ArchitectureMatrix& r_model, const Distribution& q, std::int64_t N, int trials,
                                   int test_trials, Rng& rng, const SolveOptions& opts = {}) {
  if (trials < 1 || test_trials < 1) throw invalid_input("mc_test_error: trial counts must be >= 1");
  if (!q.strictly_positive()) throw invalid_input("mc_test_error: q must be strictly positive");
  std::vector<double> per_train;
  per_train.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const Distribution f = multinomial_sample(q, N, rng).frequencies();
    const ArchitectureFit fit = fit_architecture(r_model, f, opts);
    double sum = 0.0;
    for (int u = 0; u < test_trials; ++u) {
      const Distribution g = multinomial_sample(q, N, rng).frequencies();
      sum += static_cast<double>(N) * kl_divergence(g, fit.maxent);
    }
    per_train.push_back(sum / test_trials);
  }
  return detail::summarize(per_train);
}

}  // namespace maxent
