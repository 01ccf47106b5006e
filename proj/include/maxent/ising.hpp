#pragma once

// Lattice-gas Ising systems (spins in {0,1}) as hierarchical MaxEnt models.
//
// Conventions: for L spins, microstate index a has spin i (1-based) at bit
// L - i, so index order is the lexicographic order of the bitstring labels.
// A set of spins is a bitmask in the same bit layout; the monomial
// prod_{i in S} sigma_i is 1 on state a iff (a & S) == S.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "maxent/constraints.hpp"
#include "maxent/error.hpp"
#include "maxent/random.hpp"
#include "maxent/simplex.hpp"
#include "maxent/solver.hpp"

namespace maxent::ising {

using SpinSet = std::uint32_t;
/// Bit s is set when the subset with mask s belongs to the family (L <= 6).
using Family = std::uint64_t;

inline constexpr int kMaxEnumerationSpins = 6;

inline SpinSet spin_bit(int L, int spin) { return SpinSet{1} << (L - spin); }

inline SpinSet make_spin_set(int L, std::initializer_list<int> spins) {
  SpinSet s = 0;
  for (int i : spins) {
    if (i < 1 || i > L) throw invalid_input("spin index " + std::to_string(i) + " out of range");
    s |= spin_bit(L, i);
  }
  return s;
}

/// Spins of S in increasing order.
inline std::vector<int> spins_of(int L, SpinSet s) {
  std::vector<int> out;
  for (int i = 1; i <= L; ++i)
    if (s & spin_bit(L, i)) out.push_back(i);
  return out;
}

inline int order_of(SpinSet s) { return std::popcount(s); }

/// Canonical subset order: by size, then lexicographically on sorted spins.
/// With spin 1 in the highest bit the lexicographic part is descending mask.
inline bool canonical_less(SpinSet a, SpinSet b) {
  if (order_of(a) != order_of(b)) return order_of(a) < order_of(b);
  return a > b;
}

/// "123" style text for a spin set (single-digit spins).
inline std::string format_spin_set(int L, SpinSet s) {
  std::string out;
  for (int i : spins_of(L, s)) out += std::to_string(i);
  return out;
}

class Hypergraph {
 public:
  Hypergraph(int spins, std::vector<SpinSet> edges) : spins_(spins) {
    if (spins < 1 || spins > 20) throw invalid_input("hypergraph: spin count must be in [1, 20]");
    const SpinSet all = (SpinSet{1} << spins) - 1;
    for (SpinSet e : edges) {
      if (e == 0) throw invalid_input("hypergraph: empty hyperedge");
      if (e & ~all) throw invalid_input("hypergraph: hyperedge references a spin out of range");
    }
    std::sort(edges.begin(), edges.end(), canonical_less);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
  }

  /// From 1-based spin lists.
  static Hypergraph from_lists(int spins, const std::vector<std::vector<int>>& lists) {
    std::vector<SpinSet> edges;
    for (const auto& l : lists) {
      SpinSet s = 0;
      for (int i : l) {
        if (i < 1 || i > spins) throw invalid_input("hypergraph: spin index " + std::to_string(i) + " out of range");
        s |= spin_bit(spins, i);
      }
      edges.push_back(s);
    }
    return Hypergraph(spins, std::move(edges));
  }

  int spins() const noexcept { return spins_; }
  const std::vector<SpinSet>& edges() const noexcept { return edges_; }

  friend bool operator==(const Hypergraph&, const Hypergraph&) = default;

 private:
  int spins_;
  std::vector<SpinSet> edges_;
};

/// {{1,2,3},{1,2,4},{3,5},{4,5}} on five spins.
inline Hypergraph benchmark_hypergraph() {
  return Hypergraph::from_lists(5, {{1, 2, 3}, {1, 2, 4}, {3, 5}, {4, 5}});
}

/// Downward-closed family of non-empty spin sets, canonically ordered.
class InteractionClosure {
 public:
  InteractionClosure(int spins, std::vector<SpinSet> members) : spins_(spins), members_(std::move(members)) {
    std::sort(members_.begin(), members_.end(), canonical_less);
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    for (SpinSet s : members_)
      for (SpinSet t = (s - 1) & s; t; t = (t - 1) & s)
        if (!std::binary_search(members_.begin(), members_.end(), t, canonical_less))
          throw invalid_input("interaction family is not downward closed");
  }

  static InteractionClosure from_family(int spins, Family family) {
    std::vector<SpinSet> m;
    for (SpinSet s = 1; s < (SpinSet{1} << spins); ++s)
      if (family >> s & 1U) m.push_back(s);
    return InteractionClosure(spins, std::move(m));
  }

  int spins() const noexcept { return spins_; }
  const std::vector<SpinSet>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool contains(SpinSet s) const { return std::binary_search(members_.begin(), members_.end(), s, canonical_less); }

  /// Bitmask form; only for spins <= 6.
  Family family() const {
    if (spins_ > kMaxEnumerationSpins) throw invalid_input("family mask needs at most 6 spins");
    Family f = 0;
    for (SpinSet s : members_) f |= Family{1} << s;
    return f;
  }

  /// Maximal members: the hyperedges that generate the family.
  std::vector<SpinSet> generators() const {
    std::vector<SpinSet> g;
    for (SpinSet s : members_) {
      bool maximal = true;
      for (SpinSet t : members_)
        if (t != s && (t & s) == s) maximal = false;
      if (maximal) g.push_back(s);
    }
    return g;
  }

  bool includes(const InteractionClosure& o) const {
    return std::includes(members_.begin(), members_.end(), o.members_.begin(), o.members_.end(), canonical_less);
  }

  friend bool operator==(const InteractionClosure&, const InteractionClosure&) = default;

 private:
  int spins_;
  std::vector<SpinSet> members_;
};

/// All non-empty subsets of all hyperedges.
inline InteractionClosure closure(const Hypergraph& g) {
  std::vector<SpinSet> m;
  for (SpinSet e : g.edges())
    for (SpinSet t = e; t; t = (t - 1) & e) m.push_back(t);
  return InteractionClosure(g.spins(), std::move(m));
}

/// One monomial row per member of the family plus the all-ones row.
inline CoefficientMatrix to_coefficients(const InteractionClosure& c, int L) {
  if (c.spins() != L) throw invalid_input("to_coefficients: spin count mismatch");
  const auto n = static_cast<Eigen::Index>(std::size_t{1} << L);
  CoefficientMatrix out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.size()) + 1, n),
                        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.size()) + 1)};
  out.rows.row(0).setOnes();
  out.moments[0] = 1.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const SpinSet s = c.members()[k];
    for (Eigen::Index a = 0; a < n; ++a)
      if ((static_cast<SpinSet>(a) & s) == s) out.rows(static_cast<Eigen::Index>(k) + 1, a) = 1.0;
  }
  return out;
}

/// Indicator rows of every cell of every generator's marginal table, plus the
/// all-ones row. Spans the same row space as to_coefficients, but a zero cell
/// shows up as a zero-moment row, so the zero-marginal rule can see it.
inline CoefficientMatrix marginal_table_coefficients(const InteractionClosure& c, int L) {
  if (c.spins() != L) throw invalid_input("marginal_table_coefficients: spin count mismatch");
  const auto n = static_cast<Eigen::Index>(std::size_t{1} << L);
  std::vector<Eigen::VectorXd> rows{Eigen::VectorXd::Ones(n)};
  for (SpinSet h : c.generators()) {
    for (SpinSet cell = h;; cell = (cell - 1) & h) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
      for (Eigen::Index a = 0; a < n; ++a)
        if ((static_cast<SpinSet>(a) & h) == cell) r[a] = 1.0;
      rows.push_back(std::move(r));
      if (cell == 0) break;
    }
  }
  CoefficientMatrix out{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), n),
                        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i) out.rows.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  out.moments[0] = 1.0;
  return out;
}

inline ArchitectureMatrix architecture_of(const InteractionClosure& c) {
  return to_architecture(to_coefficients(c, c.spins()));
}

// --- enumeration ------------------------------------------------------------------

struct EnumeratedModel {
  Family family = 0;
  int rank = 0;  // |family| + 1
};

namespace detail {

// Canonical rank of a subset among the 2^L - 1 non-empty subsets.
inline std::vector<int> canonical_positions(int L) {
  std::vector<SpinSet> all;
  for (SpinSet s = 1; s < (SpinSet{1} << L); ++s) all.push_back(s);
  std::sort(all.begin(), all.end(), canonical_less);
  std::vector<int> pos(std::size_t{1} << L, -1);
  for (std::size_t i = 0; i < all.size(); ++i) pos[all[i]] = static_cast<int>(i);
  return pos;
}

// Family as a bit key where the canonically first subset is the top bit.
inline std::uint64_t family_key(Family f, const std::vector<int>& pos) {
  std::uint64_t k = 0;
  for (SpinSet s = 1; s < pos.size(); ++s)
    if (f >> s & 1U) k |= std::uint64_t{1} << (63 - pos[s]);
  return k;
}

inline Family down_closure(SpinSet e) {
  Family f = 0;
  for (SpinSet t = e; t; t = (t - 1) & e) f |= Family{1} << t;
  return f;
}

}  // namespace detail

/// Every downward-closed family of non-empty subsets of {1..L}, the empty
/// family included, in canonical order: by rank, then by the sorted member
/// list. Families are generated from their antichains of maximal elements.
/// The monomial rows of distinct families are linearly independent, so every
/// family has a distinct architecture of rank |family| + 1.
inline std::vector<EnumeratedModel> enumerate_models(int L) {
  if (L < 1 || L > kMaxEnumerationSpins) throw invalid_input("enumerate_models: L must be in [1, 6]");
  std::vector<SpinSet> subsets;
  for (SpinSet s = 1; s < (SpinSet{1} << L); ++s) subsets.push_back(s);
  std::sort(subsets.begin(), subsets.end(), canonical_less);
  std::vector<Family> closures(subsets.size());
  for (std::size_t i = 0; i < subsets.size(); ++i) closures[i] = detail::down_closure(subsets[i]);

  std::vector<EnumeratedModel> out;
  // chosen: antichain so far; family: its closure; up: sets above a chosen one
  std::function<void(std::size_t, Family, Family)> grow = [&](std::size_t from, Family family, Family blocked) {
    out.push_back({family, std::popcount(family) + 1});
    for (std::size_t i = from; i < subsets.size(); ++i) {
      const SpinSet s = subsets[i];
      if (family >> s & 1U) continue;   // below a chosen element
      if (blocked >> s & 1U) continue;  // above a chosen element
      Family above = 0;
      for (std::size_t j = 0; j < subsets.size(); ++j)
        if ((subsets[j] & s) == s) above |= Family{1} << subsets[j];
      grow(i + 1, family | closures[i], blocked | above);
    }
  };
  grow(0, 0, 0);

  const auto pos = detail::canonical_positions(L);
  std::vector<std::pair<std::uint64_t, EnumeratedModel>> keyed;
  keyed.reserve(out.size());
  for (const auto& m : out) keyed.emplace_back(detail::family_key(m.family, pos), m);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.second.rank != b.second.rank) return a.second.rank < b.second.rank;
    return a.first > b.first;
  });
  for (std::size_t i = 0; i < keyed.size(); ++i) out[i] = keyed[i].second;
  return out;
}

/// Generators rendered as "123|35"; "-" for the empty family.
inline std::string format_family(int L, Family f) {
  const auto gens = InteractionClosure::from_family(L, f).generators();
  if (gens.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    if (i) out += '|';
    out += format_spin_set(L, gens[i]);
  }
  return out;
}

// --- Hamiltonian -----------------------------------------------------------------------

/// Coefficient of each interaction of order <= 3 (h, J, T).
struct IsingParams {
  int spins = 0;
  std::vector<std::pair<SpinSet, double>> values;  // canonical order

  std::optional<double> at(SpinSet s) const {
    for (const auto& [k, v] : values)
      if (k == s) return v;
    return std::nullopt;
  }
};

/// Standard-normal coefficient for every member of the closure of g.
inline IsingParams random_params(const Hypergraph& g, Rng& rng) {
  for (SpinSet e : g.edges())
    if (order_of(e) > 3) throw invalid_input("random_params: hyperedges beyond cubic order are not supported");
  std::normal_distribution<double> normal(0.0, 1.0);
  IsingParams p{g.spins(), {}};
  const InteractionClosure c = closure(g);
  for (SpinSet s : c.members()) p.values.emplace_back(s, normal(rng));
  return p;
}

/// q(sigma) proportional to exp E(sigma), E = sum_S theta_S prod_{i in S} sigma_i.
/// The symmetric-tensor sums with 1/2 and 1/6 reduce to one term per
/// unordered interaction.
inline Distribution boltzmann(const IsingParams& p, int L) {
  if (L < 1 || L > 20) throw invalid_input("boltzmann: L must be in [1, 20]");
  if (p.spins != L) throw invalid_input("boltzmann: parameter spin count mismatch");
  const std::size_t n = std::size_t{1} << L;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (const auto& [s, v] : p.values)
      if ((static_cast<SpinSet>(a) & s) == s) e[static_cast<Eigen::Index>(a)] += v;
  const double emax = e.maxCoeff();
  Eigen::VectorXd w = (e.array() - emax).exp().matrix();
  return Distribution::normalized(std::move(w), std::numeric_limits<double>::infinity());
}

struct Rates {
  double tp_rate = 0.0;
  double fp_rate = 0.0;
};

/// TP rate |sel & truth| / |truth|; FP rate |sel \ truth| / (2^L - 1 - |truth|).
inline Rates tp_fp_rates(const InteractionClosure& selected, const InteractionClosure& truth, int L) {
  if (selected.spins() != L || truth.spins() != L) throw invalid_input("tp_fp_rates: spin count mismatch");
  const double universe = static_cast<double>((std::size_t{1} << L) - 1);
  std::size_t tp = 0, fp = 0;
  for (SpinSet s : selected.members()) (truth.contains(s) ? tp : fp)++;
  Rates r;
  r.tp_rate = truth.size() ? static_cast<double>(tp) / static_cast<double>(truth.size()) : 0.0;
  const double negatives = universe - static_cast<double>(truth.size());
  r.fp_rate = negatives > 0 ? static_cast<double>(fp) / negatives : 0.0;
  return r;
}

// --- fast hierarchical fitting ----------------------------------------------------------

inline constexpr int kMaxFastStates = 64;
using StateArray = std::array<double, kMaxFastStates>;

/// Marginal tables of an empirical distribution for every spin subset.
class SampleMarginals {
 public:
  SampleMarginals(int L, const Distribution& f) : L_(L), n_(std::size_t{1} << L) {
    if (L > kMaxEnumerationSpins) throw invalid_input("SampleMarginals: at most 6 spins");
    if (f.size() != n_) throw invalid_input("SampleMarginals: size mismatch");
    for (std::size_t a = 0; a < n_; ++a) f_[a] = f[a];
    tables_.resize(n_);
    zero_states_.assign(n_, 0);
    for (SpinSet s = 1; s < n_; ++s) {
      auto& t = tables_[s];
      t.fill(0.0);
      for (std::size_t a = 0; a < n_; ++a) t[a & s] += f_[a];
      for (std::size_t a = 0; a < n_; ++a)
        if (t[a & s] == 0.0) zero_states_[s] |= std::uint64_t{1} << a;
    }
  }

  int spins() const noexcept { return L_; }
  std::size_t states() const noexcept { return n_; }
  /// Cell (a & S) of the marginal on S.
  const StateArray& table(SpinSet s) const { return tables_[s]; }
  /// States lying in a zero cell of the marginal on S.
  std::uint64_t zero_states(SpinSet s) const { return zero_states_[s]; }
  const StateArray& frequencies() const noexcept { return f_; }

 private:
  int L_;
  std::size_t n_;
  StateArray f_{};
  std::vector<StateArray> tables_;
  std::vector<std::uint64_t> zero_states_;
};

struct HierarchicalFit {
  StateArray p{};
  std::uint64_t support = 0;  // kept states
  int rank = 0;               // on the kept states
  int states = 0;
  double entropy = 0.0;
  int cycles = 0;
  bool newton_fallback = false;
};

/// Rank of the family's monomial rows (plus the all-ones row) restricted to
/// the states in `support`.
inline int restricted_rank(int L, Family family, std::uint64_t support) {
  const std::size_t n = std::size_t{1} << L;
  std::vector<std::size_t> cols;
  for (std::size_t a = 0; a < n; ++a)
    if (support >> a & 1U) cols.push_back(a);
  Eigen::MatrixXd m(std::popcount(family) + 1, static_cast<Eigen::Index>(cols.size()));
  m.row(0).setOnes();
  Eigen::Index r = 1;
  for (SpinSet s = 1; s < n; ++s) {
    if (!(family >> s & 1U)) continue;
    for (std::size_t k = 0; k < cols.size(); ++k)
      m(r, static_cast<Eigen::Index>(k)) = (static_cast<SpinSet>(cols[k]) & s) == s ? 1.0 : 0.0;
    ++r;
  }
  return static_cast<int>(matrix_rank(m));
}

/// MaxEnt of a hierarchical model on one sample: states in zero cells of any
/// generator's marginal are excluded, then IPF runs over the generators'
/// marginal tables (each update matches one whole table, i.e. one block of
/// cell-indicator rows). When IPF has not converged after `max_cycles`,
/// Newton takes over from the IPF iterate on the canonical architecture.
inline HierarchicalFit fit_hierarchical(const SampleMarginals& sample, Family family, const SolveOptions& opts = {},
                                        int max_cycles = 200) {
  const int L = sample.spins();
  const std::size_t n = sample.states();
  const std::vector<SpinSet> gens = InteractionClosure::from_family(L, family).generators();
  HierarchicalFit out;
  std::uint64_t excluded = 0;
  for (SpinSet g : gens) excluded |= sample.zero_states(g);
  const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  out.support = all & ~excluded;
  out.states = std::popcount(out.support);
  out.rank = excluded ? restricted_rank(L, family, out.support) : std::popcount(family) + 1;

  StateArray& p = out.p;
  p.fill(0.0);
  const double u = 1.0 / out.states;
  for (std::size_t a = 0; a < n; ++a)
    if (out.support >> a & 1U) p[a] = u;

  if (!gens.empty() && out.rank < out.states) {
    StateArray running{};
    auto max_residual = [&]() {
      double worst = 0.0;
      for (SpinSet g : gens) {
        const StateArray& target = sample.table(g);
        for (SpinSet c = g;; c = (c - 1) & g) {
          running[c] = 0.0;
          if (c == 0) break;
        }
        for (std::size_t a = 0; a < n; ++a) running[a & g] += p[a];
        for (SpinSet c = g;; c = (c - 1) & g) {
          worst = std::max(worst, std::abs(running[c] - target[c]));
          if (c == 0) break;
        }
      }
      return worst;
    };
    bool converged = false;
    while (out.cycles < max_cycles) {
      for (SpinSet g : gens) {
        const StateArray& target = sample.table(g);
        for (SpinSet c = g;; c = (c - 1) & g) {
          running[c] = 0.0;
          if (c == 0) break;
        }
        for (std::size_t a = 0; a < n; ++a) running[a & g] += p[a];
        for (SpinSet c = g;; c = (c - 1) & g) {
          running[c] = running[c] > 0.0 ? target[c] / running[c] : 0.0;
          if (c == 0) break;
        }
        for (std::size_t a = 0; a < n; ++a) p[a] *= running[a & g];
      }
      ++out.cycles;
      if (max_residual() <= opts.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      // Newton on the kept states, warm-started from the IPF iterate. Slow IPF
      // usually means zeros implied by several tables at once; those states go too.
      const Family fam = family;
      std::optional<ArchitectureMatrix> arch;
      Eigen::VectorXd fk, pk;
      for (;;) {
        const auto kept = static_cast<Eigen::Index>(std::popcount(out.support));
        Eigen::MatrixXd rows(std::popcount(fam) + 1, kept);
        fk.resize(kept);
        pk.resize(kept);
        Eigen::Index k = 0;
        for (std::size_t a = 0; a < n; ++a) {
          if (!(out.support >> a & 1U)) continue;
          fk[k] = sample.frequencies()[a];
          pk[k] = p[a];
          rows(0, k) = 1.0;
          Eigen::Index r = 1;
          for (SpinSet s = 1; s < n; ++s)
            if (fam >> s & 1U) rows(r++, k) = (static_cast<SpinSet>(a) & s) == s ? 1.0 : 0.0;
          ++k;
        }
        arch = canonicalize(rows, rows * fk);
        const auto more = zero_marginal_support(arch->rows(), arch->moments(), 1e-12);
        if (count_kept(more) == more.size()) break;
        k = 0;
        for (std::size_t a = 0; a < n; ++a)
          if (out.support >> a & 1U)
            if (!more[static_cast<std::size_t>(k++)]) out.support &= ~(std::uint64_t{1} << a);
      }
      out.states = std::popcount(out.support);
      out.rank = static_cast<int>(arch->rank());
      Eigen::VectorXd solved = fk;  // saturated once the implied zeros are gone
      if (out.rank < out.states) {
        const Distribution start = Distribution::normalized(pk, 1e-3);
        if (!start.strictly_positive()) throw infeasible_moments("fit_hierarchical: IPF iterate hit the boundary", -1);
        solved = solve_newton(*arch, opts, multipliers_from(*arch, start)).distribution.probs();
      }
      Eigen::Index k = 0;
      for (std::size_t a = 0; a < n; ++a) p[a] = out.support >> a & 1U ? solved[k++] : 0.0;
      out.newton_fallback = true;
    }
  } else if (out.rank == out.states) {
    // saturated on the kept states: p_hat = f
    for (std::size_t a = 0; a < n; ++a) p[a] = sample.frequencies()[a];
  }

  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) sum += p[a];
  double h = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    p[a] /= sum;
    if (p[a] > 0.0) h -= p[a] * std::log(p[a]);
  }
  out.entropy = h;
  return out;
}

inline Distribution to_distribution(const StateArray& p, std::size_t n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) v[static_cast<Eigen::Index>(a)] = p[a];
  return Distribution::normalized(std::move(v), 1e-9);
}

}  // namespace maxent::ising
