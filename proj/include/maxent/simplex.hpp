#pragma once

// Microstate spaces, points on the probability simplex and the entropy /
// divergence primitives. All logarithms are natural: entropies and
// divergences are in nats.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "maxent/error.hpp"
#include "maxent/random.hpp"

namespace maxent {

/// Sum tolerance enforced on every Distribution.
inline constexpr double kSumTolerance = 1e-12;
/// Input files whose probabilities sum to 1 within this are renormalized.
inline constexpr double kIngestTolerance = 1e-6;

/// Ordered, uniquely labelled set of microstates.
class MicrostateSpace {
 public:
  explicit MicrostateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2) throw invalid_input("microstate space needs at least 2 states");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (!index_.emplace(labels_[i], i).second)
        throw invalid_input("duplicate microstate label '" + labels_[i] + "'");
    }
  }

  /// All 2^L bitstrings of length L in lexicographic order. Character i of a
  /// label is the state of spin i+1.
  static MicrostateSpace spins(int L) {
    if (L < 1 || L > 20) throw invalid_input("spin count must be in [1, 20]");
    const std::size_t n = std::size_t{1} << L;
    std::vector<std::string> labels(n);
    for (std::size_t a = 0; a < n; ++a) {
      std::string s(static_cast<std::size_t>(L), '0');
      for (int i = 0; i < L; ++i)
        if (a >> (L - 1 - i) & 1U) s[static_cast<std::size_t>(i)] = '1';
      labels[a] = std::move(s);
    }
    return MicrostateSpace(std::move(labels));
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::optional<std::size_t> index_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const MicrostateSpace& a, const MicrostateSpace& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A point on the probability simplex. Entries are non-negative and sum to 1
/// within kSumTolerance; an entry of exactly 0 marks an excluded microstate.
class Distribution {
 public:
  explicit Distribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() < 1) throw invalid_input("distribution is empty");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
      const double v = probs_[i];
      if (!std::isfinite(v) || v < 0.0)
        throw invalid_input("distribution entry " + std::to_string(i) + " is negative or non-finite");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw invalid_input("distribution does not sum to 1 (sum = " + std::to_string(sum) + ")");
  }

  /// Rescales v to unit sum. `tolerance` bounds how far the raw sum may be
  /// from 1; pass infinity to accept any positive mass.
  static Distribution normalized(Eigen::VectorXd v, double tolerance = kIngestTolerance) {
    const double sum = v.sum();
    if (!(sum > 0.0) || !std::isfinite(sum)) throw invalid_input("cannot normalize zero or non-finite mass");
    if (std::abs(sum - 1.0) > tolerance)
      throw invalid_input("probabilities sum to " + std::to_string(sum) + ", outside ingest tolerance");
    v /= sum;
    return Distribution(std::move(v));
  }

  static Distribution uniform(std::size_t n) {
    return Distribution(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
  }

  static Distribution point_mass(std::size_t n, std::size_t at) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    v[static_cast<Eigen::Index>(at)] = 1.0;
    return Distribution(std::move(v));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(probs_.size()); }
  double operator[](std::size_t i) const { return probs_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& probs() const noexcept { return probs_; }

  bool excluded(std::size_t i) const { return (*this)[i] == 0.0; }
  bool strictly_positive() const { return (probs_.array() > 0.0).all(); }

  /// true for microstates carrying mass.
  std::vector<bool> support() const {
    std::vector<bool> s(size());
    for (std::size_t i = 0; i < size(); ++i) s[i] = (*this)[i] > 0.0;
    return s;
  }

 private:
  Eigen::VectorXd probs_;
};

/// Non-negative integer counts over a microstate space.
class CountVector {
 public:
  explicit CountVector(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw invalid_input("count vector is empty");
    for (auto c : counts_) {
      if (c < 0) throw invalid_input("negative count");
      total_ += c;
    }
  }

  std::size_t size() const noexcept { return counts_.size(); }
  std::int64_t operator[](std::size_t i) const { return counts_[i]; }
  std::int64_t total() const noexcept { return total_; }
  const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

  Distribution frequencies() const {
    if (total_ == 0) throw invalid_input("cannot form frequencies from zero total");
    Eigen::VectorXd v(static_cast<Eigen::Index>(counts_.size()));
    const double n = static_cast<double>(total_);
    for (std::size_t i = 0; i < counts_.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(counts_[i]) / n;
    return Distribution::normalized(std::move(v), 1e-9);
  }

  friend bool operator==(const CountVector& a, const CountVector& b) { return a.counts_ == b.counts_; }

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

/// Shannon entropy -sum p log p in nats, with 0 log 0 = 0.
inline double entropy(const Distribution& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.probs().size(); ++i) {
    const double v = p.probs()[i];
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

/// sum f log(f/q). Throws support_violation if f > 0 where q = 0.
inline double kl_divergence(const Distribution& f, const Distribution& q) {
  if (f.size() != q.size()) throw invalid_input("kl_divergence: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double fi = f[i];
    if (fi == 0.0) continue;
    const double qi = q[i];
    if (qi == 0.0) throw support_violation("kl_divergence: f > 0 where q = 0 at microstate " + std::to_string(i));
    d += fi * std::log(fi / qi);
  }
  return d < 0.0 ? 0.0 : d;
}

/// Exact log multinomial probability of the counts c under q.
inline double log_multinomial_pmf(const CountVector& c, const Distribution& q) {
  if (c.size() != q.size()) throw invalid_input("log_multinomial_pmf: size mismatch");
  double lp = std::lgamma(static_cast<double>(c.total()) + 1.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto k = c[i];
    if (k == 0) continue;
    if (q[i] == 0.0) throw support_violation("log_multinomial_pmf: count on a zero-probability microstate " + std::to_string(i));
    lp += static_cast<double>(k) * std::log(q[i]) - std::lgamma(static_cast<double>(k) + 1.0);
  }
  return lp;
}

/// Draws N records from q by sequential conditional binomials.
inline CountVector multinomial_sample(const Distribution& q, std::int64_t N, Rng& rng) {
  if (N < 1) throw invalid_input("multinomial_sample: N must be >= 1");
  std::vector<std::int64_t> counts(q.size(), 0);
  std::int64_t remaining = N;
  double mass_left = 1.0;
  for (std::size_t i = 0; i + 1 < q.size() && remaining > 0; ++i) {
    const double qi = q[i];
    if (qi <= 0.0) continue;
    double cond = mass_left > 0.0 ? qi / mass_left : 1.0;
    if (cond >= 1.0) {
      counts[i] = remaining;
      remaining = 0;
      break;
    }
    std::binomial_distribution<std::int64_t> draw(remaining, cond);
    counts[i] = draw(rng);
    remaining -= counts[i];
    mass_left -= qi;
  }
  if (remaining > 0) {
    // whatever is left goes to the last state with mass
    std::size_t last = q.size() - 1;
    while (last > 0 && q[last] == 0.0) --last;
    counts[last] += remaining;
  }
  return CountVector(std::move(counts));
}

}  // namespace maxent
