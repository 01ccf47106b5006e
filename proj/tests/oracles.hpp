#pragma once

// Reference computations used to check the library. None of them call into
// the code under test: they work from first principles (closed forms,
// quadrature, brute-force enumeration) with no shared helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

/// -sum p log p accumulated in long double with compensation.
inline long double entropy(const std::vector<double>& p) {
  long double sum = 0.0L, comp = 0.0L;
  for (double v : p) {
    if (v <= 0.0) continue;
    const long double term = -static_cast<long double>(v) * std::log(static_cast<long double>(v));
    const long double y = term - comp;
    const long double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

/// Chi-squared CDF by composite Simpson quadrature of the density after the
/// substitution t = u^2, which removes the singularity at 0 for k = 1:
/// F_k(x) = 2 / (2^{k/2} Gamma(k/2)) * int_0^sqrt(x) u^{k-1} exp(-u^2/2) du.
inline double chi2_cdf(int k, double x, int intervals = 20000) {
  if (x <= 0.0) return 0.0;
  const long double b = std::sqrt(static_cast<long double>(x));
  const long double h = b / intervals;
  auto g = [k](long double u) { return std::pow(u, static_cast<long double>(k - 1)) * std::exp(-u * u / 2.0L); };
  long double s = g(0.0L) + g(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0L : 2.0L) * g(i * h);
  const long double integral = s * h / 3.0L;
  const long double log_norm = std::log(2.0L) - (k / 2.0L) * std::log(2.0L) - std::lgamma(k / 2.0L);
  return static_cast<double>(integral * std::exp(log_norm));
}

/// Monotone Boolean functions on n <= 4 variables, as truth tables (bit x of
/// the table is f(x)), found by testing all 2^(2^n) tables.
inline std::vector<std::uint32_t> monotone_functions(int n) {
  const std::uint32_t points = 1U << n;
  const std::uint64_t tables = std::uint64_t{1} << points;
  std::vector<std::uint32_t> out;
  for (std::uint64_t t = 0; t < tables; ++t) {
    bool monotone = true;
    for (std::uint32_t x = 0; x < points && monotone; ++x) {
      if (!(t >> x & 1U)) continue;
      for (int i = 0; i < n; ++i)
        if (!(t >> (x | (1U << i)) & 1U)) {
          monotone = false;
          break;
        }
    }
    if (monotone) out.push_back(static_cast<std::uint32_t>(t));
  }
  return out;
}

/// Number of monotone Boolean functions (antichains of the Boolean lattice)
/// on n <= 5 variables. For n = 5 a function splits into (f0, f1) on four
/// variables with f0 <= f1 pointwise.
inline std::uint64_t dedekind(int n) {
  if (n <= 4) return monotone_functions(n).size();
  const auto m4 = monotone_functions(4);
  std::uint64_t count = 0;
  for (auto f0 : m4)
    for (auto f1 : m4)
      if ((f0 & ~f1) == 0) ++count;
  return count;
}

/// Downward-closed families of non-empty subsets of an n-set: adding the empty
/// set gives a bijection with the non-empty down-sets of the Boolean lattice,
/// so the count is the Dedekind number minus one.
inline std::uint64_t hierarchical_model_count(int n) { return dedekind(n) - 1; }

/// Maximizer of a concave function on [lo, hi] by a dense grid followed by
/// golden-section refinement.
inline double argmax_1d(const std::function<double(double)>& f, double lo, double hi) {
  const int grid = 10000;
  int best = 0;
  double best_v = -INFINITY;
  for (int i = 0; i <= grid; ++i) {
    const double v = f(lo + (hi - lo) * i / grid);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best - 1) / grid;
  double b = lo + (hi - lo) * std::min(grid, best + 1) / grid;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (f(c) > f(d))
      b = d;
    else
      a = c;
  }
  return 0.5 * (a + b);
}

/// Every count vector of length k summing to n.
inline void compositions(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> c(static_cast<std::size_t>(k), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == k - 1) {
      c[static_cast<std::size_t>(pos)] = left;
      visit(c);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, n);
}

/// Multinomial probability of counts c under q, by the product formula with
/// factorials in long double.
inline long double multinomial_pmf(const std::vector<int>& c, const std::vector<double>& q) {
  long double logp = 0.0L;
  int n = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    n += c[i];
    for (int j = 2; j <= c[i]; ++j) logp -= std::log(static_cast<long double>(j));
    if (c[i] > 0) logp += c[i] * std::log(static_cast<long double>(q[i]));
  }
  for (int j = 2; j <= n; ++j) logp += std::log(static_cast<long double>(j));
  return std::exp(logp);
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
inline double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max({d, std::abs(F - i / n), std::abs((i + 1) / n - F)});
  }
  return d;
}

}  // namespace oracle
