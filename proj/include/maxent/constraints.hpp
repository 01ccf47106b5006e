#pragma once

// Canonical form of linear constraint systems. A raw, possibly redundant
// coefficient matrix C with right-hand sides m is reduced by Gauss-Jordan
// elimination to its reduced row-echelon form R; R together with its moments
// is the invariant definition of a model.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maxent/error.hpp"
#include "maxent/simplex.hpp"

namespace maxent {

/// Pivot threshold, relative to the largest entry of the remaining block.
inline constexpr double kPivotTolerance = 1e-9;
/// Entries below this magnitude are flushed to zero after elimination.
inline constexpr double kSnapTolerance = 1e-12;
inline constexpr double kNestingTolerance = 1e-9;

/// Raw constraint rows (M x |A|) and their right-hand sides.
struct CoefficientMatrix {
  Eigen::MatrixXd rows;
  Eigen::VectorXd moments;

  Eigen::Index constraints() const noexcept { return rows.rows(); }
  Eigen::Index states() const noexcept { return rows.cols(); }

  bool has_normalization_row() const {
    for (Eigen::Index a = 0; a < rows.rows(); ++a)
      if ((rows.row(a).array() == 1.0).all()) return true;
    return false;
  }

  bool is_binary() const {
    return ((rows.array() == 0.0) || (rows.array() == 1.0)).all();
  }

  /// Throws invalid_input unless every row is non-zero, the moment vector
  /// matches and an all-ones normalization row is present.
  void validate() const {
    if (rows.rows() < 1 || rows.cols() < 1) throw invalid_input("coefficient matrix is empty");
    if (moments.size() != rows.rows())
      throw invalid_input("coefficient matrix has " + std::to_string(rows.rows()) + " rows but " +
                          std::to_string(moments.size()) + " moments");
    for (Eigen::Index a = 0; a < rows.rows(); ++a) {
      if ((rows.row(a).array() == 0.0).all())
        throw invalid_input("constraint row " + std::to_string(a) + " is all zero");
      if (!rows.row(a).allFinite() || !std::isfinite(moments[a]))
        throw invalid_input("constraint row " + std::to_string(a) + " is not finite");
    }
    if (!has_normalization_row()) throw invalid_input("coefficient matrix lacks the all-ones normalization row");
  }

  /// Same rows, right-hand sides induced by p.
  CoefficientMatrix with_moments_of(const Distribution& p) const {
    if (static_cast<Eigen::Index>(p.size()) != rows.cols()) throw invalid_input("distribution size does not match constraints");
    return {rows, rows * p.probs()};
  }
};

namespace detail {

struct Elimination {
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;
  std::vector<Eigen::Index> pivots;
  Eigen::Index inconsistent_row = -1;
};

// Gauss-Jordan with partial pivoting on [a | b]. Zero rows are dropped.
inline Elimination gauss_jordan(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  std::vector<Eigen::Index> pivots;
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < n && r < m; ++c) {
    const double block_max = a.block(r, c, m - r, n - c).cwiseAbs().maxCoeff();
    if (block_max == 0.0) break;
    Eigen::Index p = r;
    a.col(c).segment(r, m - r).cwiseAbs().maxCoeff(&p);
    p += r;
    if (std::abs(a(p, c)) <= kPivotTolerance * block_max) continue;
    if (p != r) {
      a.row(p).swap(a.row(r));
      std::swap(b[p], b[r]);
    }
    const double piv = a(r, c);
    a.row(r) /= piv;
    b[r] /= piv;
    a(r, c) = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == r) continue;
      const double factor = a(i, c);
      if (factor == 0.0) continue;
      a.row(i) -= factor * a.row(r);
      b[i] -= factor * b[r];
      a(i, c) = 0.0;
    }
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(a(i, j)) < kSnapTolerance) a(i, j) = 0.0;
    pivots.push_back(c);
    ++r;
  }

  Elimination out;
  const double bscale = std::max(1.0, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
  for (Eigen::Index i = r; i < m; ++i) {
    if (std::abs(b[i]) > kPivotTolerance * bscale) {
      out.inconsistent_row = i;
      break;
    }
  }
  out.rows = a.topRows(r);
  out.rhs = b.head(r);
  for (Eigen::Index i = 0; i < out.rhs.size(); ++i)
    if (std::abs(out.rhs[i]) < kSnapTolerance) out.rhs[i] = 0.0;
  out.pivots = std::move(pivots);
  return out;
}

}  // namespace detail

/// Numerical rank of a dense matrix, by the same elimination used for
/// canonicalization.
inline Eigen::Index matrix_rank(const Eigen::MatrixXd& a) {
  return static_cast<Eigen::Index>(detail::gauss_jordan(a, Eigen::VectorXd::Zero(a.rows())).pivots.size());
}

/// Full-row-rank RREF constraint matrix R (D x |A|) with moments m.
class ArchitectureMatrix {
 public:
  ArchitectureMatrix() = default;

  const Eigen::MatrixXd& rows() const noexcept { return rows_; }
  const Eigen::VectorXd& moments() const noexcept { return moments_; }
  Eigen::Index rank() const noexcept { return rows_.rows(); }
  Eigen::Index states() const noexcept { return rows_.cols(); }
  /// Pivot column of each row.
  const std::vector<Eigen::Index>& pivots() const noexcept { return pivots_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  ArchitectureMatrix with_moments(Eigen::VectorXd m) const {
    if (m.size() != rank()) throw invalid_input("moment vector length does not match architecture rank");
    ArchitectureMatrix copy = *this;
    copy.moments_ = std::move(m);
    return copy;
  }

  /// Moments induced on this architecture by p (R p).
  ArchitectureMatrix with_moments_of(const Distribution& p) const {
    if (static_cast<Eigen::Index>(p.size()) != states()) throw invalid_input("distribution size does not match architecture");
    return with_moments(rows_ * p.probs());
  }

  /// Every column sums to 1 and the moments sum to 1.
  bool satisfies_normalization(double tol = 1e-10) const {
    if (rank() == 0) return false;
    const Eigen::VectorXd colsum = rows_.colwise().sum().transpose();
    return (colsum.array() - 1.0).abs().maxCoeff() <= tol && std::abs(moments_.sum() - 1.0) <= tol;
  }

  /// Identical rows (entrywise within tol); moments are ignored.
  bool same_rows(const ArchitectureMatrix& o, double tol = 1e-12) const {
    return rows_.rows() == o.rows_.rows() && rows_.cols() == o.rows_.cols() &&
           (rows_.rows() == 0 || (rows_ - o.rows_).cwiseAbs().maxCoeff() <= tol);
  }

  /// R with the identity on |A| states and moments f.
  static ArchitectureMatrix identity(const Distribution& f) {
    const auto n = static_cast<Eigen::Index>(f.size());
    ArchitectureMatrix r;
    r.rows_ = Eigen::MatrixXd::Identity(n, n);
    r.moments_ = f.probs();
    for (Eigen::Index i = 0; i < n; ++i) r.pivots_.push_back(i);
    return r;
  }

 private:
  friend ArchitectureMatrix to_architecture(const CoefficientMatrix& c);
  friend ArchitectureMatrix canonicalize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

  Eigen::MatrixXd rows_;
  Eigen::VectorXd moments_;
  std::vector<Eigen::Index> pivots_;
  std::vector<std::string> warnings_;
};

/// RREF of an arbitrary system [a | b] without the CoefficientMatrix
/// invariants. Throws inconsistent_system.
inline ArchitectureMatrix canonicalize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != b.size()) throw invalid_input("canonicalize: row/moment count mismatch");
  auto e = detail::gauss_jordan(a, b);
  if (e.inconsistent_row >= 0)
    throw inconsistent_system("elimination left a zero row with non-zero right-hand side");
  if (e.pivots.empty()) throw invalid_input("canonicalize: system has no non-zero rows");
  ArchitectureMatrix r;
  r.rows_ = std::move(e.rows);
  r.moments_ = std::move(e.rhs);
  r.pivots_ = std::move(e.pivots);
  return r;
}

/// Canonical architecture of a coefficient matrix: Gauss-Jordan elimination
/// of [C | m] with partial pivoting, redundant rows dropped.
inline ArchitectureMatrix to_architecture(const CoefficientMatrix& c) {
  c.validate();
  auto e = detail::gauss_jordan(c.rows, c.moments);
  if (e.inconsistent_row >= 0) {
    // first input row whose addition makes the system inconsistent
    Eigen::Index culprit = c.rows.rows() - 1;
    for (Eigen::Index k = 1; k <= c.rows.rows(); ++k) {
      if (detail::gauss_jordan(c.rows.topRows(k), c.moments.head(k)).inconsistent_row >= 0) {
        culprit = k - 1;
        break;
      }
    }
    throw inconsistent_system("constraint " + std::to_string(culprit) +
                              " contradicts the preceding constraints (moment outside their span)");
  }
  ArchitectureMatrix r;
  r.rows_ = std::move(e.rows);
  r.moments_ = std::move(e.rhs);
  r.pivots_ = std::move(e.pivots);
  if (!r.satisfies_normalization(1e-10)) {
    r.warnings_.push_back(c.is_binary() ? "normalization identity does not hold numerically"
                                        : "non-binary coefficients: column sums of R differ from 1");
  }
  return r;
}

/// R p.
inline Eigen::VectorXd induced_moments(const ArchitectureMatrix& r, const Distribution& p) {
  if (static_cast<Eigen::Index>(p.size()) != r.states()) throw invalid_input("induced_moments: size mismatch");
  return r.rows() * p.probs();
}

/// Orthonormal basis (rows) of the kernel of R after rescaling column a by
/// sqrt(anchor_a).
struct KernelBasis {
  Eigen::MatrixXd vectors;  // (|A| - D) x |A|
  Distribution anchor;

  Eigen::Index dimension() const noexcept { return vectors.rows(); }
};

inline KernelBasis kernel_basis(const ArchitectureMatrix& r, const Distribution& anchor) {
  const Eigen::Index n = r.states();
  if (static_cast<Eigen::Index>(anchor.size()) != n) throw invalid_input("kernel_basis: anchor size mismatch");
  if (!anchor.strictly_positive()) throw invalid_input("kernel_basis: anchor must be strictly positive");
  const Eigen::Index d = r.rank();
  const Eigen::MatrixXd scaled_t = (r.rows() * anchor.probs().cwiseSqrt().asDiagonal()).transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled_t);
  qr.setThreshold(1e-10);
  if (qr.rank() != d)
    throw rank_deficiency("kernel_basis: rescaled architecture has rank " + std::to_string(qr.rank()) +
                          ", expected " + std::to_string(d));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return {q.rightCols(n - d).transpose(), anchor};
}

/// T with R = T R'.
struct NestingMap {
  Eigen::MatrixXd matrix;  // D x D'
};

/// Linear map expressing r through r_complex, when r_complex implies r.
inline std::optional<NestingMap> nesting_map(const ArchitectureMatrix& r, const ArchitectureMatrix& r_complex) {
  if (r.states() != r_complex.states()) throw invalid_input("nesting_map: architectures act on different spaces");
  if (r.rank() > r_complex.rank()) return std::nullopt;
  const Eigen::MatrixXd tt = r_complex.rows().transpose().colPivHouseholderQr().solve(r.rows().transpose());
  const Eigen::MatrixXd t = tt.transpose();
  const double residual = (t * r_complex.rows() - r.rows()).cwiseAbs().maxCoeff();
  if (!(residual < kNestingTolerance)) return std::nullopt;
  if (matrix_rank(t) != r.rank()) return std::nullopt;
  return NestingMap{t};
}

// --- structural zeros -------------------------------------------------------

/// Microstates that survive the zero-marginal rule: every non-negative row
/// whose moment is exactly zero forces its support to zero probability.
inline std::vector<bool> zero_marginal_support(const Eigen::MatrixXd& rows, const Eigen::VectorXd& moments,
                                               double tol = 0.0) {
  std::vector<bool> keep(static_cast<std::size_t>(rows.cols()), true);
  for (Eigen::Index a = 0; a < rows.rows(); ++a) {
    if (std::abs(moments[a]) > tol || (rows.row(a).array() < -tol).any()) continue;
    for (Eigen::Index j = 0; j < rows.cols(); ++j)
      if (rows(a, j) > tol) keep[static_cast<std::size_t>(j)] = false;
  }
  return keep;
}

inline std::size_t count_kept(const std::vector<bool>& keep) {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

/// Drops excluded columns. Rows left all zero are dropped when their moment
/// is zero and kept otherwise, so the contradiction surfaces downstream.
inline CoefficientMatrix restrict_columns(const CoefficientMatrix& c, const std::vector<bool>& keep) {
  const auto n = static_cast<Eigen::Index>(count_kept(keep));
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < keep.size(); ++j)
    if (keep[j]) cols.push_back(static_cast<Eigen::Index>(j));
  std::vector<Eigen::Index> rows;
  for (Eigen::Index a = 0; a < c.rows.rows(); ++a) {
    bool nonzero = false;
    for (auto j : cols) nonzero = nonzero || c.rows(a, j) != 0.0;
    if (nonzero || c.moments[a] != 0.0) rows.push_back(a);
  }
  CoefficientMatrix out{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), n),
                        Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k)
      out.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = c.rows(rows[i], cols[k]);
    out.moments[static_cast<Eigen::Index>(i)] = c.moments[rows[i]];
  }
  return out;
}

/// Restricts a distribution to the kept states and renormalizes.
inline Distribution restrict_distribution(const Distribution& p, const std::vector<bool>& keep) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(count_kept(keep)));
  Eigen::Index k = 0;
  for (std::size_t j = 0; j < keep.size(); ++j)
    if (keep[j]) v[k++] = p[j];
  return Distribution::normalized(std::move(v), 1e-9);
}

/// Inverse of restriction: excluded states get probability 0.
inline Distribution expand_distribution(const Distribution& reduced, const std::vector<bool>& keep) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(keep.size()));
  std::size_t k = 0;
  for (std::size_t j = 0; j < keep.size(); ++j)
    if (keep[j]) v[static_cast<Eigen::Index>(j)] = reduced[k++];
  return Distribution(std::move(v));
}

}  // namespace maxent
