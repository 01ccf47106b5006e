#pragma once

#include <stdexcept>
#include <string>

namespace maxent {

/// Base of every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad dimensions, invariant violations, unparsable files.
class invalid_input : public error {
 public:
  using error::error;
};

/// f puts mass on a microstate where the reference distribution has none.
class support_violation : public error {
 public:
  using error::error;
};

/// Gauss-Jordan elimination produced 0 = m with m != 0.
class inconsistent_system : public error {
 public:
  explicit inconsistent_system(const std::string& what)
      : error("infeasible: inconsistent constraint system: " + what) {}
};

class rank_deficiency : public error {
 public:
  using error::error;
};

/// Raised by the solvers. `constraint` names the row with the largest
/// residual when the failure happened, or -1.
class solver_error : public error {
 public:
  solver_error(const std::string& what, int constraint)
      : error(what), constraint_(constraint) {}
  int constraint() const noexcept { return constraint_; }

 private:
  int constraint_;
};

class no_convergence : public solver_error {
 public:
  using solver_error::solver_error;
};

class singular_jacobian : public solver_error {
 public:
  using solver_error::solver_error;
};

class infeasible_moments : public solver_error {
 public:
  using solver_error::solver_error;
};

/// IPF found a running marginal of zero while its target is positive.
class zero_marginal : public solver_error {
 public:
  using solver_error::solver_error;
};

class rejection_exhausted : public error {
 public:
  using error::error;
};

class not_nested : public error {
 public:
  using error::error;
};

}  // namespace maxent
