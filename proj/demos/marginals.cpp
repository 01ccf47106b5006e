// MaxEnt of a 2x2 table given its row and column marginals, solved both ways.

#include <cstdio>

#include "maxent.hpp"

int main() {
  using namespace maxent;
  // states 00, 01, 10, 11: first variable = row, second = column
  CoefficientMatrix c{Eigen::MatrixXd(3, 4), Eigen::VectorXd(3)};
  c.rows << 1, 1, 1, 1,  //
      1, 1, 0, 0,        // first variable = 0
      1, 0, 1, 0;        // second variable = 0
  c.moments << 1.0, 0.6, 0.3;

  const ArchitectureMatrix r = to_architecture(c);
  const MaxEntSolution newton = solve_newton(r);
  const MaxEntSolution ipf = solve_ipf(c);

  std::printf("rank %ld\n", static_cast<long>(r.rank()));
  for (std::size_t a = 0; a < 4; ++a)
    std::printf("p[%zu]  newton %.12f  ipf %.12f\n", a, newton.distribution[a], ipf.distribution[a]);
  std::printf("entropy %.12f nats after %d Newton steps\n", entropy(newton.distribution), newton.iterations);
}
