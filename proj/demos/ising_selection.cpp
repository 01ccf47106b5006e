// Draws one sample from a random five-spin Boltzmann distribution and lets
// each selection method pick among all 7580 hierarchical models.

#include <cstdio>
#include <cstdlib>

#include "maxent.hpp"

int main(int argc, char** argv) {
  using namespace maxent;
  const std::int64_t N = argc > 1 ? std::atoll(argv[1]) : 100000;
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 7;

  bench::BenchmarkConfig cfg;
  cfg.sample_sizes = {N};
  cfg.realizations = 1;
  cfg.samples = 1;
  cfg.test_samples = 20;
  cfg.seed = seed;
  const bench::BenchmarkReport rep = bench::run_benchmark(cfg);

  std::printf("truth: %s\n", ising::format_family(5, ising::closure(cfg.truth).family()).c_str());
  for (const auto& row : rep.rows)
    std::printf("%-17s rank %2d  %-24s exact %d  tp %.2f  fp %.2f  test N*KL %.2f\n", row.method.c_str(),
                row.selected_rank, row.selected_model.c_str(), row.exact ? 1 : 0, row.tp_rate, row.fp_rate,
                row.test_kl);
}
