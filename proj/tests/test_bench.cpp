#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "maxent/bench.hpp"

using namespace maxent;
using namespace maxent::bench;

namespace {

BenchmarkConfig small_config() {
  BenchmarkConfig cfg;
  cfg.truth = ising::Hypergraph::from_lists(3, {{1, 2}, {2, 3}});
  cfg.sample_sizes = {100, 10000};
  cfg.realizations = 2;
  cfg.samples = 2;
  cfg.test_samples = 5;
  cfg.seed = 17;
  return cfg;
}

std::string report_text(const BenchmarkReport& rep) {
  std::ostringstream os;
  write_report(os, rep);
  return os.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("maxent_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Benchmark, RowCountsAndRanges) {
  const auto cfg = small_config();
  const auto rep = run_benchmark(cfg);
  EXPECT_EQ(rep.candidates, 19u);
  EXPECT_EQ(rep.rows.size(), 4u * 2 * 2 * 2);
  for (const auto& r : rep.rows) {
    EXPECT_GE(r.tp_rate, 0.0);
    EXPECT_LE(r.tp_rate, 1.0);
    EXPECT_GE(r.fp_rate, 0.0);
    EXPECT_LE(r.fp_rate, 1.0);
    EXPECT_EQ(r.exact, r.selected_model == "12|23");
    if (r.exact) {
      EXPECT_EQ(r.tp_rate, 1.0);
      EXPECT_EQ(r.fp_rate, 0.0);
    }
  }
  const auto summary = summarize(rep);
  EXPECT_EQ(summary.size(), 4u * 2);
  for (const auto& s : summary) EXPECT_EQ(s.rows, 4);
}

TEST(Benchmark, SmokeRowContract) {
  auto cfg = small_config();
  cfg.sample_sizes = {100};
  cfg.realizations = 1;
  EXPECT_EQ(run_benchmark(cfg).rows.size(), 4u * 2);
}

TEST(Benchmark, IndependentOfThreadCount) {
  auto cfg = small_config();
  const auto one = report_text(run_benchmark(cfg));
  cfg.threads = 3;
  EXPECT_EQ(report_text(run_benchmark(cfg)), one);
  cfg.seed = 18;
  EXPECT_NE(report_text(run_benchmark(cfg)), one);
}

TEST(Benchmark, ResumesFromTaskCache) {
  const auto cfg = small_config();
  const auto dir = fresh_dir("resume");
  RunOptions run;
  run.cache_dir = dir;
  const auto first = run_benchmark(cfg, run);
  EXPECT_EQ(first.resumed_tasks, 0u);
  const auto second = run_benchmark(cfg, run);
  EXPECT_EQ(second.resumed_tasks, 8u);
  EXPECT_EQ(report_text(second), report_text(first));

  // a damaged task file is recomputed, a stale fingerprint too
  const auto victim = dir / "task_0_100_1.csv";
  ASSERT_TRUE(std::filesystem::exists(victim));
  std::ofstream(victim) << "garbage\n";
  auto other = cfg;
  other.test_samples = 6;
  EXPECT_EQ(run_benchmark(cfg, run).resumed_tasks, 7u);
  EXPECT_EQ(run_benchmark(other, run).resumed_tasks, 0u);
  std::filesystem::remove_all(dir);
}

TEST(Benchmark, RowFormatRoundTrips) {
  const auto rep = run_benchmark(small_config());
  for (const auto& r : rep.rows) EXPECT_EQ(format_row(parse_row(format_row(r))), format_row(r));
  EXPECT_THROW(parse_row("bic,1,2"), invalid_input);
}

TEST(Benchmark, ValidatesConfig) {
  auto cfg = small_config();
  cfg.sample_sizes = {5};
  EXPECT_THROW(cfg.validate(), invalid_input);
  cfg = small_config();
  cfg.truth = ising::Hypergraph::from_lists(5, {{1, 2, 3, 4}});
  EXPECT_THROW(cfg.validate(), invalid_input);
  cfg = small_config();
  cfg.realizations = 0;
  EXPECT_THROW(cfg.validate(), invalid_input);
}
