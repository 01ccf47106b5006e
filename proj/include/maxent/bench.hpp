#pragma once

// The inverse-Ising benchmark sweep: random Boltzmann ground truths, multinomial
// samples at several sizes, every enumerated candidate fitted on every sample,
// each selection method applied to the same score table.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "maxent/error.hpp"
#include "maxent/ising.hpp"
#include "maxent/random.hpp"
#include "maxent/selection.hpp"
#include "maxent/simplex.hpp"

namespace maxent::bench {

struct BenchmarkConfig {
  ising::Hypergraph truth = ising::benchmark_hypergraph();
  std::vector<std::int64_t> sample_sizes{100, 1000, 10000, 100000, 1000000, 10000000};
  int realizations = 50;
  int samples = 10;
  int test_samples = 100;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::uint64_t seed = 1;
  int threads = 1;
  double alpha_prefactor = 1.0;

  int spins() const noexcept { return truth.spins(); }

  void validate() const {
    if (spins() < 2 || spins() > 5) throw invalid_input("benchmark: spins must be in [2, 5]");
    if (sample_sizes.empty()) throw invalid_input("benchmark: no sample sizes");
    for (auto n : sample_sizes)
      if (n < 10) throw invalid_input("benchmark: sample sizes must be >= 10");
    if (realizations < 1 || samples < 1 || test_samples < 1)
      throw invalid_input("benchmark: realizations, samples and test_samples must be >= 1");
    if (methods.empty()) throw invalid_input("benchmark: no methods");
    if (threads < 1) throw invalid_input("benchmark: threads must be >= 1");
    if (!(alpha_prefactor > 0.0)) throw invalid_input("benchmark: alpha_prefactor must be positive");
    for (auto e : truth.edges())
      if (ising::order_of(e) > 3) throw invalid_input("benchmark: generating hyperedges must have at most 3 spins");
  }

  /// Everything that changes results (threads excluded).
  std::string fingerprint() const {
    std::ostringstream s;
    s << "L=" << spins() << ";edges=";
    for (auto e : truth.edges()) s << ising::format_spin_set(spins(), e) << ',';
    s << ";N=";
    for (auto n : sample_sizes) s << n << ',';
    s << ";R=" << realizations << ";S=" << samples << ";T=" << test_samples << ";methods=";
    for (auto m : methods) s << method_name(m) << ',';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", alpha_prefactor);
    s << ";seed=" << seed << ";alpha=" << buf;
    return s.str();
  }
};

struct ReportRow {
  std::string method;
  std::int64_t N = 0;
  int realization = 0;
  int sample = 0;
  int selected_id = -1;  // position in the enumeration, -1 for none
  std::string selected_model;
  int selected_rank = 0;
  bool fallback = false;
  bool exact = false;
  double tp_rate = 0.0;
  double fp_rate = 0.0;
  double train_kl = 0.0;
  double test_kl = 0.0;
  double truth_p_value = 0.0;
  double truth_alpha = 0.0;
  bool truth_passes = false;
  int excluded = 0;  // candidates whose fit failed
};

struct SummaryRow {
  std::string method;
  std::int64_t N = 0;
  int rows = 0;
  double accuracy = 0.0;
  double tp_rate = 0.0;
  double fp_rate = 0.0;
  double fp_nonzero = 0.0;  // fraction of samples with fp_rate > 0
  double train_kl = 0.0;    // mean over finite values
  double train_inf = 0.0;   // fraction infinite
  double test_kl = 0.0;
  double test_inf = 0.0;
  double truth_pass = 0.0;
  double fallback = 0.0;
};

struct BenchmarkReport {
  std::vector<ReportRow> rows;  // ordered by method, N, realization, sample
  std::size_t candidates = 0;
  std::size_t excluded_fits = 0;
  std::size_t resumed_tasks = 0;
};

// --- CSV -------------------------------------------------------------------------

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kReportHeader =
    "method,N,realization,sample,selected_id,selected_model,selected_rank,fallback,exact,tp_rate,fp_rate,"
    "train_kl,test_kl,truth_p_value,truth_alpha,truth_passes,excluded_candidates";

inline std::string format_row(const ReportRow& r) {
  std::string s;
  s += r.method + ',' + std::to_string(r.N) + ',' + std::to_string(r.realization) + ',' + std::to_string(r.sample) +
       ',' + std::to_string(r.selected_id) + ',' + r.selected_model + ',' + std::to_string(r.selected_rank) + ',' +
       (r.fallback ? "1" : "0") + ',' + (r.exact ? "1" : "0") + ',' + format_double(r.tp_rate) + ',' +
       format_double(r.fp_rate) + ',' + format_double(r.train_kl) + ',' + format_double(r.test_kl) + ',' +
       format_double(r.truth_p_value) + ',' + format_double(r.truth_alpha) + ',' + (r.truth_passes ? "1" : "0") +
       ',' + std::to_string(r.excluded);
  return s;
}

inline ReportRow parse_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
  if (f.size() != 17) throw invalid_input("report row has " + std::to_string(f.size()) + " fields: " + line);
  ReportRow r;
  try {
    r.method = f[0];
    r.N = std::stoll(f[1]);
    r.realization = std::stoi(f[2]);
    r.sample = std::stoi(f[3]);
    r.selected_id = std::stoi(f[4]);
    r.selected_model = f[5];
    r.selected_rank = std::stoi(f[6]);
    r.fallback = f[7] == "1";
    r.exact = f[8] == "1";
    r.tp_rate = std::stod(f[9]);
    r.fp_rate = std::stod(f[10]);
    r.train_kl = std::stod(f[11]);
    r.test_kl = std::stod(f[12]);
    r.truth_p_value = std::stod(f[13]);
    r.truth_alpha = std::stod(f[14]);
    r.truth_passes = f[15] == "1";
    r.excluded = std::stoi(f[16]);
  } catch (const std::logic_error&) {
    throw invalid_input("malformed report row: " + line);
  }
  return r;
}

inline void write_report(std::ostream& os, const BenchmarkReport& rep) {
  os << kReportHeader << '\n';
  for (const auto& r : rep.rows) os << format_row(r) << '\n';
}

inline std::vector<SummaryRow> summarize(const BenchmarkReport& rep) {
  std::vector<SummaryRow> out;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> where;
  std::vector<int> train_finite, test_finite;
  for (const auto& r : rep.rows) {
    auto [it, fresh] = where.try_emplace({r.method, r.N}, out.size());
    if (fresh) {
      out.push_back({});
      out.back().method = r.method;
      out.back().N = r.N;
      train_finite.push_back(0);
      test_finite.push_back(0);
    }
    const std::size_t k = it->second;
    SummaryRow& s = out[k];
    ++s.rows;
    s.accuracy += r.exact;
    s.tp_rate += r.tp_rate;
    s.fp_rate += r.fp_rate;
    s.fp_nonzero += r.fp_rate > 0.0;
    s.truth_pass += r.truth_passes;
    s.fallback += r.fallback;
    if (std::isfinite(r.train_kl)) {
      s.train_kl += r.train_kl;
      ++train_finite[k];
    }
    if (std::isfinite(r.test_kl)) {
      s.test_kl += r.test_kl;
      ++test_finite[k];
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    SummaryRow& s = out[k];
    const double n = s.rows;
    s.accuracy /= n;
    s.tp_rate /= n;
    s.fp_rate /= n;
    s.fp_nonzero /= n;
    s.truth_pass /= n;
    s.fallback /= n;
    s.train_kl = train_finite[k] ? s.train_kl / train_finite[k] : std::numeric_limits<double>::quiet_NaN();
    s.test_kl = test_finite[k] ? s.test_kl / test_finite[k] : std::numeric_limits<double>::quiet_NaN();
    s.train_inf = 1.0 - train_finite[k] / n;
    s.test_inf = 1.0 - test_finite[k] / n;
  }
  return out;
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "method,N,rows,accuracy,tp_rate,fp_rate,fp_nonzero,train_kl,train_inf,test_kl,test_inf,truth_pass,"
        "fallback\n";
  for (const auto& s : rows)
    os << s.method << ',' << s.N << ',' << s.rows << ',' << format_double(s.accuracy) << ','
       << format_double(s.tp_rate) << ',' << format_double(s.fp_rate) << ',' << format_double(s.fp_nonzero) << ','
       << format_double(s.train_kl) << ',' << format_double(s.train_inf) << ',' << format_double(s.test_kl) << ','
       << format_double(s.test_inf) << ',' << format_double(s.truth_pass) << ',' << format_double(s.fallback)
       << '\n';
}

// --- one task ----------------------------------------------------------------------

namespace detail {

struct Candidates {
  int L = 0;
  std::vector<ising::EnumeratedModel> models;
  std::vector<ising::InteractionClosure> closures;
  std::vector<std::string> names;
};

inline Candidates make_candidates(int L) {
  Candidates c;
  c.L = L;
  c.models = ising::enumerate_models(L);
  for (const auto& m : c.models) {
    c.closures.push_back(ising::InteractionClosure::from_family(L, m.family));
    c.names.push_back(ising::format_family(L, m.family));
  }
  return c;
}

// N KL(a || p) with p on 2^L states; infinite when a leaves p's support.
inline double scaled_kl(const ising::StateArray& a, const ising::StateArray& p, std::size_t n, double N) {
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0.0) continue;
    if (p[i] == 0.0) return std::numeric_limits<double>::infinity();
    d += a[i] * std::log(a[i] / p[i]);
  }
  return N * std::max(d, 0.0);
}

struct TaskKey {
  int realization;
  std::size_t size_index;
  int sample;
};

inline std::vector<ReportRow> run_task(const BenchmarkConfig& cfg, const Candidates& cand, std::size_t truth_pos,
                                       const Distribution& q, const TaskKey& key, std::size_t& excluded_out) {
  const int L = cfg.spins();
  const std::size_t n = std::size_t{1} << L;
  const std::int64_t N = cfg.sample_sizes[key.size_index];
  const double Nd = static_cast<double>(N);
  const auto uN = static_cast<std::uint64_t>(N);
  const auto ur = static_cast<std::uint64_t>(key.realization);
  const auto us = static_cast<std::uint64_t>(key.sample);

  Rng train_rng = make_rng(cfg.seed, {1, ur, uN, us});
  const Distribution f = multinomial_sample(q, N, train_rng).frequencies();
  const ising::SampleMarginals marginals(L, f);
  const double h_f = entropy(f);

  std::vector<ModelScore> scores;
  scores.reserve(cand.models.size());
  std::optional<std::size_t> truth_score;
  int excluded = 0;
  for (std::size_t i = 0; i < cand.models.size(); ++i) {
    try {
      const auto fit = ising::fit_hierarchical(marginals, cand.models[i].family);
      if (i == truth_pos) truth_score = scores.size();
      scores.push_back(make_score("", i, fit.rank, fit.states, fit.entropy, h_f, Nd));
    } catch (const error&) {
      ++excluded;
    }
  }
  excluded_out = static_cast<std::size_t>(excluded);

  auto implies = [&](std::size_t i, std::size_t j) {
    const ising::Family a = cand.models[scores[i].index].family;
    const ising::Family b = cand.models[scores[j].index].family;
    return a != b && (a & b) == a;
  };

  // test samples shared by every method
  Rng test_rng = make_rng(cfg.seed, {2, ur, uN, us});
  std::vector<ising::StateArray> tests(static_cast<std::size_t>(cfg.test_samples));
  for (auto& g : tests) {
    const Distribution gd = multinomial_sample(q, N, test_rng).frequencies();
    g.fill(0.0);
    for (std::size_t a = 0; a < n; ++a) g[a] = gd[a];
  }
  ising::StateArray qa{};
  for (std::size_t a = 0; a < n; ++a) qa[a] = q[a];

  double truth_p = std::numeric_limits<double>::quiet_NaN();
  double truth_alpha = std::numeric_limits<double>::quiet_NaN();
  bool truth_passes = false;
  if (truth_score) {
    const ModelScore& t = scores[*truth_score];
    truth_p = t.p_value;
    truth_alpha = alpha_empirical(t, Nd, cfg.alpha_prefactor);
    truth_passes = truth_p >= truth_alpha;
  }

  std::vector<ReportRow> rows;
  for (Method m : cfg.methods) {
    ReportRow row;
    row.method = std::string(method_name(m));
    row.N = N;
    row.realization = key.realization;
    row.sample = key.sample;
    row.truth_p_value = truth_p;
    row.truth_alpha = truth_alpha;
    row.truth_passes = truth_passes;
    row.excluded = excluded;
    const Choice c = choose(scores, Nd, SelectionConfig{m, cfg.alpha_prefactor}, implies);
    row.fallback = c.fallback;
    if (c.position) {
      const std::size_t idx = scores[*c.position].index;
      const auto& closure = cand.closures[idx];
      row.selected_id = static_cast<int>(idx);
      row.selected_model = cand.names[idx];
      row.selected_rank = static_cast<int>(scores[*c.position].rank);
      row.exact = idx == truth_pos;
      const auto rates = ising::tp_fp_rates(closure, cand.closures[truth_pos], L);
      row.tp_rate = rates.tp_rate;
      row.fp_rate = rates.fp_rate;
      const auto fit = ising::fit_hierarchical(marginals, cand.models[idx].family);
      row.train_kl = scaled_kl(qa, fit.p, n, Nd);
      double sum = 0.0;
      for (const auto& g : tests) sum += scaled_kl(g, fit.p, n, Nd);
      row.test_kl = sum / static_cast<double>(tests.size());
    } else {
      // no saturated candidate survived: the empirical distribution itself
      row.selected_model = "saturated";
      row.selected_rank = static_cast<int>(n);
      const auto rates = ising::tp_fp_rates(ising::InteractionClosure::from_family(L, cand.models.back().family),
                                            cand.closures[truth_pos], L);
      row.tp_rate = rates.tp_rate;
      row.fp_rate = rates.fp_rate;
      row.train_kl = scaled_kl(qa, marginals.frequencies(), n, Nd);
      double sum = 0.0;
      for (const auto& g : tests) sum += scaled_kl(g, marginals.frequencies(), n, Nd);
      row.test_kl = sum / static_cast<double>(tests.size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

struct RunOptions {
  /// Per-task results are stored here and reused on a rerun with the same
  /// configuration. Empty disables caching.
  std::filesystem::path cache_dir;
  /// Called after each finished task with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Runs the sweep. Each task (realization, N, sample) draws its randomness from
/// streams keyed by its coordinates, so the report does not depend on the
/// thread count or on which tasks were resumed from the cache.
inline BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const RunOptions& run = {}) {
  cfg.validate();
  const int L = cfg.spins();
  const detail::Candidates cand = detail::make_candidates(L);
  const ising::Family truth_family = ising::closure(cfg.truth).family();
  std::size_t truth_pos = cand.models.size();
  for (std::size_t i = 0; i < cand.models.size(); ++i)
    if (cand.models[i].family == truth_family) truth_pos = i;
  if (truth_pos == cand.models.size()) throw invalid_input("benchmark: generating model is not among the candidates");

  std::vector<Distribution> truths;
  for (int r = 0; r < cfg.realizations; ++r) {
    Rng rng = make_rng(cfg.seed, {0, static_cast<std::uint64_t>(r)});
    truths.push_back(ising::boltzmann(ising::random_params(cfg.truth, rng), L));
  }

  std::vector<detail::TaskKey> tasks;
  for (int r = 0; r < cfg.realizations; ++r)
    for (std::size_t k = 0; k < cfg.sample_sizes.size(); ++k)
      for (int s = 0; s < cfg.samples; ++s) tasks.push_back({r, k, s});

  const std::string fingerprint = cfg.fingerprint();
  if (!run.cache_dir.empty()) std::filesystem::create_directories(run.cache_dir);
  auto cache_path = [&](const detail::TaskKey& t) {
    char name[96];
    std::snprintf(name, sizeof name, "task_%d_%lld_%d.csv", t.realization,
                  static_cast<long long>(cfg.sample_sizes[t.size_index]), t.sample);
    return run.cache_dir / name;
  };
  auto load_cached = [&](const detail::TaskKey& t) -> std::optional<std::vector<ReportRow>> {
    std::ifstream in(cache_path(t));
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line) || line != "# " + fingerprint) return std::nullopt;
    std::vector<ReportRow> rows;
    try {
      while (std::getline(in, line))
        if (!line.empty()) rows.push_back(parse_row(line));
    } catch (const invalid_input&) {
      return std::nullopt;
    }
    if (rows.size() != cfg.methods.size()) return std::nullopt;
    return rows;
  };
  auto store = [&](const detail::TaskKey& t, const std::vector<ReportRow>& rows) {
    const auto path = cache_path(t);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream out(tmp);
      out << "# " << fingerprint << '\n';
      for (const auto& r : rows) out << format_row(r) << '\n';
    }
    std::filesystem::rename(tmp, path);
  };

  std::vector<std::vector<ReportRow>> results(tasks.size());
  std::vector<std::size_t> excluded(tasks.size(), 0);
  std::vector<char> resumed(tasks.size(), 0);
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex fail_mutex, progress_mutex;
  std::exception_ptr failure;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      {
        std::lock_guard lock(fail_mutex);
        if (failure) return;
      }
      try {
        const auto& t = tasks[i];
        if (!run.cache_dir.empty()) {
          if (auto cached = load_cached(t)) {
            results[i] = std::move(*cached);
            resumed[i] = 1;
          }
        }
        if (!resumed[i]) {
          results[i] = detail::run_task(cfg, cand, truth_pos, truths[static_cast<std::size_t>(t.realization)], t,
                                        excluded[i]);
          if (!run.cache_dir.empty()) store(t, results[i]);
        }
      } catch (...) {
        std::lock_guard lock(fail_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
      const std::size_t d = ++done;
      if (run.progress) {
        std::lock_guard lock(progress_mutex);
        run.progress(d, tasks.size());
      }
    }
  };

  {
    const int nthreads = std::min<int>(cfg.threads, static_cast<int>(tasks.size()));
    std::vector<std::jthread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  BenchmarkReport rep;
  rep.candidates = cand.models.size();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    rep.excluded_fits += static_cast<std::size_t>(results[i].front().excluded);
    rep.resumed_tasks += static_cast<std::size_t>(resumed[i]);
  }
  // method-major order, then N, realization, sample
  for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    for (std::size_t k = 0; k < cfg.sample_sizes.size(); ++k)
      for (std::size_t i = 0; i < tasks.size(); ++i)
        if (tasks[i].size_index == k) rep.rows.push_back(results[i][m]);
  return rep;
}

}  // namespace maxent::bench
