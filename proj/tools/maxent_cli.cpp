// maxent: command-line front end.
//
//   maxent fit       --constraints C.json [--counts D.csv] [--solver newton|ipf] [--out S.json]
//   maxent select    (--candidates F.json|DIR | --enumerate-spins L) --counts D.csv [--method M,...] [--out T.csv]
//   maxent enumerate --spins L [--out M.csv]
//   maxent sample    (--model 123,35 --spins L | --constraints C.json) --params-seed S --n N --seed S [--out D.csv]
//   maxent bench     --config B.json --out-dir DIR [--threads T]
//
// Exit codes: 0 ok, 2 bad input, 3 solver failure, 4 no solvable candidate.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "maxent.hpp"

namespace {

using namespace maxent;
using json = nlohmann::json;

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;
constexpr int kExitSelection = 4;

struct selection_failure : error {
  using error::error;
};

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

/// Output stream bound to a file, or stdout when the path is empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw invalid_input("cannot write " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  bool is_stdout() const { return !file_; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string fmt(double v) { return bench::format_double(v); }

// --- fit ----------------------------------------------------------------------------

struct FitArgs {
  std::string constraints, counts, solver = "newton", out;
  double tol = 1e-10;
  int max_iter = 0;
};

int run_fit(const FitArgs& a) {
  io::ConstraintSet cs = io::read_constraints(a.constraints);
  warn(cs.warnings);
  CoefficientMatrix c = cs.coefficients;
  if (!a.counts.empty()) {
    const auto counts = io::read_counts(a.counts, cs.space);
    warn(counts.warnings);
    c = c.with_moments_of(counts.counts.frequencies());
  } else if (!cs.has_moments) {
    throw invalid_input("no moments: give --counts or a 'moments' array in the constraints file");
  }

  const SolverKind kind = a.solver == "ipf" ? SolverKind::ipf : SolverKind::newton;
  SolveOptions opts = kind == SolverKind::ipf ? SolveOptions::ipf_defaults() : SolveOptions{};
  opts.tolerance = a.tol;
  if (a.max_iter > 0) opts.max_iterations = a.max_iter;

  const FitResult fit = fit_maxent(c, kind, opts);
  warn(fit.architecture.warnings());

  json out;
  out["solver"] = a.solver;
  out["microstates"] = cs.space.labels();
  std::vector<double> probs(fit.solution.distribution.size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = fit.solution.distribution[i];
  out["probabilities"] = probs;
  std::vector<std::string> excluded;
  for (std::size_t i = 0; i < fit.support.size(); ++i)
    if (!fit.support[i]) excluded.push_back(cs.space.label(i));
  out["excluded"] = excluded;
  out["rank"] = fit.architecture.rank();
  out["entropy"] = entropy(fit.solution.distribution);
  out["residual"] = fit.solution.residual;
  out["iterations"] = fit.solution.iterations;
  if (fit.solution.multipliers) {
    const auto& th = *fit.solution.multipliers;
    out["multipliers"] = std::vector<double>(th.data(), th.data() + th.size());
  }
  Output o(a.out);
  o.stream() << out.dump(2) << '\n';
  return 0;
}

// --- select ---------------------------------------------------------------------------

struct SelectArgs {
  std::string candidates, counts, method = "all", out, chosen;
  int enumerate_spins = 0;
  double alpha_prefactor = 1.0;
};

std::vector<Method> parse_methods(const std::string& s) {
  if (s == "all") return {std::begin(kAllMethods), std::end(kAllMethods)};
  std::vector<Method> out;
  std::stringstream ss(s);
  for (std::string m; std::getline(ss, m, ',');) out.push_back(parse_method(m));
  if (out.empty()) throw invalid_input("no selection method given");
  return out;
}

int run_select(const SelectArgs& a) {
  const std::vector<Method> methods = parse_methods(a.method);
  if (!(a.alpha_prefactor > 0.0)) throw invalid_input("--alpha-prefactor must be positive");

  std::vector<std::string> ids;
  std::vector<CoefficientMatrix> coefficients;
  std::vector<std::optional<ising::Family>> families;
  std::optional<MicrostateSpace> space;
  if (a.enumerate_spins > 0) {
    const int L = a.enumerate_spins;
    if (L > 5) throw invalid_input("--enumerate-spins supports at most 5 spins");
    space = MicrostateSpace::spins(L);
    const auto models = ising::enumerate_models(L);
    for (std::size_t i = 0; i < models.size(); ++i) {
      ids.push_back(std::to_string(i));
      coefficients.push_back(ising::to_coefficients(ising::InteractionClosure::from_family(L, models[i].family), L));
      families.push_back(models[i].family);
    }
  } else {
    for (auto& c : io::read_candidates(a.candidates)) {
      warn(c.constraints.warnings);
      if (!space) space = c.constraints.space;
      ids.push_back(c.id);
      coefficients.push_back(c.constraints.coefficients);
      if (c.constraints.closure && c.constraints.closure->spins() <= 5)
        families.push_back(c.constraints.closure->family());
      else
        families.push_back(std::nullopt);
    }
  }

  const auto counts = io::read_counts(a.counts, *space);
  warn(counts.warnings);
  const Distribution f = counts.counts.frequencies();
  const double N = static_cast<double>(counts.counts.total());

  std::vector<ArchitectureMatrix> archs;
  for (const auto& c : coefficients) archs.push_back(to_architecture(c.with_moments_of(f)));

  const ScoreTable table = score_candidates(archs, f, N, ids);
  warn(table.warnings);
  if (table.scores.empty()) throw selection_failure("no candidate could be fitted to the data");

  const bool all_families = std::all_of(families.begin(), families.end(), [](const auto& x) { return x.has_value(); });
  ImpliesFn implies = all_families ? ImpliesFn([&](std::size_t i, std::size_t j) {
    const ising::Family fi = *families[i], fj = *families[j];
    return fi != fj && (fi & fj) == fi;
  })
                                   : nesting_relation(archs);

  {
    Output o(a.out);
    auto& os = o.stream();
    os << "id,rank,states,maxent_entropy,empirical_delta,p_value,bic,aic,expected_entropy\n";
    for (const auto& s : table.scores)
      os << s.id << ',' << s.rank << ',' << s.states << ',' << fmt(s.maxent_entropy) << ',' << fmt(s.empirical_delta)
         << ',' << fmt(s.p_value) << ',' << fmt(s.bic) << ',' << fmt(s.aic) << ',' << fmt(s.expected_entropy) << '\n';
    if (o.is_stdout()) os << '\n';
  }

  std::ostringstream chosen;
  chosen << "method,chosen_id,fallback\n";
  for (Method m : methods) {
    const SelectionResult r = select_from(table, N, SelectionConfig{m, a.alpha_prefactor}, implies);
    chosen << method_name(m) << ',' << r.chosen_id << ',' << (r.fallback ? 1 : 0) << '\n';
  }
  std::cout << chosen.str();
  if (!a.chosen.empty()) {
    Output o(a.chosen);
    o.stream() << chosen.str();
  }
  return 0;
}

// --- enumerate ------------------------------------------------------------------------------

int run_enumerate(int L, const std::string& out) {
  if (L < 1 || L > 5) throw invalid_input("--spins must be in [1, 5]");
  const auto models = ising::enumerate_models(L);
  Output o(out);
  auto& os = o.stream();
  os << "id,rank,num_constraints,generators\n";
  for (std::size_t i = 0; i < models.size(); ++i)
    os << i << ',' << models[i].rank << ',' << models[i].rank - 1 << ',' << ising::format_family(L, models[i].family)
       << '\n';
  return 0;
}

// --- sample -----------------------------------------------------------------------------------

struct SampleArgs {
  std::string model, constraints, out;
  int spins = 0;
  std::uint64_t params_seed = 0, seed = 0;
  std::int64_t n = 0;
};

ising::Hypergraph parse_model(const std::string& text, int spins) {
  std::vector<std::vector<int>> lists;
  std::stringstream ss(text);
  int max_spin = 0;
  for (std::string edge; std::getline(ss, edge, ',');) {
    std::vector<int> l;
    for (char ch : edge) {
      if (ch < '1' || ch > '9') throw invalid_input("--model: hyperedges are digit strings such as 123,35");
      l.push_back(ch - '0');
      max_spin = std::max(max_spin, ch - '0');
    }
    if (l.empty()) throw invalid_input("--model: empty hyperedge");
    lists.push_back(std::move(l));
  }
  return ising::Hypergraph::from_lists(spins > 0 ? spins : max_spin, lists);
}

int run_sample(const SampleArgs& a) {
  if (a.n < 1) throw invalid_input("--n must be >= 1");
  if (a.model.empty() == a.constraints.empty()) throw invalid_input("give exactly one of --model and --constraints");
  std::optional<ising::Hypergraph> g;
  if (!a.model.empty()) {
    g = parse_model(a.model, a.spins);
  } else {
    const json j = io::read_json_file(a.constraints);
    if (!j.contains("hyperedges") || !j.contains("spins"))
      throw invalid_input("sample needs a hypergraph constraints file ('spins' + 'hyperedges')");
    g = ising::Hypergraph::from_lists(j.at("spins").get<int>(), io::detail::spin_lists(j.at("hyperedges")));
  }
  const int L = g->spins();
  Rng params_rng = make_rng(a.params_seed, {0});
  const Distribution q = ising::boltzmann(ising::random_params(*g, params_rng), L);
  Rng rng = make_rng(a.seed, {1});
  const CountVector c = multinomial_sample(q, a.n, rng);
  Output o(a.out);
  io::write_counts(o.stream(), c, MicrostateSpace::spins(L));
  return 0;
}

// --- bench ------------------------------------------------------------------------------------

int run_bench(const std::string& config, const std::string& out_dir, int threads, bool quiet) {
  const json j = io::read_json_file(config);
  bench::BenchmarkConfig cfg = io::parse_bench_config(j);
  if (threads > 0) {
    cfg.threads = threads;
  } else if (!j.contains("threads")) {
    if (const char* env = std::getenv("MAXENT_THREADS")) {
      try {
        cfg.threads = std::stoi(env);
      } catch (const std::logic_error&) {
        throw invalid_input("MAXENT_THREADS must be an integer");
      }
    }
  }
  cfg.validate();
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);

  bench::RunOptions run;
  run.cache_dir = dir / "tasks";
  if (!quiet)
    run.progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 50 == 0) std::cerr << "\rtasks " << done << '/' << total << std::flush;
    };
  const bench::BenchmarkReport rep = bench::run_benchmark(cfg, run);
  if (!quiet) std::cerr << '\n';

  {
    std::ofstream out(dir / "report.csv");
    bench::write_report(out, rep);
  }
  {
    std::ofstream out(dir / "summary.csv");
    bench::write_summary(out, bench::summarize(rep));
  }
  if (!quiet)
    std::cerr << rep.rows.size() << " rows, " << rep.candidates << " candidates, " << rep.resumed_tasks
              << " tasks resumed, " << rep.excluded_fits << " candidate fits excluded\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-entropy constraint fitting and model selection"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "MaxEnt distribution of a constraint set");
  fit_cmd->add_option("--constraints", fit.constraints, "constraints JSON")->required();
  fit_cmd->add_option("--counts", fit.counts, "counts CSV supplying the moments");
  fit_cmd->add_option("--solver", fit.solver)->check(CLI::IsMember({"newton", "ipf"}));
  fit_cmd->add_option("--tol", fit.tol, "max moment residual")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fit.max_iter, "iteration cap");
  fit_cmd->add_option("--out", fit.out, "output JSON (default stdout)");

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "score candidate constraint sets and select one");
  auto* cand_opt = sel_cmd->add_option("--candidates", sel.candidates, "candidates JSON or directory");
  auto* enum_opt = sel_cmd->add_option("--enumerate-spins", sel.enumerate_spins, "use every hierarchical model on L spins");
  cand_opt->excludes(enum_opt);
  sel_cmd->add_option("--counts", sel.counts, "counts CSV")->required();
  sel_cmd->add_option("--method", sel.method, "bic, aic, hyper_maxent, hyper_maxent_lrt, a comma list, or all");
  sel_cmd->add_option("--alpha-prefactor", sel.alpha_prefactor, "multiplies the hyper-MaxEnt thresholds");
  sel_cmd->add_option("--out", sel.out, "score table CSV (default stdout)");
  sel_cmd->add_option("--chosen", sel.chosen, "also write the chosen models here");

  int enum_spins = 0;
  std::string enum_out;
  auto* enum_cmd = app.add_subcommand("enumerate", "list every hierarchical model on L spins");
  enum_cmd->add_option("--spins", enum_spins)->required();
  enum_cmd->add_option("--out", enum_out);

  SampleArgs smp;
  auto* smp_cmd = app.add_subcommand("sample", "draw counts from a random Boltzmann distribution");
  smp_cmd->add_option("--model", smp.model, "hyperedges as digit strings, e.g. 123,124,35,45");
  smp_cmd->add_option("--constraints", smp.constraints, "hypergraph constraints JSON");
  smp_cmd->add_option("--spins", smp.spins, "spin count (default: largest spin in --model)");
  smp_cmd->add_option("--params-seed", smp.params_seed)->required();
  smp_cmd->add_option("--n", smp.n, "sample size")->required();
  smp_cmd->add_option("--seed", smp.seed)->required();
  smp_cmd->add_option("--out", smp.out);

  std::string bench_config, bench_out;
  int bench_threads = 0;
  bool bench_quiet = false;
  auto* bench_cmd = app.add_subcommand("bench", "run the inverse-Ising benchmark");
  bench_cmd->add_option("--config", bench_config)->required();
  bench_cmd->add_option("--out-dir", bench_out)->required();
  bench_cmd->add_option("--threads", bench_threads, "overrides the config and MAXENT_THREADS");
  bench_cmd->add_flag("--quiet", bench_quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*sel_cmd) {
      if (sel.candidates.empty() && sel.enumerate_spins == 0)
        throw invalid_input("give --candidates or --enumerate-spins");
      return run_select(sel);
    }
    if (*enum_cmd) return run_enumerate(enum_spins, enum_out);
    if (*smp_cmd) return run_sample(smp);
    if (*bench_cmd) return run_bench(bench_config, bench_out, bench_threads, bench_quiet);
  } catch (const selection_failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSelection;
  } catch (const solver_error& e) {
    std::cerr << "error: " << e.what();
    if (e.constraint() >= 0) std::cerr << " [failing constraint: " << e.constraint() << ']';
    std::cerr << '\n';
    return kExitSolver;
  } catch (const inconsistent_system& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const rank_deficiency& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
