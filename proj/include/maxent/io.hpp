#pragma once

// File formats: constraint sets and candidate lists (JSON), counts (CSV) and
// benchmark configurations (JSON).

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxent/bench.hpp"
#include "maxent/constraints.hpp"
#include "maxent/error.hpp"
#include "maxent/ising.hpp"
#include "maxent/selection.hpp"
#include "maxent/simplex.hpp"

namespace maxent::io {

using json = nlohmann::json;

/// A parsed constraints file.
struct ConstraintSet {
  MicrostateSpace space;
  CoefficientMatrix coefficients;
  bool has_moments = false;  // moments given in the file
  std::optional<ising::InteractionClosure> closure;
  std::vector<std::string> warnings;
};

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw invalid_input(path.string() + ": " + e.what());
  }
}

namespace detail {

inline std::vector<std::vector<int>> spin_lists(const json& edges) {
  if (!edges.is_array()) throw invalid_input("'hyperedges' must be an array of spin lists");
  std::vector<std::vector<int>> out;
  for (const auto& e : edges) {
    if (!e.is_array() || e.empty()) throw invalid_input("each hyperedge must be a non-empty array of spin indices");
    std::vector<int> l;
    for (const auto& i : e) {
      if (!i.is_number_integer()) throw invalid_input("spin indices must be integers");
      l.push_back(i.get<int>());
    }
    out.push_back(std::move(l));
  }
  return out;
}

inline std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return labels;
}

}  // namespace detail

/// Either {"labels": [...], "rows": [[...]], "moments": [...]} (labels and
/// moments optional) or {"spins": L, "hyperedges": [[1, 2], ...]}. A missing
/// all-ones row is appended with moment 1.
inline ConstraintSet parse_constraints(const json& j) {
  if (!j.is_object()) throw invalid_input("constraints must be a JSON object");
  const bool explicit_form = j.contains("rows");
  const bool graph_form = j.contains("hyperedges") || j.contains("spins");
  if (explicit_form == graph_form)
    throw invalid_input("constraints need exactly one payload: 'rows' (explicit) or 'spins' + 'hyperedges'");

  try {
    if (graph_form) {
      if (!j.contains("spins") || !j.contains("hyperedges"))
        throw invalid_input("hypergraph constraints need both 'spins' and 'hyperedges'");
      const int L = j.at("spins").get<int>();
      const auto g = ising::Hypergraph::from_lists(L, detail::spin_lists(j.at("hyperedges")));
      const auto c = ising::closure(g);
      ConstraintSet out{MicrostateSpace::spins(L), ising::to_coefficients(c, L), false, c, {}};
      if (j.contains("moments")) throw invalid_input("hypergraph constraints take their moments from data");
      return out;
    }

    const json& rows = j.at("rows");
    if (!rows.is_array() || rows.empty()) throw invalid_input("'rows' must be a non-empty array");
    const std::size_t n = rows.front().is_array() ? rows.front().size() : 0;
    if (n < 2) throw invalid_input("rows must have at least 2 columns");
    std::vector<std::string> labels =
        j.contains("labels") ? j.at("labels").get<std::vector<std::string>>() : detail::default_labels(n);
    if (labels.size() != n)
      throw invalid_input("'labels' has " + std::to_string(labels.size()) + " entries but rows have " +
                          std::to_string(n) + " columns");

    CoefficientMatrix c{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n)),
                        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()))};
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (!rows[a].is_array() || rows[a].size() != n)
        throw invalid_input("row " + std::to_string(a) + " does not have " + std::to_string(n) + " entries");
      for (std::size_t k = 0; k < n; ++k)
        c.rows(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) = rows[a][k].get<double>();
    }
    bool has_moments = false;
    if (j.contains("moments")) {
      const auto m = j.at("moments").get<std::vector<double>>();
      if (m.size() != rows.size())
        throw invalid_input("'moments' has " + std::to_string(m.size()) + " entries for " +
                            std::to_string(rows.size()) + " rows");
      for (std::size_t a = 0; a < m.size(); ++a) c.moments[static_cast<Eigen::Index>(a)] = m[a];
      has_moments = true;
    }
    ConstraintSet out{MicrostateSpace(std::move(labels)), std::move(c), has_moments, std::nullopt, {}};
    if (!out.coefficients.has_normalization_row()) {
      const Eigen::Index m = out.coefficients.rows.rows();
      out.coefficients.rows.conservativeResize(m + 1, Eigen::NoChange);
      out.coefficients.rows.row(m).setOnes();
      out.coefficients.moments.conservativeResize(m + 1);
      out.coefficients.moments[m] = 1.0;
      out.warnings.push_back("no all-ones row given; appended the normalization constraint");
    }
    out.coefficients.validate();
    return out;
  } catch (const json::exception& e) {
    throw invalid_input(std::string("constraints: ") + e.what());
  }
}

inline ConstraintSet read_constraints(const std::filesystem::path& path) {
  try {
    return parse_constraints(read_json_file(path));
  } catch (const invalid_input& e) {
    throw invalid_input(path.string() + ": " + e.what());
  }
}

// --- counts -------------------------------------------------------------------------

struct CountsFile {
  CountVector counts;
  std::vector<std::string> warnings;
};

/// CSV with header "microstate,count". Labels absent from the file count 0
/// (reported as a warning); unknown or repeated labels are errors.
inline CountsFile parse_counts(std::istream& in, const MicrostateSpace& space) {
  std::string line;
  if (!std::getline(in, line)) throw invalid_input("counts file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "microstate,count") throw invalid_input("counts file must start with the header 'microstate,count'");
  std::vector<std::int64_t> counts(space.size(), 0);
  std::vector<bool> seen(space.size(), false);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw invalid_input("counts line " + std::to_string(lineno) + ": expected 'label,count'");
    const std::string label = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    const auto idx = space.index_of(label);
    if (!idx) throw invalid_input("counts line " + std::to_string(lineno) + ": unknown microstate '" + label + "'");
    if (seen[*idx]) throw invalid_input("counts line " + std::to_string(lineno) + ": repeated microstate '" + label + "'");
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(value, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != value.size() || v < 0)
      throw invalid_input("counts line " + std::to_string(lineno) + ": count must be a non-negative integer");
    counts[*idx] = v;
    seen[*idx] = true;
  }
  CountsFile out{CountVector(std::move(counts)), {}};
  const auto missing = std::count(seen.begin(), seen.end(), false);
  if (missing > 0) out.warnings.push_back(std::to_string(missing) + " microstate(s) absent from the counts file, taken as 0");
  if (out.counts.total() == 0) throw invalid_input("counts file has zero total");
  return out;
}

inline CountsFile read_counts(const std::filesystem::path& path, const MicrostateSpace& space) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open " + path.string());
  try {
    return parse_counts(in, space);
  } catch (const invalid_input& e) {
    throw invalid_input(path.string() + ": " + e.what());
  }
}

inline void write_counts(std::ostream& os, const CountVector& c, const MicrostateSpace& space) {
  os << "microstate,count\n";
  for (std::size_t i = 0; i < c.size(); ++i) os << space.label(i) << ',' << c[i] << '\n';
}

// --- candidates -----------------------------------------------------------------------

struct Candidate {
  std::string id;
  ConstraintSet constraints;
};

/// {"candidates": [{"id": ..., <constraints payload>}, ...]} or a directory of
/// constraints files (id = file stem, in file-name order).
inline std::vector<Candidate> read_candidates(const std::filesystem::path& path) {
  std::vector<Candidate> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back({f.stem().string(), read_constraints(f)});
  } else {
    const json j = read_json_file(path);
    if (!j.is_object() || !j.contains("candidates") || !j.at("candidates").is_array())
      throw invalid_input(path.string() + ": expected an object with a 'candidates' array");
    std::size_t k = 0;
    for (json c : j.at("candidates")) {
      std::string id = std::to_string(k++);
      if (c.contains("id")) {
        id = c.at("id").is_string() ? c.at("id").get<std::string>() : c.at("id").dump();
        c.erase("id");
      }
      try {
        out.push_back({id, parse_constraints(c)});
      } catch (const invalid_input& e) {
        throw invalid_input(path.string() + ": candidate " + id + ": " + e.what());
      }
    }
  }
  if (out.empty()) throw invalid_input(path.string() + ": no candidates");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i].constraints.space == out[0].constraints.space))
      throw invalid_input("candidate " + out[i].id + " is defined on a different microstate space");
  return out;
}

// --- benchmark config -----------------------------------------------------------------

/// Keys: spins, hyperedges, sample_sizes, realizations, samples, test_samples,
/// methods, seed, threads, alpha_prefactor. Missing keys keep their defaults.
inline bench::BenchmarkConfig parse_bench_config(const json& j) {
  if (!j.is_object()) throw invalid_input("benchmark config must be a JSON object");
  static const char* known[] = {"spins",   "hyperedges", "sample_sizes", "realizations",   "samples",
                                "test_samples", "methods", "seed",        "threads", "alpha_prefactor"};
  for (const auto& [k, v] : j.items())
    if (std::find(std::begin(known), std::end(known), k) == std::end(known))
      throw invalid_input("benchmark config: unknown key '" + k + "'");
  bench::BenchmarkConfig cfg;
  try {
    if (j.contains("hyperedges") || j.contains("spins")) {
      const int L = j.value("spins", 5);
      cfg.truth = j.contains("hyperedges") ? ising::Hypergraph::from_lists(L, detail::spin_lists(j.at("hyperedges")))
                                           : throw invalid_input("benchmark config: 'spins' given without 'hyperedges'");
    }
    if (j.contains("sample_sizes")) cfg.sample_sizes = j.at("sample_sizes").get<std::vector<std::int64_t>>();
    cfg.realizations = j.value("realizations", cfg.realizations);
    cfg.samples = j.value("samples", cfg.samples);
    cfg.test_samples = j.value("test_samples", cfg.test_samples);
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.alpha_prefactor = j.value("alpha_prefactor", cfg.alpha_prefactor);
  } catch (const json::exception& e) {
    throw invalid_input(std::string("benchmark config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace maxent::io
