// Copyright 2026 The mreg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * File formats and command orchestration for the `mreg` tool.
 *
 * Matrices (A, full covariances, partially observed matrices) are Matrix
 * Market coordinate files; vectors are one value per line or single-column
 * CSV. All user-facing indices are 1-based. Reports are JSON objects with a
 * fixed key order, Monte Carlo tables are CSV.
 */

#ifndef MREG_CLI_IO_HPP
#define MREG_CLI_IO_HPP

#include <nlohmann/json.hpp>

#include <Eigen/Sparse>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mreg/applications.hpp"
#include "mreg/circuit_discovery.hpp"
#include "mreg/core_model.hpp"
#include "mreg/error.hpp"
#include "mreg/kernel_estimator.hpp"

namespace mreg {

namespace detail {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

inline std::vector<Token> tokenize(std::string_view line, bool commas) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto sep = [&](char c) {
    return c == ' ' || c == '\t' || c == '\r' || (commas && c == ',');
  };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !sep(line[j])) ++j;
    out.push_back({line.substr(i, j - i), i + 1});
    i = j;
  }
  return out;
}

[[noreturn]] inline void parse_fail(const std::string& source, std::size_t line,
                                    std::size_t column, const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line << ":" << column << ": " << what;
  throw Error(ErrorCode::kParseError, msg.str());
}

inline bool parse_double(std::string_view s, double& out) {
  // std::from_chars for double is available in libstdc++ 11.
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline bool parse_index(std::string_view s, long long& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace detail

// Coordinate-format Matrix Market contents with 0-based indices, entries in
// file order. Symmetric files are expanded when converted to a matrix.
struct MatrixMarket {
  Index rows = 0;
  Index cols = 0;
  bool symmetric = false;
  std::vector<MatrixEntry> entries;

  SparseRows to_rows() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(entries.size() * (symmetric ? 2 : 1));
    for (const auto& e : entries) {
      t.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
      if (symmetric && e.row != e.col) {
        t.emplace_back(static_cast<int>(e.col), static_cast<int>(e.row), e.value);
      }
    }
    SparseRows m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }
};

inline MatrixMarket read_matrix_market(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) detail::parse_fail(source, 1, 1, "empty file");
  ++line_no;
  const auto header = detail::tokenize(line, false);
  if (header.size() < 4 || header[0].text != "%%MatrixMarket" ||
      detail::lower(header[1].text) != "matrix") {
    detail::parse_fail(source, 1, 1, "missing '%%MatrixMarket matrix' header");
  }
  if (detail::lower(header[2].text) != "coordinate") {
    detail::parse_fail(source, 1, header[2].column, "only coordinate format is supported");
  }
  const std::string field = detail::lower(header[3].text);
  if (field != "real" && field != "integer" && field != "pattern" && field != "double") {
    detail::parse_fail(source, 1, header[3].column, "unsupported field '" + field + "'");
  }
  const bool pattern = field == "pattern";
  MatrixMarket mm;
  if (header.size() >= 5) {
    const std::string sym = detail::lower(header[4].text);
    if (sym == "symmetric") {
      mm.symmetric = true;
    } else if (sym != "general") {
      detail::parse_fail(source, 1, header[4].column, "unsupported symmetry '" + sym + "'");
    }
  }

  bool have_size = false;
  long long expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    const auto tok = detail::tokenize(line, false);
    if (tok.empty()) continue;
    if (!have_size) {
      long long r = 0, c = 0;
      if (tok.size() != 3 || !detail::parse_index(tok[0].text, r) ||
          !detail::parse_index(tok[1].text, c) || !detail::parse_index(tok[2].text, expected) ||
          r < 0 || c < 0 || expected < 0) {
        detail::parse_fail(source, line_no, tok[0].column, "expected 'rows cols nonzeros'");
      }
      mm.rows = r;
      mm.cols = c;
      have_size = true;
      mm.entries.reserve(static_cast<std::size_t>(expected));
      continue;
    }
    const std::size_t need = pattern ? 2 : 3;
    if (tok.size() != need) {
      detail::parse_fail(source, line_no, tok.front().column,
                         "expected " + std::to_string(need) + " fields");
    }
    long long i = 0, j = 0;
    if (!detail::parse_index(tok[0].text, i) || i < 1 || i > mm.rows) {
      detail::parse_fail(source, line_no, tok[0].column, "row index out of range");
    }
    if (!detail::parse_index(tok[1].text, j) || j < 1 || j > mm.cols) {
      detail::parse_fail(source, line_no, tok[1].column, "column index out of range");
    }
    double v = 1.0;
    if (!pattern && !detail::parse_double(tok[2].text, v)) {
      detail::parse_fail(source, line_no, tok[2].column, "invalid numeric value");
    }
    mm.entries.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), v});
  }
  if (!have_size) detail::parse_fail(source, line_no + 1, 1, "missing size line");
  if (static_cast<long long>(mm.entries.size()) != expected) {
    std::ostringstream msg;
    msg << "size line announces " << expected << " entries, found " << mm.entries.size();
    detail::parse_fail(source, line_no, 1, msg.str());
  }
  return mm;
}

inline void write_matrix_market(std::ostream& out, const SparseRows& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << " " << a.cols() << " " << a.nonZeros() << "\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (Index r = 0; r < a.outerSize(); ++r) {
    for (SparseRows::InnerIterator it(a, r); it; ++it) {
      line.str("");
      line << (r + 1) << " " << (it.col() + 1) << " " << it.value() << "\n";
      out << line.str();
    }
  }
}

// One value per line, or a single-column CSV with an optional header line.
// Blank lines and lines starting with '#' or '%' are skipped.
inline Eigen::VectorXd read_vector(std::istream& in, const std::string& source = "<input>") {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = detail::tokenize(line, true);
    if (tok.empty() || tok[0].text[0] == '#' || tok[0].text[0] == '%') continue;
    if (tok.size() != 1) {
      detail::parse_fail(source, line_no, tok[1].column, "expected a single column");
    }
    double v = 0.0;
    if (!detail::parse_double(tok[0].text, v)) {
      if (first) {
        first = false;
        continue;  // header
      }
      detail::parse_fail(source, line_no, tok[0].column, "invalid numeric value");
    }
    first = false;
    values.push_back(v);
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

// Either "index value" pairs (1-based) or a dense column of n values.
inline TargetVector read_target(std::istream& in, Index dimension,
                                const std::string& source = "<input>") {
  std::vector<std::pair<Index, double>> sparse;
  std::vector<double> dense;
  std::string line;
  std::size_t line_no = 0;
  int width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = detail::tokenize(line, true);
    if (tok.empty() || tok[0].text[0] == '#' || tok[0].text[0] == '%') continue;
    const int this_width = static_cast<int>(tok.size());
    if (this_width > 2) detail::parse_fail(source, line_no, tok[2].column, "too many fields");
    if (width == 0) width = this_width;
    if (this_width != width) {
      detail::parse_fail(source, line_no, tok[0].column, "mixed dense and sparse lines");
    }
    if (width == 2) {
      long long i = 0;
      double v = 0.0;
      if (!detail::parse_index(tok[0].text, i) || i < 1 || i > dimension) {
        detail::parse_fail(source, line_no, tok[0].column, "coordinate out of range");
      }
      if (!detail::parse_double(tok[1].text, v)) {
        detail::parse_fail(source, line_no, tok[1].column, "invalid numeric value");
      }
      sparse.emplace_back(static_cast<Index>(i - 1), v);
    } else {
      double v = 0.0;
      if (!detail::parse_double(tok[0].text, v)) {
        detail::parse_fail(source, line_no, tok[0].column, "invalid numeric value");
      }
      dense.push_back(v);
    }
  }
  if (width == 1) {
    if (static_cast<Index>(dense.size()) != dimension) {
      std::ostringstream msg;
      msg << source << ": target has " << dense.size() << " entries, expected " << dimension;
      throw Error(ErrorCode::kDimensionMismatch, msg.str());
    }
    for (Index i = 0; i < dimension; ++i) {
      if (dense[static_cast<std::size_t>(i)] != 0.0) {
        sparse.emplace_back(i, dense[static_cast<std::size_t>(i)]);
      }
    }
  }
  return TargetVector(dimension, std::move(sparse));
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kParseError, path + ": cannot open file");
  return f;
}

}  // namespace detail

inline MatrixMarket read_matrix_market_file(const std::string& path) {
  auto f = detail::open_input(path);
  return read_matrix_market(f, path);
}

inline Eigen::VectorXd read_vector_file(const std::string& path) {
  auto f = detail::open_input(path);
  return read_vector(f, path);
}

enum class TargetForm { kVector, kPotential, kSum, kCell };

struct ProblemSpec {
  std::string matrix_path;
  std::optional<std::string> observations_path;
  std::optional<TargetForm> target_form;
  std::string w_path;             // kVector
  Index first = 0, second = 0;    // 1-based pair for kPotential, kSum, kCell
  std::string noise = "iid:1";    // iid:<s2> | diag:<path> | full:<path>
  DiscoveryBudget budget;
  std::optional<Index> rank;      // use disjoint rank-r blocks for kVector
  bool pool = false;
  std::optional<std::uint64_t> seed;
  Index trials = 10000;
  std::optional<std::string> x_path;  // true signal for `mc`
  std::optional<std::string> out_path;
  double tol = kDefaultTolerance;

  void check() const {
    if (matrix_path.empty()) throw Error(ErrorCode::kInvalidArgument, "--matrix is required");
    if (!target_form) {
      throw Error(ErrorCode::kInvalidArgument,
                  "exactly one of --w, --potential, --sum, --cell is required");
    }
    budget.check();
  }
};

struct ProblemInputs {
  SparseLinearSystem system;
  TargetVector target;
  std::optional<PartialMatrix> completion;
  // Original rows behind each (possibly pooled) row.
  std::vector<std::vector<Index>> row_groups;
};

namespace detail {

inline NoiseModel parse_noise(const std::string& text, Index n_rows, double tol) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kParseError, "noise must be iid:<var>, diag:<path> or full:<path>");
  }
  const std::string kind = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  if (kind == "iid") {
    double v = 0.0;
    if (!parse_double(arg, v)) throw Error(ErrorCode::kParseError, "invalid iid variance '" + arg + "'");
    return NoiseModel::iid(v, n_rows);
  }
  if (kind == "diag") {
    Eigen::VectorXd v = read_vector_file(arg);
    if (v.size() != n_rows) {
      std::ostringstream msg;
      msg << arg << ": " << v.size() << " variances for " << n_rows << " rows";
      throw Error(ErrorCode::kDimensionMismatch, msg.str());
    }
    return NoiseModel::diagonal(std::move(v));
  }
  if (kind == "full") {
    const MatrixMarket mm = read_matrix_market_file(arg);
    if (mm.rows != n_rows || mm.cols != n_rows) {
      std::ostringstream msg;
      msg << arg << ": covariance is " << mm.rows << "x" << mm.cols << ", expected " << n_rows
          << "x" << n_rows;
      throw Error(ErrorCode::kDimensionMismatch, msg.str());
    }
    Eigen::SparseMatrix<double> sigma = mm.to_rows();
    return NoiseModel::full(std::move(sigma), tol);
  }
  throw Error(ErrorCode::kParseError, "unknown noise kind '" + kind + "'");
}

inline Index to_zero_based(Index one_based, Index limit, const char* what) {
  if (one_based < 1 || one_based > limit) {
    std::ostringstream msg;
    msg << what << " " << one_based << " outside [1, " << limit << "]";
    throw Error(ErrorCode::kIndexOutOfRange, msg.str());
  }
  return one_based - 1;
}

}  // namespace detail

inline ProblemInputs parse_inputs(const ProblemSpec& spec, bool read_observations = true) {
  spec.check();
  const MatrixMarket mm = read_matrix_market_file(spec.matrix_path);

  if (*spec.target_form == TargetForm::kCell) {
    PartialMatrix pm;
    pm.rows = mm.rows;
    pm.cols = mm.cols;
    pm.observed = mm.entries;
    pm.target_row = detail::to_zero_based(spec.first, mm.rows, "cell row");
    pm.target_col = detail::to_zero_based(spec.second, mm.cols, "cell column");
    const Index n_obs = static_cast<Index>(pm.observed.size());
    NoiseModel noise = detail::parse_noise(spec.noise, n_obs, spec.tol);
    LogSystem ls = rank1_log_system(pm, noise);
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(n_obs));
    for (Index i = 0; i < n_obs; ++i) groups[static_cast<std::size_t>(i)] = {i};
    return ProblemInputs{std::move(ls.system), std::move(ls.target), std::move(pm),
                         std::move(groups)};
  }

  SparseRows a = mm.to_rows();
  const Index n_rows = a.rows();
  NoiseModel noise = detail::parse_noise(spec.noise, n_rows, spec.tol);
  std::optional<Eigen::VectorXd> b;
  if (read_observations && spec.observations_path) {
    b = read_vector_file(*spec.observations_path);
    if (b->size() != n_rows) {
      std::ostringstream msg;
      msg << *spec.observations_path << ": " << b->size() << " observations for " << n_rows
          << " rows";
      throw Error(ErrorCode::kDimensionMismatch, msg.str());
    }
  }
  const Index n_cols = a.cols();
  SparseLinearSystem system(std::move(a), std::move(b), std::move(noise));

  std::optional<TargetVector> target;
  switch (*spec.target_form) {
    case TargetForm::kVector: {
      auto f = detail::open_input(spec.w_path);
      target = read_target(f, n_cols, spec.w_path);
      break;
    }
    case TargetForm::kPotential:
      target = TargetVector::difference(n_cols, detail::to_zero_based(spec.first, n_cols, "vertex"),
                                        detail::to_zero_based(spec.second, n_cols, "vertex"));
      break;
    case TargetForm::kSum:
      target = TargetVector::sum(n_cols, detail::to_zero_based(spec.first, n_cols, "vertex"),
                                 detail::to_zero_based(spec.second, n_cols, "vertex"));
      break;
    case TargetForm::kCell:
      break;
  }

  std::vector<std::vector<Index>> groups;
  if (spec.pool) {
    PooledSystem pooled = pool_duplicates(system);
    return ProblemInputs{std::move(pooled.system), std::move(*target), std::nullopt,
                         std::move(pooled.groups)};
  }
  groups.resize(static_cast<std::size_t>(n_rows));
  for (Index i = 0; i < n_rows; ++i) groups[static_cast<std::size_t>(i)] = {i};
  return ProblemInputs{std::move(system), std::move(*target), std::nullopt, std::move(groups)};
}

// Circuits found for a problem: either a particular system (base + generals)
// or a list of disjoint particular circuits (rank-r blocks).
struct Discovery {
  std::optional<ParticularSystem> system;
  std::vector<Circuit> particulars;
  Index skipped_blocks = 0;

  std::vector<Divisor> generators() const {
    if (system) return system->generators();
    std::vector<Divisor> out;
    for (const Circuit& c : particulars) out.push_back(Divisor::of(c));
    return out;
  }
};

inline Discovery discover(const ProblemSpec& spec, const ProblemInputs& inputs) {
  Discovery d;
  const TargetForm form = *spec.target_form;
  if (form == TargetForm::kPotential || form == TargetForm::kSum || form == TargetForm::kCell) {
    const bool difference = form == TargetForm::kPotential;
    const CharacteristicGraph graph =
        graph_from_rows(inputs.system, difference ? EdgeMode::kDifference : EdgeMode::kSum);
    std::vector<Index> ends;
    inputs.target.for_each([&](Index c, double) { ends.push_back(c); });
    if (difference) {
      Index k = ends[0], l = ends[1];
      if (inputs.target.entries().coeff(k) < 0) std::swap(k, l);
      GraphCircuits g = potential_circuits(graph, k, l, spec.budget);
      d.system.emplace(std::move(g.base), std::move(g.generals));
    } else {
      GraphCircuits g = signed_sum_circuits(graph, ends[0], ends[1], spec.budget);
      d.system.emplace(std::move(g.base), std::move(g.generals));
    }
    return d;
  }
  if (spec.rank) {
    LowRankCircuits lr = lowrank_circuits(inputs.system, *spec.rank, inputs.target, spec.tol);
    d.particulars = std::move(lr.particulars);
    d.skipped_blocks = lr.skipped;
    return d;
  }
  d.system.emplace(local_circuits(inputs.system, inputs.target, spec.budget, spec.tol));
  return d;
}

namespace detail {

inline std::vector<Index> original_rows(const ProblemInputs& inputs,
                                        const std::vector<Index>& rows) {
  std::vector<Index> out;
  for (Index r : rows) {
    for (Index o : inputs.row_groups[static_cast<std::size_t>(r)]) out.push_back(o + 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline nlohmann::ordered_json circuit_json(const ProblemInputs& inputs, const Circuit& c) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(kind_name(c.kind()));
  std::vector<Index> rows;
  for (Index r : c.indices()) rows.push_back(r + 1);
  j["indices"] = rows;
  j["vector"] = c.coefficients();
  if (inputs.row_groups.size() != static_cast<std::size_t>(inputs.system.num_rows()) ||
      std::any_of(inputs.row_groups.begin(), inputs.row_groups.end(),
                  [](const auto& g) { return g.size() != 1; })) {
    j["original_rows"] = original_rows(inputs, c.indices());
  }
  return j;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"estimate", "variance", "circuits",
                                              "complete", "mc",       "oracle"};
  return names;
}

// Runs one command and returns its report (JSON, or CSV for `mc`). The
// report is also written to spec.out_path when set.
inline std::string run_command(const std::string& command, const ProblemSpec& spec) {
  using nlohmann::ordered_json;
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown command '" + command + "'");
  }
  // `variance` and `circuits` never read b.
  const bool needs_b = command == "estimate" || command == "oracle";
  const ProblemInputs inputs = parse_inputs(spec, needs_b);
  const auto start = std::chrono::steady_clock::now();
  std::string report;

  if (command == "oracle") {
    const GlsResult g = gls_oracle(inputs.system, inputs.target, spec.tol);
    ordered_json j;
    j["value"] = g.value;
    j["variance"] = g.variance;
    j["elapsed_ms"] = detail::elapsed_ms(start);
    report = j.dump(2);
  } else if (command == "complete") {
    if (!inputs.completion) {
      throw Error(ErrorCode::kInvalidArgument, "complete needs --cell");
    }
    const CompletionReport c =
        rank1_impute(*inputs.completion, spec.budget, inputs.system.noise(), spec.tol);
    ordered_json j;
    j["value"] = c.value;
    j["log_value"] = c.log_value;
    j["log_variance"] = c.log_variance;
    j["support"] = detail::original_rows(inputs, c.log_report.support);
    j["alpha"] = c.log_report.alpha;
    j["m"] = c.log_report.generator_count;
    j["elapsed_ms"] = detail::elapsed_ms(start);
    report = j.dump(2);
  } else {
    const Discovery found = discover(spec, inputs);
    if (command == "circuits") {
      ordered_json j;
      if (found.system) {
        j["base"] = detail::circuit_json(inputs, found.system->base());
        ordered_json gens = ordered_json::array();
        for (const Circuit& g : found.system->generals()) {
          gens.push_back(detail::circuit_json(inputs, g));
        }
        j["generals"] = gens;
      } else {
        ordered_json parts = ordered_json::array();
        for (const Circuit& c : found.particulars) parts.push_back(detail::circuit_json(inputs, c));
        j["particulars"] = parts;
        j["skipped_blocks"] = found.skipped_blocks;
      }
      j["elapsed_ms"] = detail::elapsed_ms(start);
      report = j.dump(2);
    } else if (command == "mc") {
      if (!found.system) {
        throw Error(ErrorCode::kInvalidArgument, "mc needs a base circuit (not --rank)");
      }
      Eigen::VectorXd x = Eigen::VectorXd::Zero(inputs.system.num_cols());
      if (spec.x_path) {
        x = read_vector_file(*spec.x_path);
        if (x.size() != inputs.system.num_cols()) {
          throw Error(ErrorCode::kDimensionMismatch, "--x has the wrong length");
        }
      }
      std::ostringstream csv;
      csv << std::setprecision(17);
      csv << "trials,true_value,empirical_mean,empirical_variance,predicted_variance\n";
      std::vector<Index> checkpoints;
      for (Index t = 10; t < spec.trials; t *= 10) checkpoints.push_back(t);
      checkpoints.push_back(spec.trials);
      for (Index t : checkpoints) {
        const MonteCarloResult r = monte_carlo(inputs.system, inputs.target, *found.system, x, t,
                                               spec.seed.value_or(0), 0, spec.tol);
        csv << r.trials << "," << r.true_value << "," << r.empirical_mean << ","
            << r.empirical_variance << "," << r.predicted_variance << "\n";
      }
      report = csv.str();
    } else {
      const std::vector<Divisor> gens = found.generators();
      const KernelAssembly assembly =
          assemble(std::span<const Divisor>(gens), inputs.system.noise(), spec.tol);
      ordered_json j;
      if (command == "estimate") {
        const EstimateReport r = estimate(assembly, inputs.system);
        j["value"] = r.value;
      }
      j["variance"] = predict_variance(assembly);
      j["support"] = detail::original_rows(inputs, assembly.support);
      j["alpha"] = std::vector<double>(assembly.alpha.data(),
                                       assembly.alpha.data() + assembly.alpha.size());
      j["m"] = assembly.generator_count();
      j["elapsed_ms"] = detail::elapsed_ms(start);
      report = j.dump(2);
    }
  }
  if (report.empty() || report.back() != '\n') report += '\n';
  if (spec.out_path) {
    std::ofstream f(*spec.out_path);
    if (!f) throw Error(ErrorCode::kParseError, *spec.out_path + ": cannot write report");
    f << report;
  }
  return report;
}

}  // namespace mreg

#endif  // MREG_CLI_IO_HPP
