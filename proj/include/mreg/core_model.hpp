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
 * Domain types for regression-matroid estimation.
 *
 * A SparseLinearSystem holds the measurement process b = A x + e with a known
 * sparse A, optional observations b and the covariance of e. A TargetVector w
 * names the evaluation <w, x> to estimate. Circuits are minimal row subsets
 * that either express w (particular) or vanish (general), each carrying its
 * unique circuit vector. Divisors are formal combinations of circuits, and a
 * ParticularSystem is the affine family C_p + span(G_1, ..., G_k) searched by
 * the estimator.
 *
 * All types are immutable after construction.
 */

#ifndef MREG_CORE_MODEL_HPP
#define MREG_CORE_MODEL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mreg/error.hpp"
#include "mreg/linalg.hpp"

namespace mreg {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Covariance of the measurement noise. The iid and diagonal forms never
// materialize an N x N matrix.
class NoiseModel {
 public:
  enum class Kind { kIid, kDiagonal, kFull };

  static NoiseModel iid(double variance, Index size) {
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "iid noise variance must be non-negative and finite");
    }
    if (size < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative noise dimension");
    }
    NoiseModel m;
    m.kind_ = Kind::kIid;
    m.size_ = size;
    m.sigma2_ = variance;
    return m;
  }

  static NoiseModel diagonal(Eigen::VectorXd variances) {
    for (Index i = 0; i < variances.size(); ++i) {
      if (!(variances(i) >= 0.0) || !std::isfinite(variances(i))) {
        std::ostringstream msg;
        msg << "diagonal variance at row " << i << " must be non-negative, got "
            << variances(i);
        throw Error(ErrorCode::kInvalidArgument, msg.str());
      }
    }
    NoiseModel m;
    m.kind_ = Kind::kDiagonal;
    m.size_ = variances.size();
    m.variances_ = std::move(variances);
    return m;
  }

  // Symmetry is always checked. The eigenvalue check runs densely and is
  // limited to matrices with at most `dense_check_limit` rows.
  static NoiseModel full(Eigen::SparseMatrix<double> sigma,
                         double tol = kDefaultTolerance,
                         Index dense_check_limit = 2000) {
    if (sigma.rows() != sigma.cols()) {
      throw Error(ErrorCode::kInvalidArgument, "covariance must be square");
    }
    sigma.makeCompressed();
    double max_abs = 0.0;
    for (int k = 0; k < sigma.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(sigma, k); it; ++it) {
        max_abs = std::max(max_abs, std::abs(it.value()));
      }
    }
    Eigen::SparseMatrix<double> transposed = sigma.transpose();
    const double asym = (sigma - transposed).norm();
    if (asym > tol * std::max(1.0, max_abs)) {
      throw Error(ErrorCode::kInvalidArgument, "covariance is not symmetric");
    }
    if (sigma.rows() > 0 && sigma.rows() <= dense_check_limit) {
      Eigen::MatrixXd dense(sigma);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense,
                                                         Eigen::EigenvaluesOnly);
      const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
      if (eig.eigenvalues().minCoeff() < -tol * std::max(scale, 1e-300)) {
        throw Error(ErrorCode::kNotPSD,
                    "covariance has a negative eigenvalue");
      }
    }
    NoiseModel m;
    m.kind_ = Kind::kFull;
    m.size_ = sigma.rows();
    m.sigma_ = std::move(sigma);
    return m;
  }

  Kind kind() const { return kind_; }
  Index size() const { return size_; }
  double iid_variance() const { return sigma2_; }
  const Eigen::VectorXd& variances() const { return variances_; }
  const Eigen::SparseMatrix<double>& matrix() const { return sigma_; }

  double covariance(Index i, Index j) const {
    switch (kind_) {
      case Kind::kIid: return i == j ? sigma2_ : 0.0;
      case Kind::kDiagonal: return i == j ? variances_(i) : 0.0;
      case Kind::kFull: return sigma_.coeff(i, j);
    }
    return 0.0;
  }

  double variance(Index i) const { return covariance(i, i); }

  // Sigma[C, C] for an index set C.
  Eigen::MatrixXd block(std::span<const Index> indices) const {
    const Index m = static_cast<Index>(indices.size());
    for (Index i : indices) {
      if (i < 0 || i >= size_) {
        std::ostringstream msg;
        msg << "row " << i << " outside noise model of dimension " << size_;
        throw Error(ErrorCode::kNoiseDimensionMismatch, msg.str());
      }
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    if (kind_ != Kind::kFull) {
      for (Index a = 0; a < m; ++a) out(a, a) = variance(indices[a]);
      return out;
    }
    for (Index a = 0; a < m; ++a) {
      for (Index b = a; b < m; ++b) {
        const double v = sigma_.coeff(indices[a], indices[b]);
        out(a, b) = v;
        out(b, a) = v;
      }
    }
    return out;
  }

  // True when row i has a nonzero covariance with some other row.
  bool correlated(Index i) const {
    if (kind_ != Kind::kFull) return false;
    for (Eigen::SparseMatrix<double>::InnerIterator it(sigma_, i); it; ++it) {
      if (it.row() != i && it.value() != 0.0) return true;
    }
    return false;
  }

 private:
  NoiseModel() = default;

  Kind kind_ = Kind::kIid;
  Index size_ = 0;
  double sigma2_ = 1.0;
  Eigen::VectorXd variances_;
  Eigen::SparseMatrix<double> sigma_;
};

// b = A x + e with A stored as compressed sparse rows.
class SparseLinearSystem {
 public:
  SparseLinearSystem(SparseRows rows, std::optional<Eigen::VectorXd> observations,
                     NoiseModel noise)
      : rows_(std::move(rows)),
        observations_(std::move(observations)),
        noise_(std::move(noise)) {
    rows_.makeCompressed();
    if (observations_ && observations_->size() != rows_.rows()) {
      std::ostringstream msg;
      msg << "observation vector has length " << observations_->size()
          << " but the system has " << rows_.rows() << " rows";
      throw Error(ErrorCode::kDimensionMismatch, msg.str());
    }
    if (noise_.size() != rows_.rows()) {
      std::ostringstream msg;
      msg << "noise model has dimension " << noise_.size()
          << " but the system has " << rows_.rows() << " rows";
      throw Error(ErrorCode::kNoiseDimensionMismatch, msg.str());
    }
  }

  Index num_rows() const { return rows_.rows(); }
  Index num_cols() const { return rows_.cols(); }
  const SparseRows& matrix() const { return rows_; }
  const NoiseModel& noise() const { return noise_; }

  bool has_observations() const { return observations_.has_value(); }
  const std::optional<Eigen::VectorXd>& maybe_observations() const {
    return observations_;
  }
  const Eigen::VectorXd& observations() const {
    if (!observations_) {
      throw Error(ErrorCode::kObservationsMissing,
                  "system has no observation vector");
    }
    return *observations_;
  }

  SparseLinearSystem with_observations(Eigen::VectorXd b) const {
    return SparseLinearSystem(rows_, std::move(b), noise_);
  }
  SparseLinearSystem with_noise(NoiseModel noise) const {
    return SparseLinearSystem(rows_, observations_, std::move(noise));
  }

  void check_row(Index i) const {
    if (i < 0 || i >= num_rows()) {
      std::ostringstream msg;
      msg << "row index " << i << " outside [0, " << num_rows() << ")";
      throw Error(ErrorCode::kIndexOutOfRange, msg.str());
    }
  }

  template <typename Fn>
  void for_each_in_row(Index i, Fn&& fn) const {
    for (SparseRows::InnerIterator it(rows_, i); it; ++it) {
      fn(static_cast<Index>(it.col()), it.value());
    }
  }

  Index row_nonzeros(Index i) const {
    return rows_.outerIndexPtr()[i + 1] - rows_.outerIndexPtr()[i];
  }

 private:
  SparseRows rows_;
  std::optional<Eigen::VectorXd> observations_;
  NoiseModel noise_;
};

// The evaluation direction w of <w, x>.
class TargetVector {
 public:
  TargetVector(Index dimension, std::vector<std::pair<Index, double>> entries) {
    std::map<Index, double> merged;
    for (const auto& [i, v] : entries) {
      if (i < 0 || i >= dimension) {
        std::ostringstream msg;
        msg << "target coordinate " << i << " outside [0, " << dimension << ")";
        throw Error(ErrorCode::kIndexOutOfRange, msg.str());
      }
      merged[i] += v;
    }
    entries_.resize(dimension);
    for (const auto& [i, v] : merged) {
      if (v != 0.0) entries_.insert(i) = v;
    }
    if (entries_.nonZeros() == 0) {
      throw Error(ErrorCode::kInvalidArgument, "target vector must be nonzero");
    }
  }

  static TargetVector from_dense(const Eigen::VectorXd& w) {
    std::vector<std::pair<Index, double>> e;
    for (Index i = 0; i < w.size(); ++i) {
      if (w(i) != 0.0) e.emplace_back(i, w(i));
    }
    return TargetVector(w.size(), std::move(e));
  }
  // e_k - e_l
  static TargetVector difference(Index dimension, Index k, Index l) {
    return TargetVector(dimension, {{k, 1.0}, {l, -1.0}});
  }
  // e_k + e_l
  static TargetVector sum(Index dimension, Index k, Index l) {
    return TargetVector(dimension, {{k, 1.0}, {l, 1.0}});
  }

  Index dimension() const { return entries_.size(); }
  const Eigen::SparseVector<double>& entries() const { return entries_; }
  double norm() const { return entries_.norm(); }
  Eigen::VectorXd dense() const { return Eigen::VectorXd(entries_); }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (Eigen::SparseVector<double>::InnerIterator it(entries_); it; ++it) {
      fn(static_cast<Index>(it.index()), it.value());
    }
  }

 private:
  Eigen::SparseVector<double> entries_;
};

inline void check_target(const SparseLinearSystem& system,
                         const TargetVector& target) {
  if (target.dimension() != system.num_cols()) {
    std::ostringstream msg;
    msg << "target has dimension " << target.dimension()
        << " but the system has " << system.num_cols() << " columns";
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
}

enum class CircuitKind { kParticular, kGeneral };

inline std::string_view kind_name(CircuitKind kind) {
  return kind == CircuitKind::kParticular ? "particular" : "general";
}

// Sparse coefficient vector over row indices, sorted by index.
struct RowCoefficients {
  std::vector<Index> indices;
  std::vector<double> values;

  Index size() const { return static_cast<Index>(indices.size()); }

  double at(Index row) const {
    auto it = std::lower_bound(indices.begin(), indices.end(), row);
    if (it == indices.end() || *it != row) return 0.0;
    return values[static_cast<std::size_t>(it - indices.begin())];
  }
};

// A row subset with its circuit vector. Construction only enforces the
// bookkeeping invariants (sorted, distinct, nonzero coefficients); use
// validate_circuit for the algebraic ones.
class Circuit {
 public:
  Circuit(CircuitKind kind, std::vector<Index> indices,
          std::vector<double> coefficients)
      : kind_(kind) {
    if (indices.empty() || indices.size() != coefficients.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "circuit needs one nonzero coefficient per index");
    }
    std::vector<std::size_t> order(indices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return indices[a] < indices[b];
    });
    vector_.indices.reserve(order.size());
    vector_.values.reserve(order.size());
    for (std::size_t pos : order) {
      if (!vector_.indices.empty() && vector_.indices.back() == indices[pos]) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate circuit index");
      }
      if (indices[pos] < 0) {
        throw Error(ErrorCode::kIndexOutOfRange, "negative circuit index");
      }
      if (coefficients[pos] == 0.0 || !std::isfinite(coefficients[pos])) {
        throw Error(ErrorCode::kInvalidArgument,
                    "circuit coefficients must be finite and nonzero");
      }
      vector_.indices.push_back(indices[pos]);
      vector_.values.push_back(coefficients[pos]);
    }
  }

  CircuitKind kind() const { return kind_; }
  bool is_particular() const { return kind_ == CircuitKind::kParticular; }
  const std::vector<Index>& indices() const { return vector_.indices; }
  const std::vector<double>& coefficients() const { return vector_.values; }
  const RowCoefficients& vector() const { return vector_; }
  Index size() const { return vector_.size(); }
  double coefficient(Index row) const { return vector_.at(row); }

  // Circuits over the same system are identified by kind and support; the
  // circuit vector is then determined up to the fixed normalization.
  friend bool operator==(const Circuit& a, const Circuit& b) {
    return a.kind_ == b.kind_ && a.vector_.indices == b.vector_.indices;
  }
  friend bool operator<(const Circuit& a, const Circuit& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
    return a.vector_.indices < b.vector_.indices;
  }

 private:
  CircuitKind kind_;
  RowCoefficients vector_;
};

namespace detail {

inline RowCoefficients add_scaled(const RowCoefficients& acc, double scale,
                                  const RowCoefficients& v) {
  RowCoefficients out;
  out.indices.reserve(acc.indices.size() + v.indices.size());
  out.values.reserve(acc.indices.size() + v.indices.size());
  std::size_t i = 0, j = 0;
  auto push = [&](Index idx, double val) {
    if (val != 0.0) {
      out.indices.push_back(idx);
      out.values.push_back(val);
    }
  };
  while (i < acc.indices.size() || j < v.indices.size()) {
    if (j == v.indices.size() ||
        (i < acc.indices.size() && acc.indices[i] < v.indices[j])) {
      push(acc.indices[i], acc.values[i]);
      ++i;
    } else if (i == acc.indices.size() || v.indices[j] < acc.indices[i]) {
      push(v.indices[j], scale * v.values[j]);
      ++j;
    } else {
      push(acc.indices[i], acc.values[i] + scale * v.values[j]);
      ++i;
      ++j;
    }
  }
  return out;
}

// Dense copy of the rows `rows` of A (and w as the last row, when given),
// restricted to the union of their nonzero columns.
struct StackedRows {
  Eigen::MatrixXd matrix;
  std::vector<Index> columns;
};

inline StackedRows stack_rows(const SparseLinearSystem& system,
                              std::span<const Index> rows,
                              const TargetVector* target) {
  std::vector<Index> cols;
  for (Index r : rows) {
    system.check_row(r);
    system.for_each_in_row(r, [&](Index c, double v) {
      if (v != 0.0) cols.push_back(c);
    });
  }
  if (target) {
    target->for_each([&](Index c, double) { cols.push_back(c); });
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  auto column_of = [&](Index c) {
    return static_cast<Index>(std::lower_bound(cols.begin(), cols.end(), c) -
                              cols.begin());
  };
  const Index height = static_cast<Index>(rows.size()) + (target ? 1 : 0);
  StackedRows out;
  out.matrix = Eigen::MatrixXd::Zero(height, static_cast<Index>(cols.size()));
  for (Index a = 0; a < static_cast<Index>(rows.size()); ++a) {
    system.for_each_in_row(rows[a], [&](Index c, double v) {
      if (v != 0.0) out.matrix(a, column_of(c)) += v;
    });
  }
  if (target) {
    target->for_each(
        [&](Index c, double v) { out.matrix(height - 1, column_of(c)) = v; });
  }
  out.columns = std::move(cols);
  return out;
}

// lambda A as a sparse column map, plus the sum of |lambda_i| * ||a_i||.
inline std::pair<std::map<Index, double>, double> combine_rows(
    const SparseLinearSystem& system, const RowCoefficients& lambda) {
  std::map<Index, double> acc;
  double scale = 0.0;
  for (std::size_t t = 0; t < lambda.indices.size(); ++t) {
    double row_norm2 = 0.0;
    system.for_each_in_row(lambda.indices[t], [&](Index c, double v) {
      acc[c] += lambda.values[t] * v;
      row_norm2 += v * v;
    });
    scale += std::abs(lambda.values[t]) * std::sqrt(row_norm2);
  }
  return {std::move(acc), scale};
}

// ||lambda A - w|| (w omitted when null) and the natural scale to compare it
// against.
inline std::pair<double, double> residual_norm(const SparseLinearSystem& system,
                                               const RowCoefficients& lambda,
                                               const TargetVector* target) {
  auto [acc, scale] = combine_rows(system, lambda);
  if (target) {
    target->for_each([&](Index c, double v) { acc[c] -= v; });
    scale = std::max(scale, target->norm());
  }
  double r2 = 0.0;
  for (const auto& [c, v] : acc) r2 += v * v;
  return {std::sqrt(r2), scale};
}

}  // namespace detail

// A formal linear combination sum_i alpha_i C_i with its resolved vector
// sum_i alpha_i lambda_{C_i}.
class Divisor {
 public:
  struct Term {
    double coefficient;
    Circuit circuit;
  };

  explicit Divisor(std::vector<Term> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "divisor has no terms");
    }
    for (const Term& t : terms_) {
      resolved_ = detail::add_scaled(resolved_, t.coefficient, t.circuit.vector());
    }
  }

  static Divisor of(const Circuit& c) { return Divisor({{1.0, c}}); }

  const std::vector<Term>& terms() const { return terms_; }
  const RowCoefficients& resolved() const { return resolved_; }

  // Sum of the coefficients on particular terms; 1 for particular divisors.
  double particular_weight() const {
    double s = 0.0;
    for (const Term& t : terms_) {
      if (t.circuit.is_particular()) s += t.coefficient;
    }
    return s;
  }

  // Union of member circuit index sets (not just the resolved support).
  std::vector<Index> member_indices() const {
    std::vector<Index> out;
    for (const Term& t : terms_) {
      out.insert(out.end(), t.circuit.indices().begin(), t.circuit.indices().end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool is_particular(const SparseLinearSystem& system, const TargetVector& target,
                     double tol = kDefaultTolerance) const {
    if (std::abs(particular_weight() - 1.0) > tol) return false;
    auto [res, scale] = detail::residual_norm(system, resolved_, &target);
    return res <= tol * std::max(scale, target.norm());
  }

  bool equivalent(const Divisor& other, double tol = kDefaultTolerance) const {
    const RowCoefficients diff = detail::add_scaled(resolved_, -1.0, other.resolved_);
    double scale = 0.0;
    for (double v : resolved_.values) scale = std::max(scale, std::abs(v));
    for (double v : other.resolved_.values) scale = std::max(scale, std::abs(v));
    for (double v : diff.values) {
      if (std::abs(v) > tol * std::max(scale, 1.0)) return false;
    }
    return true;
  }

  Divisor plus(const Divisor& other, double scale = 1.0) const {
    std::vector<Term> t = terms_;
    for (const Term& o : other.terms_) t.push_back({scale * o.coefficient, o.circuit});
    return Divisor(std::move(t));
  }

 private:
  std::vector<Term> terms_;
  RowCoefficients resolved_;
};

// The affine family C_p + span(G_1..G_k), generated by C_p and C_p + G_j.
class ParticularSystem {
 public:
  ParticularSystem(Circuit base, std::vector<Circuit> generals)
      : base_(std::move(base)), generals_(std::move(generals)) {
    if (!base_.is_particular()) {
      throw Error(ErrorCode::kKindMismatch, "base circuit must be particular");
    }
    generators_.push_back(Divisor::of(base_));
    for (const Circuit& g : generals_) {
      if (g.is_particular()) {
        throw Error(ErrorCode::kKindMismatch,
                    "generals of a particular system must be general circuits");
      }
      generators_.push_back(Divisor({{1.0, base_}, {1.0, g}}));
    }
    support_ = base_.indices();
    for (const Circuit& g : generals_) {
      support_.insert(support_.end(), g.indices().begin(), g.indices().end());
    }
    std::sort(support_.begin(), support_.end());
    support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  }

  const Circuit& base() const { return base_; }
  const std::vector<Circuit>& generals() const { return generals_; }
  const std::vector<Divisor>& generators() const { return generators_; }
  const std::vector<Index>& support() const { return support_; }

  bool check(const SparseLinearSystem& system, const TargetVector& target,
             double tol = kDefaultTolerance) const {
    return std::all_of(generators_.begin(), generators_.end(), [&](const Divisor& d) {
      return d.is_particular(system, target, tol);
    });
  }

 private:
  Circuit base_;
  std::vector<Circuit> generals_;
  std::vector<Divisor> generators_;
  std::vector<Index> support_;
};

struct EstimateReport {
  double value = 0.0;
  double variance = 0.0;
  std::vector<double> alpha;
  std::vector<Index> support;
  Index generator_count = 0;
};

struct CircuitCheck {
  bool valid = false;
  std::string diagnostic;
  explicit operator bool() const { return valid; }
};

// Checks the defining equation of the circuit's kind and certifies
// minimality by the left-kernel dimension of the stacked rows.
inline CircuitCheck validate_circuit(const SparseLinearSystem& system,
                                     const TargetVector* target,
                                     const Circuit& circuit,
                                     double tol = kDefaultTolerance) {
  for (Index i : circuit.indices()) system.check_row(i);
  const bool particular = circuit.is_particular();
  if (particular && target == nullptr) {
    return {false, "particular circuit needs a target vector"};
  }
  if (target) check_target(system, *target);

  auto [res, scale] = detail::residual_norm(
      system, circuit.vector(), particular ? target : nullptr);
  const double bound = particular ? tol * target->norm() : tol * scale;
  if (!(res <= bound)) {
    std::ostringstream msg;
    msg << "circuit vector residual " << res << " exceeds " << bound
        << (particular ? " (lambda A != w)" : " (lambda A != 0)");
    return {false, msg.str()};
  }

  const auto stacked = detail::stack_rows(system, circuit.indices(),
                                          particular ? target : nullptr);
  const Eigen::MatrixXd kernel = detail::left_kernel(stacked.matrix, tol);
  if (kernel.cols() != 1) {
    std::ostringstream msg;
    msg << "left kernel of the stacked rows has dimension " << kernel.cols()
        << ", expected 1 (set is not minimal)";
    return {false, msg.str()};
  }
  if (particular) {
    const double w_coeff = kernel(kernel.rows() - 1, 0);
    if (std::abs(w_coeff) <= tol * kernel.col(0).cwiseAbs().maxCoeff()) {
      return {false, "rows are dependent without involving the target"};
    }
  }
  return {true, "ok"};
}

inline CircuitCheck validate_circuit(const SparseLinearSystem& system,
                                     const TargetVector& target,
                                     const Circuit& circuit,
                                     double tol = kDefaultTolerance) {
  return validate_circuit(system, &target, circuit, tol);
}

}  // namespace mreg

#endif  // MREG_CORE_MODEL_HPP
