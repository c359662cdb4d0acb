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
 * Circuit-kernel estimation.
 *
 * Given generators D_1..D_m of a particular system, the estimator solves
 *
 *     min  alpha^T K alpha   subject to  1^T alpha = 1,
 *
 * where K[i, j] = lambda_i^T Sigma[C, C] lambda_j is the circuit kernel on
 * the union support C. The estimate alpha^T Lambda b[C] is unbiased for
 * <w, x> and alpha^T K alpha is its variance. Nothing here touches more than
 * the rows and covariance entries indexed by C.
 */

#ifndef MREG_KERNEL_ESTIMATOR_HPP
#define MREG_KERNEL_ESTIMATOR_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "mreg/core_model.hpp"
#include "mreg/error.hpp"
#include "mreg/linalg.hpp"

namespace mreg {

namespace detail {

// Column positions of `m` preserving its left kernel: an independent column
// basis, padded with further columns up to rows(m) + 1 when fewer were needed.
inline std::vector<Index> restrict_stacked(const Eigen::MatrixXd& m, double tol) {
  std::vector<Index> chosen = independent_columns(m, tol);
  auto all = [&] {
    std::vector<Index> every(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) every[static_cast<std::size_t>(j)] = j;
    return every;
  };
  if (static_cast<Index>(chosen.size()) < m.cols()) {
    Eigen::MatrixXd sub(m.rows(), static_cast<Index>(chosen.size()));
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      sub.col(static_cast<Index>(k)) = m.col(chosen[k]);
    }
    if (numerical_rank(sub, tol) != numerical_rank(m, tol)) return all();
  }
  const Index target = std::min(m.rows() + 1, m.cols());
  if (static_cast<Index>(chosen.size()) < target) {
    std::vector<char> used(static_cast<std::size_t>(m.cols()), 0);
    for (Index j : chosen) used[static_cast<std::size_t>(j)] = 1;
    for (Index j = 0; j < m.cols() && static_cast<Index>(chosen.size()) < target; ++j) {
      if (!used[static_cast<std::size_t>(j)]) chosen.push_back(j);
    }
    std::sort(chosen.begin(), chosen.end());
  }
  return chosen;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m,
                                      const std::vector<Index>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.col(static_cast<Index>(k)) = m.col(cols[k]);
  }
  return out;
}

inline std::vector<Index> sorted_unique(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace detail

// Columns of [A[C, :]; w] (w omitted when null) that suffice to determine its
// left kernel. At most one more column than stacked rows is returned.
inline std::vector<Index> restrict_columns(const SparseLinearSystem& system,
                                           std::span<const Index> union_support,
                                           const TargetVector* target = nullptr,
                                           double tol = kDefaultTolerance) {
  if (union_support.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty row set");
  }
  const auto stacked = detail::stack_rows(system, union_support, target);
  std::vector<Index> out;
  for (Index pos : detail::restrict_stacked(stacked.matrix, tol)) {
    out.push_back(stacked.columns[static_cast<std::size_t>(pos)]);
  }
  return out;
}

// Computes the circuit vector of `indices` as the normalized left-kernel
// vector of [A[C, :]; w] (particular, w-coefficient -1) or of A[C, :]
// (general, lowest-indexed coefficient +1). Throws NotACircuit unless the
// kernel is one-dimensional and the resulting vector has full support on C.
inline Circuit circuit_vector(const SparseLinearSystem& system,
                              const TargetVector* target,
                              std::vector<Index> indices, CircuitKind kind,
                              double tol = kDefaultTolerance) {
  if (indices.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "circuit index set is empty");
  }
  indices = detail::sorted_unique(std::move(indices));
  for (Index i : indices) system.check_row(i);
  const bool particular = kind == CircuitKind::kParticular;
  if (particular && target == nullptr) {
    throw Error(ErrorCode::kInvalidArgument,
                "particular circuit vector needs a target");
  }
  if (target) check_target(system, *target);
  for (Index i : indices) {
    bool any = false;
    system.for_each_in_row(i, [&](Index, double v) { any = any || v != 0.0; });
    if (!any) {
      std::ostringstream msg;
      msg << "row " << i << " is identically zero";
      throw Error(ErrorCode::kDegenerateInput, msg.str());
    }
  }

  const auto stacked =
      detail::stack_rows(system, indices, particular ? target : nullptr);
  const Eigen::MatrixXd restricted = detail::select_columns(
      stacked.matrix, detail::restrict_stacked(stacked.matrix, tol));
  const Eigen::MatrixXd kernel = detail::left_kernel(restricted, tol);

  if (kernel.cols() == 0) {
    throw Error(ErrorCode::kNotACircuit,
                particular ? "independent: target is not in the span of the rows"
                           : "independent: rows are linearly independent");
  }
  if (kernel.cols() >= 2) {
    std::ostringstream msg;
    msg << "dependent but not minimal: left kernel has dimension " << kernel.cols();
    throw Error(ErrorCode::kNotACircuit, msg.str());
  }

  const Index c = static_cast<Index>(indices.size());
  Eigen::VectorXd v = kernel.col(0);
  Eigen::VectorXd lambda;
  if (particular) {
    const double w_coeff = v(c);
    if (std::abs(w_coeff) <= tol * v.cwiseAbs().maxCoeff()) {
      throw Error(ErrorCode::kNotACircuit,
                  "dependent rows without the target: target not in span");
    }
    lambda = v.head(c) / (-w_coeff);
  } else {
    lambda = v;
  }
  const double scale = lambda.cwiseAbs().maxCoeff();
  for (Index a = 0; a < c; ++a) {
    if (std::abs(lambda(a)) <= tol * scale) {
      std::ostringstream msg;
      msg << "not minimal: coefficient of row " << indices[static_cast<std::size_t>(a)]
          << " vanishes";
      throw Error(ErrorCode::kNotACircuit, msg.str());
    }
  }
  if (!particular) lambda /= lambda(0);
  return Circuit(kind, std::move(indices),
                 std::vector<double>(lambda.data(), lambda.data() + c));
}

inline Circuit circuit_vector(const SparseLinearSystem& system,
                              const TargetVector& target, std::vector<Index> indices,
                              CircuitKind kind, double tol = kDefaultTolerance) {
  return circuit_vector(system, &target, std::move(indices), kind, tol);
}

inline ParticularSystem build_particular_system(Circuit base,
                                                std::vector<Circuit> generals) {
  return ParticularSystem(std::move(base), std::move(generals));
}

struct KernelAssembly {
  std::vector<Index> support;  // union C of member index sets
  Eigen::MatrixXd lambda;      // m x |C|, rows are resolved circuit vectors
  Eigen::MatrixXd kernel;      // m x m
  Eigen::VectorXd alpha;       // empty until solved
  double variance = 0.0;       // alpha^T K alpha
  Eigen::VectorXd weights;     // Lambda^T alpha, combined weights on C

  Index generator_count() const { return lambda.rows(); }
  bool solved() const { return alpha.size() == lambda.rows() && alpha.size() > 0; }
};

// K = Lambda Sigma[C, C] Lambda^T over the union support C.
inline KernelAssembly kernel_matrix(std::span<const Divisor> generators,
                                    const NoiseModel& noise) {
  if (generators.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no generators");
  }
  KernelAssembly out;
  std::vector<Index> support;
  for (const Divisor& d : generators) {
    const auto idx = d.member_indices();
    support.insert(support.end(), idx.begin(), idx.end());
  }
  out.support = detail::sorted_unique(std::move(support));
  const Index m = static_cast<Index>(generators.size());
  const Index c = static_cast<Index>(out.support.size());
  const Eigen::MatrixXd sigma = noise.block(out.support);

  out.lambda = Eigen::MatrixXd::Zero(m, c);
  for (Index i = 0; i < m; ++i) {
    const RowCoefficients& r = generators[static_cast<std::size_t>(i)].resolved();
    for (std::size_t t = 0; t < r.indices.size(); ++t) {
      const auto pos = std::lower_bound(out.support.begin(), out.support.end(),
                                        r.indices[t]) - out.support.begin();
      out.lambda(i, pos) = r.values[t];
    }
  }
  Eigen::MatrixXd k = out.lambda * sigma * out.lambda.transpose();
  out.kernel = 0.5 * (k + k.transpose());
  return out;
}

inline KernelAssembly kernel_matrix(const ParticularSystem& system,
                                    const NoiseModel& noise) {
  return kernel_matrix(std::span<const Divisor>(system.generators()), noise);
}

struct AlphaSolution {
  Eigen::VectorXd alpha;
  double value = 0.0;
};

namespace detail {

// Matrix F with F F^T = Sigma[C, C]. Uses Cholesky, or a clipped eigen
// square root for singular blocks.
inline Eigen::MatrixXd noise_factor(const NoiseModel& noise, const std::vector<Index>& support,
                                    double tol = kDefaultTolerance) {
  const Eigen::MatrixXd block = noise.block(support);
  if (noise.kind() != NoiseModel::Kind::kFull) {
    return block.diagonal().cwiseSqrt().asDiagonal();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (eig.eigenvalues().minCoeff() < -tol * norm) {
    throw Error(ErrorCode::kNotPSD, "covariance block on the support is not PSD");
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

// Minimizes |r0 + D beta|^2 where column j of D is the whitened difference
// between generator j + 1 and generator 0, and returns
// alpha = (1 - sum(beta), beta). Among minimizers the one of least norm
// in alpha is chosen. Working with differences avoids the cancellation that
// a shared dominant component causes in the bordered system on K.
inline Eigen::VectorXd alpha_from_differences(const Eigen::MatrixXd& d, const Eigen::VectorXd& r0,
                                              double tol) {
  const Index k = d.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd null_space(k, 0);
  if (k > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Index rank = 0;
    if (s.size() > 0 && s(0) > 0.0) {
      while (rank < s.size() && s(rank) > tol * s(0)) ++rank;
    }
    const Eigen::VectorXd coeffs =
        (svd.matrixU().leftCols(rank).transpose() * r0).cwiseQuotient(s.head(rank));
    beta = -svd.matrixV().leftCols(rank) * coeffs;
    null_space = svd.matrixV().rightCols(k - rank);
  }
  Eigen::VectorXd alpha(k + 1);
  alpha(0) = 1.0 - beta.sum();
  alpha.tail(k) = beta;
  if (null_space.cols() > 0) {
    Eigen::MatrixXd m(k + 1, null_space.cols());
    m.row(0) = -null_space.colwise().sum();
    m.bottomRows(k) = null_space;
    alpha -= m * (m.transpose() * m).ldlt().solve(m.transpose() * alpha);
  }
  return alpha;
}

}  // namespace detail

// Minimizes alpha^T K alpha over 1^T alpha = 1. Singular K is allowed; the
// minimizer of least Euclidean norm is returned.
inline AlphaSolution solve_alpha(const Eigen::MatrixXd& kernel,
                                 double tol = kDefaultTolerance) {
  const Index m = kernel.rows();
  if (m == 0 || kernel.cols() != m) {
    throw Error(ErrorCode::kInvalidArgument, "kernel matrix must be square and nonempty");
  }
  if (!kernel.allFinite()) {
    throw Error(ErrorCode::kNotPSD, "kernel matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel);
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double asym = (kernel - kernel.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * std::max(norm, 1e-300)) {
    throw Error(ErrorCode::kNotPSD, "kernel matrix is not symmetric");
  }
  if (eig.eigenvalues().minCoeff() < -tol * norm) {
    std::ostringstream msg;
    msg << "kernel matrix has eigenvalue " << eig.eigenvalues().minCoeff();
    throw Error(ErrorCode::kNotPSD, msg.str());
  }
  // K = R^T R with R = sqrt(D) Q^T.
  const Eigen::MatrixXd r = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                            eig.eigenvectors().transpose();
  const Eigen::MatrixXd d = r.rightCols(m - 1).colwise() - r.col(0);
  AlphaSolution out;
  out.alpha = detail::alpha_from_differences(d, r.col(0), tol);
  out.value = std::max(0.0, out.alpha.dot(kernel * out.alpha));
  return out;
}

inline KernelAssembly assemble(std::span<const Divisor> generators,
                               const NoiseModel& noise, double tol = kDefaultTolerance) {
  KernelAssembly a = kernel_matrix(generators, noise);
  const Index m = a.generator_count();
  const Eigen::MatrixXd f = detail::noise_factor(noise, a.support, tol);
  const Eigen::MatrixXd diffs =
      (a.lambda.bottomRows(m - 1).rowwise() - a.lambda.row(0)).transpose();
  const Eigen::VectorXd r0 = f.transpose() * a.lambda.row(0).transpose();
  a.alpha = detail::alpha_from_differences(f.transpose() * diffs, r0, tol);
  a.weights = a.lambda.transpose() * a.alpha;
  a.variance = (f.transpose() * a.weights).squaredNorm();
  return a;
}

inline KernelAssembly assemble(const ParticularSystem& system, const NoiseModel& noise,
                               double tol = kDefaultTolerance) {
  return assemble(std::span<const Divisor>(system.generators()), noise, tol);
}

inline double predict_variance(const KernelAssembly& assembly) {
  if (!assembly.solved()) {
    throw Error(ErrorCode::kInvalidArgument, "kernel assembly has no alpha");
  }
  return assembly.variance;
}

// alpha^T Lambda b[C], given b[C] in support order.
inline double estimate_on_support(const KernelAssembly& assembly,
                                  std::span<const double> b_support) {
  if (static_cast<Index>(b_support.size()) != assembly.weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "observation slice has wrong length");
  }
  double v = 0.0;
  for (std::size_t i = 0; i < b_support.size(); ++i) {
    v += assembly.weights(static_cast<Index>(i)) * b_support[i];
  }
  return v;
}

inline EstimateReport estimate(const KernelAssembly& assembly,
                               const std::optional<Eigen::VectorXd>& observations) {
  if (!observations) {
    throw Error(ErrorCode::kObservationsMissing, "estimate needs observations b");
  }
  if (!assembly.solved()) {
    throw Error(ErrorCode::kInvalidArgument, "kernel assembly has no alpha");
  }
  const Eigen::VectorXd& b = *observations;
  std::vector<double> slice;
  slice.reserve(assembly.support.size());
  for (Index i : assembly.support) {
    if (i >= b.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "observation vector shorter than circuit support");
    }
    slice.push_back(b(i));
  }
  EstimateReport r;
  r.value = estimate_on_support(assembly, slice);
  r.variance = assembly.variance;
  r.alpha.assign(assembly.alpha.data(), assembly.alpha.data() + assembly.alpha.size());
  r.support = assembly.support;
  r.generator_count = assembly.generator_count();
  return r;
}

inline EstimateReport estimate(const KernelAssembly& assembly,
                               const SparseLinearSystem& system) {
  return estimate(assembly, system.maybe_observations());
}

// Memoizes k(C_i, C_j) by circuit identity so that the kernel of
// C_p + G_1 .. C_p + G_k is rebuilt from pairwise circuit terms when only the
// base circuit changes (new target w, same A and Sigma).
class CircuitKernelCache {
 public:
  explicit CircuitKernelCache(const NoiseModel& noise) : noise_(&noise) {}

  double operator()(const Circuit& a, const Circuit& b) {
    Index ia = id_of(a), ib = id_of(b);
    if (ia > ib) std::swap(ia, ib);
    auto it = values_.find({ia, ib});
    if (it != values_.end()) {
      ++hits_;
      return it->second;
    }
    const double v = compute(a, b);
    values_.emplace(std::make_pair(ia, ib), v);
    return v;
  }

  // Kernel of the generators of `system` through the bilinear expansion
  // k(C_p + G_i, C_p + G_j) = k(C_p, C_p) + k(C_p, G_j) + k(G_i, C_p) + k(G_i, G_j).
  KernelAssembly assemble(const ParticularSystem& system,
                          double tol = kDefaultTolerance) {
    KernelAssembly a;
    const auto& gens = system.generators();
    const Index m = static_cast<Index>(gens.size());
    a.support = system.support();
    a.lambda = Eigen::MatrixXd::Zero(m, static_cast<Index>(a.support.size()));
    for (Index i = 0; i < m; ++i) {
      const RowCoefficients& r = gens[static_cast<std::size_t>(i)].resolved();
      for (std::size_t t = 0; t < r.indices.size(); ++t) {
        const auto pos = std::lower_bound(a.support.begin(), a.support.end(),
                                          r.indices[t]) - a.support.begin();
        a.lambda(i, pos) = r.values[t];
      }
    }
    const Circuit& base = system.base();
    const auto& generals = system.generals();
    const double kpp = (*this)(base, base);
    std::vector<double> kpg(generals.size());
    for (std::size_t j = 0; j < generals.size(); ++j) kpg[j] = (*this)(base, generals[j]);
    a.kernel.resize(m, m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = i; j < m; ++j) {
        double v = kpp;
        if (i > 0) v += kpg[static_cast<std::size_t>(i - 1)];
        if (j > 0) v += kpg[static_cast<std::size_t>(j - 1)];
        if (i > 0 && j > 0) {
          v += (*this)(generals[static_cast<std::size_t>(i - 1)],
                       generals[static_cast<std::size_t>(j - 1)]);
        }
        a.kernel(i, j) = v;
        a.kernel(j, i) = v;
      }
    }
    AlphaSolution s = solve_alpha(a.kernel, tol);
    a.alpha = std::move(s.alpha);
    a.variance = s.value;
    a.weights = a.lambda.transpose() * a.alpha;
    return a;
  }

  std::size_t size() const { return values_.size(); }
  std::size_t hits() const { return hits_; }

 private:
  Index id_of(const Circuit& c) {
    auto [it, inserted] = ids_.emplace(c, static_cast<Index>(ids_.size()));
    return it->second;
  }

  double compute(const Circuit& a, const Circuit& b) const {
    std::vector<Index> joint = a.indices();
    joint.insert(joint.end(), b.indices().begin(), b.indices().end());
    joint = detail::sorted_unique(std::move(joint));
    const Eigen::MatrixXd sigma = noise_->block(joint);
    Eigen::VectorXd va = Eigen::VectorXd::Zero(static_cast<Index>(joint.size()));
    Eigen::VectorXd vb = va;
    for (std::size_t t = 0; t < joint.size(); ++t) {
      va(static_cast<Index>(t)) = a.coefficient(joint[t]);
      vb(static_cast<Index>(t)) = b.coefficient(joint[t]);
    }
    return va.dot(sigma * vb);
  }

  const NoiseModel* noise_;
  std::map<Circuit, Index> ids_;
  std::map<std::pair<Index, Index>, double> values_;
  std::size_t hits_ = 0;
};

struct PooledSystem {
  SparseLinearSystem system;
  // groups[r] lists the original rows merged into reduced row r.
  std::vector<std::vector<Index>> groups;
};

// Merges rows that coincide after scaling their lowest-column entry to +1.
// Observations are combined by inverse-variance weighting and the pooled
// variance is (sum_k 1/sigma_k^2)^-1.
inline PooledSystem pool_duplicates(const SparseLinearSystem& system) {
  using Key = std::vector<std::pair<Index, double>>;
  const Index n_rows = system.num_rows();
  const NoiseModel& noise = system.noise();

  std::vector<Key> normalized(static_cast<std::size_t>(n_rows));
  std::vector<double> scale(static_cast<std::size_t>(n_rows), 1.0);
  std::map<Key, Index> first_seen;
  std::vector<std::vector<Index>> groups;
  std::vector<Index> group_of(static_cast<std::size_t>(n_rows));
  for (Index i = 0; i < n_rows; ++i) {
    Key key;
    system.for_each_in_row(i, [&](Index c, double v) {
      if (v != 0.0) key.emplace_back(c, v);
    });
    const double lead = key.empty() ? 1.0 : key.front().second;
    for (auto& e : key) e.second /= lead;
    scale[static_cast<std::size_t>(i)] = lead;
    auto [it, inserted] = first_seen.emplace(key, static_cast<Index>(groups.size()));
    if (inserted) groups.emplace_back();
    groups[static_cast<std::size_t>(it->second)].push_back(i);
    group_of[static_cast<std::size_t>(i)] = it->second;
    normalized[static_cast<std::size_t>(i)] = std::move(key);
  }
  if (static_cast<Index>(groups.size()) == n_rows) {
    return PooledSystem{system, std::move(groups)};
  }
  if (noise.kind() == NoiseModel::Kind::kFull) {
    for (const auto& g : groups) {
      if (g.size() < 2) continue;
      for (Index i : g) {
        if (noise.correlated(i)) {
          std::ostringstream msg;
          msg << "row " << i << " is duplicated and correlated with other rows";
          throw Error(ErrorCode::kUnsupportedNoiseModel, msg.str());
        }
      }
    }
  }

  const Index reduced = static_cast<Index>(groups.size());
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd variances(reduced);
  std::optional<Eigen::VectorXd> b;
  if (system.has_observations()) b = Eigen::VectorXd(reduced);
  for (Index r = 0; r < reduced; ++r) {
    const auto& g = groups[static_cast<std::size_t>(r)];
    if (g.size() == 1) {
      const Index i = g.front();
      system.for_each_in_row(i, [&](Index c, double v) {
        triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
      });
      variances(r) = noise.variance(i);
      if (b) (*b)(r) = system.observations()(i);
      continue;
    }
    for (const auto& [c, v] : normalized[static_cast<std::size_t>(g.front())]) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    }
    double precision = 0.0, weighted = 0.0;
    for (Index i : g) {
      if (noise.variance(i) == 0.0) {
        std::ostringstream msg;
        msg << "row " << i << " is duplicated and has zero variance";
        throw Error(ErrorCode::kUnsupportedNoiseModel, msg.str());
      }
    }
    for (Index i : g) {
      const double s = scale[static_cast<std::size_t>(i)];
      const double var = noise.variance(i) / (s * s);
      precision += 1.0 / var;
      if (b) weighted += (system.observations()(i) / s) / var;
    }
    variances(r) = 1.0 / precision;
    if (b) (*b)(r) = weighted / precision;
  }
  SparseRows rows(reduced, system.num_cols());
  rows.setFromTriplets(triplets.begin(), triplets.end());

  if (noise.kind() != NoiseModel::Kind::kFull) {
    return PooledSystem{SparseLinearSystem(std::move(rows), std::move(b),
                                           NoiseModel::diagonal(std::move(variances))),
                        std::move(groups)};
  }
  std::vector<Eigen::Triplet<double>> cov;
  for (Index r = 0; r < reduced; ++r) {
    const auto& g = groups[static_cast<std::size_t>(r)];
    if (g.size() > 1) {
      cov.emplace_back(static_cast<int>(r), static_cast<int>(r), variances(r));
      continue;
    }
    for (Eigen::SparseMatrix<double>::InnerIterator it(noise.matrix(), g.front()); it;
         ++it) {
      const Index other = group_of[static_cast<std::size_t>(it.row())];
      cov.emplace_back(static_cast<int>(other), static_cast<int>(r), it.value());
    }
  }
  Eigen::SparseMatrix<double> sigma(reduced, reduced);
  sigma.setFromTriplets(cov.begin(), cov.end());
  return PooledSystem{SparseLinearSystem(std::move(rows), std::move(b),
                                         NoiseModel::full(std::move(sigma))),
                      std::move(groups)};
}

}  // namespace mreg

#endif  // MREG_KERNEL_ESTIMATOR_HPP
