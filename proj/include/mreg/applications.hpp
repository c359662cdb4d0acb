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

// Ready-made reductions (rank-1 completion through logarithms), the dense
// GLS baseline and Monte Carlo validation of the estimator.

#ifndef MREG_APPLICATIONS_HPP
#define MREG_APPLICATIONS_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include "mreg/circuit_discovery.hpp"
#include "mreg/core_model.hpp"
#include "mreg/error.hpp"
#include "mreg/kernel_estimator.hpp"

namespace mreg {

struct MatrixEntry {
  Index row;
  Index col;
  double value;
};

// Partially observed m x n matrix assumed to be rank one with positive
// entries, and the cell to impute or denoise.
struct PartialMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<MatrixEntry> observed;
  Index target_row = 0;
  Index target_col = 0;

  void check() const {
    if (rows <= 0 || cols <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "matrix shape must be positive");
    }
    auto in_range = [&](Index i, Index j) { return i >= 0 && i < rows && j >= 0 && j < cols; };
    if (!in_range(target_row, target_col)) {
      throw Error(ErrorCode::kIndexOutOfRange, "target cell outside the matrix");
    }
    std::set<std::pair<Index, Index>> seen;
    for (const MatrixEntry& e : observed) {
      if (!in_range(e.row, e.col)) {
        std::ostringstream msg;
        msg << "observed cell (" << e.row << ", " << e.col << ") outside the matrix";
        throw Error(ErrorCode::kIndexOutOfRange, msg.str());
      }
      if (!(e.value > 0.0) || !std::isfinite(e.value)) {
        std::ostringstream msg;
        msg << "observed cell (" << e.row << ", " << e.col << ") has non-positive value "
            << e.value;
        throw Error(ErrorCode::kNonPositiveEntry, msg.str());
      }
      if (!seen.emplace(e.row, e.col).second) {
        std::ostringstream msg;
        msg << "cell (" << e.row << ", " << e.col << ") observed twice";
        throw Error(ErrorCode::kInvalidArgument, msg.str());
      }
    }
  }
};

struct LogSystem {
  SparseLinearSystem system;
  TargetVector target;
};

// x = (log u, log v); observed cell (i, j) becomes the row e_i + e_{m+j}
// with observation log A_ij. The noise model applies to the log entries.
inline LogSystem rank1_log_system(const PartialMatrix& pm, const NoiseModel& noise_on_entries) {
  pm.check();
  const Index n_obs = static_cast<Index>(pm.observed.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * n_obs));
  Eigen::VectorXd b(n_obs);
  for (Index r = 0; r < n_obs; ++r) {
    const MatrixEntry& e = pm.observed[static_cast<std::size_t>(r)];
    triplets.emplace_back(static_cast<int>(r), static_cast<int>(e.row), 1.0);
    triplets.emplace_back(static_cast<int>(r), static_cast<int>(pm.rows + e.col), 1.0);
    b(r) = std::log(e.value);
  }
  SparseRows a(n_obs, pm.rows + pm.cols);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return LogSystem{SparseLinearSystem(std::move(a), std::move(b), noise_on_entries),
                   TargetVector::sum(pm.rows + pm.cols, pm.target_row, pm.rows + pm.target_col)};
}

struct CompletionReport {
  double value = 0.0;         // exp of the log-scale estimate, no bias correction
  double log_value = 0.0;
  double log_variance = 0.0;  // variance of the log-scale estimate
  EstimateReport log_report;
};

inline CompletionReport rank1_impute(const PartialMatrix& pm, const DiscoveryBudget& budget,
                                     const NoiseModel& noise, double tol = kDefaultTolerance) {
  LogSystem ls = rank1_log_system(pm, noise);
  const CharacteristicGraph graph = graph_from_rows(ls.system, EdgeMode::kSum);
  GraphCircuits found =
      signed_sum_circuits(graph, pm.target_row, pm.rows + pm.target_col, budget);
  const ParticularSystem ps(std::move(found.base), std::move(found.generals));
  const KernelAssembly assembly = assemble(ps, ls.system.noise(), tol);
  CompletionReport out;
  out.log_report = estimate(assembly, ls.system);
  out.log_value = out.log_report.value;
  out.log_variance = out.log_report.variance;
  out.value = std::exp(out.log_value);
  return out;
}

struct GlsResult {
  double value = 0.0;
  double variance = 0.0;
};

// Dense generalized least squares: w^T (A^T S^-1 A)^+ A^T S^-1 b and
// w^T (A^T S^-1 A)^+ w, computed by whitening A and an SVD. Small systems only.
inline GlsResult gls_oracle(const SparseLinearSystem& system, const TargetVector& target,
                            double tol = kDefaultTolerance, Index limit = 500) {
  check_target(system, target);
  const Index n_rows = system.num_rows();
  const Index n_cols = system.num_cols();
  if (n_rows > limit || n_cols > limit) {
    std::ostringstream msg;
    msg << "dense GLS limited to " << limit << " rows and columns";
    throw Error(ErrorCode::kTooLarge, msg.str());
  }
  const Eigen::VectorXd& b = system.observations();
  Eigen::MatrixXd a(system.matrix());
  Eigen::MatrixXd whitened_a;
  Eigen::VectorXd whitened_b;
  const NoiseModel& noise = system.noise();
  if (noise.kind() != NoiseModel::Kind::kFull) {
    Eigen::VectorXd inv_sd(n_rows);
    for (Index i = 0; i < n_rows; ++i) {
      if (!(noise.variance(i) > 0.0)) {
        throw Error(ErrorCode::kNotPSD, "GLS baseline needs positive variances");
      }
      inv_sd(i) = 1.0 / std::sqrt(noise.variance(i));
    }
    whitened_a = inv_sd.asDiagonal() * a;
    whitened_b = inv_sd.cwiseProduct(b);
  } else {
    const Eigen::MatrixXd sigma(noise.matrix());
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::kNotPSD, "GLS baseline needs a positive definite covariance");
    }
    whitened_a = llt.matrixL().solve(a);
    whitened_b = llt.matrixL().solve(b);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(whitened_a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Index rank = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    while (rank < s.size() && s(rank) > tol * s(0)) ++rank;
  }
  const Eigen::VectorXd w = target.dense();
  const Eigen::MatrixXd v = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd vw = v.transpose() * w;
  // w must lie in the row span of A.
  if ((w - v * vw).norm() > 1e-6 * w.norm()) {
    throw Error(ErrorCode::kTargetOutsideRowSpan, "target is not in the row span of A");
  }
  // mu = U S^-1 V^T w gives the whitened estimator weights.
  const Eigen::VectorXd coeffs = vw.cwiseQuotient(s.head(rank));
  const Eigen::VectorXd mu = svd.matrixU().leftCols(rank) * coeffs;
  return GlsResult{mu.dot(whitened_b), coeffs.squaredNorm()};
}

struct MonteCarloResult {
  Index trials = 0;
  double true_value = 0.0;
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;  // unbiased (T - 1 denominator)
  double predicted_variance = 0.0;
};

namespace detail {

struct RunningMoments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  void merge(const RunningMoments& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }
};

}  // namespace detail

// Draws b = A x_true + e with Gaussian e ~ N(0, Sigma) and evaluates the
// estimator of `circuits` on each draw. Only the rows in the circuit support
// are sampled. Trials are split into fixed blocks, each with its own seeded
// stream, so results depend on the seed but not on the thread count.
inline MonteCarloResult monte_carlo(const SparseLinearSystem& system, const TargetVector& target,
                                    const ParticularSystem& circuits, const Eigen::VectorXd& x_true,
                                    Index trials, std::uint64_t seed, unsigned threads = 0,
                                    double tol = kDefaultTolerance) {
  check_target(system, target);
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be at least 1");
  if (x_true.size() != system.num_cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "x_true has the wrong dimension");
  }
  const KernelAssembly assembly = assemble(circuits, system.noise(), tol);
  const std::vector<Index>& support = assembly.support;
  const Index c = static_cast<Index>(support.size());
  Eigen::VectorXd signal(c);
  for (Index t = 0; t < c; ++t) {
    double v = 0.0;
    system.for_each_in_row(support[static_cast<std::size_t>(t)],
                           [&](Index col, double a) { v += a * x_true(col); });
    signal(t) = v;
  }
  const Eigen::MatrixXd factor = detail::noise_factor(system.noise(), support);
  // The estimate is linear: weights . (signal + F z).
  const double mean_part = assembly.weights.dot(signal);
  const Eigen::VectorXd noise_weights = factor.transpose() * assembly.weights;

  constexpr Index kBlock = 4096;
  const Index blocks = (trials + kBlock - 1) / kBlock;
  std::vector<detail::RunningMoments> partial(static_cast<std::size_t>(blocks));
  auto run_block = [&](Index blk) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(blk), static_cast<std::uint32_t>(blk >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    detail::RunningMoments m;
    const Index count = std::min(kBlock, trials - blk * kBlock);
    for (Index t = 0; t < count; ++t) {
      double v = mean_part;
      for (Index k = 0; k < noise_weights.size(); ++k) v += noise_weights(k) * normal(rng);
      m.add(v);
    }
    partial[static_cast<std::size_t>(blk)] = m;
  };
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<Index>(workers, blocks));
  if (workers <= 1) {
    for (Index blk = 0; blk < blocks; ++blk) run_block(blk);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (Index blk = w; blk < blocks; blk += workers) run_block(blk);
      });
    }
    for (auto& th : pool) th.join();
  }
  detail::RunningMoments total;
  for (const auto& m : partial) total.merge(m);

  MonteCarloResult out;
  out.trials = trials;
  out.true_value = target.dense().dot(x_true);
  out.empirical_mean = total.mean;
  out.empirical_variance = trials > 1 ? total.m2 / (total.count - 1.0) : 0.0;
  out.predicted_variance = assembly.variance;
  return out;
}

}  // namespace mreg

#endif  // MREG_APPLICATIONS_HPP
