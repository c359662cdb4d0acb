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

// Small dense helpers shared by the circuit and kernel code. Every matrix
// handled here is the size of a circuit union, never the size of the system.

#ifndef MREG_LINALG_HPP
#define MREG_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace mreg {

using Index = std::ptrdiff_t;

inline constexpr double kDefaultTolerance = 1e-9;

namespace detail {

// Number of singular values above tol * sigma_max.
inline Index numerical_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) ++rank;
  }
  return rank;
}

// Orthonormal basis (as columns) of {y : y^T m = 0}.
inline Eigen::MatrixXd left_kernel(const Eigen::MatrixXd& m, double tol) {
  const Index rows = m.rows();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  if (m.cols() == 0) return Eigen::MatrixXd::Identity(rows, rows);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  Index rank = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    for (Index i = 0; i < s.size(); ++i) {
      if (s(i) > tol * s(0)) ++rank;
    }
  }
  return svd.matrixU().rightCols(rows - rank);
}

// Greedy column selection by incremental rank (twice-iterated Gram-Schmidt).
// Returns positions of columns that are linearly independent and span the
// column space of `m` to tolerance `tol`.
inline std::vector<Index> independent_columns(const Eigen::MatrixXd& m,
                                              double tol) {
  std::vector<Index> chosen;
  const Index rows = m.rows();
  Eigen::MatrixXd basis(rows, std::min<Index>(rows, m.cols()));
  Index rank = 0;
  for (Index j = 0; j < m.cols() && rank < rows; ++j) {
    Eigen::VectorXd v = m.col(j);
    const double norm = v.norm();
    if (norm == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index k = 0; k < rank; ++k) {
        v -= basis.col(k).dot(v) * basis.col(k);
      }
    }
    const double residual = v.norm();
    if (residual > tol * norm && residual > 0.0) {
      basis.col(rank++) = v / residual;
      chosen.push_back(j);
    }
  }
  return chosen;
}

// Minimum-norm least-squares solution of m x = rhs, discarding singular
// directions below tol * sigma_max.
inline Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& m,
                                      const Eigen::VectorXd& rhs, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd coeffs = svd.matrixU().transpose() * rhs;
  const double cutoff = s.size() > 0 ? tol * s(0) : 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    coeffs(i) = (s(i) > cutoff && s(i) > 0.0) ? coeffs(i) / s(i) : 0.0;
  }
  return svd.matrixV() * coeffs;
}

// Moore-Penrose pseudo-inverse with relative singular value cutoff.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  const double cutoff = s.size() > 0 ? tol * s(0) : 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace detail
}  // namespace mreg

#endif  // MREG_LINALG_HPP
