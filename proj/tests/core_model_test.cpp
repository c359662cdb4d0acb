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


#include <gtest/gtest.h>

#include "test_support.hpp"

namespace mreg {
namespace {

using testing::triangle;
using testing::triangle_target;

TEST(NoiseModel, IidAndDiagonalAccessors) {
  const NoiseModel iid = NoiseModel::iid(2.0, 3);
  EXPECT_EQ(iid.size(), 3);
  EXPECT_DOUBLE_EQ(iid.covariance(1, 1), 2.0);
  EXPECT_DOUBLE_EQ(iid.covariance(0, 1), 0.0);

  const NoiseModel diag = NoiseModel::diagonal(Eigen::Vector3d(1, 2, 3));
  EXPECT_DOUBLE_EQ(diag.variance(2), 3.0);
  const std::vector<Index> idx{2, 0};
  const Eigen::MatrixXd blk = diag.block(idx);
  EXPECT_DOUBLE_EQ(blk(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(blk(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(blk(0, 1), 0.0);
}

TEST(NoiseModel, RejectsBadInput) {
  EXPECT_THROW(NoiseModel::iid(-1.0, 3), Error);
  EXPECT_THROW(NoiseModel::diagonal(Eigen::Vector2d(1, -1)), Error);
  EXPECT_NO_THROW(NoiseModel::iid(0.0, 3));
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  Eigen::SparseMatrix<double> s = asym.sparseView();
  EXPECT_THROW(NoiseModel::full(s), Error);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  s = indefinite.sparseView();
  EXPECT_THROW(NoiseModel::full(s), Error);
}

TEST(NoiseModel, FullBlockAndCorrelation) {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 2, 0.5, 0, 0.5, 1, 0, 0, 0, 4;
  const NoiseModel full = NoiseModel::full(Eigen::SparseMatrix<double>(sigma.sparseView()));
  EXPECT_TRUE(full.correlated(0));
  EXPECT_FALSE(full.correlated(2));
  const std::vector<Index> idx{0, 1};
  EXPECT_DOUBLE_EQ(full.block(idx)(0, 1), 0.5);
  const std::vector<Index> bad{5};
  try {
    full.block(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoiseDimensionMismatch);
  }
}

TEST(SparseLinearSystem, DimensionChecks) {
  const Eigen::MatrixXd a = testing::triangle_matrix();
  try {
    testing::make_system(a, Eigen::Vector2d(1, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  try {
    testing::make_system(a, std::nullopt, NoiseModel::iid(1.0, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoiseDimensionMismatch);
  }
  const SparseLinearSystem s = triangle();
  EXPECT_FALSE(s.has_observations());
  EXPECT_THROW(s.observations(), Error);
  EXPECT_THROW(s.check_row(3), Error);
  EXPECT_EQ(s.row_nonzeros(0), 2);
}

TEST(TargetVector, Construction) {
  EXPECT_THROW(TargetVector(3, {}), Error);
  EXPECT_THROW(TargetVector(3, {{3, 1.0}}), Error);
  EXPECT_THROW(TargetVector(3, {{0, 1.0}, {0, -1.0}}), Error);
  const TargetVector w = TargetVector::difference(4, 0, 3);
  EXPECT_DOUBLE_EQ(w.dense()(0), 1.0);
  EXPECT_DOUBLE_EQ(w.dense()(3), -1.0);
  EXPECT_EQ(TargetVector::from_dense(Eigen::Vector3d(0, 2, 0)).entries().nonZeros(), 1);
  EXPECT_THROW(check_target(triangle(), TargetVector::difference(4, 0, 1)), Error);
}

TEST(Circuit, RejectsMalformedIndexSets) {
  EXPECT_THROW(Circuit(CircuitKind::kGeneral, {0, 0}, {1.0, 1.0}), Error);
  EXPECT_THROW(Circuit(CircuitKind::kGeneral, {0, 1}, {1.0}), Error);
  EXPECT_THROW(Circuit(CircuitKind::kGeneral, {0, 1}, {1.0, 0.0}), Error);
  const Circuit c(CircuitKind::kParticular, {2, 0}, {3.0, 5.0});
  EXPECT_EQ(c.indices(), (std::vector<Index>{0, 2}));
  EXPECT_DOUBLE_EQ(c.coefficient(0), 5.0);
  EXPECT_DOUBLE_EQ(c.coefficient(2), 3.0);
  EXPECT_DOUBLE_EQ(c.coefficient(1), 0.0);
}

TEST(ValidateCircuit, TrianglePathIsParticular) {
  const Circuit c(CircuitKind::kParticular, {0, 1}, {1.0, 1.0});
  EXPECT_TRUE(validate_circuit(triangle(), triangle_target(), c).valid);
}

TEST(ValidateCircuit, SingleWrongEdgeIsRejected) {
  const Circuit c(CircuitKind::kParticular, {0}, {1.0});
  const CircuitCheck check = validate_circuit(triangle(), triangle_target(), c);
  EXPECT_FALSE(check.valid);
  EXPECT_NE(check.diagnostic.find("lambda A != w"), std::string::npos);
}

TEST(ValidateCircuit, TriangleCycleIsGeneral) {
  const Circuit c(CircuitKind::kGeneral, {0, 1, 2}, {1.0, 1.0, -1.0});
  EXPECT_TRUE(validate_circuit(triangle(), nullptr, c).valid);
}

TEST(ValidateCircuit, NonMinimalSetIsRejected) {
  // Four rows of a triangle plus a duplicate: kernel dimension 2.
  Eigen::MatrixXd a(4, 3);
  a << 1, -1, 0, 0, 1, -1, 1, 0, -1, 1, -1, 0;
  const SparseLinearSystem s = testing::make_system(a);
  const Circuit c(CircuitKind::kGeneral, {0, 1, 2, 3}, {1.0, 1.0, -1.0, 0.5});
  // lambda A = (1.5, -1.5, 0) != 0, residual check fails first.
  EXPECT_FALSE(validate_circuit(s, nullptr, c).valid);
  const Circuit d(CircuitKind::kGeneral, {0, 1, 2, 3}, {0.5, 1.0, -1.0, 0.5});
  const CircuitCheck check = validate_circuit(s, nullptr, d);
  EXPECT_FALSE(check.valid);
  EXPECT_NE(check.diagnostic.find("not minimal"), std::string::npos);
}

TEST(ValidateCircuit, ParticularNeedsTarget) {
  const Circuit c(CircuitKind::kParticular, {2}, {1.0});
  EXPECT_FALSE(validate_circuit(triangle(), nullptr, c).valid);
}

TEST(Divisor, ResolvedVectorAndEquivalence) {
  const Circuit base(CircuitKind::kParticular, {2}, {1.0});
  const Circuit cycle(CircuitKind::kGeneral, {0, 1, 2}, {1.0, 1.0, -1.0});
  const Circuit path(CircuitKind::kParticular, {0, 1}, {1.0, 1.0});
  const Divisor d({{1.0, base}, {1.0, cycle}});
  EXPECT_EQ(d.resolved().indices, (std::vector<Index>{0, 1}));
  EXPECT_TRUE(d.equivalent(Divisor::of(path)));
  EXPECT_FALSE(d.equivalent(Divisor::of(base)));
  EXPECT_DOUBLE_EQ(d.particular_weight(), 1.0);
  EXPECT_EQ(d.member_indices(), (std::vector<Index>{0, 1, 2}));
  EXPECT_TRUE(d.is_particular(triangle(), triangle_target()));
  EXPECT_FALSE(Divisor::of(cycle).is_particular(triangle(), triangle_target()));
}

TEST(ParticularSystem, GeneratorsOnTriangle) {
  const Circuit base(CircuitKind::kParticular, {2}, {1.0});
  const Circuit cycle(CircuitKind::kGeneral, {0, 1, 2}, {1.0, 1.0, -1.0});
  const ParticularSystem ps(base, {cycle});
  ASSERT_EQ(ps.generators().size(), 2u);
  EXPECT_EQ(testing::dense_lambda(ps.generators()[0].resolved(), 3),
            Eigen::Vector3d(0, 0, 1));
  EXPECT_EQ(testing::dense_lambda(ps.generators()[1].resolved(), 3),
            Eigen::Vector3d(1, 1, 0));
  EXPECT_EQ(ps.support(), (std::vector<Index>{0, 1, 2}));
  EXPECT_TRUE(ps.check(triangle(), triangle_target()));
}

TEST(ParticularSystem, CountsAndKinds) {
  const Circuit base(CircuitKind::kParticular, {2}, {1.0});
  EXPECT_EQ(ParticularSystem(base, {}).generators().size(), 1u);
  const Circuit g1(CircuitKind::kGeneral, {0, 1, 2}, {1.0, 1.0, -1.0});
  const Circuit g2(CircuitKind::kGeneral, {0, 3}, {1.0, -1.0});
  EXPECT_EQ(ParticularSystem(base, {g1, g2}).generators().size(), 3u);
  try {
    ParticularSystem(g1, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKindMismatch);
  }
  EXPECT_THROW(ParticularSystem(base, {base}), Error);
}

}  // namespace
}  // namespace mreg
