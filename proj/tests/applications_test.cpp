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

#include <cmath>

#include "test_support.hpp"

namespace mreg {
namespace {

PartialMatrix two_by_two() {
  PartialMatrix pm;
  pm.rows = 2;
  pm.cols = 2;
  pm.observed = {{0, 0, 2.0}, {0, 1, 3.0}, {1, 0, 4.0}};
  pm.target_row = 1;
  pm.target_col = 1;
  return pm;
}

TEST(Rank1LogSystem, TwoByTwo) {
  const LogSystem ls = rank1_log_system(two_by_two(), NoiseModel::iid(1.0, 3));
  EXPECT_EQ(ls.system.num_rows(), 3);
  EXPECT_EQ(ls.system.num_cols(), 4);
  EXPECT_EQ(ls.target.dense(), Eigen::Vector4d(0, 1, 0, 1));
  EXPECT_NEAR(ls.system.observations()(1), std::log(3.0), 1e-15);
}

TEST(Rank1LogSystem, ObservedTargetIsARow) {
  PartialMatrix pm = two_by_two();
  pm.target_row = 0;
  pm.target_col = 1;
  const LogSystem ls = rank1_log_system(pm, NoiseModel::iid(1.0, 3));
  const Circuit c = circuit_vector(ls.system, ls.target, {1}, CircuitKind::kParticular);
  EXPECT_NEAR(c.coefficient(1), 1.0, 1e-12);
}

TEST(Rank1LogSystem, RejectsBadEntries) {
  PartialMatrix pm = two_by_two();
  pm.observed[1].value = -1.0;
  try {
    rank1_log_system(pm, NoiseModel::iid(1.0, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonPositiveEntry);
  }
  pm = two_by_two();
  pm.observed.push_back({0, 0, 1.0});
  EXPECT_THROW(rank1_log_system(pm, NoiseModel::iid(1.0, 4)), Error);
  pm = two_by_two();
  pm.target_row = 2;
  EXPECT_THROW(rank1_log_system(pm, NoiseModel::iid(1.0, 3)), Error);
}

TEST(Rank1Impute, TwoByTwoDeterminantalIdentity) {
  const CompletionReport r = rank1_impute(two_by_two(), DiscoveryBudget{},
                                          NoiseModel::iid(1.0, 3));
  EXPECT_NEAR(r.value, 6.0, 6.0 * 1e-12);
  EXPECT_NEAR(r.log_variance, 3.0, 1e-12);
}

TEST(Rank1Impute, ObservedTargetReturnsObservation) {
  PartialMatrix pm;
  pm.rows = 1;
  pm.cols = 1;
  pm.observed = {{0, 0, 5.0}};
  const CompletionReport r = rank1_impute(pm, DiscoveryBudget{}, NoiseModel::iid(0.1, 1));
  EXPECT_NEAR(r.value, 5.0, 1e-12);
  EXPECT_NEAR(r.log_variance, 0.1, 1e-15);
}

TEST(Rank1Impute, ThreeByThreeAnyCircuitChoice) {
  const Eigen::Vector3d u(1, 2, 3), v(1, 10, 100);
  PartialMatrix pm;
  pm.rows = 3;
  pm.cols = 3;
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) {
      if (i != 2 || j != 2) pm.observed.push_back({i, j, u(i) * v(j)});
    }
  }
  pm.target_row = 2;
  pm.target_col = 2;
  const NoiseModel noise = NoiseModel::iid(1.0, 8);
  EXPECT_NEAR(rank1_impute(pm, DiscoveryBudget{}, noise).value, 300.0, 300.0 * 1e-12);
  // Every odd path alone reproduces the entry as well.
  const LogSystem ls = rank1_log_system(pm, noise);
  const CircuitCatalog cat = brute_force_circuits(ls.system, ls.target, 5);
  ASSERT_FALSE(cat.particulars.empty());
  for (const Circuit& c : cat.particulars) {
    double g = 0.0;
    for (std::size_t k = 0; k < c.indices().size(); ++k) {
      g += c.coefficients()[k] * ls.system.observations()(c.indices()[k]);
    }
    EXPECT_NEAR(std::exp(g), 300.0, 300.0 * 1e-12);
  }
}

TEST(GlsOracle, SampleMean) {
  const SparseLinearSystem s =
      testing::make_system(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, 2, 3));
  const GlsResult g = gls_oracle(s, TargetVector(1, {{0, 1.0}}));
  EXPECT_NEAR(g.value, 2.0, 1e-12);
  EXPECT_NEAR(g.variance, 1.0 / 3.0, 1e-12);
}

TEST(GlsOracle, TriangleMatchesKernelEstimator) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const SparseLinearSystem s = testing::triangle(testing::random_vector(rng, 3));
    const ParticularSystem ps(Circuit(CircuitKind::kParticular, {2}, {1.0}),
                              {Circuit(CircuitKind::kGeneral, {0, 1, 2}, {1.0, 1.0, -1.0})});
    const EstimateReport r = estimate(assemble(ps, s.noise()), s);
    const GlsResult g = gls_oracle(s, testing::triangle_target());
    EXPECT_NEAR(r.value, g.value, 1e-8 * (1 + std::abs(g.value)));
    EXPECT_NEAR(r.variance, g.variance, 1e-8 * g.variance);
  }
}

TEST(GlsOracle, FullCovarianceMatchesKernelEstimator) {
  Eigen::Matrix3d sigma;
  sigma << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 3;
  const SparseLinearSystem s = testing::make_system(
      testing::triangle_matrix(), Eigen::Vector3d(0.3, -1.0, 0.4),
      NoiseModel::full(Eigen::SparseMatrix<double>(sigma.sparseView())));
  const ParticularSystem ps(Circuit(CircuitKind::kParticular, {2}, {1.0}),
                            {Circuit(CircuitKind::kGeneral, {0, 1, 2}, {1.0, 1.0, -1.0})});
  const EstimateReport r = estimate(assemble(ps, s.noise()), s);
  const GlsResult g = gls_oracle(s, testing::triangle_target());
  EXPECT_NEAR(r.value, g.value, 1e-10);
  EXPECT_NEAR(r.variance, g.variance, 1e-10);
}

TEST(GlsOracle, TargetOutsideRowSpan) {
  Eigen::MatrixXd a(2, 3);
  a << 1, 0, 0, 0, 1, 0;
  const SparseLinearSystem s = testing::make_system(a, Eigen::Vector2d(1, 2));
  try {
    gls_oracle(s, TargetVector(3, {{2, 1.0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTargetOutsideRowSpan);
  }
}

TEST(GlsOracle, GuardOnSize) {
  const SparseLinearSystem s = testing::make_system(Eigen::MatrixXd::Ones(600, 1),
                                                    Eigen::VectorXd::Zero(600));
  try {
    gls_oracle(s, TargetVector(1, {{0, 1.0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLarge);
  }
}

ParticularSystem triangle_circuits() {
  return ParticularSystem(Circuit(CircuitKind::kParticular, {2}, {1.0}),
                          {Circuit(CircuitKind::kGeneral, {0, 1, 2}, {1.0, 1.0, -1.0})});
}

TEST(MonteCarlo, ZeroNoiseIsExact) {
  const SparseLinearSystem s = testing::make_system(testing::triangle_matrix(), std::nullopt,
                                                    NoiseModel::iid(0.0, 3));
  const Eigen::Vector3d x(0.5, -1.0, 2.0);
  const MonteCarloResult r =
      monte_carlo(s, testing::triangle_target(), triangle_circuits(), x, 1000, 7);
  EXPECT_DOUBLE_EQ(r.true_value, -1.5);
  EXPECT_NEAR(r.empirical_mean, -1.5, 1e-14);
  EXPECT_NEAR(r.empirical_variance, 0.0, 1e-28);
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
  const SparseLinearSystem s = testing::triangle();
  const Eigen::Vector3d x(1, 2, 3);
  const MonteCarloResult a =
      monte_carlo(s, testing::triangle_target(), triangle_circuits(), x, 20000, 7, 1);
  const MonteCarloResult b =
      monte_carlo(s, testing::triangle_target(), triangle_circuits(), x, 20000, 7, 4);
  EXPECT_EQ(a.empirical_mean, b.empirical_mean);
  EXPECT_EQ(a.empirical_variance, b.empirical_variance);
  const MonteCarloResult c =
      monte_carlo(s, testing::triangle_target(), triangle_circuits(), x, 20000, 8, 1);
  EXPECT_NE(a.empirical_mean, c.empirical_mean);
}

TEST(MonteCarlo, TriangleVarianceNearPrediction) {
  const SparseLinearSystem s = testing::triangle();
  const MonteCarloResult r = monte_carlo(s, testing::triangle_target(), triangle_circuits(),
                                         Eigen::Vector3d(1, 0, -1), 100000, 11);
  EXPECT_NEAR(r.predicted_variance, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.empirical_variance / r.predicted_variance, 1.0, 0.05);
  EXPECT_NEAR(r.empirical_mean, 2.0, 4.0 * std::sqrt(r.predicted_variance / 1e5));
}

TEST(MonteCarlo, NestedSystemsOrderEmpirically) {
  const SparseLinearSystem s = testing::triangle();
  const Eigen::Vector3d x = Eigen::Vector3d::Zero();
  const ParticularSystem small(Circuit(CircuitKind::kParticular, {0, 1}, {1.0, 1.0}), {});
  const MonteCarloResult a =
      monte_carlo(s, testing::triangle_target(), small, x, 100000, 3);
  const MonteCarloResult b =
      monte_carlo(s, testing::triangle_target(), triangle_circuits(), x, 100000, 3);
  EXPECT_GT(a.empirical_variance, b.empirical_variance);
  EXPECT_NEAR(a.predicted_variance, 2.0, 1e-12);
}

}  // namespace
}  // namespace mreg
