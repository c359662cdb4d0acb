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


// Randomized checks of the estimator's structural guarantees.

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace mreg {
namespace {

Eigen::VectorXd apply_weights(const KernelAssembly& a, const Eigen::VectorXd& b) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.support.size(); ++i) {
    v += a.weights(static_cast<Index>(i)) * b(a.support[i]);
  }
  return Eigen::VectorXd::Constant(1, v);
}

TEST(Properties, KernelIsPsdAndAlphaIsOptimal) {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    const testing::Instance inst = testing::random_full_support(rng, rep % 2 == 1);
    const KernelAssembly a = assemble(inst.circuits, inst.system.noise());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.kernel);
    const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * norm);
    EXPECT_NEAR(a.alpha.sum(), 1.0, 1e-12);
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd mu = testing::random_vector(rng, a.alpha.size(), -2.0, 2.0);
      mu.array() += (1.0 - mu.sum()) / static_cast<double>(mu.size());
      EXPECT_LE(a.variance, mu.dot(a.kernel * mu) + 1e-10 * std::max(norm, 1.0));
    }
  }
}

TEST(Properties, EstimateIsLinearInObservations) {
  std::mt19937_64 rng(202);
  for (int rep = 0; rep < 50; ++rep) {
    const testing::Instance inst = testing::random_full_support(rng, false);
    const KernelAssembly a = assemble(inst.circuits, inst.system.noise());
    const Index n = inst.system.num_rows();
    const Eigen::VectorXd b1 = testing::random_vector(rng, n), b2 = testing::random_vector(rng, n);
    const double e1 = estimate(a, std::optional<Eigen::VectorXd>(b1)).value;
    const double e2 = estimate(a, std::optional<Eigen::VectorXd>(b2)).value;
    const double e12 = estimate(a, std::optional<Eigen::VectorXd>(b1 + b2)).value;
    const double e0 =
        estimate(a, std::optional<Eigen::VectorXd>(Eigen::VectorXd::Zero(n))).value;
    EXPECT_EQ(e0, 0.0);
    EXPECT_NEAR(e12, e1 + e2 - e0, 1e-9 * (1 + std::abs(e12)));
  }
}

TEST(Properties, EstimatorIsUnbiasedForNoiselessData) {
  // weights^T A[C, :] = w, so noiseless b = A x gives <w, x> exactly.
  std::mt19937_64 rng(303);
  for (int rep = 0; rep < 50; ++rep) {
    const testing::Instance inst = testing::random_full_support(rng, true);
    const KernelAssembly a = assemble(inst.circuits, inst.system.noise());
    const Eigen::VectorXd x = testing::random_vector(rng, inst.system.num_cols());
    const Eigen::VectorXd b = inst.system.matrix() * x;
    const double truth = inst.target.dense().dot(x);
    EXPECT_NEAR(apply_weights(a, b)(0), truth, 1e-8 * (1 + std::abs(truth)));
  }
}

TEST(Properties, AddingGeneralsNeverIncreasesVariance) {
  std::mt19937_64 rng(404);
  for (int rep = 0; rep < 50; ++rep) {
    const testing::GraphInstance g = testing::random_graph_instance(rng);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= g.circuits.generals.size(); ++j) {
      const std::vector<Circuit> prefix(g.circuits.generals.begin(),
                                        g.circuits.generals.begin() + static_cast<long>(j));
      const double v =
          predict_variance(assemble(ParticularSystem(g.circuits.base, prefix), g.system.noise()));
      EXPECT_LE(v, previous + 1e-10);
      previous = v;
    }
  }
}

TEST(Properties, BestAmongUnbiasedWeightsOnSupport) {
  // Any mu on the support with mu^T A = w has mu^T Sigma mu >= variance.
  std::mt19937_64 rng(505);
  for (int rep = 0; rep < 30; ++rep) {
    const testing::GraphInstance g = testing::random_graph_instance(rng);
    const ParticularSystem ps(g.circuits.base, g.circuits.generals);
    const KernelAssembly a = assemble(ps, g.system.noise());
    const Index c = static_cast<Index>(a.support.size());
    const Eigen::MatrixXd sigma = g.system.noise().block(a.support);
    // Perturb the optimal weights along the generals' span.
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd mu = a.weights;
      for (const Circuit& gc : ps.generals()) {
        const double s = std::normal_distribution<double>(0.0, 1.0)(rng);
        for (Index k = 0; k < c; ++k) mu(k) += s * gc.coefficient(a.support[static_cast<std::size_t>(k)]);
      }
      EXPECT_GE(mu.dot(sigma * mu), a.variance - 1e-9);
    }
  }
}

TEST(Properties, EquivalentDivisorsGiveIdenticalResults) {
  const SparseLinearSystem s = testing::triangle(Eigen::Vector3d(0.9, 1.1, 2.2));
  const Circuit base(CircuitKind::kParticular, {2}, {1.0});
  const Circuit cycle(CircuitKind::kGeneral, {0, 1, 2}, {1.0, 1.0, -1.0});
  const Circuit path(CircuitKind::kParticular, {0, 1}, {1.0, 1.0});
  const std::vector<Divisor> a{Divisor::of(base), Divisor({{1.0, base}, {1.0, cycle}})};
  const std::vector<Divisor> b{Divisor::of(base), Divisor::of(path)};
  ASSERT_TRUE(a[1].equivalent(b[1]));
  const KernelAssembly ka = assemble(a, s.noise());
  const KernelAssembly kb = assemble(b, s.noise());
  EXPECT_NEAR(estimate(ka, s).value, estimate(kb, s).value, 1e-14);
  EXPECT_NEAR(ka.variance, kb.variance, 1e-14);
}

TEST(Properties, CircuitVectorSupportMatchesIndices) {
  std::mt19937_64 rng(606);
  for (int rep = 0; rep < 30; ++rep) {
    const testing::GraphInstance g = testing::random_graph_instance(rng);
    auto check = [&](const Circuit& c) {
      for (double v : c.coefficients()) EXPECT_NE(v, 0.0);
      EXPECT_TRUE(std::is_sorted(c.indices().begin(), c.indices().end()));
    };
    check(g.circuits.base);
    for (const Circuit& c : g.circuits.generals) check(c);
    EXPECT_TRUE(validate_circuit(g.system, g.target, g.circuits.base).valid);
  }
}

TEST(Properties, CycleCountEqualsEdgesMinusVerticesPlusOne) {
  std::mt19937_64 rng(707);
  for (int rep = 0; rep < 50; ++rep) {
    const testing::GraphInstance g = testing::random_graph_instance(rng);
    EXPECT_EQ(static_cast<Index>(g.circuits.generals.size()),
              g.system.num_rows() - g.system.num_cols() + 1);
  }
}

TEST(Properties, DiscoveryIgnoresEdgesOutsideRadius) {
  std::mt19937_64 rng(808);
  DiscoveryBudget budget;
  budget.radius = 3;
  for (int rep = 0; rep < 20; ++rep) {
    // Long chain with a small random cluster near vertex 0; extra edges far away.
    std::vector<std::pair<Index, Index>> edges;
    const Index n = 40;
    for (Index v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
    for (int e = 0; e < 4; ++e) {
      const Index u = static_cast<Index>(rng() % 4), w = static_cast<Index>(rng() % 4);
      if (u != w) edges.emplace_back(u, w);
    }
    const SparseLinearSystem near = testing::graph_system(n, edges, EdgeMode::kDifference);
    auto far_edges = edges;
    for (int e = 0; e < 10; ++e) {
      const Index u = 20 + static_cast<Index>(rng() % 20), w = 20 + static_cast<Index>(rng() % 20);
      if (u != w) far_edges.emplace_back(u, w);
    }
    const SparseLinearSystem far = testing::graph_system(n, far_edges, EdgeMode::kDifference);
    const GraphCircuits a =
        potential_circuits(graph_from_rows(near, EdgeMode::kDifference), 0, 2, budget);
    const GraphCircuits b =
        potential_circuits(graph_from_rows(far, EdgeMode::kDifference), 0, 2, budget);
    EXPECT_EQ(a.base.indices(), b.base.indices());
    EXPECT_EQ(a.base.coefficients(), b.base.coefficients());
    ASSERT_EQ(a.generals.size(), b.generals.size());
    for (std::size_t i = 0; i < a.generals.size(); ++i) {
      EXPECT_EQ(a.generals[i].indices(), b.generals[i].indices());
      EXPECT_EQ(a.generals[i].coefficients(), b.generals[i].coefficients());
    }
  }
}

TEST(Properties, SignedSumCoefficientsAlternate) {
  std::mt19937_64 rng(909);
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const Index v = 3 + static_cast<Index>(rng() % 8);
    const auto edges = testing::random_connected_graph(rng, v, 1 + static_cast<Index>(rng() % v));
    const SparseLinearSystem s = testing::graph_system(v, edges, EdgeMode::kSum);
    const CharacteristicGraph g = graph_from_rows(s, EdgeMode::kSum);
    GraphCircuits found{Circuit(CircuitKind::kParticular, {0}, {1.0}), {}, {}, {}};
    try {
      found = signed_sum_circuits(g, 0, v - 1, DiscoveryBudget::unlimited());
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNoOddPath);
      continue;
    }
    ++checked;
    auto alternating = [&](const Circuit& c, const Walk& walk) {
      // All rows are +(e_i + e_j), so magnitudes agree and signs alternate.
      for (std::size_t i = 0; i < walk.rows.size(); ++i) {
        const double coef = c.coefficient(walk.rows[i]);
        EXPECT_NEAR(std::abs(coef), std::abs(c.coefficient(walk.rows[0])), 1e-12);
        if (i > 0) EXPECT_LT(coef * c.coefficient(walk.rows[i - 1]), 0.0);
      }
    };
    alternating(found.base, found.base_walk);
    EXPECT_TRUE(validate_circuit(s, TargetVector::sum(v, 0, v - 1), found.base).valid);
    for (std::size_t i = 0; i < found.generals.size(); ++i) {
      alternating(found.generals[i], found.general_walks[i]);
      EXPECT_EQ(found.general_walks[i].rows.size() % 2, 0u);
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Properties, DenoisingNeverWorseThanReadingTheRow) {
  std::mt19937_64 rng(111);
  for (int rep = 0; rep < 30; ++rep) {
    const Index v = 4 + static_cast<Index>(rng() % 6);
    const auto edges = testing::random_connected_graph(rng, v, 3);
    const SparseLinearSystem s =
        testing::graph_system(v, edges, EdgeMode::kDifference, NoiseModel::iid(0.7, static_cast<Index>(edges.size())));
    const GraphCircuits c = potential_circuits(graph_from_rows(s, EdgeMode::kDifference),
                                               edges[0].first, edges[0].second,
                                               DiscoveryBudget::unlimited());
    EXPECT_EQ(c.base.size(), 1);
    const double var =
        predict_variance(assemble(ParticularSystem(c.base, c.generals), s.noise()));
    EXPECT_LE(var, 0.7 + 1e-12);
  }
}

TEST(Properties, SampleMeanReduction) {
  std::mt19937_64 rng(222);
  for (Index n : {1, 2, 3, 7, 30}) {
    const Eigen::VectorXd b = testing::random_vector(rng, n, -10, 10);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
    const SparseLinearSystem s = testing::make_system(ones, b);
    const LowRankCircuits lr = lowrank_circuits(s, 1, TargetVector(1, {{0, 1.0}}));
    std::vector<Divisor> gens;
    for (const Circuit& c : lr.particulars) gens.push_back(Divisor::of(c));
    const KernelAssembly a = assemble(gens, s.noise());
    EXPECT_NEAR(estimate(a, s).value, b.mean(), 1e-12 * (1 + std::abs(b.mean())));
    EXPECT_NEAR(a.variance, 1.0 / static_cast<double>(n), 1e-14);
  }
}

}  // namespace
}  // namespace mreg
