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
 * Circuit finders.
 *
 * Graph-structured rows (e_i - e_j or e_i + e_j) are handled combinatorially
 * on the characteristic graph: particular circuits are k-l paths and general
 * circuits come from a fundamental cycle basis of the neighbourhood of the
 * target. All per-query state is kept in hash maps keyed by vertex, so a
 * query never touches memory proportional to the size of the graph.
 *
 * For unstructured rows there are rank-based finders: disjoint r-row blocks
 * for low-rank A, greedy kernel search, fundamental circuits of a row basis
 * and an exhaustive enumerator used as a test oracle.
 */

#ifndef MREG_CIRCUIT_DISCOVERY_HPP
#define MREG_CIRCUIT_DISCOVERY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mreg/core_model.hpp"
#include "mreg/error.hpp"
#include "mreg/kernel_estimator.hpp"
#include "mreg/linalg.hpp"

namespace mreg {

enum class EdgeMode { kDifference, kSum };

struct DiscoveryBudget {
  Index radius = 8;
  Index max_circuits = 64;
  Index max_support = 32;

  void check() const {
    if (radius <= 0 || max_circuits <= 0 || max_support <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "discovery budget entries must be positive");
    }
  }

  static DiscoveryBudget unlimited() {
    const Index big = std::numeric_limits<Index>::max() / 4;
    return {big, big, big};
  }
};

// One edge per row. In difference mode the row is e_tail - e_head; in sum
// mode it is sign * (e_tail + e_head).
struct GraphEdge {
  Index tail;
  Index head;
  Index row;
  double sign;
};

class CharacteristicGraph {
 public:
  CharacteristicGraph(Index vertex_count, EdgeMode mode, std::vector<GraphEdge> edges)
      : vertex_count_(vertex_count), mode_(mode), edges_(std::move(edges)) {
    // Neighbour lists in CSR form, sorted by (neighbour, row).
    offsets_.assign(static_cast<std::size_t>(vertex_count_) + 1, 0);
    for (const GraphEdge& e : edges_) {
      ++offsets_[static_cast<std::size_t>(e.tail) + 1];
      ++offsets_[static_cast<std::size_t>(e.head) + 1];
    }
    for (std::size_t v = 0; v < static_cast<std::size_t>(vertex_count_); ++v) {
      offsets_[v + 1] += offsets_[v];
    }
    adjacency_.resize(2 * edges_.size());
    std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const GraphEdge& e = edges_[k];
      adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.tail)]++)] = {
          e.head, static_cast<Index>(k)};
      adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.head)]++)] = {
          e.tail, static_cast<Index>(k)};
    }
    for (std::size_t v = 0; v < static_cast<std::size_t>(vertex_count_); ++v) {
      std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1],
                [&](const Neighbor& a, const Neighbor& b) {
                  if (a.vertex != b.vertex) return a.vertex < b.vertex;
                  return edges_[static_cast<std::size_t>(a.edge)].row <
                         edges_[static_cast<std::size_t>(b.edge)].row;
                });
    }
  }

  struct Neighbor {
    Index vertex;
    Index edge;
  };

  Index vertex_count() const { return vertex_count_; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  EdgeMode mode() const { return mode_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const GraphEdge& edge(Index k) const { return edges_[static_cast<std::size_t>(k)]; }

  std::span<const Neighbor> neighbors(Index v) const {
    const auto lo = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
    const auto hi = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
    return std::span<const Neighbor>(adjacency_.data() + lo, hi - lo);
  }

  void check_vertex(Index v) const {
    if (v < 0 || v >= vertex_count_) {
      std::ostringstream msg;
      msg << "vertex " << v << " outside [0, " << vertex_count_ << ")";
      throw Error(ErrorCode::kIndexOutOfRange, msg.str());
    }
  }

 private:
  Index vertex_count_;
  EdgeMode mode_;
  std::vector<GraphEdge> edges_;
  std::vector<Index> offsets_;
  std::vector<Neighbor> adjacency_;
};

inline CharacteristicGraph graph_from_rows(const SparseLinearSystem& system, EdgeMode mode) {
  std::vector<GraphEdge> edges;
  edges.reserve(static_cast<std::size_t>(system.num_rows()));
  for (Index r = 0; r < system.num_rows(); ++r) {
    std::vector<std::pair<Index, double>> nz;
    system.for_each_in_row(r, [&](Index c, double v) {
      if (v != 0.0) nz.emplace_back(c, v);
    });
    auto reject = [&](const char* why) {
      std::ostringstream msg;
      msg << "row " << r << " " << why;
      throw Error(ErrorCode::kNotGraphStructured, msg.str());
    };
    if (nz.size() != 2) reject("does not have exactly two nonzero entries");
    if (std::abs(nz[0].second) != 1.0 || std::abs(nz[1].second) != 1.0) {
      reject("has an entry of magnitude other than 1");
    }
    const bool same_sign = nz[0].second == nz[1].second;
    if (mode == EdgeMode::kDifference) {
      if (same_sign) reject("is not of the form e_i - e_j");
      if (nz[0].second > 0.0) {
        edges.push_back({nz[0].first, nz[1].first, r, 1.0});
      } else {
        edges.push_back({nz[1].first, nz[0].first, r, 1.0});
      }
    } else {
      if (!same_sign) reject("is not of the form +-(e_i + e_j)");
      edges.push_back({nz[0].first, nz[1].first, r, nz[0].second});
    }
  }
  return CharacteristicGraph(system.num_cols(), mode, std::move(edges));
}

// Edge rows in traversal order plus the visited vertices (one more than
// rows for a path; first vertex repeated at the end for a cycle).
struct Walk {
  std::vector<Index> rows;
  std::vector<Index> vertices;
};

struct GraphCircuits {
  Circuit base;
  Walk base_walk;
  std::vector<Circuit> generals;
  std::vector<Walk> general_walks;
};

namespace detail {

struct LocalBfs {
  std::unordered_map<Index, Index> dist;
  std::vector<Index> order;  // vertices in BFS order
};

// Vertices within `radius` hops of any source.
inline LocalBfs ball(const CharacteristicGraph& g, std::span<const Index> sources,
                     Index radius) {
  LocalBfs out;
  std::deque<Index> queue;
  for (Index s : sources) {
    if (out.dist.emplace(s, 0).second) {
      queue.push_back(s);
      out.order.push_back(s);
    }
  }
  while (!queue.empty()) {
    const Index v = queue.front();
    queue.pop_front();
    const Index d = out.dist[v];
    if (d >= radius) continue;
    for (const auto& nb : g.neighbors(v)) {
      if (out.dist.emplace(nb.vertex, d + 1).second) {
        queue.push_back(nb.vertex);
        out.order.push_back(nb.vertex);
      }
    }
  }
  return out;
}

// Coefficient of edge `e` when traversed from `from`: difference edges carry
// their orientation, sum edges alternate with the step parity.
inline double step_coefficient(const CharacteristicGraph& g, Index e, Index from,
                               std::size_t step) {
  const GraphEdge& edge = g.edge(e);
  if (g.mode() == EdgeMode::kDifference) return edge.tail == from ? 1.0 : -1.0;
  return (step % 2 == 0 ? 1.0 : -1.0) * edge.sign;
}

inline Circuit circuit_from_walk(const CharacteristicGraph& g, const Walk& walk,
                                 CircuitKind kind) {
  std::vector<Index> rows;
  std::vector<double> coeffs;
  for (std::size_t s = 0; s < walk.rows.size(); ++s) {
    // Walk rows are edge ids here; map to system rows below.
    const Index e = walk.rows[s];
    rows.push_back(g.edge(e).row);
    coeffs.push_back(step_coefficient(g, e, walk.vertices[s], s));
  }
  if (kind == CircuitKind::kGeneral) {
    auto lowest = std::min_element(rows.begin(), rows.end()) - rows.begin();
    if (coeffs[static_cast<std::size_t>(lowest)] < 0.0) {
      for (double& c : coeffs) c = -c;
    }
  }
  return Circuit(kind, std::move(rows), std::move(coeffs));
}

inline Walk to_row_walk(const CharacteristicGraph& g, Walk edge_walk) {
  for (Index& e : edge_walk.rows) e = g.edge(e).row;
  return edge_walk;
}

// Shortest path from k to l inside `allowed`, lexicographically smallest
// vertex sequence, lowest row among parallel edges. Returns edge ids.
inline std::optional<Walk> shortest_path(const CharacteristicGraph& g, Index k, Index l,
                                         const std::unordered_map<Index, Index>& allowed) {
  // Distances to l.
  std::unordered_map<Index, Index> to_l;
  std::deque<Index> queue{l};
  to_l.emplace(l, 0);
  while (!queue.empty() && !to_l.count(k)) {
    const Index v = queue.front();
    queue.pop_front();
    for (const auto& nb : g.neighbors(v)) {
      if (!allowed.count(nb.vertex)) continue;
      if (to_l.emplace(nb.vertex, to_l[v] + 1).second) queue.push_back(nb.vertex);
    }
  }
  if (!to_l.count(k)) return std::nullopt;
  Walk w;
  w.vertices.push_back(k);
  Index v = k;
  while (v != l) {
    const Index d = to_l.at(v);
    for (const auto& nb : g.neighbors(v)) {  // sorted by (vertex, row)
      auto it = to_l.find(nb.vertex);
      if (it != to_l.end() && it->second == d - 1 && allowed.count(nb.vertex)) {
        w.rows.push_back(nb.edge);
        w.vertices.push_back(nb.vertex);
        v = nb.vertex;
        break;
      }
    }
  }
  return w;
}

// Fundamental cycles of a BFS spanning forest of the subgraph induced by
// `local` (root first, then remaining vertices in `order`). Edge ids.
inline std::vector<Walk> fundamental_cycles(const CharacteristicGraph& g,
                                            const std::vector<Index>& order,
                                            const std::unordered_map<Index, Index>& local) {
  std::unordered_map<Index, Index> depth;
  std::unordered_map<Index, std::pair<Index, Index>> parent;  // vertex -> (parent, edge)
  std::unordered_set<Index> tree_edges;
  std::vector<Index> visit_order;
  for (Index root : order) {
    if (depth.count(root)) continue;
    depth.emplace(root, 0);
    std::deque<Index> queue{root};
    while (!queue.empty()) {
      const Index v = queue.front();
      queue.pop_front();
      visit_order.push_back(v);
      for (const auto& nb : g.neighbors(v)) {
        if (!local.count(nb.vertex)) continue;
        if (depth.emplace(nb.vertex, depth[v] + 1).second) {
          parent.emplace(nb.vertex, std::make_pair(v, nb.edge));
          tree_edges.insert(nb.edge);
          queue.push_back(nb.vertex);
        }
      }
    }
  }
  std::vector<Walk> cycles;
  std::unordered_set<Index> seen;
  for (Index v : visit_order) {
    for (const auto& nb : g.neighbors(v)) {
      if (!local.count(nb.vertex) || tree_edges.count(nb.edge)) continue;
      if (!seen.insert(nb.edge).second) continue;
      // Cycle: v -> ... -> lca <- ... <- u, closed by the edge (u, v).
      const Index u = nb.vertex;
      std::vector<Index> up_v{v}, up_u{u};
      std::vector<Index> edges_v, edges_u;
      Index a = v, b = u;
      while (depth.at(a) > depth.at(b)) {
        edges_v.push_back(parent.at(a).second);
        a = parent.at(a).first;
        up_v.push_back(a);
      }
      while (depth.at(b) > depth.at(a)) {
        edges_u.push_back(parent.at(b).second);
        b = parent.at(b).first;
        up_u.push_back(b);
      }
      while (a != b) {
        edges_v.push_back(parent.at(a).second);
        a = parent.at(a).first;
        up_v.push_back(a);
        edges_u.push_back(parent.at(b).second);
        b = parent.at(b).first;
        up_u.push_back(b);
      }
      Walk w;
      // lca -> ... -> u, then edge u -> v, then v -> ... -> lca.
      for (std::size_t i = up_u.size(); i-- > 0;) w.vertices.push_back(up_u[i]);
      for (std::size_t i = edges_u.size(); i-- > 0;) w.rows.push_back(edges_u[i]);
      w.rows.push_back(nb.edge);
      for (std::size_t i = 0; i < up_v.size(); ++i) w.vertices.push_back(up_v[i]);
      for (Index e : edges_v) w.rows.push_back(e);
      cycles.push_back(std::move(w));
    }
  }
  std::stable_sort(cycles.begin(), cycles.end(), [](const Walk& x, const Walk& y) {
    return x.rows.size() < y.rows.size();
  });
  return cycles;
}

inline Index min_row(const CharacteristicGraph& g, const Walk& w) {
  Index m = std::numeric_limits<Index>::max();
  for (Index e : w.rows) m = std::min(m, g.edge(e).row);
  return m;
}

}  // namespace detail

// Target w = e_k - e_l on a difference graph. The base is the shortest k-l
// path; the generals are the fundamental cycles of a BFS tree rooted at k
// over the vertices within budget.radius of {k, l}, shortest first.
inline GraphCircuits potential_circuits(const CharacteristicGraph& graph, Index k, Index l,
                                        const DiscoveryBudget& budget) {
  budget.check();
  if (graph.mode() != EdgeMode::kDifference) {
    throw Error(ErrorCode::kInvalidArgument, "potential circuits need a difference graph");
  }
  graph.check_vertex(k);
  graph.check_vertex(l);
  if (k == l) throw Error(ErrorCode::kInvalidArgument, "target endpoints coincide");

  const Index sources[] = {k, l};
  const detail::LocalBfs local = detail::ball(graph, sources, budget.radius);
  auto path = detail::shortest_path(graph, k, l, local.dist);
  if (!path) {
    std::ostringstream msg;
    msg << "no path from " << k << " to " << l << " within radius " << budget.radius;
    throw Error(ErrorCode::kNoPath, msg.str());
  }
  GraphCircuits out{detail::circuit_from_walk(graph, *path, CircuitKind::kParticular),
                    detail::to_row_walk(graph, *path), {}, {}};

  std::vector<Index> roots{k};
  roots.insert(roots.end(), local.order.begin(), local.order.end());
  for (const Walk& cyc : detail::fundamental_cycles(graph, roots, local.dist)) {
    if (static_cast<Index>(out.generals.size()) >= budget.max_circuits) break;
    if (static_cast<Index>(cyc.rows.size()) > budget.max_support) continue;
    out.generals.push_back(detail::circuit_from_walk(graph, cyc, CircuitKind::kGeneral));
    out.general_walks.push_back(detail::to_row_walk(graph, cyc));
  }
  return out;
}

namespace detail {

// Shortest odd-length simple k-l path. First tries the shortest odd walk on
// the parity double cover; if that walk repeats a vertex, falls back to
// iterative deepening over simple paths up to max_length.
inline std::optional<Walk> shortest_odd_path(const CharacteristicGraph& g, Index k, Index l,
                                             const std::unordered_map<Index, Index>& allowed,
                                             Index max_length) {
  using State = std::pair<Index, int>;  // (vertex, parity of steps taken)
  struct StateHash {
    std::size_t operator()(const State& s) const {
      return std::hash<Index>()(s.first * 2 + s.second);
    }
  };
  // Distances to the goal state (l, odd) computed backwards.
  std::unordered_map<State, Index, StateHash> to_goal;
  std::deque<State> queue{{l, 1}};
  to_goal.emplace(State{l, 1}, 0);
  while (!queue.empty() && !to_goal.count({k, 0})) {
    const State s = queue.front();
    queue.pop_front();
    for (const auto& nb : g.neighbors(s.first)) {
      if (!allowed.count(nb.vertex)) continue;
      const State prev{nb.vertex, 1 - s.second};
      if (to_goal.emplace(prev, to_goal[s] + 1).second) queue.push_back(prev);
    }
  }
  if (!to_goal.count({k, 0})) return std::nullopt;

  Walk w;
  w.vertices.push_back(k);
  State s{k, 0};
  while (!(s.first == l && s.second == 1)) {
    const Index d = to_goal.at(s);
    for (const auto& nb : g.neighbors(s.first)) {
      const State next{nb.vertex, 1 - s.second};
      auto it = to_goal.find(next);
      if (it != to_goal.end() && it->second == d - 1 && allowed.count(nb.vertex)) {
        w.rows.push_back(nb.edge);
        w.vertices.push_back(nb.vertex);
        s = next;
        break;
      }
    }
  }
  std::unordered_set<Index> distinct(w.vertices.begin(), w.vertices.end());
  if (distinct.size() == w.vertices.size()) return w;

  // Iterative deepening over simple paths of odd length, with a cap on the
  // number of expansions.
  const Index shortest_walk = static_cast<Index>(w.rows.size());
  std::int64_t expansions = 0;
  constexpr std::int64_t kMaxExpansions = 2000000;
  for (Index len = shortest_walk; len <= max_length; len += 2) {
    Walk cur;
    cur.vertices.push_back(k);
    std::unordered_set<Index> on_path{k};
    std::optional<Walk> found;
    auto dfs = [&](auto&& self, Index v) -> bool {
      if (static_cast<Index>(cur.rows.size()) == len) {
        if (v == l) {
          found = cur;
          return true;
        }
        return false;
      }
      for (const auto& nb : g.neighbors(v)) {
        if (!allowed.count(nb.vertex) || on_path.count(nb.vertex)) continue;
        if (nb.vertex == l && static_cast<Index>(cur.rows.size()) + 1 != len) continue;
        if (++expansions > kMaxExpansions) return false;
        cur.rows.push_back(nb.edge);
        cur.vertices.push_back(nb.vertex);
        on_path.insert(nb.vertex);
        if (self(self, nb.vertex)) return true;
        on_path.erase(nb.vertex);
        cur.rows.pop_back();
        cur.vertices.pop_back();
      }
      return false;
    };
    if (dfs(dfs, k)) return found;
    if (expansions > kMaxExpansions) break;
  }
  return std::nullopt;
}

}  // namespace detail

// Target w = e_k + e_l on a sum graph. The base is the shortest odd simple
// k-l path with alternating coefficients; the generals are the even
// fundamental cycles of the local BFS tree (odd cycles are not in the kernel).
inline GraphCircuits signed_sum_circuits(const CharacteristicGraph& graph, Index k, Index l,
                                         const DiscoveryBudget& budget) {
  budget.check();
  if (graph.mode() != EdgeMode::kSum) {
    throw Error(ErrorCode::kInvalidArgument, "signed-sum circuits need a sum graph");
  }
  graph.check_vertex(k);
  graph.check_vertex(l);
  if (k == l) throw Error(ErrorCode::kInvalidArgument, "target endpoints coincide");

  const Index sources[] = {k, l};
  const detail::LocalBfs local = detail::ball(graph, sources, budget.radius);
  auto path = detail::shortest_odd_path(graph, k, l, local.dist,
                                        std::max<Index>(budget.max_support, 1));
  if (!path) {
    std::ostringstream msg;
    msg << "no odd-length simple path from " << k << " to " << l << " within budget";
    throw Error(ErrorCode::kNoOddPath, msg.str());
  }
  GraphCircuits out{detail::circuit_from_walk(graph, *path, CircuitKind::kParticular),
                    detail::to_row_walk(graph, *path), {}, {}};

  std::vector<Index> roots{k};
  roots.insert(roots.end(), local.order.begin(), local.order.end());
  for (const Walk& cyc : detail::fundamental_cycles(graph, roots, local.dist)) {
    if (static_cast<Index>(out.generals.size()) >= budget.max_circuits) break;
    if (cyc.rows.size() % 2 != 0) continue;
    if (static_cast<Index>(cyc.rows.size()) > budget.max_support) continue;
    out.generals.push_back(detail::circuit_from_walk(graph, cyc, CircuitKind::kGeneral));
    out.general_walks.push_back(detail::to_row_walk(graph, cyc));
  }
  return out;
}

struct LowRankCircuits {
  std::vector<Circuit> particulars;  // disjoint blocks of r rows
  Index skipped = 0;                 // blocks that were rank deficient or not minimal
};

// Splits the rows into floor(N / r) consecutive blocks of r rows; every block
// that expresses w with full support becomes a particular circuit.
inline LowRankCircuits lowrank_circuits(const SparseLinearSystem& system, Index rank,
                                        const TargetVector& target,
                                        double tol = kDefaultTolerance) {
  if (rank <= 0) throw Error(ErrorCode::kInvalidArgument, "rank must be positive");
  check_target(system, target);
  if (system.num_rows() < rank) {
    throw Error(ErrorCode::kRankTooLow, "fewer rows than the rank");
  }
  LowRankCircuits out;
  const Index blocks = system.num_rows() / rank;
  for (Index b = 0; b < blocks; ++b) {
    std::vector<Index> rows(static_cast<std::size_t>(rank));
    for (Index i = 0; i < rank; ++i) rows[static_cast<std::size_t>(i)] = b * rank + i;
    const auto stacked = detail::stack_rows(system, rows, nullptr);
    if (detail::numerical_rank(stacked.matrix, tol) < rank) {
      ++out.skipped;
      continue;
    }
    try {
      out.particulars.push_back(
          circuit_vector(system, &target, rows, CircuitKind::kParticular, tol));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotACircuit) throw;
      ++out.skipped;
    }
  }
  if (out.particulars.empty()) {
    throw Error(ErrorCode::kRankTooLow, "no block of full rank expresses the target");
  }
  return out;
}

namespace detail {

inline Index kernel_dimension(const SparseLinearSystem& system,
                              const std::vector<Index>& rows, const TargetVector* target,
                              double tol) {
  const auto stacked = stack_rows(system, rows, target);
  return static_cast<Index>(rows.size()) + (target ? 1 : 0) -
         numerical_rank(stacked.matrix, tol);
}

}  // namespace detail

// A general circuit inside the candidate rows D: start from a left-kernel
// vector of A[D, :], then drop rows (smallest |coefficient| first) while a
// nonzero kernel vector survives. The result is minimal by construction and
// is certified through circuit_vector.
inline Circuit l1_circuit_search(const SparseLinearSystem& system,
                                 std::vector<Index> candidate_rows,
                                 double tol = kDefaultTolerance) {
  candidate_rows = detail::sorted_unique(std::move(candidate_rows));
  if (candidate_rows.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two candidate rows");
  }
  const auto stacked = detail::stack_rows(system, candidate_rows, nullptr);
  const Eigen::MatrixXd kernel = detail::left_kernel(stacked.matrix, tol);
  if (kernel.cols() == 0) {
    throw Error(ErrorCode::kNoKernel, "candidate rows have full row rank");
  }
  // Order removal attempts by the magnitude of a sparse-ish kernel vector:
  // the kernel column with the smallest l1/l2 ratio.
  Index best = 0;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < kernel.cols(); ++j) {
    const double ratio = kernel.col(j).lpNorm<1>() / kernel.col(j).norm();
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = j;
    }
  }
  std::vector<std::pair<double, Index>> order;
  for (std::size_t t = 0; t < candidate_rows.size(); ++t) {
    order.emplace_back(std::abs(kernel(static_cast<Index>(t), best)), candidate_rows[t]);
  }
  std::sort(order.begin(), order.end());

  std::vector<Index> current = candidate_rows;
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (const auto& [mag, row] : order) {
      if (current.size() <= 1) break;
      std::vector<Index> trial;
      for (Index r : current) {
        if (r != row) trial.push_back(r);
      }
      if (trial.size() == current.size()) continue;
      if (detail::kernel_dimension(system, trial, nullptr, tol) > 0) current = std::move(trial);
    }
    try {
      return circuit_vector(system, nullptr, current, CircuitKind::kGeneral, tol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotACircuit) throw;
    }
  }
  return circuit_vector(system, nullptr, current, CircuitKind::kGeneral, tol);
}

// Minimal subset of `candidate_rows` whose span contains w, found by greedy
// deletion. Such a subset is independent with all coefficients nonzero, so
// it is a particular circuit.
inline Circuit particular_circuit_search(const SparseLinearSystem& system,
                                         const TargetVector& target,
                                         std::vector<Index> candidate_rows,
                                         double tol = kDefaultTolerance) {
  check_target(system, target);
  candidate_rows = detail::sorted_unique(std::move(candidate_rows));
  auto expresses = [&](const std::vector<Index>& rows) {
    if (rows.empty()) return false;
    const auto with_w = detail::stack_rows(system, rows, &target);
    Eigen::MatrixXd without = with_w.matrix.topRows(with_w.matrix.rows() - 1);
    return detail::numerical_rank(with_w.matrix, tol) == detail::numerical_rank(without, tol);
  };
  if (!expresses(candidate_rows)) {
    throw Error(ErrorCode::kTargetOutsideRowSpan,
                "target is not in the span of the candidate rows");
  }
  std::vector<Index> current = candidate_rows;
  for (auto it = candidate_rows.rbegin(); it != candidate_rows.rend(); ++it) {
    std::vector<Index> trial;
    for (Index r : current) {
      if (r != *it) trial.push_back(r);
    }
    if (expresses(trial)) current = std::move(trial);
  }
  return circuit_vector(system, &target, current, CircuitKind::kParticular, tol);
}

// Fundamental circuits of the rows in D with respect to a greedily chosen row
// basis (rows of `preferred` first). They span the left kernel of A[D, :].
inline std::vector<Circuit> fundamental_circuits(const SparseLinearSystem& system,
                                                 std::vector<Index> candidate_rows,
                                                 const std::vector<Index>& preferred = {},
                                                 double tol = kDefaultTolerance) {
  candidate_rows = detail::sorted_unique(std::move(candidate_rows));
  std::vector<Index> order;
  std::set<Index> in_d(candidate_rows.begin(), candidate_rows.end());
  std::set<Index> placed;
  for (Index r : preferred) {
    if (in_d.count(r) && placed.insert(r).second) order.push_back(r);
  }
  for (Index r : candidate_rows) {
    if (placed.insert(r).second) order.push_back(r);
  }
  std::erase_if(order, [&](Index r) {
    bool any = false;
    system.for_each_in_row(r, [&](Index, double v) { any = any || v != 0.0; });
    return !any;
  });
  if (order.empty()) return {};

  const auto stacked = detail::stack_rows(system, order, nullptr);
  // Row basis: independent columns of the transpose.
  const std::vector<Index> basis_pos =
      detail::independent_columns(stacked.matrix.transpose(), tol);
  std::vector<char> in_basis(order.size(), 0);
  for (Index p : basis_pos) in_basis[static_cast<std::size_t>(p)] = 1;
  std::vector<Index> basis;
  for (Index p : basis_pos) basis.push_back(order[static_cast<std::size_t>(p)]);

  Eigen::MatrixXd basis_rows(static_cast<Index>(basis_pos.size()), stacked.matrix.cols());
  for (std::size_t t = 0; t < basis_pos.size(); ++t) {
    basis_rows.row(static_cast<Index>(t)) = stacked.matrix.row(basis_pos[t]);
  }
  std::vector<Circuit> out;
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (in_basis[p]) continue;
    // Unique expression of row p in the basis; its support plus p is the
    // fundamental circuit.
    const Eigen::VectorXd coeffs = detail::min_norm_solve(
        basis_rows.transpose(), stacked.matrix.row(static_cast<Index>(p)).transpose(), tol);
    const double scale = std::max(coeffs.cwiseAbs().maxCoeff(), 1.0);
    std::vector<Index> rows{order[p]};
    for (Index t = 0; t < coeffs.size(); ++t) {
      if (std::abs(coeffs(t)) > tol * scale) rows.push_back(basis[static_cast<std::size_t>(t)]);
    }
    out.push_back(circuit_vector(system, nullptr, rows, CircuitKind::kGeneral, tol));
  }
  return out;
}

// Rows reachable from supp(w) within `radius` hops of the row/column
// incidence graph (row -> its columns -> rows sharing them). Builds a
// column-major copy of A, so this costs O(nnz(A)) per call.
inline std::vector<Index> local_rows(const SparseLinearSystem& system,
                                     const TargetVector& target, Index radius,
                                     Index max_rows) {
  // Column -> rows index built on demand from the column-major transpose.
  Eigen::SparseMatrix<double, Eigen::ColMajor> cols = system.matrix();
  std::unordered_set<Index> seen_cols, seen_rows;
  std::vector<Index> frontier;
  target.for_each([&](Index c, double) {
    if (seen_cols.insert(c).second) frontier.push_back(c);
  });
  std::vector<Index> rows;
  for (Index hop = 0; hop < radius && !frontier.empty(); ++hop) {
    std::vector<Index> next;
    for (Index c : frontier) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(cols, c); it; ++it) {
        const Index r = it.row();
        if (it.value() == 0.0 || !seen_rows.insert(r).second) continue;
        rows.push_back(r);
        if (static_cast<Index>(rows.size()) >= max_rows) {
          std::sort(rows.begin(), rows.end());
          return rows;
        }
        system.for_each_in_row(r, [&](Index c2, double v) {
          if (v != 0.0 && seen_cols.insert(c2).second) next.push_back(c2);
        });
      }
    }
    frontier = std::move(next);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

// Generic local discovery: a particular circuit and fundamental general
// circuits among the rows near supp(w).
inline ParticularSystem local_circuits(const SparseLinearSystem& system,
                                       const TargetVector& target,
                                       const DiscoveryBudget& budget,
                                       double tol = kDefaultTolerance) {
  budget.check();
  const Index cap = budget.max_support > std::numeric_limits<Index>::max() / 8
                        ? system.num_rows()
                        : std::max<Index>(budget.max_support * 4, budget.max_support);
  const std::vector<Index> rows = local_rows(system, target, budget.radius, cap);
  Circuit base = particular_circuit_search(system, target, rows, tol);
  std::vector<Circuit> generals;
  for (Circuit& c : fundamental_circuits(system, rows, base.indices(), tol)) {
    if (static_cast<Index>(generals.size()) >= budget.max_circuits) break;
    if (c.size() <= budget.max_support) generals.push_back(std::move(c));
  }
  return ParticularSystem(std::move(base), std::move(generals));
}

struct CircuitCatalog {
  std::vector<Circuit> particulars;
  std::vector<Circuit> generals;
};

// Exhaustive enumeration of all circuits with at most max_size rows, in size
// order, skipping supersets of circuits already found. Particular circuits
// are only enumerated when a target is given.
inline CircuitCatalog brute_force_circuits(const SparseLinearSystem& system,
                                           const TargetVector* target, Index max_size,
                                           double tol = kDefaultTolerance,
                                           std::uint64_t guard = 1000000) {
  const Index n = system.num_rows();
  max_size = std::min(max_size, n);
  // Count subsets with overflow-safe arithmetic.
  double total = 0.0, binom = 1.0;
  for (Index s = 0; s <= max_size; ++s) {
    if (s > 0) binom = binom * static_cast<double>(n - s + 1) / static_cast<double>(s);
    total += binom;
  }
  if (total > static_cast<double>(guard)) {
    std::ostringstream msg;
    msg << "enumeration would visit " << total << " subsets (guard " << guard << ")";
    throw Error(ErrorCode::kTooLarge, msg.str());
  }
  if (target) check_target(system, *target);

  CircuitCatalog out;
  auto contains = [](const std::vector<Index>& super, const std::vector<Index>& sub) {
    return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
  };
  std::vector<Index> subset;
  for (Index size = 1; size <= max_size; ++size) {
    subset.resize(static_cast<std::size_t>(size));
    for (Index i = 0; i < size; ++i) subset[static_cast<std::size_t>(i)] = i;
    while (true) {
      bool general_super = false;
      for (const Circuit& c : out.generals) {
        if (contains(subset, c.indices())) {
          general_super = true;
          break;
        }
      }
      if (!general_super) {
        try {
          out.generals.push_back(
              circuit_vector(system, nullptr, subset, CircuitKind::kGeneral, tol));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNotACircuit && e.code() != ErrorCode::kDegenerateInput) throw;
        }
        if (target) {
          bool particular_super = false;
          for (const Circuit& c : out.particulars) {
            if (contains(subset, c.indices())) {
              particular_super = true;
              break;
            }
          }
          if (!particular_super) {
            try {
              out.particulars.push_back(
                  circuit_vector(system, target, subset, CircuitKind::kParticular, tol));
            } catch (const Error& e) {
              if (e.code() != ErrorCode::kNotACircuit && e.code() != ErrorCode::kDegenerateInput) throw;
            }
          }
        }
      }
      // Next combination in lexicographic order.
      Index i = size - 1;
      while (i >= 0 && subset[static_cast<std::size_t>(i)] == n - size + i) --i;
      if (i < 0) break;
      ++subset[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < size; ++j) {
        subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return out;
}

inline CircuitCatalog brute_force_circuits(const SparseLinearSystem& system,
                                           const TargetVector& target, Index max_size,
                                           double tol = kDefaultTolerance) {
  return brute_force_circuits(system, &target, max_size, tol);
}

}  // namespace mreg

#endif  // MREG_CIRCUIT_DISCOVERY_HPP
