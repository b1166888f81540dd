// Copyright 2026 The facts Authors
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

#ifndef FACTS_FACT_SEARCH_HPP_
#define FACTS_FACT_SEARCH_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "facts/graph.hpp"
#include "json.hpp"

namespace facts {

// Whether paths are enumerated marginally or relative to the conditioning
// set {Y} (used by the conditional disparity metrics).
enum class FactMode { Marginal, RelativeToY };

// Structural: a path with undirected edges is kept whenever some orientation
// of the graph's undirected edges yields a DAG making it active (no data
// access). CiChecked: that witness DAG must additionally imply conditional
// (in)dependencies, over pairs of the path's nodes, that agree with the CI
// oracle.
enum class SearchMode { Structural, CiChecked };

// Conditional-independence oracle. `independent(i, j, cond)` answers whether
// X_i and X_j are independent given the conditioning node set. Must be
// symmetric in (i, j) and deterministic.
struct CiOracle {
  std::function<bool(int, int, const std::vector<int>&)> independent;
  double alpha = 0.01;
};

enum class Tri { No, Yes, Indeterminate };

// Potential-active test over a simple path in a PDAG (conditions 1-3 of the
// definition). `budget` bounds the number of full-graph orientations examined
// for condition 3; if it runs out before a witness is found the result is
// Indeterminate, which is distinct from No.
Tri is_potential_active(const Pdag& graph, const Path& path, FactMode fact_mode,
                        SearchMode mode, const CiOracle* ci,
                        std::size_t budget);

// Group-level endpoint markers used in flow sequences and edge indices.
inline constexpr int kSensitiveMark = -1;
inline constexpr int kPredictionMark = -2;

struct FactSet {
  FactMode mode = FactMode::Marginal;
  std::vector<Path> paths;  // each from A to Yhat, shortest first
  // Per path: the interior involved features in information-flow order.
  // Identical to the path interior except that the outcome collider is
  // dropped (an X_i -> Y <- X_j segment transmits information X_i => X_j).
  std::vector<std::vector<int>> flows;
  std::vector<int> involved;    // X(P), sorted
  std::vector<int> uninvolved;  // feature nodes not in X(P), sorted
  // Flow-level edge -> path ids traversing it. Endpoints use kSensitiveMark /
  // kPredictionMark so A -> X_i and X_i -> Yhat segments are indexed too.
  std::map<std::pair<int, int>, std::set<int>> edge_index;
  std::vector<std::string> warnings;

  nlohmann::json to_json(const Pdag& graph) const;
};

FactSet search_facts(const Pdag& graph, SearchMode mode = SearchMode::Structural,
                     const CiOracle* ci = nullptr, std::size_t budget = 4096);

// Appendix variant: simple potential active paths from A to Yhat relative to
// {Y}; Y may appear as a collider on the path.
FactSet search_facts_relative_to_y(const Pdag& graph,
                                   SearchMode mode = SearchMode::Structural,
                                   const CiOracle* ci = nullptr,
                                   std::size_t budget = 4096);

struct OrderRelation {
  FactMode mode = FactMode::Marginal;
  // Direct (Marginal) or informative (RelativeToY) predecessors/successors,
  // keyed by node id. The sensitive node appears as a predecessor where the
  // mode's linking rule puts it.
  std::map<int, std::set<int>> predecessors;
  std::map<int, std::set<int>> successors;
  bool complete = false;

  // Strict priority: true iff i and j share a path and i precedes j on all
  // shared paths (flow order).
  bool prior(int i, int j) const;
  std::set<std::pair<int, int>> prior_pairs;  // (i, j) with i prior to j
};

OrderRelation compute_order_relations(const Pdag& graph, const FactSet& facts);

struct GroupPartition {
  FactMode mode = FactMode::Marginal;
  std::vector<std::vector<int>> groups;  // disjoint node sets covering X(P)
  std::vector<int> node_to_group;        // node id -> group id, -1 elsewhere
  // Group-level paths: [kSensitiveMark, g_1, ..., g_k, kPredictionMark],
  // deduplicated, no consecutive repeats.
  std::vector<std::vector<int>> grouped_paths;
  // Flow-level edge -> grouped path ids.
  std::map<std::pair<int, int>, std::set<int>> edge_index;
  // Per group: predecessor groups and whether A is a (direct/informative)
  // predecessor; `order` lists groups in a fit-compatible topological order.
  std::vector<std::set<int>> group_predecessors;
  std::vector<bool> sensitive_in_predecessors;
  std::vector<int> order;
  bool complete = false;

  std::string group_name(const Pdag& graph, int group) const;
  std::string path_name(const Pdag& graph, int path_id) const;
  nlohmann::json to_json(const Pdag& graph) const;
};

GroupPartition group_variables(const Pdag& graph, const FactSet& facts,
                               const OrderRelation& order);

}  // namespace facts

#endif  // FACTS_FACT_SEARCH_HPP_
