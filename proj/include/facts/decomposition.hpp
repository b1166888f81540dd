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

#ifndef FACTS_DECOMPOSITION_HPP_
#define FACTS_DECOMPOSITION_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "facts/dataset.hpp"
#include "facts/fact_search.hpp"
#include "facts/graph.hpp"
#include "facts/predictor.hpp"
#include "facts/structural_model.hpp"
#include "json.hpp"

namespace facts {

enum class MetricKind {
  DemographicParity,
  EqualizedOpportunity,  // conditioned on Y=1
  EqualizedOddsY0,       // conditioned on Y=0
  AccuracyParity,
};

std::string to_string(MetricKind kind);

struct MetricSpec {
  MetricKind kind = MetricKind::DemographicParity;
  // Draw a' from P(A|Y=y) instead of P(A) for the conditional metrics.
  bool condition_a_on_y = true;

  bool conditional() const { return kind != MetricKind::DemographicParity; }
  // Accuracy parity scores correctness f_y = y f + (1-y)(1-f).
  bool uses_fy() const { return kind == MetricKind::AccuracyParity; }
  // Stratum restriction: -1 = all rows.
  int stratum() const {
    switch (kind) {
      case MetricKind::EqualizedOpportunity: return 1;
      case MetricKind::EqualizedOddsY0: return 0;
      default: return -1;
    }
  }
};

struct PermutationPlan {
  int orderings = 100;
  std::uint64_t seed = 1;
  bool exact = false;
  int exact_bound = 7;
};

// Immutable bundle of everything the value function needs. All references
// must outlive the context.
struct EngineContext {
  const Pdag& graph;
  const Dataset& data;
  const FactSet& facts;
  const GroupPartition& partition;
  const StructuralModel& sm;
  const Predictor& predictor;
  MetricSpec metric;

  Encoding f_encoding;            // predictor inputs: all feature columns
  std::vector<int> node_to_col;
  std::vector<int> feature_nodes;  // f's input order
  double p_a1[3] = {0, 0, 0};      // P(A=1), P(A=1|Y=0), P(A=1|Y=1)

  // Edge-coalition lookup tables over grouped paths, built once in make().
  struct EdgeMasks {
    std::map<std::pair<int, int>, std::uint64_t> edges;
    std::vector<std::uint64_t> group_paths;  // paths containing each group
    std::vector<std::uint64_t> a_edge;       // mask of the A -> group edge
    std::vector<bool> a_edge_present;
  };
  EdgeMasks masks;

  static EngineContext make(const Pdag& graph, const Dataset& data,
                            const FactSet& facts,
                            const GroupPartition& partition,
                            const StructuralModel& sm,
                            const Predictor& predictor, MetricSpec metric);

  int path_count() const {
    return static_cast<int>(partition.grouped_paths.size());
  }
};

// Measured disparity of the predictor on the data under the metric
// (A=1 group mean minus A=0 group mean of the metric's score).
double disparity(const Dataset& data, const Predictor& predictor,
                 const Encoding& f_encoding, MetricSpec metric);

// Coalition value: expected score after propagating counterfactual values
// along the FACT skeleton, with edges whose traversing FACTs all sit inside
// the coalition transmitting observed values. Coalition members are grouped
// path ids. When `fy_transform` the score is the correctness f_y.
double value_function(const EngineContext& ctx, int row,
                      const std::vector<int>& coalition,
                      bool fy_transform = false);

struct ShapleyRow {
  std::vector<double> phi;       // per grouped path
  std::vector<double> variance;  // across sampled orderings (0 when exact)
  double v_full = 0.0;
  double v_empty = 0.0;
};

// Per-row path Shapley values: exact permutation enumeration when the plan
// says so and |P| <= exact_bound, otherwise R sampled orderings (the same
// orderings serve every path, so per-row contributions telescope exactly).
ShapleyRow path_shapley(const EngineContext& ctx, int row,
                        const PermutationPlan& plan, bool fy_transform = false);

struct ContributionReport {
  MetricKind kind = MetricKind::DemographicParity;
  std::vector<std::string> path_names;
  std::vector<double> phi;
  std::vector<double> phi_se;
  double baseline_mean_a0 = 0.0;  // group means of v(empty)
  double baseline_mean_a1 = 0.0;
  double total_phi = 0.0;
  double disparity = 0.0;
  double efficiency_gap = 0.0;  // |total_phi - disparity|
  std::vector<std::string> warnings;

  // Feature-level aggregates: terminal group name -> summed phi.
  std::map<std::string, double> feature_aggregates;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Per-path contributions to the metric's disparity. Rows are restricted to
// the metric's stratum; Phi(p) is the A-group mean difference of per-row phi.
// `gap_alarm` adds a warning (never an error) when the normalized efficiency
// gap exceeds it.
ContributionReport disparity_contributions(const EngineContext& ctx,
                                           const PermutationPlan& plan,
                                           double gap_alarm = 0.05);

struct UtilityReport {
  std::vector<std::string> path_names;
  std::vector<double> psi;
  double psi_empty = 0.0;
  double total_utility = 0.0;  // measured U(f)
  double decomposed_total = 0.0;

  nlohmann::json to_json() const;
};

// Per-path contributions to accuracy: psi uses the f_y-scored value function
// over all rows; psi_empty + sum(psi) telescopes to U(f) under the exact plan.
UtilityReport utility_contributions(const EngineContext& ctx,
                                    const PermutationPlan& plan);

// Sum of phi over paths sharing a terminal group, keyed by group name.
std::map<std::string, double> aggregate_to_features(
    const std::vector<double>& phi, const GroupPartition& partition,
    const Pdag& graph);

}  // namespace facts

#endif  // FACTS_DECOMPOSITION_HPP_
