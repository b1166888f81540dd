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

#ifndef FACTS_STRUCTURAL_MODEL_HPP_
#define FACTS_STRUCTURAL_MODEL_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facts/dataset.hpp"
#include "facts/fact_search.hpp"
#include "facts/graph.hpp"
#include "json.hpp"

namespace facts {

enum class LinkKind { Linear, Logistic, Multinomial };

std::string to_string(LinkKind kind);

// One regression link: a single target feature explained by its group's
// predecessor members (plus the sensitive attribute when the partition puts
// it among the predecessors) and the uninvolved features.
struct LinkFunction {
  int target_node = -1;
  int target_col = -1;
  LinkKind kind = LinkKind::Linear;
  std::vector<int> input_nodes;   // graph node ids, same order as input_cols
  std::vector<int> input_cols;    // dataset columns
  std::vector<int> input_levels;  // categorical level count per input, else 0
  // Rows: 1 for linear/logistic, one per class for multinomial. Column 0 is
  // the intercept; categorical inputs occupy level_count-1 indicator slots.
  Eigen::MatrixXd coef;

  int design_dim() const;
  Eigen::VectorXd design(const std::vector<double>& raw_inputs) const;
  // Linear prediction (continuous targets only).
  double mean(const std::vector<double>& raw_inputs) const;
  // Class probabilities (binary: [p0, p1]; categorical: normalized).
  Eigen::VectorXd class_probabilities(const std::vector<double>& raw_inputs) const;

  nlohmann::json to_json(const Pdag& graph, const Dataset& data) const;
};

// Continuous targets: prediction + additive residual. Discrete targets: the
// residual is a latent quantile u in [0,1]; returns the class whose interval
// in the class-probability CDF contains u (quantile preservation).
double counterfactual_value(const LinkFunction& link,
                            const std::vector<double>& raw_inputs,
                            double residual);

// Residual making counterfactual_value reproduce the observed value exactly
// when fed the observed inputs.
double extract_residual(const LinkFunction& link,
                        const std::vector<double>& raw_inputs, double observed);

struct FitConfig {
  int min_stratum_rows = 30;
  int max_irls_iters = 100;
};

struct StructuralModel {
  bool conditional = false;
  std::vector<int> targets;       // dataset columns in group-fit order
  std::vector<int> target_nodes;  // matching graph node ids
  // One link set when marginal; one per Y value (index = y) when conditional.
  std::vector<std::vector<LinkFunction>> link_sets;
  std::vector<int> row_stratum;  // all 0 when marginal
  Eigen::MatrixXd residuals;     // rows x targets

  int target_index(int col) const;  // -1 when absent
  const LinkFunction& link(int row, int target_idx) const {
    return link_sets[row_stratum[row]][target_idx];
  }
  double residual(int row, int target_idx) const {
    return residuals(row, target_idx);
  }

  // Residual table for another dataset with the same schema (rows are
  // assigned to strata by their outcome value when conditional).
  std::pair<Eigen::MatrixXd, std::vector<int>> residuals_for(
      const Dataset& data) const;

  nlohmann::json to_json(const Pdag& graph, const Dataset& data) const;
};

// Maps graph nodes to dataset columns by name; -1 for nodes without a column
// (the prediction node, and the outcome when absent from the data).
std::vector<int> node_columns(const Pdag& graph, const Dataset& data);

StructuralModel fit_structural_model(const Dataset& data, const Pdag& graph,
                                     const GroupPartition& partition,
                                     const FactSet& facts,
                                     const FitConfig& config = {});

// Appendix variant: one link set per Y stratum, residuals taken from the
// row's own stratum.
StructuralModel fit_conditional_models(const Dataset& data, const Pdag& graph,
                                       const GroupPartition& partition,
                                       const FactSet& facts,
                                       const FitConfig& config = {});

}  // namespace facts

#endif  // FACTS_STRUCTURAL_MODEL_HPP_
