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

#include "facts/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace facts {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

double normal(std::uint64_t& state) {
  double u1 = uniform01(state);
  double u2 = uniform01(state);
  u1 = std::max(u1, 1e-300);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Magnitude in [0.5, 1.5] with a random sign; keeps every declared edge far
// from a vanishing coefficient so faithfulness checks are meaningful.
double coefficient(std::uint64_t& state) {
  double mag = 0.5 + uniform01(state);
  return uniform01(state) < 0.5 ? -mag : mag;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Generated generate(const GeneratorConfig& config) {
  if (config.features < 1)
    throw Error("E_CONFIG", "need at least one feature");
  if (config.rows < 1) throw Error("E_CONFIG", "need at least one row");
  if (config.paired && config.rows % 2 != 0)
    throw Error("E_CONFIG", "paired generation needs an even row count");
  if (config.p_feat < 0 || config.p_feat > 1 || config.p_sens < 0 ||
      config.p_sens > 1)
    throw Error("E_CONFIG", "edge probabilities must be in [0,1]");

  const int m = config.features;
  std::uint64_t state = config.seed;
  (void)splitmix64(state);

  Generated gen;
  gen.setting = config.setting;
  gen.feat_coef.assign(m, std::vector<double>(m, 0.0));
  gen.sens_coef.assign(m, 0.0);
  gen.y_coef.assign(m, 0.0);

  std::vector<Node> nodes;
  nodes.push_back({0, NodeKind::Sensitive, "A"});
  for (int i = 0; i < m; ++i)
    nodes.push_back({i + 1, NodeKind::Feature, "X" + std::to_string(i + 1)});
  nodes.push_back({m + 1, NodeKind::Outcome, "Y"});
  nodes.push_back({m + 2, NodeKind::Prediction, "Yhat"});

  std::vector<Edge> edges;
  for (int i = 0; i < m; ++i) {
    if (uniform01(state) < config.p_sens) {
      gen.sens_coef[i] = coefficient(state);
      edges.push_back({0, i + 1, EdgeDir::AtoB});
    }
    for (int j = 0; j < i; ++j) {
      if (uniform01(state) < config.p_feat) {
        gen.feat_coef[i][j] = coefficient(state);
        edges.push_back({j + 1, i + 1, EdgeDir::AtoB});
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    gen.y_coef[i] = coefficient(state) / std::sqrt(static_cast<double>(m));
    edges.push_back({i + 1, m + 1, EdgeDir::AtoB});
  }
  gen.graph = Pdag::build(std::move(nodes), std::move(edges));

  const int n = config.rows;
  std::vector<std::vector<double>> columns(m + 3);
  columns[0].resize(n);
  for (int i = 0; i < m; ++i) columns[i + 1].resize(n);
  columns[m + 1].resize(n);
  columns[m + 2].resize(n);  // unused slot removed below

  std::vector<double> scores(n);
  std::vector<double> noise(m);
  for (int r = 0; r < n; ++r) {
    double a;
    if (config.paired) {
      if (r % 2 == 0)
        for (int i = 0; i < m; ++i) noise[i] = normal(state) * config.noise_sd;
      a = static_cast<double>(r % 2);
    } else {
      for (int i = 0; i < m; ++i) noise[i] = normal(state) * config.noise_sd;
      a = uniform01(state) < 0.5 ? 0.0 : 1.0;
    }
    columns[0][r] = a;
    double score = 0.0;
    for (int i = 0; i < m; ++i) {
      double x = gen.sens_coef[i] * a + noise[i];
      for (int j = 0; j < i; ++j)
        x += gen.feat_coef[i][j] * columns[j + 1][r];
      columns[i + 1][r] = x;
      score += gen.y_coef[i] * x;
    }
    scores[r] = score;
  }

  double lo = *std::min_element(scores.begin(), scores.end());
  double hi = *std::max_element(scores.begin(), scores.end());
  for (int r = 0; r < n; ++r) {
    double p;
    if (config.setting == Setting::S1)
      p = hi > lo ? (scores[r] - lo) / (hi - lo) : 0.5;
    else
      p = sigmoid(1.5 * scores[r]);
    columns[m + 1][r] = uniform01(state) < p ? 1.0 : 0.0;
  }
  columns.pop_back();

  std::vector<ColumnSchema> schema;
  schema.push_back({"A", ColumnType::Binary});
  for (int i = 0; i < m; ++i)
    schema.push_back({"X" + std::to_string(i + 1), ColumnType::Continuous});
  schema.push_back({"Y", ColumnType::Binary});
  gen.data = Dataset::from_columns(std::move(schema), std::move(columns));
  gen.data.set_sensitive("A");
  gen.data.set_outcome("Y");
  return gen;
}

StructuralModel true_structural_model(const Generated& gen,
                                      const GroupPartition& partition,
                                      const FactSet& facts) {
  const Pdag& graph = gen.graph;
  const Dataset& data = gen.data;
  std::vector<int> node_to_col = node_columns(graph, data);

  StructuralModel model;
  model.conditional = false;
  model.row_stratum.assign(data.rows(), 0);
  model.link_sets.resize(1);

  for (int g : partition.order) {
    std::vector<int> members = partition.groups[g];
    std::sort(members.begin(), members.end());
    for (int member : members) {
      LinkFunction lk;
      lk.target_node = member;
      lk.target_col = node_to_col[member];
      lk.kind = LinkKind::Linear;

      std::vector<int> inputs;
      if (partition.sensitive_in_predecessors[g])
        inputs.push_back(graph.sensitive());
      std::vector<int> pred_members;
      for (int h : partition.group_predecessors[g])
        pred_members.insert(pred_members.end(), partition.groups[h].begin(),
                            partition.groups[h].end());
      std::sort(pred_members.begin(), pred_members.end());
      inputs.insert(inputs.end(), pred_members.begin(), pred_members.end());
      inputs.insert(inputs.end(), facts.uninvolved.begin(),
                    facts.uninvolved.end());

      lk.coef = Eigen::MatrixXd::Zero(1, 1 + static_cast<int>(inputs.size()));
      const int xi = member - 1;  // feature index of node X_{xi+1}
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        int in = inputs[i];
        lk.input_nodes.push_back(in);
        lk.input_cols.push_back(node_to_col[in]);
        lk.input_levels.push_back(0);
        double c = 0.0;
        if (in == graph.sensitive())
          c = gen.sens_coef[xi];
        else
          c = gen.feat_coef[xi][in - 1];
        lk.coef(0, 1 + static_cast<int>(i)) = c;
      }

      // Every true parent of the member must appear among the link's inputs,
      // otherwise the skeleton cannot carry the generating equation.
      for (int p = 0; p < static_cast<int>(gen.feat_coef[xi].size()); ++p) {
        if (gen.feat_coef[xi][p] == 0.0) continue;
        if (std::find(inputs.begin(), inputs.end(), p + 1) == inputs.end())
          throw Error("E_INTERNAL",
                      "true parent X" + std::to_string(p + 1) +
                          " of X" + std::to_string(xi + 1) +
                          " is missing from the skeleton inputs");
      }
      if (gen.sens_coef[xi] != 0.0 &&
          std::find(inputs.begin(), inputs.end(), graph.sensitive()) ==
              inputs.end())
        throw Error("E_INTERNAL", "true sensitive parent of X" +
                                      std::to_string(xi + 1) +
                                      " is missing from the skeleton inputs");

      model.targets.push_back(lk.target_col);
      model.target_nodes.push_back(member);
      model.link_sets[0].push_back(std::move(lk));
    }
  }
  auto [residuals, strata] = model.residuals_for(data);
  model.residuals = std::move(residuals);
  (void)strata;
  return model;
}

GroundTruth exact_ground_truth(const EngineContext& ctx, int guard) {
  const int m = ctx.path_count();
  if (m > guard)
    throw Error("E_GUARD", "exact ground truth limited to " +
                               std::to_string(guard) + " paths (" +
                               std::to_string(m) + " present)");
  // Shapley weights by coalition size.
  std::vector<double> weight(m, 0.0);
  if (m > 0) {
    std::vector<double> logfact(m + 1, 0.0);
    for (int i = 2; i <= m; ++i) logfact[i] = logfact[i - 1] + std::log(i);
    for (int s = 0; s < m; ++s)
      weight[s] = std::exp(logfact[s] + logfact[m - 1 - s] - logfact[m]);
  }

  const std::uint64_t subsets = std::uint64_t{1} << m;
  double count[2] = {0, 0};
  std::vector<double> sum[2] = {std::vector<double>(m, 0.0),
                                std::vector<double>(m, 0.0)};
  double full_sum[2] = {0, 0};

  for (int r = 0; r < ctx.data.rows(); ++r) {
    if (ctx.metric.stratum() >= 0) {
      int y = static_cast<int>(ctx.data.value(r, ctx.data.outcome_col()));
      if (y != ctx.metric.stratum()) continue;
    }
    std::vector<double> v(subsets);
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      std::vector<int> coalition;
      for (int i = 0; i < m; ++i)
        if (mask & (std::uint64_t{1} << i)) coalition.push_back(i);
      v[mask] = value_function(ctx, r, coalition, ctx.metric.uses_fy());
    }
    int a = static_cast<int>(ctx.data.value(r, ctx.data.sensitive_col()));
    count[a] += 1;
    full_sum[a] += v[subsets - 1];
    for (int i = 0; i < m; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      double phi = 0.0;
      for (std::uint64_t mask = 0; mask < subsets; ++mask) {
        if (mask & bit) continue;
        int size = __builtin_popcountll(mask);
        phi += weight[size] * (v[mask | bit] - v[mask]);
      }
      sum[a][i] += phi;
    }
  }
  if (count[0] == 0 || count[1] == 0)
    throw Error("E_DATA", "empty sensitive group");

  GroundTruth truth;
  truth.theta.resize(m);
  for (int i = 0; i < m; ++i)
    truth.theta[i] = sum[1][i] / count[1] - sum[0][i] / count[0];
  truth.disparity = full_sum[1] / count[1] - full_sum[0] / count[0];
  return truth;
}

EvalScore score(const std::vector<double>& estimates,
                const GroundTruth& truth) {
  if (estimates.size() != truth.theta.size())
    throw Error("E_SCORE", "estimate/truth length mismatch");
  double num = 0.0, denom = 0.0, total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    num += (truth.theta[i] - estimates[i]) * (truth.theta[i] - estimates[i]);
    denom += truth.theta[i] * truth.theta[i];
    total += estimates[i];
  }
  if (denom == 0.0)
    throw Error("E_SCORE", "NRMSE undefined: ground truth has zero norm");
  if (truth.disparity == 0.0)
    throw Error("E_SCORE", "efficiency gap undefined: zero disparity");
  EvalScore out;
  out.nrmse = std::sqrt(num) / std::sqrt(denom);
  out.efficiency_gap = std::abs(total - truth.disparity) /
                       std::abs(truth.disparity);
  return out;
}

}  // namespace facts
