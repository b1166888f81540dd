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

#include "facts/structural_model.hpp"

#include <algorithm>
#include <cmath>

namespace facts {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamped_logit(double p) {
  p = std::clamp(p, 1e-9, 1.0 - 1e-9);
  return std::log(p / (1.0 - p));
}

bool is_constant(const Eigen::VectorXd& v) {
  return v.maxCoeff() - v.minCoeff() == 0.0;
}

// Logistic regression by iteratively reweighted least squares. Returns the
// coefficient vector; intercept-only when the target is constant.
Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& design,
                             const Eigen::VectorXd& y, int max_iters,
                             const std::string& where) {
  const int d = static_cast<int>(design.cols());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  if (is_constant(y)) {
    beta[0] = clamped_logit(y.mean());
    return beta;
  }
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd p = eta.unaryExpr([](double z) {
      return std::clamp(sigmoid(z), 1e-9, 1.0 - 1e-9);
    });
    Eigen::VectorXd w = p.array() * (1.0 - p.array());
    Eigen::MatrixXd h = design.transpose() * w.asDiagonal() * design;
    h.diagonal().array() += 1e-9;
    Eigen::VectorXd step = h.ldlt().solve(design.transpose() * (y - p));
    if (!step.allFinite())
      throw Error("E_FIT", "non-finite logistic update fitting " + where);
    beta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  return beta;
}

Eigen::VectorXd fit_linear(const Eigen::MatrixXd& design,
                           const Eigen::VectorXd& y, const std::string& where) {
  if (is_constant(y)) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
    beta[0] = y[0];
    return beta;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols())
    throw Error("E_FIT", "singular design matrix fitting " + where);
  return qr.solve(y);
}

}  // namespace

std::string to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::Linear: return "linear";
    case LinkKind::Logistic: return "logistic";
    case LinkKind::Multinomial: return "multinomial";
  }
  return "?";
}

int LinkFunction::design_dim() const {
  int dim = 1;
  for (int levels : input_levels) dim += levels > 0 ? levels - 1 : 1;
  return dim;
}

Eigen::VectorXd LinkFunction::design(const std::vector<double>& raw_inputs) const {
  if (raw_inputs.size() != input_cols.size())
    throw Error("E_FIT", "link input count mismatch");
  Eigen::VectorXd row = Eigen::VectorXd::Zero(design_dim());
  row[0] = 1.0;
  int pos = 1;
  for (std::size_t i = 0; i < raw_inputs.size(); ++i) {
    int levels = input_levels[i];
    if (levels > 0) {
      int level = static_cast<int>(raw_inputs[i]);
      if (level < 0 || level >= levels)
        throw Error("E_FIT", "categorical input level out of range");
      if (level < levels - 1) row[pos + level] = 1.0;
      pos += levels - 1;
    } else {
      row[pos++] = raw_inputs[i];
    }
  }
  return row;
}

double LinkFunction::mean(const std::vector<double>& raw_inputs) const {
  return coef.row(0).dot(design(raw_inputs));
}

Eigen::VectorXd LinkFunction::class_probabilities(
    const std::vector<double>& raw_inputs) const {
  Eigen::VectorXd row = design(raw_inputs);
  if (kind == LinkKind::Logistic) {
    double p1 = sigmoid(coef.row(0).dot(row));
    Eigen::VectorXd out(2);
    out << 1.0 - p1, p1;
    return out;
  }
  Eigen::VectorXd out(coef.rows());
  for (int k = 0; k < coef.rows(); ++k) out[k] = sigmoid(coef.row(k).dot(row));
  double total = out.sum();
  if (total <= 0) return Eigen::VectorXd::Constant(coef.rows(), 1.0 / coef.rows());
  return out / total;
}

double counterfactual_value(const LinkFunction& link,
                            const std::vector<double>& raw_inputs,
                            double residual) {
  if (link.kind == LinkKind::Linear)
    return link.mean(raw_inputs) + residual;
  Eigen::VectorXd probs = link.class_probabilities(raw_inputs);
  double cum = 0.0;
  for (int k = 0; k < probs.size(); ++k) {
    cum += probs[k];
    if (residual < cum) return static_cast<double>(k);
  }
  return static_cast<double>(probs.size() - 1);
}

double extract_residual(const LinkFunction& link,
                        const std::vector<double>& raw_inputs, double observed) {
  if (link.kind == LinkKind::Linear)
    return observed - link.mean(raw_inputs);
  Eigen::VectorXd probs = link.class_probabilities(raw_inputs);
  int cls = static_cast<int>(observed);
  double below = 0.0;
  for (int k = 0; k < cls; ++k) below += probs[k];
  return below + probs[cls] / 2.0;
}

int StructuralModel::target_index(int col) const {
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i] == col) return static_cast<int>(i);
  return -1;
}

std::pair<Eigen::MatrixXd, std::vector<int>> StructuralModel::residuals_for(
    const Dataset& data) const {
  const int n = data.rows();
  std::vector<int> strata(n, 0);
  if (conditional) {
    if (data.outcome_col() < 0)
      throw Error("E_OUTCOME", "conditional model needs an outcome column");
    for (int r = 0; r < n; ++r)
      strata[r] = static_cast<int>(data.value(r, data.outcome_col()));
  }
  Eigen::MatrixXd res(n, static_cast<int>(targets.size()));
  for (int r = 0; r < n; ++r) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const LinkFunction& lk = link_sets[strata[r]][t];
      std::vector<double> raw(lk.input_cols.size());
      for (std::size_t i = 0; i < lk.input_cols.size(); ++i)
        raw[i] = data.value(r, lk.input_cols[i]);
      res(r, static_cast<int>(t)) =
          extract_residual(lk, raw, data.value(r, targets[t]));
    }
  }
  return {res, strata};
}

std::vector<int> node_columns(const Pdag& graph, const Dataset& data) {
  std::vector<int> cols(graph.node_count(), -1);
  for (int v = 0; v < graph.node_count(); ++v)
    cols[v] = data.column_index(graph.node(v).name);
  return cols;
}

namespace {

LinkFunction make_link(const Dataset& data, const Pdag& graph,
                       const std::vector<int>& node_to_col, int target_node,
                       const std::vector<int>& input_nodes) {
  LinkFunction lk;
  lk.target_node = target_node;
  lk.target_col = node_to_col[target_node];
  if (lk.target_col < 0)
    throw Error("E_DATA", "feature '" + graph.node(target_node).name +
                              "' has no dataset column");
  switch (data.schema(lk.target_col).type) {
    case ColumnType::Continuous: lk.kind = LinkKind::Linear; break;
    case ColumnType::Binary: lk.kind = LinkKind::Logistic; break;
    case ColumnType::Categorical: lk.kind = LinkKind::Multinomial; break;
  }
  for (int node : input_nodes) {
    int col = node_to_col[node];
    if (col < 0)
      throw Error("E_DATA", "feature '" + graph.node(node).name +
                                "' has no dataset column");
    lk.input_nodes.push_back(node);
    lk.input_cols.push_back(col);
    lk.input_levels.push_back(
        data.schema(col).type == ColumnType::Categorical ? data.level_count(col)
                                                         : 0);
  }
  return lk;
}

void fit_link(LinkFunction& lk, const Dataset& data,
              const std::vector<int>& rows, const FitConfig& config,
              const std::string& where) {
  const int n = static_cast<int>(rows.size());
  const int d = lk.design_dim();
  Eigen::MatrixXd design(n, d);
  for (int r = 0; r < n; ++r) {
    std::vector<double> raw(lk.input_cols.size());
    for (std::size_t i = 0; i < lk.input_cols.size(); ++i)
      raw[i] = data.value(rows[r], lk.input_cols[i]);
    design.row(r) = lk.design(raw);
  }
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) y[r] = data.value(rows[r], lk.target_col);

  switch (lk.kind) {
    case LinkKind::Linear:
      lk.coef = fit_linear(design, y, where).transpose();
      break;
    case LinkKind::Logistic:
      lk.coef = fit_logistic(design, y, config.max_irls_iters, where).transpose();
      break;
    case LinkKind::Multinomial: {
      int classes = data.level_count(lk.target_col);
      lk.coef.resize(classes, d);
      for (int k = 0; k < classes; ++k) {
        Eigen::VectorXd indicator =
            (y.array() == static_cast<double>(k)).cast<double>();
        lk.coef.row(k) =
            fit_logistic(design, indicator, config.max_irls_iters, where)
                .transpose();
      }
      break;
    }
  }
  if (!lk.coef.allFinite())
    throw Error("E_FIT", "non-finite coefficients fitting " + where);
}

// Input node list for a group: sensitive first when the partition links it,
// then predecessor-group members ascending, then the uninvolved features.
std::vector<int> link_inputs(const GroupPartition& partition,
                             const FactSet& facts, int group, int sensitive) {
  std::vector<int> inputs;
  if (partition.sensitive_in_predecessors[group]) inputs.push_back(sensitive);
  std::vector<int> members;
  for (int g : partition.group_predecessors[group])
    members.insert(members.end(), partition.groups[g].begin(),
                   partition.groups[g].end());
  std::sort(members.begin(), members.end());
  inputs.insert(inputs.end(), members.begin(), members.end());
  inputs.insert(inputs.end(), facts.uninvolved.begin(), facts.uninvolved.end());
  return inputs;
}

StructuralModel fit_impl(const Dataset& data, const Pdag& graph,
                         const GroupPartition& partition, const FactSet& facts,
                         const FitConfig& config, bool conditional) {
  if (!partition.complete)
    throw Error("E_ORDER", "group order is not complete");
  const int n = data.rows();
  std::vector<int> node_to_col = node_columns(graph, data);

  StructuralModel model;
  model.conditional = conditional;
  model.row_stratum.assign(n, 0);

  std::vector<std::vector<int>> strata_rows;
  if (conditional) {
    if (data.outcome_col() < 0)
      throw Error("E_OUTCOME", "conditional fit needs an outcome column");
    strata_rows.resize(2);
    for (int r = 0; r < n; ++r) {
      int y = static_cast<int>(data.value(r, data.outcome_col()));
      model.row_stratum[r] = y;
      strata_rows[y].push_back(r);
    }
    for (int y = 0; y < 2; ++y)
      if (static_cast<int>(strata_rows[y].size()) < config.min_stratum_rows)
        throw Error("E_FIT", "outcome stratum Y=" + std::to_string(y) +
                                 " has " + std::to_string(strata_rows[y].size()) +
                                 " rows (minimum " +
                                 std::to_string(config.min_stratum_rows) + ")");
  } else {
    strata_rows.resize(1);
    strata_rows[0].resize(n);
    for (int r = 0; r < n; ++r) strata_rows[0][r] = r;
  }

  for (int g : partition.order) {
    std::vector<int> members = partition.groups[g];
    std::sort(members.begin(), members.end());
    for (int member : members) {
      if (node_to_col.at(member) < 0)
        throw Error("E_DATA", "feature '" + graph.node(member).name +
                                  "' has no dataset column");
      model.targets.push_back(node_to_col[member]);
      model.target_nodes.push_back(member);
    }
  }

  model.link_sets.resize(strata_rows.size());
  for (std::size_t s = 0; s < strata_rows.size(); ++s) {
    for (int g : partition.order) {
      std::vector<int> inputs =
          link_inputs(partition, facts, g, graph.sensitive());
      std::vector<int> members = partition.groups[g];
      std::sort(members.begin(), members.end());
      for (int member : members) {
        LinkFunction lk = make_link(data, graph, node_to_col, member, inputs);
        std::string where = "group '" + partition.group_name(graph, g) + "'";
        if (conditional) where += " (Y=" + std::to_string(s) + ")";
        fit_link(lk, data, strata_rows[s], config, where);
        model.link_sets[s].push_back(std::move(lk));
      }
    }
  }

  auto [residuals, strata] = model.residuals_for(data);
  model.residuals = std::move(residuals);
  return model;
}

}  // namespace

StructuralModel fit_structural_model(const Dataset& data, const Pdag& graph,
                                     const GroupPartition& partition,
                                     const FactSet& facts,
                                     const FitConfig& config) {
  return fit_impl(data, graph, partition, facts, config, false);
}

StructuralModel fit_conditional_models(const Dataset& data, const Pdag& graph,
                                       const GroupPartition& partition,
                                       const FactSet& facts,
                                       const FitConfig& config) {
  if (partition.mode != FactMode::RelativeToY)
    throw Error("E_ORDER", "conditional fit needs a relative-to-Y partition");
  return fit_impl(data, graph, partition, facts, config, true);
}

nlohmann::json LinkFunction::to_json(const Pdag& graph,
                                     const Dataset& data) const {
  nlohmann::json j;
  j["target"] = graph.node(target_node).name;
  j["kind"] = facts::to_string(kind);
  nlohmann::json inputs = nlohmann::json::array();
  for (int node : input_nodes) inputs.push_back(graph.node(node).name);
  j["inputs"] = inputs;
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < coef.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < coef.cols(); ++c) row.push_back(coef(r, c));
    rows.push_back(row);
  }
  j["coefficients"] = rows;
  (void)data;
  return j;
}

nlohmann::json StructuralModel::to_json(const Pdag& graph,
                                        const Dataset& data) const {
  nlohmann::json j;
  j["conditional"] = conditional;
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& links : link_sets) {
    nlohmann::json set = nlohmann::json::array();
    for (const auto& lk : links) set.push_back(lk.to_json(graph, data));
    sets.push_back(set);
  }
  j["link_sets"] = sets;
  j["residual_rows"] = residuals.rows();
  return j;
}

}  // namespace facts
