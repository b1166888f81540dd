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

#include "facts/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace facts {

namespace {

void check_problem(const SelectionProblem& problem) {
  if (problem.phi.size() != problem.psi.size())
    throw Error("E_SELECTION", "phi/psi length mismatch");
  if (problem.lambda < 0)
    throw Error("E_SELECTION", "lambda must be nonnegative");
}

double loss_of_sums(double sum_psi, double sum_phi, double lambda) {
  return -sum_psi + lambda * std::abs(sum_phi);
}

}  // namespace

double selection_loss(const std::vector<int>& coalition,
                      const SelectionProblem& problem) {
  check_problem(problem);
  double sum_phi = 0.0, sum_psi = 0.0;
  for (int id : coalition) {
    if (id < 0 || id >= static_cast<int>(problem.phi.size()))
      throw Error("E_SELECTION", "unknown path id " + std::to_string(id));
    sum_phi += problem.phi[id];
    sum_psi += problem.psi[id];
  }
  return loss_of_sums(sum_psi, sum_phi, problem.lambda);
}

SelectionResult select_facts(const SelectionProblem& problem) {
  check_problem(problem);
  const int m = static_cast<int>(problem.phi.size());
  if (m == 0) throw Error("E_SELECTION", "empty path set");

  std::vector<bool> in(m, true);
  double sum_phi = std::accumulate(problem.phi.begin(), problem.phi.end(), 0.0);
  double sum_psi = std::accumulate(problem.psi.begin(), problem.psi.end(), 0.0);

  SelectionResult result;
  auto current_set = [&]() {
    std::vector<int> ids;
    for (int i = 0; i < m; ++i)
      if (in[i]) ids.push_back(i);
    return ids;
  };
  result.selected = current_set();
  result.loss = loss_of_sums(sum_psi, sum_phi, problem.lambda);

  for (int step = 0; step < m; ++step) {
    int best = -1;
    double best_loss = 0.0;
    for (int i = 0; i < m; ++i) {
      if (!in[i]) continue;
      double loss = loss_of_sums(sum_psi - problem.psi[i],
                                 sum_phi - problem.phi[i], problem.lambda);
      if (best < 0 || loss < best_loss) {
        best = i;
        best_loss = loss;
      }
    }
    in[best] = false;
    sum_phi -= problem.phi[best];
    sum_psi -= problem.psi[best];
    result.trace.push_back({best, best_loss});
    if (best_loss < result.loss) {
      result.loss = best_loss;
      result.selected = current_set();
    }
  }
  return result;
}

SelectionResult exhaustive_best(const SelectionProblem& problem, int guard) {
  check_problem(problem);
  const int m = static_cast<int>(problem.phi.size());
  if (m > guard)
    throw Error("E_GUARD", "exhaustive selection limited to " +
                               std::to_string(guard) + " paths (" +
                               std::to_string(m) + " present)");
  SelectionResult result;
  bool first = true;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    double sum_phi = 0.0, sum_psi = 0.0;
    for (int i = 0; i < m; ++i)
      if (mask & (std::uint64_t{1} << i)) {
        sum_phi += problem.phi[i];
        sum_psi += problem.psi[i];
      }
    double loss = loss_of_sums(sum_psi, sum_phi, problem.lambda);
    if (first || loss < result.loss) {
      first = false;
      result.loss = loss;
      result.selected.clear();
      for (int i = 0; i < m; ++i)
        if (mask & (std::uint64_t{1} << i)) result.selected.push_back(i);
    }
  }
  return result;
}

double adjusted_prediction(const EngineContext& ctx, int row,
                           const std::vector<int>& coalition) {
  return value_function(ctx, row, coalition);
}

TradeoffCurve sweep(const EngineContext& ctx,
                    const ContributionReport& disparity_report,
                    const UtilityReport& utility_report,
                    const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw Error("E_SELECTION", "empty lambda list");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (lambdas[i] <= lambdas[i - 1])
      throw Error("E_SELECTION", "lambda values must be strictly ascending");
  if (ctx.data.outcome_col() < 0)
    throw Error("E_OUTCOME", "sweep needs an outcome column");

  TradeoffCurve curve;
  for (double lambda : lambdas) {
    SelectionProblem problem{disparity_report.phi, utility_report.psi, lambda};
    SelectionResult selection = select_facts(problem);

    double sum[2] = {0, 0};
    double count[2] = {0, 0};
    double correct = 0.0;
    for (int r = 0; r < ctx.data.rows(); ++r) {
      double s = adjusted_prediction(ctx, r, selection.selected);
      double y = ctx.data.value(r, ctx.data.outcome_col());
      correct += (s >= 0.5 ? 1.0 : 0.0) == y ? 1.0 : 0.0;
      int a = static_cast<int>(ctx.data.value(r, ctx.data.sensitive_col()));
      sum[a] += s;
      count[a] += 1;
    }
    if (count[0] == 0 || count[1] == 0)
      throw Error("E_DATA", "empty sensitive group");
    TradeoffCurve::Point point;
    point.lambda = lambda;
    point.selected = selection.selected;
    point.accuracy = correct / ctx.data.rows();
    point.disparity = sum[1] / count[1] - sum[0] / count[0];
    curve.points.push_back(std::move(point));
  }
  return curve;
}

nlohmann::json SelectionResult::to_json(
    const std::vector<std::string>& path_names) const {
  nlohmann::json j;
  nlohmann::json sel = nlohmann::json::array();
  for (int id : selected)
    sel.push_back(id < static_cast<int>(path_names.size()) ? path_names[id]
                                                           : std::to_string(id));
  j["selected"] = sel;
  j["selected_ids"] = selected;
  j["loss"] = loss;
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& step : trace) {
    nlohmann::json s;
    s["removed"] = step.removed;
    s["loss_after"] = step.loss_after;
    tr.push_back(s);
  }
  j["trace"] = tr;
  return j;
}

std::string TradeoffCurve::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "lambda,accuracy,disparity,selected\n";
  for (const auto& point : points) {
    out << point.lambda << "," << point.accuracy << "," << point.disparity
        << ",\"";
    for (std::size_t i = 0; i < point.selected.size(); ++i)
      out << (i ? " " : "") << point.selected[i];
    out << "\"\n";
  }
  return out.str();
}

}  // namespace facts
