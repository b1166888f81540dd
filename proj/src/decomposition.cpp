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

#include "facts/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace facts {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Unbiased bounded draw by rejection (no distribution-library dependence, so
// streams are identical across standard libraries).
int bounded(std::uint64_t& state, int n) {
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    std::uint64_t r = splitmix64(state);
    if (r < limit) return static_cast<int>(r % n);
  }
}

using EdgeMasks = EngineContext::EdgeMasks;

EdgeMasks build_edge_masks(const GroupPartition& part) {
  EdgeMasks m;
  m.group_paths.assign(part.groups.size(), 0);
  m.a_edge.assign(part.groups.size(), 0);
  m.a_edge_present.assign(part.groups.size(), false);
  for (const auto& [edge, ids] : part.edge_index) {
    std::uint64_t mask = 0;
    for (int id : ids) mask |= std::uint64_t{1} << id;
    m.edges[edge] = mask;
    if (edge.first == kSensitiveMark) {
      m.a_edge[edge.second] = mask;
      m.a_edge_present[edge.second] = true;
    }
  }
  for (std::size_t pid = 0; pid < part.grouped_paths.size(); ++pid)
    for (int g : part.grouped_paths[pid])
      if (g >= 0) m.group_paths[g] |= std::uint64_t{1} << pid;
  return m;
}

double observed(const EngineContext& ctx, int row, int node) {
  int col = ctx.node_to_col[node];
  if (col < 0)
    throw Error("E_DATA", "node '" + ctx.graph.node(node).name +
                              "' has no dataset column");
  return ctx.data.value(row, col);
}

double score_once(const EngineContext& ctx, int row, std::uint64_t mask,
                  double a_prime, const EdgeMasks& em) {
  const auto& part = ctx.partition;
  auto transmits = [&](std::uint64_t edge_mask) {
    return edge_mask != 0 && (edge_mask & ~mask) == 0;
  };
  const double a_obs = observed(ctx, row, ctx.graph.sensitive());

  std::vector<double> value(ctx.graph.node_count(), 0.0);
  for (std::size_t t = 0; t < ctx.sm.targets.size(); ++t) {
    const LinkFunction& lk = ctx.sm.link(row, static_cast<int>(t));
    int node = ctx.sm.target_nodes[t];
    int gid = part.node_to_group[node];
    std::vector<double> raw(lk.input_nodes.size());
    for (std::size_t i = 0; i < lk.input_nodes.size(); ++i) {
      int in = lk.input_nodes[i];
      if (in == ctx.graph.sensitive()) {
        std::uint64_t gate =
            em.a_edge_present[gid] ? em.a_edge[gid] : em.group_paths[gid];
        raw[i] = transmits(gate) ? a_obs : a_prime;
      } else {
        int h = part.node_to_group[in];
        if (h < 0) {
          raw[i] = observed(ctx, row, in);
        } else {
          auto it = em.edges.find({h, gid});
          std::uint64_t edge = it == em.edges.end() ? 0 : it->second;
          raw[i] = transmits(edge) ? observed(ctx, row, in) : value[in];
        }
      }
    }
    value[node] =
        counterfactual_value(lk, raw, ctx.sm.residual(row, static_cast<int>(t)));
  }

  std::vector<double> fraw(ctx.feature_nodes.size());
  for (std::size_t i = 0; i < ctx.feature_nodes.size(); ++i) {
    int node = ctx.feature_nodes[i];
    int h = part.node_to_group[node];
    if (h < 0) {
      fraw[i] = observed(ctx, row, node);
    } else {
      auto it = em.edges.find({h, kPredictionMark});
      std::uint64_t edge = it == em.edges.end() ? 0 : it->second;
      fraw[i] = transmits(edge) ? observed(ctx, row, node) : value[node];
    }
  }
  return ctx.predictor.predict(ctx.f_encoding.encode(fraw));
}

double value_masked(const EngineContext& ctx, int row, std::uint64_t mask,
                    bool fy_transform) {
  const EdgeMasks& em = ctx.masks;
  double p1 = ctx.p_a1[0];
  double y = 0.0;
  if (ctx.metric.conditional() || fy_transform) {
    if (ctx.data.outcome_col() < 0)
      throw Error("E_OUTCOME", "metric needs an outcome column");
    y = ctx.data.value(row, ctx.data.outcome_col());
  }
  if (ctx.metric.conditional() && ctx.metric.condition_a_on_y)
    p1 = ctx.p_a1[1 + static_cast<int>(y)];

  double s0 = score_once(ctx, row, mask, 0.0, em);
  double s1 = score_once(ctx, row, mask, 1.0, em);
  double s = (1.0 - p1) * s0 + p1 * s1;
  if (fy_transform) s = y > 0.5 ? s : 1.0 - s;
  return s;
}

std::uint64_t coalition_mask(const EngineContext& ctx,
                             const std::vector<int>& coalition) {
  std::uint64_t mask = 0;
  for (int id : coalition) {
    if (id < 0 || id >= ctx.path_count())
      throw Error("E_COALITION", "unknown path id " + std::to_string(id));
    mask |= std::uint64_t{1} << id;
  }
  return mask;
}

}  // namespace

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::DemographicParity: return "demographic_parity";
    case MetricKind::EqualizedOpportunity: return "equalized_opportunity";
    case MetricKind::EqualizedOddsY0: return "equalized_odds_y0";
    case MetricKind::AccuracyParity: return "accuracy_parity";
  }
  return "?";
}

EngineContext EngineContext::make(const Pdag& graph, const Dataset& data,
                                  const FactSet& facts,
                                  const GroupPartition& partition,
                                  const StructuralModel& sm,
                                  const Predictor& predictor,
                                  MetricSpec metric) {
  if (partition.grouped_paths.size() > 63)
    throw Error("E_GUARD", "more than 63 grouped paths");
  if (metric.conditional() && facts.mode != FactMode::RelativeToY)
    throw Error("E_ORDER",
                "conditional metrics need a relative-to-Y fact set");
  if (metric.conditional() && !sm.conditional)
    throw Error("E_ORDER", "conditional metrics need conditional links");

  std::vector<int> node_to_col = node_columns(graph, data);
  std::vector<int> feature_nodes = graph.feature_nodes();
  std::vector<int> feature_cols;
  for (int node : feature_nodes) {
    if (node_to_col[node] < 0)
      throw Error("E_DATA", "feature '" + graph.node(node).name +
                                "' has no dataset column");
    feature_cols.push_back(node_to_col[node]);
  }

  EngineContext ctx{graph,     data, facts,
                    partition, sm,   predictor,
                    metric,    Encoding(data, feature_cols),
                    std::move(node_to_col), std::move(feature_nodes)};

  if (data.sensitive_col() < 0)
    throw Error("E_DATA", "sensitive column not set");
  double n = 0, n1 = 0, ny[2] = {0, 0}, ny1[2] = {0, 0};
  for (int r = 0; r < data.rows(); ++r) {
    double a = data.value(r, data.sensitive_col());
    n += 1;
    n1 += a;
    if (data.outcome_col() >= 0) {
      int y = static_cast<int>(data.value(r, data.outcome_col()));
      ny[y] += 1;
      ny1[y] += a;
    }
  }
  ctx.p_a1[0] = n1 / n;
  for (int y = 0; y < 2; ++y) ctx.p_a1[1 + y] = ny[y] > 0 ? ny1[y] / ny[y] : 0.5;
  ctx.masks = build_edge_masks(partition);
  return ctx;
}

double disparity(const Dataset& data, const Predictor& predictor,
                 const Encoding& f_encoding, MetricSpec metric) {
  if (data.sensitive_col() < 0)
    throw Error("E_DATA", "sensitive column not set");
  if ((metric.conditional() || metric.uses_fy()) && data.outcome_col() < 0)
    throw Error("E_OUTCOME", "metric needs an outcome column");
  double sum[2] = {0, 0};
  double count[2] = {0, 0};
  for (int r = 0; r < data.rows(); ++r) {
    double y = data.outcome_col() >= 0 ? data.value(r, data.outcome_col()) : 0;
    if (metric.stratum() >= 0 && static_cast<int>(y) != metric.stratum())
      continue;
    double s = predictor.predict(f_encoding.encode_row(data, r));
    if (metric.uses_fy()) s = y > 0.5 ? s : 1.0 - s;
    int a = static_cast<int>(data.value(r, data.sensitive_col()));
    sum[a] += s;
    count[a] += 1;
  }
  if (count[0] == 0 || count[1] == 0)
    throw Error("E_DATA", "empty sensitive group in the metric's stratum");
  return sum[1] / count[1] - sum[0] / count[0];
}

double value_function(const EngineContext& ctx, int row,
                      const std::vector<int>& coalition, bool fy_transform) {
  return value_masked(ctx, row, coalition_mask(ctx, coalition), fy_transform);
}

ShapleyRow path_shapley(const EngineContext& ctx, int row,
                        const PermutationPlan& plan, bool fy_transform) {
  const int m = ctx.path_count();
  ShapleyRow out;
  out.phi.assign(m, 0.0);
  out.variance.assign(m, 0.0);

  std::unordered_map<std::uint64_t, double> cache;
  auto v = [&](std::uint64_t mask) {
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    double val = value_masked(ctx, row, mask, fy_transform);
    cache.emplace(mask, val);
    return val;
  };
  const std::uint64_t full = m == 0 ? 0 : (std::uint64_t{1} << m) - 1;
  out.v_empty = v(0);
  out.v_full = v(full);
  if (m == 0) return out;

  if (plan.exact) {
    if (m > plan.exact_bound)
      throw Error("E_GUARD", "exact plan limited to " +
                                 std::to_string(plan.exact_bound) + " paths (" +
                                 std::to_string(m) + " present)");
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    long count = 0;
    do {
      std::uint64_t mask = 0;
      double prev = out.v_empty;
      for (int id : perm) {
        mask |= std::uint64_t{1} << id;
        double cur = v(mask);
        out.phi[id] += cur - prev;
        prev = cur;
      }
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (double& p : out.phi) p /= static_cast<double>(count);
    return out;
  }

  if (plan.orderings < 1) throw Error("E_PLAN", "orderings must be >= 1");
  std::uint64_t state = plan.seed;
  (void)splitmix64(state);
  state ^= 0x5851f42d4c957f2dULL * static_cast<std::uint64_t>(row + 1);
  std::vector<int> perm(m);
  std::vector<double> sumsq(m, 0.0);
  for (int rep = 0; rep < plan.orderings; ++rep) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = m - 1; i > 0; --i)
      std::swap(perm[i], perm[bounded(state, i + 1)]);
    std::uint64_t mask = 0;
    double prev = out.v_empty;
    for (int id : perm) {
      mask |= std::uint64_t{1} << id;
      double cur = v(mask);
      double marginal = cur - prev;
      out.phi[id] += marginal;
      sumsq[id] += marginal * marginal;
      prev = cur;
    }
  }
  const double r = static_cast<double>(plan.orderings);
  for (int i = 0; i < m; ++i) {
    out.phi[i] /= r;
    double var = sumsq[i] / r - out.phi[i] * out.phi[i];
    out.variance[i] = std::max(0.0, var) / r;  // variance of the mean
  }
  return out;
}

namespace {

std::vector<int> metric_rows(const EngineContext& ctx) {
  std::vector<int> rows;
  for (int r = 0; r < ctx.data.rows(); ++r) {
    if (ctx.metric.stratum() >= 0) {
      int y = static_cast<int>(ctx.data.value(r, ctx.data.outcome_col()));
      if (y != ctx.metric.stratum()) continue;
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<ShapleyRow> shapley_rows(const EngineContext& ctx,
                                     const std::vector<int>& rows,
                                     const PermutationPlan& plan,
                                     bool fy_transform) {
  // Exceptions cannot cross the parallel region; reject bad plans up front.
  if (plan.exact && ctx.path_count() > plan.exact_bound)
    throw Error("E_GUARD", "exact plan limited to " +
                               std::to_string(plan.exact_bound) + " paths (" +
                               std::to_string(ctx.path_count()) + " present)");
  if (!plan.exact && plan.orderings < 1)
    throw Error("E_PLAN", "orderings must be >= 1");
  std::vector<ShapleyRow> out(rows.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = path_shapley(ctx, rows[i], plan, fy_transform);
  return out;
}

}  // namespace

ContributionReport disparity_contributions(const EngineContext& ctx,
                                           const PermutationPlan& plan,
                                           double gap_alarm) {
  const int m = ctx.path_count();
  if (ctx.metric.stratum() >= 0 && ctx.data.outcome_col() < 0)
    throw Error("E_OUTCOME", "metric needs an outcome column");
  std::vector<int> rows = metric_rows(ctx);
  if (rows.empty()) throw Error("E_DATA", "metric stratum is empty");

  std::vector<ShapleyRow> per_row =
      shapley_rows(ctx, rows, plan, ctx.metric.uses_fy());

  double count[2] = {0, 0};
  std::vector<double> sum[2] = {std::vector<double>(m, 0.0),
                                std::vector<double>(m, 0.0)};
  std::vector<double> var[2] = {std::vector<double>(m, 0.0),
                                std::vector<double>(m, 0.0)};
  double base_sum[2] = {0, 0};
  double full_sum[2] = {0, 0};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int a = static_cast<int>(ctx.data.value(rows[i], ctx.data.sensitive_col()));
    count[a] += 1;
    base_sum[a] += per_row[i].v_empty;
    full_sum[a] += per_row[i].v_full;
    for (int p = 0; p < m; ++p) {
      sum[a][p] += per_row[i].phi[p];
      var[a][p] += per_row[i].variance[p];
    }
  }
  if (count[0] == 0 || count[1] == 0)
    throw Error("E_DATA", "empty sensitive group in the metric's stratum");

  ContributionReport report;
  report.kind = ctx.metric.kind;
  for (int p = 0; p < m; ++p) {
    report.path_names.push_back(ctx.partition.path_name(ctx.graph, p));
    report.phi.push_back(sum[1][p] / count[1] - sum[0][p] / count[0]);
    report.phi_se.push_back(std::sqrt(var[1][p] / (count[1] * count[1]) +
                                      var[0][p] / (count[0] * count[0])));
  }
  report.baseline_mean_a0 = base_sum[0] / count[0];
  report.baseline_mean_a1 = base_sum[1] / count[1];
  report.total_phi = std::accumulate(report.phi.begin(), report.phi.end(), 0.0);
  report.disparity = full_sum[1] / count[1] - full_sum[0] / count[0];
  report.efficiency_gap = std::abs(report.total_phi - report.disparity);
  report.feature_aggregates =
      aggregate_to_features(report.phi, ctx.partition, ctx.graph);

  double denom = std::abs(report.disparity);
  if (denom > 0 && report.efficiency_gap / denom > gap_alarm) {
    std::ostringstream w;
    w << "efficiency gap " << report.efficiency_gap << " exceeds " << gap_alarm
      << " of the measured disparity " << report.disparity;
    report.warnings.push_back(w.str());
  }
  return report;
}

UtilityReport utility_contributions(const EngineContext& ctx,
                                    const PermutationPlan& plan) {
  if (ctx.data.outcome_col() < 0)
    throw Error("E_OUTCOME", "utility needs an outcome column");
  const int m = ctx.path_count();
  std::vector<int> rows(ctx.data.rows());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<ShapleyRow> per_row = shapley_rows(ctx, rows, plan, true);

  UtilityReport report;
  report.psi.assign(m, 0.0);
  const double n = static_cast<double>(rows.size());
  for (const ShapleyRow& sr : per_row) {
    report.psi_empty += sr.v_empty / n;
    report.total_utility += sr.v_full / n;
    for (int p = 0; p < m; ++p) report.psi[p] += sr.phi[p] / n;
  }
  for (int p = 0; p < m; ++p)
    report.path_names.push_back(ctx.partition.path_name(ctx.graph, p));
  report.decomposed_total =
      report.psi_empty +
      std::accumulate(report.psi.begin(), report.psi.end(), 0.0);
  return report;
}

std::map<std::string, double> aggregate_to_features(
    const std::vector<double>& phi, const GroupPartition& partition,
    const Pdag& graph) {
  std::map<std::string, double> out;
  for (std::size_t p = 0; p < phi.size(); ++p) {
    const auto& gp = partition.grouped_paths.at(p);
    int terminal = gp[gp.size() - 2];
    out[partition.group_name(graph, terminal)] += phi[p];
  }
  return out;
}

nlohmann::json ContributionReport::to_json() const {
  nlohmann::json j;
  j["metric"] = to_string(kind);
  nlohmann::json paths = nlohmann::json::array();
  for (std::size_t p = 0; p < phi.size(); ++p) {
    nlohmann::json item;
    item["path"] = path_names[p];
    item["phi"] = phi[p];
    item["phi_se"] = phi_se[p];
    paths.push_back(item);
  }
  j["paths"] = paths;
  j["baseline_mean_a0"] = baseline_mean_a0;
  j["baseline_mean_a1"] = baseline_mean_a1;
  j["total_phi"] = total_phi;
  j["disparity"] = disparity;
  j["efficiency_gap"] = efficiency_gap;
  j["feature_aggregates"] = feature_aggregates;
  j["warnings"] = warnings;
  return j;
}

std::string ContributionReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "path,phi,phi_se\n";
  for (std::size_t p = 0; p < phi.size(); ++p)
    out << "\"" << path_names[p] << "\"," << phi[p] << "," << phi_se[p] << "\n";
  out << "\"(total)\"," << total_phi << ",\n";
  out << "\"(disparity)\"," << disparity << ",\n";
  return out.str();
}

nlohmann::json UtilityReport::to_json() const {
  nlohmann::json j;
  nlohmann::json paths = nlohmann::json::array();
  for (std::size_t p = 0; p < psi.size(); ++p) {
    nlohmann::json item;
    item["path"] = path_names[p];
    item["psi"] = psi[p];
    paths.push_back(item);
  }
  j["paths"] = paths;
  j["psi_empty"] = psi_empty;
  j["total_utility"] = total_utility;
  j["decomposed_total"] = decomposed_total;
  return j;
}

}  // namespace facts
