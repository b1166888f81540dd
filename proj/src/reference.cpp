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

#include "facts/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace facts {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int bounded(std::uint64_t& state, int n) {
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    std::uint64_t r = splitmix64(state);
    if (r < limit) return static_cast<int>(r % n);
  }
}

std::vector<int> mask_to_coalition(std::uint64_t mask, int m) {
  std::vector<int> out;
  for (int i = 0; i < m; ++i)
    if (mask & (std::uint64_t{1} << i)) out.push_back(i);
  return out;
}

}  // namespace

ShapleyRow path_shapley_reference(const EngineContext& ctx, int row,
                                  const PermutationPlan& plan,
                                  bool fy_transform) {
  const int m = ctx.path_count();
  ShapleyRow out;
  out.phi.assign(m, 0.0);
  out.variance.assign(m, 0.0);

  auto v = [&](std::uint64_t mask) {
    return value_function(ctx, row, mask_to_coalition(mask, m), fy_transform);
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
    out.variance[i] = std::max(0.0, var) / r;
  }
  return out;
}

ContributionReport disparity_contributions_reference(
    const EngineContext& ctx, const PermutationPlan& plan, double gap_alarm) {
  const int m = ctx.path_count();
  if (ctx.metric.stratum() >= 0 && ctx.data.outcome_col() < 0)
    throw Error("E_OUTCOME", "metric needs an outcome column");

  double count[2] = {0, 0};
  std::vector<double> sum[2] = {std::vector<double>(m, 0.0),
                                std::vector<double>(m, 0.0)};
  std::vector<double> var[2] = {std::vector<double>(m, 0.0),
                                std::vector<double>(m, 0.0)};
  double base_sum[2] = {0, 0};
  double full_sum[2] = {0, 0};
  for (int r = 0; r < ctx.data.rows(); ++r) {
    if (ctx.metric.stratum() >= 0) {
      int y = static_cast<int>(ctx.data.value(r, ctx.data.outcome_col()));
      if (y != ctx.metric.stratum()) continue;
    }
    ShapleyRow sr = path_shapley_reference(ctx, r, plan, ctx.metric.uses_fy());
    int a = static_cast<int>(ctx.data.value(r, ctx.data.sensitive_col()));
    count[a] += 1;
    base_sum[a] += sr.v_empty;
    full_sum[a] += sr.v_full;
    for (int p = 0; p < m; ++p) {
      sum[a][p] += sr.phi[p];
      var[a][p] += sr.variance[p];
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

}  // namespace facts
