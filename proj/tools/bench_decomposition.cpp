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

// Compares the parallel decomposition kernel against the serial reference on
// a generated instance and checks that both produce identical reports.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>

#include "facts/decomposition.hpp"
#include "facts/predictor.hpp"
#include "facts/reference.hpp"
#include "facts/synthetic.hpp"

int main(int argc, char** argv) {
  int rows = argc > 1 ? std::atoi(argv[1]) : 2000;
  int features = argc > 2 ? std::atoi(argv[2]) : 8;

  facts::GeneratorConfig config;
  config.features = features;
  config.rows = rows;
  config.seed = 42;
  facts::Generated gen = facts::generate(config);

  facts::FactSet fs = facts::search_facts(gen.graph);
  auto order = facts::compute_order_relations(gen.graph, fs);
  facts::GroupPartition partition = facts::group_variables(gen.graph, fs, order);
  facts::StructuralModel sm =
      facts::fit_structural_model(gen.data, gen.graph, partition, fs);

  std::vector<int> feature_cols;
  for (int node : gen.graph.feature_nodes())
    feature_cols.push_back(gen.data.column_index(gen.graph.node(node).name));
  facts::Encoding enc(gen.data, feature_cols);
  std::unique_ptr<facts::Predictor> predictor =
      facts::train_predictor(gen.data, enc, "logistic");

  facts::MetricSpec metric;
  facts::EngineContext ctx = facts::EngineContext::make(
      gen.graph, gen.data, fs, partition, sm, *predictor, metric);
  facts::PermutationPlan plan;
  plan.orderings = 50;

  std::printf("rows=%d features=%d grouped_paths=%d threads=%d\n", rows,
              features, ctx.path_count(), omp_get_max_threads());

  auto t0 = std::chrono::steady_clock::now();
  facts::ContributionReport serial =
      facts::disparity_contributions_reference(ctx, plan);
  auto t1 = std::chrono::steady_clock::now();
  facts::ContributionReport parallel = facts::disparity_contributions(ctx, plan);
  auto t2 = std::chrono::steady_clock::now();

  double serial_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  double parallel_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
  std::printf("serial    %10.1f ms\n", serial_ms);
  std::printf("parallel  %10.1f ms  (speedup %.2fx)\n", parallel_ms,
              serial_ms / parallel_ms);

  double max_diff = 0.0;
  for (std::size_t i = 0; i < serial.phi.size(); ++i)
    max_diff = std::max(max_diff, std::abs(serial.phi[i] - parallel.phi[i]));
  std::printf("max |phi difference| = %.3e\n", max_diff);
  return max_diff == 0.0 ? 0 : 1;
}
