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

#ifndef FACTS_SYNTHETIC_HPP_
#define FACTS_SYNTHETIC_HPP_

#include <cstdint>
#include <vector>

#include "facts/dataset.hpp"
#include "facts/decomposition.hpp"
#include "facts/graph.hpp"
#include "facts/structural_model.hpp"

namespace facts {

enum class Setting { S1, S2 };

struct GeneratorConfig {
  int features = 10;
  double p_feat = 0.2;  // X_j -> X_i edge probability (i > j)
  double p_sens = 0.4;  // A -> X_i edge probability
  Setting setting = Setting::S1;
  int rows = 1000;
  std::uint64_t seed = 1;
  // Antithetic pairing: consecutive rows share the feature noise vector and
  // take A = 0 and A = 1, so the two sensitive groups are exact noise mirrors
  // (the A-blind baseline value cancels between groups identically).
  bool paired = true;
  double noise_sd = 1.0;
};

struct Generated {
  Pdag graph;
  Dataset data;
  // feat_coef[i][j]: weight of X_j in X_i's equation (0 without an edge).
  std::vector<std::vector<double>> feat_coef;
  std::vector<double> sens_coef;  // weight of A in X_i's equation
  std::vector<double> y_coef;     // label score weights
  Setting setting = Setting::S1;
};

// Random DAG (X_j -> X_i only for i > j), linear feature equations with
// independent Gaussian noise, binary label from a normalized linear score
// (S1) or its logistic squash (S2). Deterministic per seed.
Generated generate(const GeneratorConfig& config);

// The generating equations expressed over the FACT skeleton: linear links
// with the true coefficients (zero for non-parents), residuals recovered
// from the data (exactly the generator's noise).
StructuralModel true_structural_model(const Generated& gen,
                                      const GroupPartition& partition,
                                      const FactSet& facts);

struct GroundTruth {
  std::vector<double> theta;  // per grouped path
  double disparity = 0.0;
};

// Exact per-path contributions by full coalition enumeration with Shapley
// weights (a route independent of the engine's permutation enumeration).
// The context must carry the true structural model.
GroundTruth exact_ground_truth(const EngineContext& ctx, int guard = 12);

struct EvalScore {
  double nrmse = 0.0;
  double efficiency_gap = 0.0;
};

// nrmse = ||theta - phi|| / ||theta||; efficiency_gap = |sum phi - Delta| /
// |Delta|. Zero-norm truth or zero disparity is an error, never a silent 0.
EvalScore score(const std::vector<double>& estimates, const GroundTruth& truth);

}  // namespace facts

#endif  // FACTS_SYNTHETIC_HPP_
