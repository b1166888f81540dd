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

#ifndef FACTS_REFERENCE_HPP_
#define FACTS_REFERENCE_HPP_

#include "facts/decomposition.hpp"

namespace facts {

// Serial reference path: no coalition-value caching, no parallel rows. Kept
// for testing the parallel kernels and for the benchmark target; must return
// bitwise-identical results for any plan.
ShapleyRow path_shapley_reference(const EngineContext& ctx, int row,
                                  const PermutationPlan& plan,
                                  bool fy_transform = false);

ContributionReport disparity_contributions_reference(
    const EngineContext& ctx, const PermutationPlan& plan,
    double gap_alarm = 0.05);

}  // namespace facts

#endif  // FACTS_REFERENCE_HPP_
