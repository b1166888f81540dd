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

#ifndef FACTS_SELECTION_HPP_
#define FACTS_SELECTION_HPP_

#include <string>
#include <vector>

#include "facts/decomposition.hpp"
#include "json.hpp"

namespace facts {

struct SelectionProblem {
  std::vector<double> phi;  // disparity contribution per path
  std::vector<double> psi;  // utility contribution per path
  double lambda = 0.0;
};

// L(T) = -sum psi(T) + lambda * |sum phi(T)|.
double selection_loss(const std::vector<int>& coalition,
                      const SelectionProblem& problem);

struct SelectionResult {
  std::vector<int> selected;
  double loss = 0.0;
  struct TraceStep {
    int removed = -1;
    double loss_after = 0.0;
  };
  std::vector<TraceStep> trace;  // one step per path, ending at the empty set

  nlohmann::json to_json(const std::vector<std::string>& path_names) const;
};

// Greedy removal from the full set, keeping the best coalition seen along
// the trajectory (the full set and the empty set included). Ties broken by
// the smallest removable path id.
SelectionResult select_facts(const SelectionProblem& problem);

// Exhaustive minimum over all subsets; guarded.
SelectionResult exhaustive_best(const SelectionProblem& problem,
                                int guard = 15);

// v_f(T*) used as the new prediction for a row.
double adjusted_prediction(const EngineContext& ctx, int row,
                           const std::vector<int>& coalition);

struct TradeoffCurve {
  struct Point {
    double lambda = 0.0;
    std::vector<int> selected;
    double accuracy = 0.0;
    double disparity = 0.0;
  };
  std::vector<Point> points;

  std::string to_csv() const;
};

// For each lambda (strictly ascending): select over the reports' (phi, psi),
// score every row with the adjusted prediction, record accuracy against the
// outcome column and the demographic-parity disparity of the adjusted scores.
TradeoffCurve sweep(const EngineContext& ctx,
                    const ContributionReport& disparity_report,
                    const UtilityReport& utility_report,
                    const std::vector<double>& lambdas);

}  // namespace facts

#endif  // FACTS_SELECTION_HPP_
