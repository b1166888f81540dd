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

#ifndef FACTS_CI_TEST_HPP_
#define FACTS_CI_TEST_HPP_

#include <vector>

#include "facts/dataset.hpp"
#include "facts/fact_search.hpp"
#include "facts/graph.hpp"

namespace facts {

// Fisher-z test on the partial correlation of columns x and y given the
// conditioning columns. Returns the two-sided p-value.
double partial_correlation_pvalue(const Dataset& data, int x, int y,
                                  const std::vector<int>& cond);

// Log-likelihood-ratio (G) test of independence between two discrete columns
// within every stratum of the conditioning columns, degrees of freedom summed
// across strata. Returns the p-value.
double g_test_pvalue(const Dataset& data, int x, int y,
                     const std::vector<int>& cond);

// Upper tail of the chi-square distribution (regularized incomplete gamma).
double chi_square_upper_tail(double statistic, double dof);

// Data-backed oracle: G-test when every tested column is discrete, Fisher-z
// partial correlation otherwise (discrete columns enter as numeric codes).
// `node_to_col[node]` maps graph node ids to dataset columns; -1 entries are
// untestable and reported dependent.
CiOracle make_data_ci_oracle(const Dataset& data, std::vector<int> node_to_col,
                             double alpha = 0.01);

// Graph-backed oracle answering with d-separation in a DAG. Used as ground
// truth in tests; the graph must be fully directed.
CiOracle make_dseparation_oracle(const Pdag& dag);

}  // namespace facts

#endif  // FACTS_CI_TEST_HPP_
