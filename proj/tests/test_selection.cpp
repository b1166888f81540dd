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
#include <random>

#include "doctest.h"

using namespace facts;

namespace {

struct SweepFixture {
  Pdag graph = Pdag::parse(
      "node A kind=sensitive\n"
      "node X1 kind=feature\n"
      "node X2 kind=feature\n"
      "node Yhat kind=prediction\n"
      "A -> X1\n"
      "A -> X2\n"
      "X1 -> X2\n");
  Dataset data = Dataset::from_columns({}, {});
  FactSet facts;
  GroupPartition partition;
  StructuralModel sm;
  LogisticPredictor f{[] {
    Eigen::VectorXd w(3);
    w << 0.0, 1.0, 0.5;
    return w;
  }()};

  SweepFixture() {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> noise(0.0, 1.0);
    const int n = 300;
    std::vector<double> a(n), x1(n), x2(n), y(n);
    for (int i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng() % 2);
      x1[i] = 1.5 * a[i] + noise(rng);
      x2[i] = a[i] + x1[i] + noise(rng);
      y[i] = x1[i] + x2[i] > 1.5 ? 1.0 : 0.0;
    }
    data = Dataset::from_columns({{"A", ColumnType::Binary},
                                  {"X1", ColumnType::Continuous},
                                  {"X2", ColumnType::Continuous},
                                  {"Y", ColumnType::Binary}},
                                 {a, x1, x2, y});
    data.set_sensitive("A");
    data.set_outcome("Y");
    facts = search_facts(graph);
    partition =
        group_variables(graph, facts, compute_order_relations(graph, facts));
    sm = fit_structural_model(data, graph, partition, facts);
  }

  EngineContext context() const {
    return EngineContext::make(graph, data, facts, partition, sm, f,
                               MetricSpec{});
  }
};

SelectionProblem random_problem(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SelectionProblem p;
  for (int i = 0; i < m; ++i) {
    p.phi.push_back(u(rng));
    p.psi.push_back(u(rng));
  }
  p.lambda = std::abs(u(rng)) * 3.0;
  return p;
}

}  // namespace

TEST_CASE("the loss is utility forgone plus weighted absolute disparity") {
  SelectionProblem p;
  p.phi = {0.4, -0.1, 0.2};
  p.psi = {0.3, 0.5, -0.2};
  p.lambda = 2.0;
  CHECK(selection_loss({}, p) == doctest::Approx(0.0));
  CHECK(selection_loss({0}, p) == doctest::Approx(-0.3 + 2.0 * 0.4));
  CHECK(selection_loss({0, 1, 2}, p) ==
        doctest::Approx(-(0.3 + 0.5 - 0.2) + 2.0 * std::abs(0.5)));
  CHECK(selection_loss({1, 2}, p) ==
        doctest::Approx(-(0.5 - 0.2) + 2.0 * std::abs(0.1)));
}

TEST_CASE("greedy removal traces every path and keeps the best coalition") {
  SelectionProblem p;
  p.phi = {1.0, 1.0, -0.05};
  p.psi = {0.1, 0.1, 0.4};
  p.lambda = 1.0;
  SelectionResult r = select_facts(p);
  REQUIRE(r.trace.size() == 3);
  // The trace ends at the empty set: each path removed exactly once.
  std::vector<int> removed;
  for (const auto& step : r.trace) removed.push_back(step.removed);
  std::sort(removed.begin(), removed.end());
  CHECK(removed == std::vector<int>{0, 1, 2});
  CHECK(r.loss == doctest::Approx(selection_loss(r.selected, p)));
  // Never worse than keeping everything or dropping everything.
  CHECK(r.loss <= selection_loss({0, 1, 2}, p) + 1e-12);
  CHECK(r.loss <= selection_loss({}, p) + 1e-12);
}

TEST_CASE("greedy matches the exhaustive optimum on small separable problems") {
  // With lambda = 0 the objective is additive, so greedy is exact.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    SelectionProblem p = random_problem(rng, 6);
    p.lambda = 0.0;
    SelectionResult g = select_facts(p);
    SelectionResult e = exhaustive_best(p);
    CHECK(g.loss == doctest::Approx(e.loss).epsilon(1e-12));
  }
}

TEST_CASE("greedy stays within the trajectory guarantee on random problems") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    SelectionProblem p = random_problem(rng, 3 + static_cast<int>(rng() % 8));
    SelectionResult g = select_facts(p);
    SelectionResult e = exhaustive_best(p);
    std::vector<int> full(p.phi.size());
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = static_cast<int>(i);
    CHECK(e.loss <= g.loss + 1e-12);
    CHECK(g.loss <= std::min(selection_loss(full, p), selection_loss({}, p)) +
                        1e-12);
    CHECK(g.loss == doctest::Approx(selection_loss(g.selected, p)));
  }
}

TEST_CASE("huge lambda forces near-zero selected disparity") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    SelectionProblem p = random_problem(rng, 8);
    p.lambda = 1e6;
    SelectionResult r = select_facts(p);
    double total = 0.0;
    for (int i : r.selected) total += p.phi[i];
    // The empty set is always available, so |sum phi| stays tiny relative to
    // the utility scale (|psi| <= 1 each).
    CHECK(std::abs(total) * p.lambda <= 8.0 + 1e-9);
  }
}

TEST_CASE("the exhaustive search refuses oversized problems") {
  SelectionProblem p;
  p.phi.assign(16, 0.1);
  p.psi.assign(16, 0.1);
  try {
    exhaustive_best(p);
    FAIL("expected a guard error");
  } catch (const Error& e) {
    CHECK(e.code() == "E_GUARD");
  }
  CHECK_NOTHROW(exhaustive_best(p, 16));
}

TEST_CASE("selection results serialize with path names") {
  SelectionProblem p;
  p.phi = {0.5, -0.5};
  p.psi = {1.0, 1.0};
  p.lambda = 0.1;
  SelectionResult r = select_facts(p);
  nlohmann::json j = r.to_json({"A -> X1 -> Yhat", "A -> X2 -> Yhat"});
  CHECK(j.contains("selected"));
  CHECK(j.contains("loss"));
  CHECK(j.contains("trace"));
  for (const auto& name : j["selected"]) {
    std::string s = name.get<std::string>();
    CHECK((s == "A -> X1 -> Yhat" || s == "A -> X2 -> Yhat"));
  }
}

TEST_CASE("the adjusted prediction is the coalition value") {
  SweepFixture fx;
  EngineContext ctx = fx.context();
  for (int row : {0, 17, 123}) {
    CHECK(adjusted_prediction(ctx, row, {0, 2}) ==
          value_function(ctx, row, {0, 2}));
    CHECK(adjusted_prediction(ctx, row, {0, 1, 2}) ==
          value_function(ctx, row, {0, 1, 2}));
  }
}

TEST_CASE("the lambda sweep trades disparity against accuracy") {
  SweepFixture fx;
  EngineContext ctx = fx.context();
  PermutationPlan plan;
  plan.exact = true;
  ContributionReport d = disparity_contributions(ctx, plan);
  UtilityReport u = utility_contributions(ctx, plan);

  TradeoffCurve curve = sweep(ctx, d, u, {0.0, 0.5, 100.0});
  REQUIRE(curve.points.size() == 3);
  // Lambda 0 keeps everything useful; huge lambda drives disparity down.
  CHECK(std::abs(curve.points[2].disparity) <=
        std::abs(curve.points[0].disparity) + 1e-9);
  CHECK(curve.points[0].accuracy >= curve.points[2].accuracy - 1e-9);

  std::string csv = curve.to_csv();
  CHECK(csv.rfind("lambda,accuracy,disparity,selected\n", 0) == 0);

  CHECK_THROWS_AS(sweep(ctx, d, u, {}), Error);
  try {
    sweep(ctx, d, u, {1.0, 1.0});
    FAIL("expected a selection error");
  } catch (const Error& e) {
    CHECK(e.code() == "E_SELECTION");
  }
}

TEST_CASE("sweeping without an outcome column fails loudly") {
  SweepFixture fx;
  Dataset d2 = fx.data;  // same rows, outcome unset
  Dataset no_outcome = Dataset::from_columns(
      {{"A", ColumnType::Binary},
       {"X1", ColumnType::Continuous},
       {"X2", ColumnType::Continuous}},
      {fx.data.column(0), fx.data.column(1), fx.data.column(2)});
  no_outcome.set_sensitive("A");
  StructuralModel sm =
      fit_structural_model(no_outcome, fx.graph, fx.partition, fx.facts);
  EngineContext ctx = EngineContext::make(fx.graph, no_outcome, fx.facts,
                                          fx.partition, sm, fx.f, MetricSpec{});
  PermutationPlan plan;
  plan.exact = true;
  ContributionReport dr = disparity_contributions(ctx, plan);
  UtilityReport ur;
  ur.psi = dr.phi;  // shape only; sweep must fail before using it
  try {
    sweep(ctx, dr, ur, {0.0, 1.0});
    FAIL("expected an outcome error");
  } catch (const Error& e) {
    CHECK(e.code() == "E_OUTCOME");
  }
}
