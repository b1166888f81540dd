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

#include <cmath>
#include <random>

#include "doctest.h"
#include "facts/fact_search.hpp"

using namespace facts;

namespace {

Pdag g1() {
  return Pdag::parse(
      "node A kind=sensitive\n"
      "node X1 kind=feature\n"
      "node X2 kind=feature\n"
      "node X3 kind=feature\n"
      "node Yhat kind=prediction\n"
      "A -> X1\n"
      "A -> X2\n"
      "X1 -> X2\n");
}

struct Fixture {
  Pdag graph;
  FactSet facts;
  GroupPartition partition;
  Dataset data;
};

// X1 = 2A + e1, X2 = A + X1 + e2, X3 = e3.
Fixture linear_fixture(int n, std::uint64_t seed) {
  Fixture fx{g1(), {}, {}, Dataset::from_columns({}, {})};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> a(n), x1(n), x2(n), x3(n);
  for (int i = 0; i < n; ++i) {
    a[i] = static_cast<double>(rng() % 2);
    x1[i] = 2.0 * a[i] + noise(rng);
    x2[i] = a[i] + x1[i] + noise(rng);
    x3[i] = noise(rng);
  }
  fx.data = Dataset::from_columns(
      {{"A", ColumnType::Binary},
       {"X1", ColumnType::Continuous},
       {"X2", ColumnType::Continuous},
       {"X3", ColumnType::Continuous}},
      {a, x1, x2, x3});
  fx.data.set_sensitive("A");
  fx.facts = search_facts(fx.graph);
  fx.partition = group_variables(fx.graph, fx.facts,
                                 compute_order_relations(fx.graph, fx.facts));
  return fx;
}

std::vector<double> raw_inputs(const LinkFunction& lk, const Dataset& d,
                               int row) {
  std::vector<double> raw(lk.input_cols.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = d.value(row, lk.input_cols[i]);
  return raw;
}

}  // namespace

TEST_CASE("node-to-column map covers data columns and marks the rest") {
  Fixture fx = linear_fixture(50, 1);
  auto cols = node_columns(fx.graph, fx.data);
  CHECK(cols[fx.graph.sensitive()] == 0);
  CHECK(cols[fx.graph.find_node("X2")] == 2);
  CHECK(cols[fx.graph.prediction()] == -1);
}

TEST_CASE("refitting a linear system recovers the generating coefficients") {
  Fixture fx = linear_fixture(5000, 7);
  StructuralModel sm =
      fit_structural_model(fx.data, fx.graph, fx.partition, fx.facts);
  REQUIRE(sm.link_sets.size() == 1);
  REQUIRE(sm.link_sets[0].size() == 2);

  const LinkFunction& lx1 = sm.link_sets[0][sm.target_index(1)];
  // Inputs: A (sensitive predecessor) then the uninvolved X3.
  CHECK(lx1.input_cols == std::vector<int>{0, 3});
  CHECK(lx1.kind == LinkKind::Linear);
  CHECK(lx1.coef(0, 0) == doctest::Approx(0.0).epsilon(0.05));  // intercept
  CHECK(lx1.coef(0, 1) == doctest::Approx(2.0).epsilon(0.025));
  CHECK(lx1.coef(0, 2) == doctest::Approx(0.0).epsilon(0.05));

  const LinkFunction& lx2 = sm.link_sets[0][sm.target_index(2)];
  CHECK(lx2.input_cols == std::vector<int>{0, 1, 3});
  CHECK(lx2.coef(0, 1) == doctest::Approx(1.0).epsilon(0.05));  // A
  CHECK(lx2.coef(0, 2) == doctest::Approx(1.0).epsilon(0.05));  // X1
}

TEST_CASE("reconstruction from inputs and residual is exact on training rows") {
  Fixture fx = linear_fixture(500, 11);
  StructuralModel sm =
      fit_structural_model(fx.data, fx.graph, fx.partition, fx.facts);
  for (int r = 0; r < fx.data.rows(); ++r) {
    for (std::size_t t = 0; t < sm.targets.size(); ++t) {
      const LinkFunction& lk = sm.link(r, static_cast<int>(t));
      double rebuilt = counterfactual_value(lk, raw_inputs(lk, fx.data, r),
                                            sm.residual(r, static_cast<int>(t)));
      CHECK(rebuilt ==
            doctest::Approx(fx.data.value(r, sm.targets[t])).epsilon(1e-12));
    }
  }
}

TEST_CASE("residuals are uncorrelated with the regression inputs") {
  Fixture fx = linear_fixture(5000, 13);
  StructuralModel sm =
      fit_structural_model(fx.data, fx.graph, fx.partition, fx.facts);
  int t = sm.target_index(2);  // X2 equation
  const LinkFunction& lk = sm.link_sets[0][t];
  for (std::size_t i = 0; i < lk.input_cols.size(); ++i) {
    double sx = 0, se = 0, sxe = 0, sxx = 0, see = 0;
    const int n = fx.data.rows();
    for (int r = 0; r < n; ++r) {
      double x = fx.data.value(r, lk.input_cols[i]);
      double e = sm.residual(r, t);
      sx += x; se += e; sxe += x * e; sxx += x * x; see += e * e;
    }
    double cov = sxe / n - (sx / n) * (se / n);
    double vx = sxx / n - (sx / n) * (sx / n);
    double ve = see / n - (se / n) * (se / n);
    CHECK(std::abs(cov / std::sqrt(vx * ve)) < 0.05);
  }
}

TEST_CASE("constant targets degrade to intercept-only links") {
  Pdag g = Pdag::parse(
      "node A kind=sensitive\n"
      "node X1 kind=feature\n"
      "node Yhat kind=prediction\n"
      "A -> X1\n");
  std::mt19937_64 rng(17);
  const int n = 100;
  std::vector<double> a(n), x1(n, 3.25);
  for (int i = 0; i < n; ++i) a[i] = static_cast<double>(rng() % 2);
  Dataset d = Dataset::from_columns(
      {{"A", ColumnType::Binary}, {"X1", ColumnType::Continuous}}, {a, x1});
  d.set_sensitive("A");
  FactSet fs = search_facts(g);
  GroupPartition part = group_variables(g, fs, compute_order_relations(g, fs));
  StructuralModel sm = fit_structural_model(d, g, part, fs);
  const LinkFunction& lk = sm.link_sets[0][0];
  CHECK(lk.coef(0, 0) == doctest::Approx(3.25));
  for (int c = 1; c < lk.coef.cols(); ++c) CHECK(lk.coef(0, c) == 0.0);
  for (int r = 0; r < d.rows(); ++r)
    CHECK(sm.residual(r, 0) == doctest::Approx(0.0));
}

TEST_CASE("duplicated regressor columns raise a fit error") {
  Fixture fx = linear_fixture(100, 19);
  std::vector<std::vector<double>> cols(4);
  for (int c = 0; c < 4; ++c) cols[c] = fx.data.column(c);
  cols[3] = cols[0];  // X3 duplicates A: the design matrix loses rank
  Dataset dup = Dataset::from_columns(
      {{"A", ColumnType::Binary},
       {"X1", ColumnType::Continuous},
       {"X2", ColumnType::Continuous},
       {"X3", ColumnType::Continuous}},
      cols);
  CHECK_THROWS_WITH_AS(
      fit_structural_model(dup, fx.graph, fx.partition, fx.facts),
      doctest::Contains("singular design matrix"), Error);
}

TEST_CASE("binary involved features get logistic links with exact rebuild") {
  Pdag g = Pdag::parse(
      "node A kind=sensitive\n"
      "node X1 kind=feature\n"
      "node Yhat kind=prediction\n"
      "A -> X1\n");
  std::mt19937_64 rng(23);
  const int n = 2000;
  std::vector<double> a(n), x1(n);
  for (int i = 0; i < n; ++i) {
    a[i] = static_cast<double>(rng() % 2);
    double p = 1.0 / (1.0 + std::exp(-(2.0 * a[i] - 1.0)));
    x1[i] = (std::uniform_real_distribution<>(0, 1)(rng) < p) ? 1.0 : 0.0;
  }
  Dataset d = Dataset::from_columns(
      {{"A", ColumnType::Binary}, {"X1", ColumnType::Binary}}, {a, x1});
  d.set_sensitive("A");
  FactSet fs = search_facts(g);
  GroupPartition part = group_variables(g, fs, compute_order_relations(g, fs));
  StructuralModel sm = fit_structural_model(d, g, part, fs);
  const LinkFunction& lk = sm.link_sets[0][0];
  CHECK(lk.kind == LinkKind::Logistic);
  CHECK(lk.coef(0, 1) == doctest::Approx(2.0).epsilon(0.2));
  for (int r = 0; r < n; ++r) {
    double rebuilt =
        counterfactual_value(lk, raw_inputs(lk, d, r), sm.residual(r, 0));
    CHECK(rebuilt == d.value(r, 0 + 1));
  }
  // The latent quantile residual stays in [0, 1].
  for (int r = 0; r < n; ++r) {
    CHECK(sm.residual(r, 0) >= 0.0);
    CHECK(sm.residual(r, 0) <= 1.0);
  }
}

TEST_CASE("categorical involved features get multinomial links with exact rebuild") {
  Pdag g = Pdag::parse(
      "node A kind=sensitive\n"
      "node X1 kind=feature\n"
      "node Yhat kind=prediction\n"
      "A -> X1\n");
  std::mt19937_64 rng(29);
  const int n = 1500;
  std::vector<double> a(n), x1(n);
  for (int i = 0; i < n; ++i) {
    a[i] = static_cast<double>(rng() % 2);
    double u = std::uniform_real_distribution<>(0, 1)(rng);
    x1[i] = a[i] > 0.5 ? (u < 0.6 ? 0.0 : (u < 0.8 ? 1.0 : 2.0))
                       : (u < 0.2 ? 0.0 : (u < 0.5 ? 1.0 : 2.0));
  }
  Dataset d = Dataset::from_columns(
      {{"A", ColumnType::Binary}, {"X1", ColumnType::Categorical}}, {a, x1},
      {{}, {"low", "mid", "high"}});
  d.set_sensitive("A");
  FactSet fs = search_facts(g);
  GroupPartition part = group_variables(g, fs, compute_order_relations(g, fs));
  StructuralModel sm = fit_structural_model(d, g, part, fs);
  const LinkFunction& lk = sm.link_sets[0][0];
  CHECK(lk.kind == LinkKind::Multinomial);
  CHECK(lk.coef.rows() == 3);
  for (int r = 0; r < n; ++r) {
    double rebuilt =
        counterfactual_value(lk, raw_inputs(lk, d, r), sm.residual(r, 0));
    CHECK(rebuilt == d.value(r, 1));
  }
  // Class probabilities sum to one.
  Eigen::VectorXd p = lk.class_probabilities({1.0});
  CHECK(p.sum() == doctest::Approx(1.0));
}

TEST_CASE("conditional fit keeps one link set per outcome value") {
  // A -> X1 -> Y <- X2, so the spouse X2 becomes informative given Y.
  Pdag g = Pdag::parse(
      "node A kind=sensitive\n"
      "node X1 kind=feature\n"
      "node X2 kind=feature\n"
      "node Y kind=outcome\n"
      "node Yhat kind=prediction\n"
      "A -> X1\n"
      "X1 -> Y\n"
      "X2 -> Y\n");
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int n = 3000;
  std::vector<double> a(n), x1(n), x2(n), y(n);
  for (int i = 0; i < n; ++i) {
    a[i] = static_cast<double>(rng() % 2);
    x1[i] = 1.5 * a[i] + noise(rng);
    x2[i] = noise(rng);
    y[i] = (x1[i] + x2[i] + 0.5 * noise(rng)) > 0.75 ? 1.0 : 0.0;
  }
  Dataset d = Dataset::from_columns(
      {{"A", ColumnType::Binary},
       {"X1", ColumnType::Continuous},
       {"X2", ColumnType::Continuous},
       {"Y", ColumnType::Binary}},
      {a, x1, x2, y});
  d.set_sensitive("A");
  d.set_outcome("Y");
  FactSet fs = search_facts_relative_to_y(g);
  GroupPartition part = group_variables(g, fs, compute_order_relations(g, fs));
  StructuralModel sm = fit_conditional_models(d, g, part, fs);
  CHECK(sm.conditional);
  REQUIRE(sm.link_sets.size() == 2);
  CHECK(sm.link_sets[0].size() == sm.link_sets[1].size());
  // Strata differ, so the fitted equations differ.
  const LinkFunction& l0 = sm.link_sets[0][sm.target_index(1)];
  const LinkFunction& l1 = sm.link_sets[1][sm.target_index(1)];
  CHECK(l0.coef(0, 0) != l1.coef(0, 0));
  // Rows rebuild exactly from their own stratum's links.
  for (int r = 0; r < n; ++r) {
    CHECK(sm.row_stratum[r] == static_cast<int>(y[r]));
    for (std::size_t t = 0; t < sm.targets.size(); ++t) {
      const LinkFunction& lk = sm.link(r, static_cast<int>(t));
      double rebuilt = counterfactual_value(lk, raw_inputs(lk, d, r),
                                            sm.residual(r, static_cast<int>(t)));
      CHECK(rebuilt ==
            doctest::Approx(d.value(r, sm.targets[t])).epsilon(1e-12));
    }
  }

  // A stratum below the minimum is rejected.
  std::vector<int> head(40);
  for (int i = 0; i < 40; ++i) head[i] = i;
  Dataset small = d.subset(head);
  small.set_sensitive("A");
  small.set_outcome("Y");
  CHECK_THROWS_WITH_AS(fit_conditional_models(small, g, part, fs),
                       doctest::Contains("stratum"), Error);
  // The marginal-mode partition is refused.
  FactSet marginal = search_facts(g);
  GroupPartition mp =
      group_variables(g, marginal, compute_order_relations(g, marginal));
  CHECK_THROWS_AS(fit_conditional_models(d, g, mp, marginal), Error);
}

TEST_CASE("residual tables transfer to fresh data with the same schema") {
  Fixture fx = linear_fixture(400, 37);
  StructuralModel sm =
      fit_structural_model(fx.data, fx.graph, fx.partition, fx.facts);
  Fixture other = linear_fixture(100, 38);
  auto [res, strata] = sm.residuals_for(other.data);
  CHECK(res.rows() == 100);
  CHECK(strata == std::vector<int>(100, 0));
  for (int r = 0; r < 100; ++r)
    for (std::size_t t = 0; t < sm.targets.size(); ++t) {
      const LinkFunction& lk = sm.link_sets[0][t];
      double rebuilt = counterfactual_value(
          lk, raw_inputs(lk, other.data, r), res(r, static_cast<int>(t)));
      CHECK(rebuilt ==
            doctest::Approx(other.data.value(r, sm.targets[t])).epsilon(1e-12));
    }
}
