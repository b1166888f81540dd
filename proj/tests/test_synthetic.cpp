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

#include "facts/synthetic.hpp"

#include <cmath>

#include "doctest.h"

using namespace facts;

namespace {

struct Derived {
  FactSet facts;
  GroupPartition partition;

  explicit Derived(const Generated& gen) {
    facts = search_facts(gen.graph);
    partition =
        group_variables(gen.graph, facts, compute_order_relations(gen.graph, facts));
  }
};

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  GeneratorConfig cfg;
  cfg.features = 6;
  cfg.rows = 100;
  cfg.seed = 9;
  Generated a = generate(cfg);
  Generated b = generate(cfg);
  CHECK(a.data.to_csv() == b.data.to_csv());
  CHECK(a.graph.serialize() == b.graph.serialize());
  CHECK(a.feat_coef == b.feat_coef);
  cfg.seed = 10;
  Generated c = generate(cfg);
  CHECK(a.data.to_csv() != c.data.to_csv());
}

TEST_CASE("paired rows are noise mirrors with opposite sensitive values") {
  GeneratorConfig cfg;
  cfg.features = 5;
  cfg.rows = 60;
  cfg.seed = 3;
  Generated gen = generate(cfg);
  const int m = cfg.features;
  for (int r = 0; r < cfg.rows; r += 2) {
    CHECK(gen.data.value(r, 0) == 0.0);
    CHECK(gen.data.value(r + 1, 0) == 1.0);
    // Recover each row's noise by inverting the linear equations; the pair
    // must agree exactly.
    for (int i = 0; i < m; ++i) {
      double n0 = gen.data.value(r, i + 1);
      double n1 = gen.data.value(r + 1, i + 1) - gen.sens_coef[i];
      for (int j = 0; j < i; ++j) {
        n0 -= gen.feat_coef[i][j] * gen.data.value(r, j + 1);
        n1 -= gen.feat_coef[i][j] * gen.data.value(r + 1, j + 1);
      }
      CHECK(n0 == doctest::Approx(n1).epsilon(1e-12));
    }
  }
}

TEST_CASE("unpaired generation draws the sensitive value at random") {
  GeneratorConfig cfg;
  cfg.features = 3;
  cfg.rows = 501;  // odd rows are fine without pairing
  cfg.paired = false;
  Generated gen = generate(cfg);
  int ones = 0;
  for (int r = 0; r < cfg.rows; ++r)
    ones += gen.data.value(r, 0) == 1.0 ? 1 : 0;
  CHECK(ones > 150);
  CHECK(ones < 350);
}

TEST_CASE("bad configurations are rejected") {
  GeneratorConfig cfg;
  cfg.features = 0;
  CHECK_THROWS_AS(generate(cfg), Error);
  cfg.features = 3;
  cfg.rows = 0;
  CHECK_THROWS_AS(generate(cfg), Error);
  cfg.rows = 7;  // odd with pairing on
  try {
    generate(cfg);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == "E_CONFIG");
  }
  cfg.rows = 8;
  cfg.p_feat = 1.5;
  CHECK_THROWS_AS(generate(cfg), Error);
}

TEST_CASE("edge probabilities shape the graph") {
  GeneratorConfig cfg;
  cfg.features = 6;
  cfg.rows = 10;
  cfg.p_feat = 0.0;
  cfg.p_sens = 1.0;
  Generated gen = generate(cfg);
  // A star: A -> every X_i, no X -> X edges, X_i -> Y label edges.
  for (int i = 0; i < 6; ++i) {
    CHECK(gen.sens_coef[i] != 0.0);
    for (int j = 0; j < i; ++j) CHECK(gen.feat_coef[i][j] == 0.0);
  }
  Derived d(gen);
  CHECK(d.facts.paths.size() == 6);
}

TEST_CASE("the true structural model recovers the generator noise exactly") {
  GeneratorConfig cfg;
  cfg.features = 8;
  cfg.rows = 200;
  cfg.seed = 21;
  Generated gen = generate(cfg);
  Derived d(gen);
  StructuralModel sm = true_structural_model(gen, d.partition, d.facts);
  // Reconstruction: observed inputs + stored residual reproduce each value.
  for (int r = 0; r < gen.data.rows(); r += 11) {
    for (std::size_t t = 0; t < sm.targets.size(); ++t) {
      const LinkFunction& lk = sm.link_sets[0][t];
      std::vector<double> raw;
      for (int c : lk.input_cols) raw.push_back(gen.data.value(r, c));
      double rebuilt = counterfactual_value(lk, raw, sm.residual(r, t));
      CHECK(rebuilt == doctest::Approx(gen.data.value(r, lk.target_col))
                           .epsilon(1e-12));
    }
  }
  // Paired rows share residuals: the stored residuals are the noise itself.
  for (int r = 0; r + 1 < gen.data.rows(); r += 2)
    for (std::size_t t = 0; t < sm.targets.size(); ++t)
      CHECK(sm.residual(r, t) == doctest::Approx(sm.residual(r + 1, t))
                                     .epsilon(1e-9));
}

TEST_CASE("ground truth enumeration is guarded and matches a single path") {
  GeneratorConfig cfg;
  cfg.features = 1;
  cfg.p_sens = 1.0;
  cfg.rows = 50;
  Generated gen = generate(cfg);
  Derived d(gen);
  StructuralModel sm = true_structural_model(gen, d.partition, d.facts);
  LogisticPredictor f{[] {
    Eigen::VectorXd w(2);
    w << 0.0, 1.0;
    return w;
  }()};
  EngineContext ctx = EngineContext::make(gen.graph, gen.data, d.facts,
                                          d.partition, sm, f, MetricSpec{});
  REQUIRE(ctx.path_count() == 1);
  GroundTruth truth = exact_ground_truth(ctx);
  // With one path theta is the whole disparity minus the (zero) baseline gap.
  Encoding enc = ctx.f_encoding;
  double delta = disparity(gen.data, f, enc, MetricSpec{});
  CHECK(truth.disparity == doctest::Approx(delta).epsilon(1e-12));
  CHECK(truth.theta[0] == doctest::Approx(delta).epsilon(1e-9));
  CHECK_THROWS_AS(exact_ground_truth(ctx, 0), Error);
}

TEST_CASE("scores follow their definitions and refuse degenerate truths") {
  GroundTruth truth;
  truth.theta = {0.3, -0.4};
  truth.disparity = 0.5;
  // Estimating exactly twice the truth: nrmse = ||theta|| / ||theta|| = 1.
  EvalScore s = score({0.6, -0.8}, truth);
  CHECK(s.nrmse == doctest::Approx(1.0));
  CHECK(s.efficiency_gap ==
        doctest::Approx(std::abs((0.6 - 0.8) - 0.5) / 0.5));
  EvalScore zero = score({0.3, -0.4}, truth);
  CHECK(zero.nrmse == doctest::Approx(0.0));

  CHECK_THROWS_AS(score({0.1}, truth), Error);  // length mismatch
  GroundTruth flat;
  flat.theta = {0.0, 0.0};
  flat.disparity = 0.5;
  try {
    score({0.1, 0.1}, flat);
    FAIL("expected a score error");
  } catch (const Error& e) {
    CHECK(e.code() == "E_SCORE");
  }
  GroundTruth no_gap;
  no_gap.theta = {0.3};
  no_gap.disparity = 0.0;
  CHECK_THROWS_AS(score({0.3}, no_gap), Error);
}

TEST_CASE("the two label settings disagree on the same draws") {
  GeneratorConfig cfg;
  cfg.features = 5;
  cfg.rows = 400;
  cfg.seed = 33;
  Generated s1 = generate(cfg);
  cfg.setting = Setting::S2;
  Generated s2 = generate(cfg);
  // Same features, different labels.
  int label_col = 6;
  int diffs = 0;
  for (int r = 0; r < cfg.rows; ++r) {
    CHECK(s1.data.value(r, 1) == s2.data.value(r, 1));
    diffs += s1.data.value(r, label_col) != s2.data.value(r, label_col) ? 1 : 0;
  }
  CHECK(diffs > 0);
}
