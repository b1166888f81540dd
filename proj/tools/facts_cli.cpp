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

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "facts/ci_test.hpp"
#include "facts/decomposition.hpp"
#include "facts/external_predictor.hpp"
#include "facts/fact_search.hpp"
#include "facts/graph.hpp"
#include "facts/selection.hpp"
#include "facts/structural_model.hpp"
#include "facts/synthetic.hpp"
#include "json.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;

  std::string csv_header() const {
    std::ostringstream out;
    out << "# config_hash=" << config_hash << "\n";
    out << "# seed=" << seed << "\n";
    out << "# version=" << kVersion << "\n";
    return out.str();
  }
  void stamp(nlohmann::json& j) const {
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["version"] = kVersion;
  }
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw facts::Error("E_IO", "cannot write '" + path.string() + "'");
  out << content;
}

struct CommonArgs {
  std::string graph_path;
  std::string data_path;
  std::string schema_path;
  std::string metric = "dp";
  std::string predictor = "logistic";
  int orderings = 100;
  bool exact = false;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int threads = 0;
  double tau = 0.5;
  bool thresholded = false;
  int hidden = 32;
  int epochs = 400;

  std::string canonical() const {
    std::ostringstream s;
    s << graph_path << "|" << data_path << "|" << schema_path << "|" << metric
      << "|" << predictor << "|" << orderings << "|" << exact << "|" << seed
      << "|" << tau << "|" << thresholded << "|" << hidden << "|" << epochs;
    return s.str();
  }
};

facts::MetricKind parse_metric(const std::string& name) {
  if (name == "dp") return facts::MetricKind::DemographicParity;
  if (name == "eo") return facts::MetricKind::EqualizedOpportunity;
  if (name == "acc") return facts::MetricKind::AccuracyParity;
  if (name == "odds") return facts::MetricKind::EqualizedOpportunity;
  throw facts::Error("E_CONFIG", "unknown metric '" + name + "'");
}

struct Pipeline {
  facts::Pdag graph;
  facts::Dataset data;
  facts::FactSet facts_set;
  facts::GroupPartition partition;
  facts::StructuralModel sm;
  std::unique_ptr<facts::Predictor> predictor;
  facts::MetricSpec metric;
  facts::PermutationPlan plan;
};

std::unique_ptr<facts::Predictor> make_predictor(const CommonArgs& args,
                                                 const facts::Dataset& data,
                                                 const facts::Encoding& enc) {
  std::unique_ptr<facts::Predictor> model;
  if (args.predictor.rfind("external:", 0) == 0) {
    std::string address = args.predictor.substr(9);
    model = std::make_unique<facts::ExternalPredictor>(
        facts::open_tcp_channel(address), enc.dim());
  } else {
    facts::TrainConfig tc;
    tc.hidden = args.hidden;
    tc.epochs = args.epochs;
    tc.seed = args.seed;
    model = facts::train_predictor(data, enc, args.predictor, tc);
  }
  model->thresholded = args.thresholded;
  model->tau = args.tau;
  return model;
}

Pipeline build_pipeline(const CommonArgs& args) {
  Pipeline pipe;
  pipe.graph = facts::Pdag::parse_file(args.graph_path);
  auto schema = facts::Dataset::parse_schema_file(args.schema_path);
  pipe.data = facts::Dataset::load_csv(args.data_path, schema);
  pipe.data.set_sensitive(pipe.graph.node(pipe.graph.sensitive()).name);

  pipe.metric.kind = parse_metric(args.metric);
  bool conditional = pipe.metric.conditional();

  auto outcome = pipe.graph.outcome();
  if (outcome && pipe.data.column_index(pipe.graph.node(*outcome).name) >= 0)
    pipe.data.set_outcome(pipe.graph.node(*outcome).name);
  if ((conditional || pipe.metric.uses_fy()) && pipe.data.outcome_col() < 0)
    throw facts::Error("E_OUTCOME", "metric '" + args.metric +
                                        "' needs an outcome column");

  pipe.facts_set = conditional
                       ? facts::search_facts_relative_to_y(pipe.graph)
                       : facts::search_facts(pipe.graph);
  auto order = facts::compute_order_relations(pipe.graph, pipe.facts_set);
  pipe.partition = facts::group_variables(pipe.graph, pipe.facts_set, order);
  pipe.sm = conditional ? facts::fit_conditional_models(
                              pipe.data, pipe.graph, pipe.partition,
                              pipe.facts_set)
                        : facts::fit_structural_model(pipe.data, pipe.graph,
                                                      pipe.partition,
                                                      pipe.facts_set);

  std::vector<int> feature_cols;
  for (int node : pipe.graph.feature_nodes()) {
    int col = pipe.data.column_index(pipe.graph.node(node).name);
    if (col < 0)
      throw facts::Error("E_DATA", "feature '" + pipe.graph.node(node).name +
                                       "' has no dataset column");
    feature_cols.push_back(col);
  }
  facts::Encoding enc(pipe.data, feature_cols);
  pipe.predictor = make_predictor(args, pipe.data, enc);

  pipe.plan.orderings = args.orderings;
  pipe.plan.seed = args.seed;
  pipe.plan.exact = args.exact;
  return pipe;
}

void emit_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_explain(const CommonArgs& args) {
  Provenance prov{hex64(fnv1a("explain|" + args.canonical())), args.seed};
  Pipeline pipe = build_pipeline(args);
  emit_warnings(pipe.facts_set.warnings);

  std::filesystem::create_directories(args.out_dir);
  std::filesystem::path out(args.out_dir);

  nlohmann::json facts_json = pipe.facts_set.to_json(pipe.graph);
  facts_json["grouping"] = pipe.partition.to_json(pipe.graph);
  prov.stamp(facts_json);
  write_file(out / "facts.json", facts_json.dump(2) + "\n");

  std::vector<facts::MetricKind> kinds{pipe.metric.kind};
  if (args.metric == "odds")
    kinds = {facts::MetricKind::EqualizedOpportunity,
             facts::MetricKind::EqualizedOddsY0};

  nlohmann::json reports = nlohmann::json::array();
  std::string csv = prov.csv_header();
  facts::ContributionReport first;
  bool have_first = false;
  for (facts::MetricKind kind : kinds) {
    facts::MetricSpec spec = pipe.metric;
    spec.kind = kind;
    facts::EngineContext ctx = facts::EngineContext::make(
        pipe.graph, pipe.data, pipe.facts_set, pipe.partition, pipe.sm,
        *pipe.predictor, spec);
    facts::ContributionReport report =
        facts::disparity_contributions(ctx, pipe.plan);
    emit_warnings(report.warnings);
    reports.push_back(report.to_json());
    csv += "# metric=" + facts::to_string(kind) + "\n" + report.to_csv();
    if (!have_first) {
      first = report;
      have_first = true;
    }
  }
  nlohmann::json contributions;
  contributions["reports"] = reports;
  prov.stamp(contributions);
  write_file(out / "contributions.json", contributions.dump(2) + "\n");
  write_file(out / "contributions.csv", csv);

  std::ostringstream features;
  features << prov.csv_header() << "feature,phi\n";
  features.precision(17);
  for (const auto& [name, value] : first.feature_aggregates)
    features << "\"" << name << "\"," << value << "\n";
  write_file(out / "features.csv", features.str());
  return 0;
}

int cmd_select(const CommonArgs& args, const std::vector<double>& lambdas) {
  Provenance prov{hex64(fnv1a("select|" + args.canonical())), args.seed};
  CommonArgs dp_args = args;
  dp_args.metric = "dp";  // Eq.-18 selection trades accuracy against DP
  Pipeline pipe = build_pipeline(dp_args);
  if (pipe.data.outcome_col() < 0)
    throw facts::Error("E_OUTCOME", "selection needs an outcome column");

  facts::EngineContext ctx = facts::EngineContext::make(
      pipe.graph, pipe.data, pipe.facts_set, pipe.partition, pipe.sm,
      *pipe.predictor, pipe.metric);
  facts::ContributionReport phi = facts::disparity_contributions(ctx, pipe.plan);
  facts::UtilityReport psi = facts::utility_contributions(ctx, pipe.plan);
  emit_warnings(phi.warnings);

  facts::TradeoffCurve curve = facts::sweep(ctx, phi, psi, lambdas);

  std::filesystem::create_directories(args.out_dir);
  std::filesystem::path out(args.out_dir);

  nlohmann::json selection;
  nlohmann::json per_lambda = nlohmann::json::array();
  for (double lambda : lambdas) {
    facts::SelectionProblem problem{phi.phi, psi.psi, lambda};
    facts::SelectionResult result = facts::select_facts(problem);
    nlohmann::json item = result.to_json(phi.path_names);
    item["lambda"] = lambda;
    per_lambda.push_back(item);
  }
  selection["selections"] = per_lambda;
  selection["utility"] = psi.to_json();
  prov.stamp(selection);
  write_file(out / "selection.json", selection.dump(2) + "\n");
  write_file(out / "tradeoff.csv", prov.csv_header() + curve.to_csv());
  return 0;
}

int cmd_generate(const facts::GeneratorConfig& config,
                 const std::string& out_dir) {
  std::ostringstream cfg;
  cfg << "generate|" << config.features << "|" << config.p_feat << "|"
      << config.p_sens << "|" << (config.setting == facts::Setting::S1 ? "s1"
                                                                       : "s2")
      << "|" << config.rows << "|" << config.seed << "|" << config.paired;
  Provenance prov{hex64(fnv1a(cfg.str())), config.seed};

  facts::Generated gen = facts::generate(config);
  std::filesystem::create_directories(out_dir);
  std::filesystem::path out(out_dir);
  write_file(out / "graph.txt", prov.csv_header() + gen.graph.serialize());
  write_file(out / "schema.txt", prov.csv_header() + gen.data.schema_text());
  write_file(out / "data.csv", prov.csv_header() + gen.data.to_csv());
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const facts::GeneratorConfig& config,
                 int guard) {
  std::ostringstream cfg;
  cfg << "evaluate|" << args.canonical() << "|" << config.features << "|"
      << config.rows << "|" << config.seed;
  Provenance prov{hex64(fnv1a(cfg.str())), config.seed};

  facts::Generated gen = facts::generate(config);
  facts::FactSet fs = facts::search_facts(gen.graph);
  auto order = facts::compute_order_relations(gen.graph, fs);
  facts::GroupPartition partition = facts::group_variables(gen.graph, fs, order);

  std::vector<int> feature_cols;
  for (int node : gen.graph.feature_nodes())
    feature_cols.push_back(gen.data.column_index(gen.graph.node(node).name));
  facts::Encoding enc(gen.data, feature_cols);
  std::unique_ptr<facts::Predictor> predictor =
      make_predictor(args, gen.data, enc);

  facts::MetricSpec metric;  // demographic parity
  facts::StructuralModel fitted =
      facts::fit_structural_model(gen.data, gen.graph, partition, fs);
  facts::EngineContext ctx = facts::EngineContext::make(
      gen.graph, gen.data, fs, partition, fitted, *predictor, metric);
  facts::ContributionReport report =
      facts::disparity_contributions(ctx, facts::PermutationPlan{
                                              args.orderings, args.seed,
                                              args.exact});
  emit_warnings(report.warnings);

  facts::StructuralModel truth_sm = facts::true_structural_model(gen, partition, fs);
  facts::EngineContext truth_ctx = facts::EngineContext::make(
      gen.graph, gen.data, fs, partition, truth_sm, *predictor, metric);
  facts::GroundTruth truth = facts::exact_ground_truth(truth_ctx, guard);
  facts::EvalScore result = facts::score(report.phi, truth);

  double se = 0.0;
  for (double s : report.phi_se) se += s;
  if (!report.phi_se.empty()) se /= static_cast<double>(report.phi_se.size());

  nlohmann::json metrics;
  metrics["nrmse"] = result.nrmse;
  metrics["efficiency_gap"] = result.efficiency_gap;
  metrics["stderr"] = se;
  metrics["disparity"] = truth.disparity;
  metrics["total_phi"] = report.total_phi;
  prov.stamp(metrics);
  std::filesystem::create_directories(args.out_dir);
  write_file(std::filesystem::path(args.out_dir) / "metrics.json",
             metrics.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal path decomposition of classifier disparity"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  std::vector<double> lambdas;
  facts::GeneratorConfig gen_config;
  std::string setting = "s1";
  int guard = 12;

  auto add_common = [&](CLI::App* cmd, bool needs_inputs) {
    if (needs_inputs) {
      cmd->add_option("--graph", args.graph_path, "causal graph edge list")
          ->required();
      cmd->add_option("--data", args.data_path, "CSV data file")->required();
      cmd->add_option("--schema", args.schema_path, "column:type schema file")
          ->required();
    }
    cmd->add_option("--metric", args.metric,
                    "disparity metric: dp, eo, odds, acc");
    cmd->add_option("--predictor", args.predictor,
                    "logistic, mlp, or external:<host:port>");
    cmd->add_option("--orderings", args.orderings, "Monte Carlo orderings");
    cmd->add_flag("--exact", args.exact, "enumerate all path orderings");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker threads (0 = default)");
    cmd->add_option("--tau", args.tau, "decision threshold");
    cmd->add_flag("--thresholded", args.thresholded,
                  "score with indicator(f >= tau)");
    cmd->add_option("--hidden", args.hidden, "MLP hidden width");
    cmd->add_option("--epochs", args.epochs, "training epochs");
  };

  CLI::App* explain = app.add_subcommand("explain", "attribute disparity to paths");
  add_common(explain, true);

  CLI::App* select = app.add_subcommand("select", "greedy path selection and sweep");
  add_common(select, true);
  select->add_option("--lambda", lambdas, "ascending fairness weights")
      ->required()
      ->delimiter(',');

  CLI::App* generate = app.add_subcommand("generate", "synthetic graph + data");
  generate->add_option("--features", gen_config.features, "feature count");
  generate->add_option("--rows", gen_config.rows, "row count");
  generate->add_option("--p-feat", gen_config.p_feat, "feature edge probability");
  generate->add_option("--p-sens", gen_config.p_sens, "sensitive edge probability");
  generate->add_option("--setting", setting, "s1 (linear) or s2 (nonlinear)");
  generate->add_option("--seed", gen_config.seed, "random seed");
  generate->add_flag("!--no-paired", gen_config.paired,
                     "disable antithetic pairing");
  generate->add_option("--out", args.out_dir, "output directory");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score against ground truth");
  add_common(evaluate, false);
  evaluate->add_option("--features", gen_config.features, "feature count");
  evaluate->add_option("--rows", gen_config.rows, "row count");
  evaluate->add_option("--setting", setting, "s1 or s2");
  evaluate->add_option("--guard", guard, "exact-oracle path guard");

  CLI11_PARSE(app, argc, argv);

  try {
    if (setting == "s2")
      gen_config.setting = facts::Setting::S2;
    else if (setting != "s1")
      throw facts::Error("E_CONFIG", "unknown setting '" + setting + "'");
    if (args.threads > 0) omp_set_num_threads(args.threads);

    if (app.got_subcommand(explain)) return cmd_explain(args);
    if (app.got_subcommand(select)) return cmd_select(args, lambdas);
    if (app.got_subcommand(generate))
      return cmd_generate(gen_config, args.out_dir);
    if (app.got_subcommand(evaluate)) {
      gen_config.seed = args.seed;
      return cmd_evaluate(args, gen_config, guard);
    }
  } catch (const facts::Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == "E_GUARD" ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
