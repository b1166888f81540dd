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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(FACTS_CLI_PATH) + " " + args +
                    " > /dev/null 2> /dev/null";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("facts_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string s(const char* name) const { return (path / name).string(); }
};

// Generates a small dataset and returns the flags shared by explain/select.
std::string make_inputs(const TempDir& dir,
                        const std::string& gen_flags =
                            "--features 4 --rows 200 --seed 7") {
  REQUIRE(run("generate " + gen_flags + " --out " + dir.path.string()) == 0);
  return "--graph " + dir.s("graph.txt") + " --data " + dir.s("data.csv") +
         " --schema " + dir.s("schema.txt");
}

}  // namespace

TEST_CASE("generation is deterministic and stamped with provenance") {
  TempDir a, b;
  REQUIRE(run("generate --features 5 --rows 100 --seed 11 --out " +
              a.path.string()) == 0);
  REQUIRE(run("generate --features 5 --rows 100 --seed 11 --out " +
              b.path.string()) == 0);
  for (const char* name : {"graph.txt", "schema.txt", "data.csv"}) {
    std::string first = slurp(a.path / name);
    CHECK(first == slurp(b.path / name));
    CHECK(first.rfind("# config_hash=", 0) == 0);
    CHECK(first.find("# seed=11") != std::string::npos);
  }
  TempDir c;
  REQUIRE(run("generate --features 5 --rows 100 --seed 12 --out " +
              c.path.string()) == 0);
  CHECK(slurp(a.path / "data.csv") != slurp(c.path / "data.csv"));
}

TEST_CASE("explain produces byte-identical reports across runs and threads") {
  TempDir data;
  std::string inputs = make_inputs(data);
  TempDir r1, r2, r3;
  std::string common = inputs + " --orderings 30 --seed 5";
  REQUIRE(run("explain " + common + " --threads 1 --out " + r1.path.string()) ==
          0);
  REQUIRE(run("explain " + common + " --threads 1 --out " + r2.path.string()) ==
          0);
  REQUIRE(run("explain " + common + " --threads 4 --out " + r3.path.string()) ==
          0);
  for (const char* name :
       {"facts.json", "contributions.json", "contributions.csv",
        "features.csv"}) {
    std::string first = slurp(r1.path / name);
    CHECK(first == slurp(r2.path / name));
    CHECK(first == slurp(r3.path / name));
  }
  nlohmann::json contributions =
      nlohmann::json::parse(slurp(r1.path / "contributions.json"));
  REQUIRE(contributions["reports"].size() == 1);
  const auto& report = contributions["reports"][0];
  CHECK(report.contains("paths"));
  CHECK(report.contains("disparity"));
  CHECK(report.contains("total_phi"));
  CHECK(contributions.contains("config_hash"));
  CHECK(contributions["version"] == "0.1.0");
}

TEST_CASE("the odds metric reports both outcome strata") {
  TempDir data;
  std::string inputs = make_inputs(data);
  TempDir out;
  REQUIRE(run("explain " + inputs +
              " --metric odds --orderings 20 --out " + out.path.string()) == 0);
  nlohmann::json contributions =
      nlohmann::json::parse(slurp(out.path / "contributions.json"));
  REQUIRE(contributions["reports"].size() == 2);
  CHECK(contributions["reports"][0]["metric"] !=
        contributions["reports"][1]["metric"]);
}

TEST_CASE("conditional metrics without an outcome column fail with exit 2") {
  TempDir dir;
  // The graph declares an outcome node, but the dataset never measured it.
  spit(dir.path / "graph.txt",
       "node A kind=sensitive\n"
       "node X1 kind=feature\n"
       "node Y kind=outcome\n"
       "node Yhat kind=prediction\n"
       "A -> X1\n"
       "X1 -> Y\n");
  spit(dir.path / "schema.txt", "A:binary\nX1:continuous\n");
  std::string csv = "A,X1\n";
  for (int i = 0; i < 80; ++i)
    csv += std::to_string(i % 2) + "," + std::to_string(0.25 * (i % 7)) + "\n";
  spit(dir.path / "data.csv", csv);
  std::string inputs = "--graph " + dir.s("graph.txt") + " --data " +
                       dir.s("data.csv") + " --schema " + dir.s("schema.txt");
  CHECK(run("explain " + inputs + " --metric eo") == 2);
  CHECK(run("explain " + inputs + " --metric acc") == 2);
}

TEST_CASE("guard violations exit with code 3") {
  TempDir data;
  // A star with 8 sensitive edges: 8 paths, over the exact-plan bound.
  std::string inputs = make_inputs(
      data, "--features 8 --rows 200 --seed 7 --p-feat 0 --p-sens 1");
  TempDir out;
  CHECK(run("explain " + inputs + " --exact --out " + out.path.string()) == 3);
}

TEST_CASE("missing input files exit with code 2") {
  TempDir dir;
  CHECK(run("explain --graph " + dir.s("absent.txt") + " --data " +
            dir.s("absent.csv") + " --schema " + dir.s("absent.txt")) == 2);
}

TEST_CASE("selection sweeps lambdas and rejects descending lists") {
  TempDir data;
  std::string inputs = make_inputs(data);
  TempDir out;
  REQUIRE(run("select " + inputs +
              " --lambda 0,0.5,2 --orderings 20 --out " + out.path.string()) ==
          0);
  std::string tradeoff = slurp(out.path / "tradeoff.csv");
  CHECK(tradeoff.find("lambda,accuracy,disparity,selected\n") !=
        std::string::npos);
  nlohmann::json selection =
      nlohmann::json::parse(slurp(out.path / "selection.json"));
  REQUIRE(selection["selections"].size() == 3);
  CHECK(selection["selections"][0]["lambda"] == 0.0);
  CHECK(selection.contains("utility"));

  CHECK(run("select " + inputs + " --lambda 2,1 --out " + out.path.string()) ==
        2);
}

TEST_CASE("evaluate scores the engine against the generating equations") {
  TempDir out;
  REQUIRE(run("evaluate --features 5 --rows 300 --seed 3 --exact --out " +
              out.path.string()) == 0);
  nlohmann::json metrics = nlohmann::json::parse(slurp(out.path / "metrics.json"));
  CHECK(metrics.contains("nrmse"));
  CHECK(metrics.contains("efficiency_gap"));
  CHECK(metrics["nrmse"].get<double>() >= 0.0);
}
