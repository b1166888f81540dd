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

#ifndef FACTS_GRAPH_HPP_
#define FACTS_GRAPH_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace facts {

// Error with a stable machine-parsable code (used for CLI exit diagnostics).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

enum class NodeKind { Sensitive, Feature, Outcome, Prediction };

std::string to_string(NodeKind kind);

struct Node {
  int index = -1;
  NodeKind kind = NodeKind::Feature;
  std::string name;
};

enum class EdgeDir {
  AtoB,        // a -> b
  BtoA,        // b -> a
  Undirected,  // a -- b
};

// Canonical form: a < b.
struct Edge {
  int a = -1;
  int b = -1;
  EdgeDir dir = EdgeDir::Undirected;

  bool operator==(const Edge&) const = default;
};

// A simple path given as a node sequence; edge orientations come from the
// graph the path lives in.
struct Path {
  std::vector<int> nodes;

  bool operator==(const Path&) const = default;
  bool operator<(const Path& other) const { return nodes < other.nodes; }
};

struct PdagOptions {
  // If true, an explicit Y -> Yhat edge is accepted (Y is a model input).
  bool outcome_is_input = false;
  // If true, the implicit X_i -> Yhat edges are added for every feature.
  bool complete_prediction_edges = true;
};

// Partially directed acyclic graph over {A, X_1..X_M, (Y), Yhat}.
// Immutable after construction; all member functions are const and
// thread-safe.
class Pdag {
 public:
  using Options = PdagOptions;

  Pdag() = default;  // empty graph; populate via build/parse

  static Pdag build(std::vector<Node> nodes, std::vector<Edge> edges,
                    const Options& options = {});

  // Parses the edge-list text format:
  //   node <name> kind=<sensitive|feature|outcome|prediction>
  //   <a> -> <b>
  //   <a> -- <b>
  // '#' starts a comment; blank lines are skipped.
  static Pdag parse(const std::string& text, const Options& options = {});
  static Pdag parse_file(const std::string& path, const Options& options = {});

  std::string serialize() const;

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int index) const { return nodes_.at(index); }
  const std::vector<Node>& nodes() const { return nodes_; }
  int find_node(const std::string& name) const;  // -1 when absent

  int sensitive() const { return sensitive_; }
  int prediction() const { return prediction_; }
  std::optional<int> outcome() const;
  std::vector<int> feature_nodes() const;

  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<Edge> undirected_edges() const;
  bool fully_directed() const;

  bool adjacent(int u, int v) const;
  // Direction of the edge between u and v expressed relative to (u, v):
  // AtoB means u -> v. Empty when the nodes are not adjacent.
  std::optional<EdgeDir> edge_between(int u, int v) const;
  bool has_directed_edge(int from, int to) const;
  const std::vector<int>& adjacency(int node) const { return adj_.at(node); }

  // Children/parents over the directed subgraph only.
  std::vector<int> parents(int node) const;
  std::vector<int> children(int node) const;

  // Returns a copy with the given undirected edges oriented. `orientation[i]`
  // applies to `undirected_edges()[i]`: true = a->b, false = b->a. Partial
  // assignments orient a prefix of the undirected-edge list.
  Pdag orient(const std::vector<bool>& orientation) const;

 private:
  void validate(const Options& options);

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::vector<int>> edge_id_;  // node-pair -> index into edges_, -1
  int sensitive_ = -1;
  int prediction_ = -1;
  int outcome_ = -1;
};

// True iff both path edges incident to `position` point into the node there.
// Requires 0 < position < path.size()-1 and directed incident edges.
bool is_collider(const Pdag& graph, const Path& path, int position);

// Active-path test relative to a conditioning set. All path edges must be
// directed. An interior node is active iff it is a non-collider outside the
// conditioning set, or a collider whose closure {node} + descendants meets
// the conditioning set.
bool is_active_path(const Pdag& graph, const Path& path,
                    const std::vector<int>& conditioning);

// All nodes reachable from `node` by causal (directed) paths, excluding the
// node itself. Sorted.
std::vector<int> descendants(const Pdag& graph, int node);

struct ExtensionResult {
  std::vector<Pdag> dags;
  // True when enumeration stopped at `budget` with orientations left to try;
  // distinct from having exhausted all extensions.
  bool truncated = false;
};

// Every orientation of the undirected edges that yields an acyclic directed
// graph, in lexicographic order over the sorted undirected-edge list
// (a->b before b->a), up to `budget` results.
ExtensionResult consistent_dag_extensions(const Pdag& graph,
                                          std::size_t budget);

}  // namespace facts

#endif  // FACTS_GRAPH_HPP_
