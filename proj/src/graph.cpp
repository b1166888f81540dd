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

#include "facts/graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace facts {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Kahn's algorithm over the directed subgraph.
bool directed_subgraph_acyclic(int n, const std::vector<Edge>& edges) {
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (const Edge& e : edges) {
    if (e.dir == EdgeDir::Undirected) continue;
    int from = e.dir == EdgeDir::AtoB ? e.a : e.b;
    int to = e.dir == EdgeDir::AtoB ? e.b : e.a;
    out[from].push_back(to);
    ++indeg[to];
  }
  std::vector<int> queue;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) queue.push_back(i);
  int seen = 0;
  while (!queue.empty()) {
    int u = queue.back();
    queue.pop_back();
    ++seen;
    for (int v : out[u])
      if (--indeg[v] == 0) queue.push_back(v);
  }
  return seen == n;
}

}  // namespace

std::string to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Sensitive: return "sensitive";
    case NodeKind::Feature: return "feature";
    case NodeKind::Outcome: return "outcome";
    case NodeKind::Prediction: return "prediction";
  }
  return "?";
}

Pdag Pdag::build(std::vector<Node> nodes, std::vector<Edge> edges,
                 const Options& options) {
  Pdag g;
  g.nodes_ = std::move(nodes);
  for (std::size_t i = 0; i < g.nodes_.size(); ++i)
    g.nodes_[i].index = static_cast<int>(i);
  for (Edge& e : edges) {
    if (e.a == e.b) throw Error("E_GRAPH", "self-loop on node " + std::to_string(e.a));
    if (e.a > e.b) {
      std::swap(e.a, e.b);
      if (e.dir == EdgeDir::AtoB) e.dir = EdgeDir::BtoA;
      else if (e.dir == EdgeDir::BtoA) e.dir = EdgeDir::AtoB;
    }
  }
  g.edges_ = std::move(edges);
  g.validate(options);
  return g;
}

void Pdag::validate(const Options& options) {
  const int n = node_count();
  std::map<std::string, int> by_name;
  for (const Node& node : nodes_) {
    if (node.name.empty()) throw Error("E_GRAPH", "empty node name");
    if (by_name.count(node.name))
      throw Error("E_GRAPH", "duplicate node name '" + node.name + "'");
    by_name[node.name] = node.index;
    switch (node.kind) {
      case NodeKind::Sensitive:
        if (sensitive_ >= 0) throw Error("E_GRAPH", "more than one sensitive node");
        sensitive_ = node.index;
        break;
      case NodeKind::Outcome:
        if (outcome_ >= 0) throw Error("E_GRAPH", "more than one outcome node");
        outcome_ = node.index;
        break;
      case NodeKind::Prediction:
        if (prediction_ >= 0)
          throw Error("E_GRAPH", "more than one prediction node");
        prediction_ = node.index;
        break;
      case NodeKind::Feature:
        break;
    }
  }
  if (sensitive_ < 0) throw Error("E_GRAPH", "missing sensitive node");
  if (prediction_ < 0) throw Error("E_GRAPH", "missing prediction node");

  for (const Edge& e : edges_) {
    if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n)
      throw Error("E_GRAPH", "edge endpoint out of range");
  }

  // Complete the prediction node: Yhat is the child of every feature, has no
  // outgoing edges, and Y is not an input unless explicitly allowed.
  std::vector<bool> feature_to_pred(n, false);
  for (const Edge& e : edges_) {
    int other = -1;
    bool into_pred = false;
    if (e.a == prediction_) {
      other = e.b;
      into_pred = e.dir == EdgeDir::BtoA;
    } else if (e.b == prediction_) {
      other = e.a;
      into_pred = e.dir == EdgeDir::AtoB;
    } else {
      continue;
    }
    if (!into_pred)
      throw Error("E_GRAPH", "prediction node must have no outgoing or undirected edges");
    if (nodes_[other].kind == NodeKind::Feature) {
      feature_to_pred[other] = true;
    } else if (nodes_[other].kind == NodeKind::Outcome) {
      if (!options.outcome_is_input)
        throw Error("E_GRAPH", "outcome is not an input of the model; "
                               "enable outcome_is_input to allow Y -> prediction");
    } else {
      throw Error("E_GRAPH", "edge from " + nodes_[other].name +
                                 " into the prediction node is not allowed");
    }
  }
  if (options.complete_prediction_edges) {
    for (const Node& node : nodes_) {
      if (node.kind == NodeKind::Feature && !feature_to_pred[node.index]) {
        Edge e{std::min(node.index, prediction_), std::max(node.index, prediction_),
               node.index < prediction_ ? EdgeDir::AtoB : EdgeDir::BtoA};
        edges_.push_back(e);
      }
    }
  }

  std::sort(edges_.begin(), edges_.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i - 1].a == edges_[i].a && edges_[i - 1].b == edges_[i].b)
      throw Error("E_GRAPH", "duplicate edge between " + nodes_[edges_[i].a].name +
                                 " and " + nodes_[edges_[i].b].name);
  }

  if (!directed_subgraph_acyclic(n, edges_))
    throw Error("E_GRAPH", "directed cycle in the directed subgraph");

  adj_.assign(n, {});
  edge_id_.assign(n, std::vector<int>(n, -1));
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    adj_[e.a].push_back(e.b);
    adj_[e.b].push_back(e.a);
    edge_id_[e.a][e.b] = edge_id_[e.b][e.a] = static_cast<int>(i);
  }
  for (auto& a : adj_) std::sort(a.begin(), a.end());
}

Pdag Pdag::parse(const std::string& text, const Options& options) {
  std::vector<Node> nodes;
  std::map<std::string, int> by_name;
  struct RawEdge {
    std::string a, b;
    bool directed;
  };
  std::vector<RawEdge> raw;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string first;
    ls >> first;
    if (first == "node") {
      std::string name, kind_spec;
      ls >> name >> kind_spec;
      if (name.empty() || kind_spec.rfind("kind=", 0) != 0)
        throw Error("E_GRAPH", "line " + std::to_string(line_no) +
                                   ": expected 'node <name> kind=<kind>'");
      std::string kind = kind_spec.substr(5);
      NodeKind k;
      if (kind == "sensitive") k = NodeKind::Sensitive;
      else if (kind == "feature") k = NodeKind::Feature;
      else if (kind == "outcome") k = NodeKind::Outcome;
      else if (kind == "prediction") k = NodeKind::Prediction;
      else
        throw Error("E_GRAPH", "line " + std::to_string(line_no) +
                                   ": unknown node kind '" + kind + "'");
      if (by_name.count(name))
        throw Error("E_GRAPH", "duplicate node declaration '" + name + "'");
      by_name[name] = static_cast<int>(nodes.size());
      nodes.push_back({static_cast<int>(nodes.size()), k, name});
    } else {
      std::string op, b;
      ls >> op >> b;
      if ((op != "->" && op != "--") || b.empty())
        throw Error("E_GRAPH", "line " + std::to_string(line_no) +
                                   ": expected '<a> -> <b>' or '<a> -- <b>'");
      raw.push_back({first, b, op == "->"});
    }
  }

  std::vector<Edge> edges;
  for (const RawEdge& r : raw) {
    auto ia = by_name.find(r.a);
    auto ib = by_name.find(r.b);
    if (ia == by_name.end())
      throw Error("E_GRAPH", "edge references undeclared node '" + r.a + "'");
    if (ib == by_name.end())
      throw Error("E_GRAPH", "edge references undeclared node '" + r.b + "'");
    edges.push_back({ia->second, ib->second,
                     r.directed ? EdgeDir::AtoB : EdgeDir::Undirected});
  }
  return build(std::move(nodes), std::move(edges), options);
}

Pdag Pdag::parse_file(const std::string& path, const Options& options) {
  std::ifstream in(path);
  if (!in) throw Error("E_GRAPH", "cannot open graph file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), options);
}

std::string Pdag::serialize() const {
  std::ostringstream out;
  for (const Node& node : nodes_)
    out << "node " << node.name << " kind=" << to_string(node.kind) << "\n";
  for (const Edge& e : edges_) {
    if (e.dir == EdgeDir::Undirected)
      out << nodes_[e.a].name << " -- " << nodes_[e.b].name << "\n";
    else if (e.dir == EdgeDir::AtoB)
      out << nodes_[e.a].name << " -> " << nodes_[e.b].name << "\n";
    else
      out << nodes_[e.b].name << " -> " << nodes_[e.a].name << "\n";
  }
  return out.str();
}

int Pdag::find_node(const std::string& name) const {
  for (const Node& node : nodes_)
    if (node.name == name) return node.index;
  return -1;
}

std::optional<int> Pdag::outcome() const {
  if (outcome_ < 0) return std::nullopt;
  return outcome_;
}

std::vector<int> Pdag::feature_nodes() const {
  std::vector<int> out;
  for (const Node& node : nodes_)
    if (node.kind == NodeKind::Feature) out.push_back(node.index);
  return out;
}

std::vector<Edge> Pdag::undirected_edges() const {
  std::vector<Edge> out;
  for (const Edge& e : edges_)
    if (e.dir == EdgeDir::Undirected) out.push_back(e);
  return out;
}

bool Pdag::fully_directed() const {
  return undirected_edges().empty();
}

bool Pdag::adjacent(int u, int v) const {
  return u != v && edge_id_[u][v] >= 0;
}

std::optional<EdgeDir> Pdag::edge_between(int u, int v) const {
  int id = edge_id_[u][v];
  if (id < 0) return std::nullopt;
  const Edge& e = edges_[id];
  if (e.dir == EdgeDir::Undirected) return EdgeDir::Undirected;
  bool u_to_v = (e.a == u) == (e.dir == EdgeDir::AtoB);
  return u_to_v ? EdgeDir::AtoB : EdgeDir::BtoA;
}

bool Pdag::has_directed_edge(int from, int to) const {
  auto dir = edge_between(from, to);
  return dir && *dir == EdgeDir::AtoB;
}

std::vector<int> Pdag::parents(int node) const {
  std::vector<int> out;
  for (int other : adj_[node])
    if (has_directed_edge(other, node)) out.push_back(other);
  return out;
}

std::vector<int> Pdag::children(int node) const {
  std::vector<int> out;
  for (int other : adj_[node])
    if (has_directed_edge(node, other)) out.push_back(other);
  return out;
}

Pdag Pdag::orient(const std::vector<bool>& orientation) const {
  std::vector<Edge> edges = edges_;
  std::size_t k = 0;
  for (Edge& e : edges) {
    if (e.dir != EdgeDir::Undirected) continue;
    if (k >= orientation.size()) break;
    e.dir = orientation[k] ? EdgeDir::AtoB : EdgeDir::BtoA;
    ++k;
  }
  Options opts;
  opts.outcome_is_input = true;  // already validated; keep edges as-is
  opts.complete_prediction_edges = false;
  Pdag g;
  g.nodes_ = nodes_;
  g.edges_ = std::move(edges);
  g.validate(opts);
  return g;
}

bool is_collider(const Pdag& graph, const Path& path, int position) {
  if (position <= 0 || position + 1 >= static_cast<int>(path.nodes.size()))
    throw Error("E_PATH", "collider position out of range");
  int prev = path.nodes[position - 1];
  int node = path.nodes[position];
  int next = path.nodes[position + 1];
  auto in = graph.edge_between(prev, node);
  auto out = graph.edge_between(node, next);
  if (!in || !out) throw Error("E_PATH", "path nodes not adjacent");
  if (*in == EdgeDir::Undirected || *out == EdgeDir::Undirected)
    throw Error("E_PATH", "undirected edge incident to collider test");
  return *in == EdgeDir::AtoB && *out == EdgeDir::BtoA;
}

bool is_active_path(const Pdag& graph, const Path& path,
                    const std::vector<int>& conditioning) {
  auto in_c = [&](int node) {
    return std::find(conditioning.begin(), conditioning.end(), node) !=
           conditioning.end();
  };
  for (int i = 1; i + 1 < static_cast<int>(path.nodes.size()); ++i) {
    int node = path.nodes[i];
    if (is_collider(graph, path, i)) {
      if (in_c(node)) continue;
      bool met = false;
      for (int d : descendants(graph, node))
        if (in_c(d)) { met = true; break; }
      if (!met) return false;
    } else {
      if (in_c(node)) return false;
    }
  }
  return true;
}

std::vector<int> descendants(const Pdag& graph, int node) {
  std::vector<bool> seen(graph.node_count(), false);
  std::vector<int> stack{node};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : graph.children(u)) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < graph.node_count(); ++i)
    if (seen[i] && i != node) out.push_back(i);
  return out;
}

ExtensionResult consistent_dag_extensions(const Pdag& graph,
                                          std::size_t budget) {
  if (budget < 1) throw Error("E_BUDGET", "extension budget must be >= 1");
  ExtensionResult result;
  const std::size_t k = graph.undirected_edges().size();
  if (k == 0) {
    result.dags.push_back(graph);
    return result;
  }
  if (k >= 63) throw Error("E_BUDGET", "too many undirected edges to enumerate");
  // Lexicographic over the sorted undirected-edge list, a->b before b->a.
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << k); ++code) {
    std::vector<bool> orientation(k);
    for (std::size_t i = 0; i < k; ++i)
      orientation[i] = ((code >> (k - 1 - i)) & 1) == 0;
    try {
      result.dags.push_back(graph.orient(orientation));
    } catch (const Error&) {
      continue;  // cyclic orientation
    }
    if (result.dags.size() == budget && code + 1 < (std::uint64_t{1} << k)) {
      // Check whether anything acyclic remains before reporting truncation.
      for (std::uint64_t rest = code + 1; rest < (std::uint64_t{1} << k); ++rest) {
        std::vector<bool> o(k);
        for (std::size_t i = 0; i < k; ++i)
          o[i] = ((rest >> (k - 1 - i)) & 1) == 0;
        try {
          graph.orient(o);
          result.truncated = true;
          break;
        } catch (const Error&) {
        }
      }
      break;
    }
  }
  return result;
}

}  // namespace facts
