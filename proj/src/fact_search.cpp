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

#include "facts/fact_search.hpp"

#include <algorithm>
#include <deque>

namespace facts {

namespace {

// Per-step direction along a path: Forward = path[i] -> path[i+1].
enum class Step { Forward, Backward, Open };

std::vector<Step> path_steps(const Pdag& graph, const Path& path) {
  std::vector<Step> steps;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    auto dir = graph.edge_between(path.nodes[i], path.nodes[i + 1]);
    if (!dir) throw Error("E_PATH", "path nodes not adjacent");
    steps.push_back(*dir == EdgeDir::Undirected ? Step::Open
                    : *dir == EdgeDir::AtoB     ? Step::Forward
                                                : Step::Backward);
  }
  return steps;
}

// Active test for a fully stepped path. Collider activation uses the node
// itself plus descendants reachable through the graph's directed edges and
// the path's oriented steps.
bool stepped_path_active(const Pdag& graph, const Path& path,
                         const std::vector<Step>& steps,
                         const std::vector<int>& conditioning) {
  auto in_c = [&](int node) {
    return std::find(conditioning.begin(), conditioning.end(), node) !=
           conditioning.end();
  };
  auto reaches_conditioning = [&](int start) {
    std::vector<bool> seen(graph.node_count(), false);
    std::vector<int> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      if (u != start && in_c(u)) return true;
      for (int v : graph.children(u))
        if (!seen[v]) { seen[v] = true; stack.push_back(v); }
      for (std::size_t i = 0; i < steps.size(); ++i) {
        int from = steps[i] == Step::Forward ? path.nodes[i] : path.nodes[i + 1];
        int to = steps[i] == Step::Forward ? path.nodes[i + 1] : path.nodes[i];
        if (from == u && !seen[to]) { seen[to] = true; stack.push_back(to); }
      }
    }
    return false;
  };
  for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
    int node = path.nodes[i];
    bool collider = steps[i - 1] == Step::Forward && steps[i] == Step::Backward;
    if (collider) {
      if (!in_c(node) && !reaches_conditioning(node)) return false;
    } else {
      if (in_c(node)) return false;
    }
  }
  return true;
}

// Enumerate simple paths between two nodes of a DAG and test d-connection.
bool d_connected(const Pdag& dag, int i, int j, const std::vector<int>& cond) {
  Path path;
  path.nodes.push_back(i);
  std::vector<bool> on_path(dag.node_count(), false);
  on_path[i] = true;
  std::function<bool()> dfs = [&]() -> bool {
    int last = path.nodes.back();
    if (last == j) {
      return is_active_path(dag, path, cond);
    }
    for (int next : dag.adjacency(last)) {
      if (on_path[next]) continue;
      on_path[next] = true;
      path.nodes.push_back(next);
      if (dfs()) {
        path.nodes.pop_back();
        on_path[next] = false;
        return true;
      }
      path.nodes.pop_back();
      on_path[next] = false;
    }
    return false;
  };
  return dfs();
}

std::vector<int> conditioning_for(const Pdag& graph, FactMode mode) {
  if (mode == FactMode::RelativeToY) {
    if (auto y = graph.outcome()) return {*y};
  }
  return {};
}

// The CI statements implied by a witness DAG must agree with the oracle over
// pairs of the path's (data) nodes, with conditioning sets of size <= 2 drawn
// from the path's nodes.
bool ci_consistent(const Pdag& dag, const Path& path, const CiOracle& ci,
                   int prediction) {
  std::vector<int> vars;
  for (int node : path.nodes)
    if (node != prediction) vars.push_back(node);
  const int k = static_cast<int>(vars.size());
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      std::vector<int> rest;
      for (int c = 0; c < k; ++c)
        if (c != a && c != b) rest.push_back(vars[c]);
      std::vector<std::vector<int>> cond_sets{{}};
      for (std::size_t c = 0; c < rest.size(); ++c) {
        cond_sets.push_back({rest[c]});
        for (std::size_t d = c + 1; d < rest.size(); ++d)
          cond_sets.push_back({rest[c], rest[d]});
      }
      for (const auto& cond : cond_sets) {
        bool implied_indep = !d_connected(dag, vars[a], vars[b], cond);
        if (implied_indep != ci.independent(vars[a], vars[b], cond))
          return false;
      }
    }
  }
  return true;
}

}  // namespace

Tri is_potential_active(const Pdag& graph, const Path& path, FactMode fact_mode,
                        SearchMode mode, const CiOracle* ci,
                        std::size_t budget) {
  if (budget < 1) throw Error("E_BUDGET", "budget must be >= 1");
  {
    std::vector<int> sorted = path.nodes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error("E_PATH", "path is not simple");
  }
  const std::vector<int> cond = conditioning_for(graph, fact_mode);
  std::vector<Step> steps = path_steps(graph, path);
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (steps[i] == Step::Open) open.push_back(i);

  if (open.empty()) {
    // Condition 1: directed and active.
    return stepped_path_active(graph, path, steps, cond) ? Tri::Yes : Tri::No;
  }

  // Condition 2: every orientation of the path's own undirected edges is
  // active.
  bool all_active = true;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << open.size());
       ++code) {
    std::vector<Step> oriented = steps;
    for (std::size_t i = 0; i < open.size(); ++i)
      oriented[open[i]] =
          ((code >> i) & 1) ? Step::Forward : Step::Backward;
    if (!stepped_path_active(graph, path, oriented, cond)) {
      all_active = false;
      break;
    }
  }
  if (all_active) return Tri::Yes;

  // Condition 3: some consistent DAG extension of the whole graph makes the
  // path active (and, under CiChecked, implies CI statements matching the
  // oracle).
  ExtensionResult ext = consistent_dag_extensions(graph, budget);
  for (const Pdag& dag : ext.dags) {
    if (!is_active_path(dag, path, cond)) continue;
    if (mode == SearchMode::CiChecked) {
      if (!ci || !ci->independent)
        throw Error("E_CI", "CiChecked mode requires a CI oracle");
      if (!ci_consistent(dag, path, *ci, graph.prediction())) continue;
    }
    return Tri::Yes;
  }
  return ext.truncated ? Tri::Indeterminate : Tri::No;
}

namespace {

bool node_is_path_collider(const Pdag& graph, const Path& path,
                           std::size_t pos) {
  auto in = graph.edge_between(path.nodes[pos - 1], path.nodes[pos]);
  auto out = graph.edge_between(path.nodes[pos], path.nodes[pos + 1]);
  return in && out && *in == EdgeDir::AtoB && *out == EdgeDir::BtoA;
}

FactSet finalize(const Pdag& graph, FactMode fact_mode, std::vector<Path> paths,
                 std::vector<std::string> warnings) {
  FactSet out;
  out.mode = fact_mode;
  out.warnings = std::move(warnings);
  std::sort(paths.begin(), paths.end(), [](const Path& a, const Path& b) {
    if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
    return a.nodes < b.nodes;
  });
  out.paths = std::move(paths);

  const auto outcome = graph.outcome();
  std::set<int> involved;
  for (std::size_t pid = 0; pid < out.paths.size(); ++pid) {
    const Path& p = out.paths[pid];
    std::vector<int> flow;
    for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) {
      // Drop the outcome node where it sits as a collider: the information
      // route runs between its parents (spouse link).
      if (outcome && p.nodes[i] == *outcome &&
          node_is_path_collider(graph, p, i))
        continue;
      flow.push_back(p.nodes[i]);
      involved.insert(p.nodes[i]);
    }
    out.flows.push_back(flow);
    int prev = kSensitiveMark;
    for (int node : flow) {
      out.edge_index[{prev, node}].insert(static_cast<int>(pid));
      prev = node;
    }
    out.edge_index[{prev, kPredictionMark}].insert(static_cast<int>(pid));
  }
  out.involved.assign(involved.begin(), involved.end());
  for (int f : graph.feature_nodes())
    if (!involved.count(f)) out.uninvolved.push_back(f);
  return out;
}

FactSet search_impl(const Pdag& graph, FactMode fact_mode, SearchMode mode,
                    const CiOracle* ci, std::size_t budget) {
  const int a = graph.sensitive();
  const int yhat = graph.prediction();
  std::vector<Path> found;
  std::vector<std::string> warnings;

  // Breadth-first prefix extension; a prefix is kept only if it is itself a
  // potential active path (subpath closure makes this pruning sound).
  std::deque<Path> frontier;
  for (int next : graph.adjacency(a)) {
    if (next == yhat) continue;
    frontier.push_back(Path{{a, next}});
  }
  while (!frontier.empty()) {
    Path p = std::move(frontier.front());
    frontier.pop_front();
    for (int next : graph.adjacency(p.nodes.back())) {
      if (std::find(p.nodes.begin(), p.nodes.end(), next) != p.nodes.end())
        continue;
      Path ext = p;
      ext.nodes.push_back(next);
      Tri res = is_potential_active(graph, ext, fact_mode, mode, ci, budget);
      if (res == Tri::Indeterminate) {
        std::string names;
        for (int node : ext.nodes)
          names += (names.empty() ? "" : " ") + graph.node(node).name;
        warnings.push_back("indeterminate (budget exhausted), kept: " + names);
      } else if (res == Tri::No) {
        continue;
      }
      if (next == yhat)
        found.push_back(std::move(ext));
      else
        frontier.push_back(std::move(ext));
    }
  }
  return finalize(graph, fact_mode, std::move(found), std::move(warnings));
}

}  // namespace

FactSet search_facts(const Pdag& graph, SearchMode mode, const CiOracle* ci,
                     std::size_t budget) {
  return search_impl(graph, FactMode::Marginal, mode, ci, budget);
}

FactSet search_facts_relative_to_y(const Pdag& graph, SearchMode mode,
                                   const CiOracle* ci, std::size_t budget) {
  return search_impl(graph, FactMode::RelativeToY, mode, ci, budget);
}

bool OrderRelation::prior(int i, int j) const {
  return prior_pairs.count({i, j}) > 0;
}

namespace {

// Priority over flow positions: i prior to j iff they share a flow and i
// precedes j on every shared flow.
std::set<std::pair<int, int>> flow_priority(
    const std::vector<std::vector<int>>& flows) {
  std::map<std::pair<int, int>, bool> always_before;  // candidate -> still ok
  for (const auto& flow : flows) {
    for (std::size_t i = 0; i < flow.size(); ++i) {
      for (std::size_t j = 0; j < flow.size(); ++j) {
        if (i == j) continue;
        auto key = std::make_pair(flow[i], flow[j]);
        bool before = i < j;
        auto it = always_before.find(key);
        if (it == always_before.end())
          always_before[key] = before;
        else
          it->second = it->second && before;
      }
    }
  }
  std::set<std::pair<int, int>> out;
  for (const auto& [key, ok] : always_before)
    if (ok) out.insert(key);
  return out;
}

bool spouses_with_outcome(const Pdag& graph, int i, int j) {
  auto y = graph.outcome();
  return y && graph.has_directed_edge(i, *y) && graph.has_directed_edge(j, *y);
}

bool linked(const Pdag& graph, FactMode mode, int i, int j) {
  if (graph.adjacent(i, j)) return true;
  return mode == FactMode::RelativeToY && spouses_with_outcome(graph, i, j);
}

}  // namespace

OrderRelation compute_order_relations(const Pdag& graph, const FactSet& facts) {
  OrderRelation rel;
  rel.mode = facts.mode;
  rel.prior_pairs = flow_priority(facts.flows);
  const int a = graph.sensitive();
  const int yhat = graph.prediction();

  std::set<int> members;
  for (const auto& flow : facts.flows)
    for (int node : flow) members.insert(node);

  for (int v : members) {
    auto& pred = rel.predecessors[v];
    auto& succ = rel.successors[v];
    for (int u : members) {
      if (u == v || !linked(graph, facts.mode, u, v)) continue;
      if (rel.prior(u, v)) pred.insert(u);
      if (rel.prior(v, u)) succ.insert(u);
    }
    // A precedes every involved node; under conditioning on the outcome the
    // sensitive value is informative for every involved node (the collider
    // opens routes that bypass adjacency).
    if (facts.mode == FactMode::RelativeToY || graph.adjacent(a, v))
      pred.insert(a);
    succ.insert(yhat);
  }

  rel.complete = true;
  std::vector<int> ms(members.begin(), members.end());
  for (std::size_t i = 0; i < ms.size() && rel.complete; ++i)
    for (std::size_t j = i + 1; j < ms.size(); ++j) {
      if (!linked(graph, facts.mode, ms[i], ms[j])) continue;
      if (!rel.prior(ms[i], ms[j]) && !rel.prior(ms[j], ms[i])) {
        rel.complete = false;
        break;
      }
    }
  return rel;
}

namespace {

struct Grouping {
  std::vector<std::vector<int>> groups;
  std::vector<std::vector<int>> grouped_paths;  // with endpoint marks
  std::set<std::pair<int, int>> priority;
  std::set<std::pair<int, int>> links;  // unordered group pairs, a < b
};

Grouping regroup(const Pdag& graph, FactMode mode,
                 const std::vector<std::vector<int>>& flows,
                 const std::vector<std::vector<int>>& groups) {
  Grouping g;
  g.groups = groups;
  std::map<int, int> node_group;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (int node : groups[i]) node_group[node] = static_cast<int>(i);

  std::set<std::vector<int>> seen;
  for (const auto& flow : flows) {
    std::vector<int> gp{kSensitiveMark};
    for (int node : flow) {
      int gid = node_group.at(node);
      if (gp.back() != gid) gp.push_back(gid);
    }
    gp.push_back(kPredictionMark);
    if (seen.insert(gp).second) g.grouped_paths.push_back(gp);
  }

  std::vector<std::vector<int>> interiors;
  for (const auto& gp : g.grouped_paths)
    interiors.emplace_back(gp.begin() + 1, gp.end() - 1);
  g.priority = flow_priority(interiors);

  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      bool any = false;
      for (int u : groups[i]) {
        for (int v : groups[j])
          if (linked(graph, mode, u, v)) { any = true; break; }
        if (any) break;
      }
      if (any) g.links.insert({static_cast<int>(i), static_cast<int>(j)});
    }
  return g;
}

int min_node(const std::vector<int>& group) {
  return *std::min_element(group.begin(), group.end());
}

// Tarjan-free SCC via Kosaraju on the small priority digraph.
std::vector<std::vector<int>> sccs(int n,
                                   const std::set<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> out(n), in(n);
  for (auto [u, v] : edges) {
    out[u].push_back(v);
    in[v].push_back(u);
  }
  std::vector<int> order;
  std::vector<bool> seen(n, false);
  std::function<void(int)> dfs1 = [&](int u) {
    seen[u] = true;
    for (int v : out[u])
      if (!seen[v]) dfs1(v);
    order.push_back(u);
  };
  for (int i = 0; i < n; ++i)
    if (!seen[i]) dfs1(i);
  std::vector<int> comp(n, -1);
  int nc = 0;
  std::function<void(int)> dfs2 = [&](int u) {
    comp[u] = nc;
    for (int v : in[u])
      if (comp[v] < 0) dfs2(v);
  };
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (comp[*it] < 0) { dfs2(*it); ++nc; }
  std::vector<std::vector<int>> comps(nc);
  for (int i = 0; i < n; ++i) comps[comp[i]].push_back(i);
  return comps;
}

}  // namespace

GroupPartition group_variables(const Pdag& graph, const FactSet& facts,
                               const OrderRelation& order) {
  (void)order;  // the group-level relation is recomputed after every merge
  GroupPartition part;
  part.mode = facts.mode;

  std::set<int> members;
  for (const auto& flow : facts.flows)
    for (int node : flow) members.insert(node);

  std::vector<std::vector<int>> groups;
  for (int node : members) groups.push_back({node});

  int guard = static_cast<int>(members.size()) + 2;
  Grouping g = regroup(graph, facts.mode, facts.flows, groups);
  while (guard-- > 0) {
    // Unordered linked pair with the smallest member node index.
    int best_i = -1, best_j = -1;
    auto key = [&](int gi, int gj) {
      int a = min_node(g.groups[gi]), b = min_node(g.groups[gj]);
      return std::make_pair(std::min(a, b), std::max(a, b));
    };
    for (auto [i, j] : g.links) {
      if (g.priority.count({i, j}) || g.priority.count({j, i})) continue;
      if (best_i < 0 || key(i, j) < key(best_i, best_j)) {
        best_i = i;
        best_j = j;
      }
    }
    std::set<int> to_merge;
    if (best_i >= 0) {
      int anchor = min_node(g.groups[best_i]) <= min_node(g.groups[best_j])
                       ? best_i
                       : best_j;
      to_merge.insert(anchor);
      for (auto [i, j] : g.links) {
        int other = i == anchor ? j : (j == anchor ? i : -1);
        if (other < 0) continue;
        if (!g.priority.count({i, j}) && !g.priority.count({j, i}))
          to_merge.insert(other);
      }
    } else {
      // Complete; break remaining priority cycles (rare) so fitting order
      // exists.
      auto comps = sccs(static_cast<int>(g.groups.size()), g.priority);
      for (const auto& comp : comps)
        if (comp.size() > 1) { to_merge.insert(comp.begin(), comp.end()); break; }
      if (to_merge.empty()) break;
    }
    std::vector<std::vector<int>> next;
    std::vector<int> merged;
    for (std::size_t i = 0; i < g.groups.size(); ++i) {
      if (to_merge.count(static_cast<int>(i)))
        merged.insert(merged.end(), g.groups[i].begin(), g.groups[i].end());
      else
        next.push_back(g.groups[i]);
    }
    std::sort(merged.begin(), merged.end());
    next.push_back(merged);
    std::sort(next.begin(), next.end(),
              [](const auto& a, const auto& b) { return min_node(a) < min_node(b); });
    g = regroup(graph, facts.mode, facts.flows, next);
  }

  part.groups = g.groups;
  part.grouped_paths = g.grouped_paths;
  part.complete = true;
  part.node_to_group.assign(graph.node_count(), -1);
  for (std::size_t i = 0; i < g.groups.size(); ++i)
    for (int node : g.groups[i])
      part.node_to_group[node] = static_cast<int>(i);

  for (std::size_t pid = 0; pid < g.grouped_paths.size(); ++pid) {
    const auto& gp = g.grouped_paths[pid];
    for (std::size_t i = 0; i + 1 < gp.size(); ++i)
      part.edge_index[{gp[i], gp[i + 1]}].insert(static_cast<int>(pid));
  }

  const int a = graph.sensitive();
  part.group_predecessors.resize(g.groups.size());
  part.sensitive_in_predecessors.assign(g.groups.size(), false);
  std::set<std::pair<int, int>> dep_edges;
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    for (std::size_t j = 0; j < g.groups.size(); ++j) {
      if (i == j) continue;
      bool lk = false;
      for (int u : g.groups[j])
        for (int v : g.groups[i])
          if (linked(graph, facts.mode, u, v)) lk = true;
      if (lk && g.priority.count({static_cast<int>(j), static_cast<int>(i)})) {
        part.group_predecessors[i].insert(static_cast<int>(j));
        dep_edges.insert({static_cast<int>(j), static_cast<int>(i)});
      }
    }
    if (facts.mode == FactMode::RelativeToY) {
      part.sensitive_in_predecessors[i] = true;
    } else {
      for (int v : g.groups[i])
        if (graph.adjacent(a, v)) part.sensitive_in_predecessors[i] = true;
    }
  }

  // Fit order: Kahn over predecessor edges.
  const int n = static_cast<int>(g.groups.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (auto [u, v] : dep_edges) {
    out[u].push_back(v);
    ++indeg[v];
  }
  std::vector<int> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::sort(ready.begin(), ready.end());
  while (!ready.empty()) {
    int u = ready.front();
    ready.erase(ready.begin());
    part.order.push_back(u);
    for (int v : out[u])
      if (--indeg[v] == 0)
        ready.insert(std::lower_bound(ready.begin(), ready.end(), v), v);
  }
  if (static_cast<int>(part.order.size()) != n)
    throw Error("E_INTERNAL", "group dependency cycle after grouping");
  return part;
}

std::string GroupPartition::group_name(const Pdag& graph, int group) const {
  if (group == kSensitiveMark) return graph.node(graph.sensitive()).name;
  if (group == kPredictionMark) return graph.node(graph.prediction()).name;
  std::string out;
  for (int node : groups.at(group)) {
    if (!out.empty()) out += "+";
    out += graph.node(node).name;
  }
  return out;
}

std::string GroupPartition::path_name(const Pdag& graph, int path_id) const {
  std::string out;
  for (int g : grouped_paths.at(path_id)) {
    if (!out.empty()) out += " -> ";
    out += group_name(graph, g);
  }
  return out;
}

nlohmann::json FactSet::to_json(const Pdag& graph) const {
  nlohmann::json j;
  j["mode"] = mode == FactMode::Marginal ? "marginal" : "relative_to_y";
  j["paths"] = nlohmann::json::array();
  for (const Path& p : paths) {
    nlohmann::json names = nlohmann::json::array();
    for (int node : p.nodes) names.push_back(graph.node(node).name);
    j["paths"].push_back(names);
  }
  nlohmann::json inv = nlohmann::json::array();
  for (int node : involved) inv.push_back(graph.node(node).name);
  j["involved"] = inv;
  nlohmann::json uninv = nlohmann::json::array();
  for (int node : uninvolved) uninv.push_back(graph.node(node).name);
  j["uninvolved"] = uninv;
  j["warnings"] = warnings;
  return j;
}

nlohmann::json GroupPartition::to_json(const Pdag& graph) const {
  nlohmann::json j;
  j["mode"] = mode == FactMode::Marginal ? "marginal" : "relative_to_y";
  j["groups"] = nlohmann::json::array();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    nlohmann::json names = nlohmann::json::array();
    for (int node : groups[i]) names.push_back(graph.node(node).name);
    j["groups"].push_back(names);
  }
  j["grouped_paths"] = nlohmann::json::array();
  for (std::size_t p = 0; p < grouped_paths.size(); ++p)
    j["grouped_paths"].push_back(path_name(graph, static_cast<int>(p)));
  j["complete"] = complete;
  return j;
}

}  // namespace facts
