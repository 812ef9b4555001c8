// dag.hpp -- directed graphs over coordinate indices, topological sorting,
// and the special structure classes used for solver short-circuits.
//
// Vertices are 0-based internally; file formats use 1-based labels. All
// results are reported in the caller's labels; the sorted order is only an
// internal device (parent lists and "history" sets follow the stored
// topological order).
#pragma once

#include <algorithm>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "causalot/error.hpp"

namespace causalot {

enum class GraphClass { Full, Empty, Linear, Markov, General };

inline const char* graph_class_name(GraphClass c) {
  switch (c) {
    case GraphClass::Full: return "full";
    case GraphClass::Empty: return "empty";
    case GraphClass::Linear: return "linear";
    case GraphClass::Markov: return "markov";
    case GraphClass::General: return "general";
  }
  return "general";
}

struct Dag {
  int n = 0;
  std::vector<std::pair<int, int>> edges;   // as given, deduplicated order preserved
  std::vector<std::vector<int>> parents;    // per vertex, sorted by topological position
  std::vector<int> order;                   // order[k] = k-th vertex topologically
  std::vector<int> pos;                     // pos[v] = position of v in order
  bool complete = false;                    // the fully connected graph (cyclic), preset only

  // Vertices strictly before v in the topological order ("history" of v).
  std::vector<int> history(int v) const {
    std::vector<int> h;
    for (int k = 0; k < pos[v]; ++k) h.push_back(order[k]);
    return h;
  }

  bool edge_set_contains(int a, int b) const {
    for (auto& e : edges)
      if (e.first == a && e.second == b) return true;
    return false;
  }

  // The complete directed graph; the only non-acyclic shape the library
  // accepts, used for the unconstrained-transport short-circuits.
  static Dag make_complete(int n) {
    if (n <= 0) fail(ErrorCode::VertexOutOfRange, "graph needs at least one vertex");
    Dag d;
    d.n = n;
    d.complete = true;
    d.parents.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (i != j) {
          d.edges.emplace_back(i, j);
          d.parents[j].push_back(i);
        }
      d.order.push_back(i);
      d.pos.push_back(i);
    }
    return d;
  }
};

namespace detail {

// Reports one directed cycle (for the CycleDetected message).
inline std::string find_cycle(int n, const std::vector<std::vector<int>>& adj) {
  std::vector<int> state(n, 0);  // 0 unseen, 1 on stack, 2 done
  std::vector<int> stack, inpos(n, -1);
  std::string out;
  auto dfs = [&](auto&& self, int v) -> bool {
    state[v] = 1;
    inpos[v] = (int)stack.size();
    stack.push_back(v);
    for (int w : adj[v]) {
      if (state[w] == 1) {
        out = "cycle:";
        for (std::size_t k = inpos[w]; k < stack.size(); ++k)
          out += " " + std::to_string(stack[k] + 1);
        out += " " + std::to_string(w + 1);
        return true;
      }
      if (state[w] == 0 && self(self, w)) return true;
    }
    stack.pop_back();
    state[v] = 2;
    return false;
  };
  for (int v = 0; v < n; ++v)
    if (state[v] == 0 && dfs(dfs, v)) return out;
  return "cycle: (unlocated)";
}

}  // namespace detail

// Validates an edge list and produces the sorted representation. The
// topological order is deterministic (Kahn's algorithm, smallest label first).
inline Dag validate_dag(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n <= 0) fail(ErrorCode::VertexOutOfRange, "graph needs at least one vertex");
  Dag d;
  d.n = n;
  std::set<std::pair<int, int>> seen;
  std::vector<std::vector<int>> adj(n);
  std::vector<int> indeg(n, 0);
  for (auto& e : edges) {
    if (e.first < 0 || e.first >= n || e.second < 0 || e.second >= n)
      fail(ErrorCode::VertexOutOfRange,
           "edge (" + std::to_string(e.first + 1) + "," + std::to_string(e.second + 1) +
               ") outside 1.." + std::to_string(n));
    if (e.first == e.second)
      fail(ErrorCode::CycleDetected, "cycle: " + std::to_string(e.first + 1) + " " +
                                         std::to_string(e.first + 1));
    if (!seen.insert(e).second)
      fail(ErrorCode::DuplicateEdge, "edge (" + std::to_string(e.first + 1) + "," +
                                         std::to_string(e.second + 1) + ") repeated");
    d.edges.push_back(e);
    adj[e.first].push_back(e.second);
    ++indeg[e.second];
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push(v);
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    d.order.push_back(v);
    for (int w : adj[v])
      if (--indeg[w] == 0) ready.push(w);
  }
  if ((int)d.order.size() != n)
    fail(ErrorCode::CycleDetected, detail::find_cycle(n, adj));
  d.pos.assign(n, 0);
  for (int k = 0; k < n; ++k) d.pos[d.order[k]] = k;
  d.parents.assign(n, {});
  for (auto& e : d.edges) d.parents[e.second].push_back(e.first);
  for (auto& ps : d.parents)
    std::sort(ps.begin(), ps.end(), [&](int a, int b) { return d.pos[a] < d.pos[b]; });
  return d;
}

// Named presets in the sorted labeling.
inline Dag dag_empty(int n) { return validate_dag(n, {}); }

inline Dag dag_markov(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(i - 1, i);
  return validate_dag(n, e);
}

inline Dag dag_linear(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return validate_dag(n, e);
}

inline Dag dag_complete(int n) { return Dag::make_complete(n); }

// Matches the graph against the special shapes, after relabeling by the
// stored topological order. Precedence: full, empty, linear, markov.
inline GraphClass classify_structure(const Dag& d) {
  if (d.complete || d.n == 1) return GraphClass::Full;
  std::set<std::pair<int, int>> sorted_edges;
  for (auto& e : d.edges) sorted_edges.insert({d.pos[e.first], d.pos[e.second]});
  if (sorted_edges.empty()) return GraphClass::Empty;
  std::set<std::pair<int, int>> linear, markov;
  for (int i = 0; i < d.n; ++i)
    for (int j = i + 1; j < d.n; ++j) linear.insert({i, j});
  for (int i = 1; i < d.n; ++i) markov.insert({i - 1, i});
  if (sorted_edges == linear) return GraphClass::Linear;
  if (sorted_edges == markov) return GraphClass::Markov;
  return GraphClass::General;
}

// Whether every edge of `sub` appears in `super` (same vertex count).
inline bool is_subgraph(const Dag& sub, const Dag& super) {
  if (sub.n != super.n) return false;
  for (auto& e : sub.edges)
    if (!super.edge_set_contains(e.first, e.second)) return false;
  return true;
}

}  // namespace causalot
