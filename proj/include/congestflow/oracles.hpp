#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "graph.hpp"
#include "lsst.hpp"
#include "multigraph.hpp"

namespace congestflow::oracle {

struct MaxFlowResult {
  std::int64_t value = 0;
  std::vector<std::int64_t> net_flow;  // per input edge, on the u -> v orientation
};

// Shortest-augmenting-path max flow on the symmetric arc expansion of
// the undirected graph. Deliberately naive; intended for n <= 256.
inline MaxFlowResult exact_max_flow(const Graph& g, int s, int t) {
  if (s == t) throw std::runtime_error("max flow: s == t");
  const int n = g.node_count();
  const int m = g.edge_count();
  // arcs 2e (u->v) and 2e+1 (v->u), each with capacity cap(e)
  std::vector<std::int64_t> residual(2 * m);
  for (int e = 0; e < m; ++e) residual[2 * e] = residual[2 * e + 1] = g.edge(e).cap;
  std::vector<std::vector<int>> out_arcs(n);
  for (int e = 0; e < m; ++e) {
    out_arcs[g.edge(e).u].push_back(2 * e);
    out_arcs[g.edge(e).v].push_back(2 * e + 1);
  }
  auto head = [&](int arc) { return arc % 2 == 0 ? g.edge(arc / 2).v : g.edge(arc / 2).u; };

  MaxFlowResult res;
  while (true) {
    std::vector<int> via(n, -1);  // arc used to reach node
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    seen[s] = 1;
    q.push(s);
    while (!q.empty() && !seen[t]) {
      int u = q.front();
      q.pop();
      for (int arc : out_arcs[u]) {
        int v = head(arc);
        // residual of an arc also includes flow pushed on its reverse
        if (seen[v] || residual[arc] == 0) continue;
        seen[v] = 1;
        via[v] = arc;
        q.push(v);
      }
    }
    if (!seen[t]) break;
    std::int64_t push = std::numeric_limits<std::int64_t>::max();
    for (int v = t; v != s; v = (via[v] % 2 == 0 ? g.edge(via[v] / 2).u : g.edge(via[v] / 2).v))
      push = std::min(push, residual[via[v]]);
    for (int v = t; v != s; v = (via[v] % 2 == 0 ? g.edge(via[v] / 2).u : g.edge(via[v] / 2).v)) {
      residual[via[v]] -= push;
      residual[via[v] ^ 1] += push;
    }
    res.value += push;
  }
  // pushes on an arc decrement it and credit its reverse, so the net
  // flow on the orientation is cap - residual(forward arc)
  res.net_flow.resize(m);
  for (int e = 0; e < m; ++e) res.net_flow[e] = g.edge(e).cap - residual[2 * e];
  return res;
}

// Minimum s-t cut by enumerating all node subsets; n <= 12 only.
inline double min_cut_enumeration(const Graph& g, int s, int t) {
  const int n = g.node_count();
  if (n > 12) throw std::runtime_error("cut enumeration limited to n <= 12");
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (!(mask & (1u << s)) || (mask & (1u << t))) continue;
    double cut = 0.0;
    for (const auto& e : g.edges()) {
      bool au = (mask >> e.u) & 1, av = (mask >> e.v) & 1;
      if (au != av) cut += static_cast<double>(e.cap);
    }
    best = std::min(best, cut);
  }
  return best;
}

// Routes every multigraph edge's capacity along its unique tree path
// and accumulates per tree edge. Indexed by multigraph edge id; zero on
// non-tree edges.
inline std::vector<double> brute_tree_flow(const Multigraph& g, const SpanningTreeResult& tree) {
  const int N = g.node_count();
  std::vector<double> f(g.edge_count(), 0.0);
  std::vector<int> depth(N, 0);
  // compute depths by walking to the root (desk scale)
  for (int v = 0; v < N; ++v) {
    int d = 0;
    for (int w = v; tree.parent_node[w] >= 0; w = tree.parent_node[w]) ++d;
    depth[v] = d;
  }
  for (int eid = 0; eid < g.edge_count(); ++eid) {
    const MultiEdge& e = g.edge(eid);
    int a = e.a, b = e.b;
    double cap = static_cast<double>(e.cap);
    while (a != b) {
      if (depth[a] >= depth[b]) {
        f[tree.parent_edge[a]] += cap;
        a = tree.parent_node[a];
      } else {
        f[tree.parent_edge[b]] += cap;
        b = tree.parent_node[b];
      }
    }
  }
  return f;
}

// Average stretch by root-path intersection, independent of the
// BFS-based measurement in the construction module.
inline double brute_stretch(const Multigraph& g, const SpanningTreeResult& tree,
                            bool capacity_weighted) {
  const int N = g.node_count();
  std::vector<double> root_dist(N, 0.0);
  std::vector<int> depth(N, 0);
  // iterate to fixpoint over parent pointers (desk scale)
  for (int v = 0; v < N; ++v) {
    double d = 0.0;
    int h = 0;
    for (int w = v; tree.parent_node[w] >= 0; w = tree.parent_node[w]) {
      d += std::max(1.0, g.edge(tree.parent_edge[w]).length);
      ++h;
    }
    root_dist[v] = d;
    depth[v] = h;
  }
  auto lca_dist = [&](int a, int b) {
    int x = a, y = b;
    while (depth[x] > depth[y]) x = tree.parent_node[x];
    while (depth[y] > depth[x]) y = tree.parent_node[y];
    while (x != y) {
      x = tree.parent_node[x];
      y = tree.parent_node[y];
    }
    return root_dist[a] + root_dist[b] - 2.0 * root_dist[x];
  };
  double num = 0.0, den = 0.0;
  for (const MultiEdge& e : g.edges()) {
    double w = capacity_weighted ? static_cast<double>(e.cap) : 1.0;
    num += lca_dist(e.a, e.b) * w;
    den += std::max(1.0, e.length) * w;
  }
  return den > 0.0 ? num / den : 1.0;
}

// Optimal congestion of routing F units from s to t.
inline double st_opt_congestion(const Graph& g, int s, int t, double F) {
  auto mf = exact_max_flow(g, s, t);
  if (mf.value <= 0) throw std::runtime_error("zero max flow on a connected graph");
  return F / static_cast<double>(mf.value);
}

}  // namespace congestflow::oracle
