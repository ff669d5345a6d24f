#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include <congestflow/graph.hpp>
#include <congestflow/multigraph.hpp>
#include <congestflow/rng.hpp>

namespace testutil {

// Random connected simple graph: a random spanning tree plus extra
// edges, capacities uniform in [1, cap_max].
inline congestflow::Graph random_connected_graph(int n, int extra_edges, std::int64_t cap_max,
                                                 congestflow::Rng rng) {
  std::vector<std::tuple<int, int, std::int64_t>> edges;
  for (int v = 1; v < n; ++v) {
    int u = static_cast<int>(rng.uniform_int(0, v - 1));
    edges.push_back({u, v, rng.uniform_int(1, cap_max)});
  }
  int tries = 0;
  int added = 0;
  while (added < extra_edges && tries < 20 * extra_edges + 50) {
    ++tries;
    int a = static_cast<int>(rng.uniform_int(0, n - 1));
    int b = static_cast<int>(rng.uniform_int(0, n - 1));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    bool dup = false;
    for (auto& [x, y, c] : edges)
      if (std::min(x, y) == a && std::max(x, y) == b) dup = true;
    if (dup) continue;
    edges.push_back({a, b, rng.uniform_int(1, cap_max)});
    ++added;
  }
  return congestflow::Graph::build(n, edges);
}

// Random connected multigraph over cluster vertices (parallel edges allowed).
inline congestflow::Multigraph random_multigraph(int n, int extra_edges, std::int64_t cap_max,
                                                 congestflow::Rng rng, double max_len = 1.0) {
  congestflow::Multigraph g(n);
  for (int v = 1; v < n; ++v) {
    int u = static_cast<int>(rng.uniform_int(0, v - 1));
    double len = max_len > 1.0 ? 1.0 + rng.uniform() * (max_len - 1.0) : 1.0;
    g.add_edge(u, v, rng.uniform_int(1, cap_max), len);
  }
  for (int i = 0; i < extra_edges; ++i) {
    int a = static_cast<int>(rng.uniform_int(0, n - 1));
    int b = static_cast<int>(rng.uniform_int(0, n - 1));
    if (a == b) continue;
    double len = max_len > 1.0 ? 1.0 + rng.uniform() * (max_len - 1.0) : 1.0;
    g.add_edge(a, b, rng.uniform_int(1, cap_max), len);
  }
  return g;
}

// Balanced random demand vector.
inline std::vector<double> random_demand(int n, congestflow::Rng rng) {
  std::vector<double> b(n, 0.0);
  double sum = 0.0;
  for (int v = 0; v + 1 < n; ++v) {
    b[v] = rng.uniform() * 2.0 - 1.0;
    sum += b[v];
  }
  b[n - 1] = -sum;
  return b;
}

}  // namespace testutil
