#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "multigraph.hpp"
#include "rng.hpp"

namespace congestflow {

// Randomized O(log N)-stretch spanner: log N levels of cluster
// sampling at rate 1/2. A node whose cluster dies keeps its lightest
// edge to the closest surviving cluster (joining it) plus every
// lighter per-cluster lightest edge; at the end every node keeps the
// lightest edge to each surviving cluster it touches. Ties break by
// edge id. Returns the kept edge ids.
inline std::vector<int> bs_spanner(const Multigraph& g, Rng rng,
                                   const std::vector<char>* allowed_edge = nullptr) {
  const int N = g.node_count();
  std::vector<char> keep(g.edge_count(), 0);
  if (N <= 1) return {};
  const int levels = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(N, 2)))));

  std::vector<int> cluster(N);
  for (int v = 0; v < N; ++v) cluster[v] = v;
  std::vector<char> alive(N, 1);     // cluster id alive?
  std::vector<char> clustered(N, 1);  // node still participates?

  auto usable = [&](int eid) { return !allowed_edge || (*allowed_edge)[eid]; };

  for (int i = 1; i <= levels; ++i) {
    Rng level_rng = rng.substream("level", i);
    // mark surviving clusters with probability 1/2
    std::set<int> current;
    for (int v = 0; v < N; ++v)
      if (clustered[v] && alive[cluster[v]]) current.insert(cluster[v]);
    std::map<int, char> marked;
    for (int c : current) marked[c] = level_rng.substream("mark", c).bernoulli(0.5) ? 1 : 0;

    std::vector<int> next_cluster = cluster;
    std::vector<char> next_clustered = clustered;
    for (int v = 0; v < N; ++v) {
      if (!clustered[v] || marked[cluster[v]]) continue;
      // lightest edge from v to each adjacent current cluster
      std::map<int, int> lightest;  // cluster -> edge id
      for (auto [w, eid] : g.neighbors(v)) {
        if (!usable(eid) || !clustered[w]) continue;
        int c = cluster[w];
        if (c == cluster[v] || !current.count(c)) continue;
        auto [it, fresh] = lightest.emplace(c, eid);
        if (!fresh) {
          const auto& a = g.edge(eid);
          const auto& b = g.edge(it->second);
          if (a.length < b.length || (a.length == b.length && eid < it->second))
            it->second = eid;
        }
      }
      // closest neighbor in a marked cluster
      int join_edge = -1;
      for (const auto& [c, eid] : lightest) {
        if (!marked[c]) continue;
        if (join_edge < 0) {
          join_edge = eid;
          continue;
        }
        const auto& a = g.edge(eid);
        const auto& b = g.edge(join_edge);
        if (a.length < b.length || (a.length == b.length && eid < join_edge)) join_edge = eid;
      }
      if (join_edge < 0) {
        // no marked neighbor: keep every per-cluster lightest edge, exit
        for (const auto& [c, eid] : lightest) keep[eid] = 1;
        next_clustered[v] = 0;
      } else {
        keep[join_edge] = 1;
        double wju = g.edge(join_edge).length;
        for (const auto& [c, eid] : lightest)
          if (g.edge(eid).length < wju) keep[eid] = 1;
        const auto& je = g.edge(join_edge);
        int u = (je.a == v) ? je.b : je.a;
        next_cluster[v] = cluster[u];
      }
    }
    for (int c : current)
      if (!marked[c]) alive[c] = 0;
    cluster = std::move(next_cluster);
    clustered = std::move(next_clustered);
  }

  // final level: lightest edge to each adjacent surviving cluster
  for (int v = 0; v < N; ++v) {
    std::map<int, int> lightest;
    for (auto [w, eid] : g.neighbors(v)) {
      if (!usable(eid) || !clustered[w]) continue;
      int c = cluster[w];
      if (!alive[c] || (clustered[v] && c == cluster[v])) continue;
      auto [it, fresh] = lightest.emplace(c, eid);
      if (!fresh) {
        const auto& a = g.edge(eid);
        const auto& b = g.edge(it->second);
        if (a.length < b.length || (a.length == b.length && eid < it->second))
          it->second = eid;
      }
    }
    for (const auto& [c, eid] : lightest) keep[eid] = 1;
  }

  std::vector<int> out;
  for (int eid = 0; eid < g.edge_count(); ++eid)
    if (keep[eid]) out.push_back(eid);
  return out;
}

struct SparsifierOutput {
  Multigraph graph;             // retained edges, possibly reweighted
  std::vector<int> origin;      // per output edge: input edge id
  std::vector<int> owner;       // per output edge: orienting endpoint
  int max_out_degree = 0;
  bool bypassed = false;
  int phases = 0;
};

// Bounded-out-degree orientation: repeatedly, nodes whose unoriented
// incident count is below twice the average degree claim those edges
// outward and halt. Leftovers (rare) go to the smaller endpoint.
inline void orient_edges(const Multigraph& g, std::vector<int>& owner, int* max_out) {
  const int N = g.node_count();
  const int m = g.edge_count();
  owner.assign(m, -1);
  if (N == 0 || m == 0) {
    if (max_out) *max_out = 0;
    return;
  }
  const double d_avg = 2.0 * m / N;
  const int levels = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(N, 2)))));
  std::vector<char> halted(N, 0);
  for (int it = 0; it < levels; ++it) {
    std::vector<int> unoriented(N, 0);
    for (int eid = 0; eid < m; ++eid)
      if (owner[eid] < 0) {
        ++unoriented[g.edge(eid).a];
        ++unoriented[g.edge(eid).b];
      }
    bool progress = false;
    for (int v = 0; v < N; ++v) {
      if (halted[v] || unoriented[v] >= 2.0 * d_avg) continue;
      for (auto [w, eid] : g.neighbors(v))
        if (owner[eid] < 0) owner[eid] = v;
      halted[v] = 1;
      progress = true;
    }
    if (!progress) break;
  }
  for (int eid = 0; eid < m; ++eid)
    if (owner[eid] < 0) owner[eid] = std::min(g.edge(eid).a, g.edge(eid).b);
  if (max_out) {
    std::vector<int> outdeg(N, 0);
    for (int eid = 0; eid < m; ++eid) ++outdeg[owner[eid]];
    *max_out = *std::max_element(outdeg.begin(), outdeg.end());
  }
}

// Iterated spanner-and-sample size reduction. Each phase protects a
// bundle of edge-disjoint spanners and keeps every other edge with
// probability 1/4 at four times its capacity, preserving expected cut
// capacities. Sparse inputs pass through unchanged.
inline SparsifierOutput sparsify(const Multigraph& g, double eps, Rng rng, double c_sp = 1.0,
                                 int c_k = 3, double c_sz = 4.0) {
  const int N = g.node_count();
  const int logN = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(N, 2)))));
  SparsifierOutput out;
  const long bypass_at = std::max<long>(4L * N * logN, 256);
  auto finish = [&](const Multigraph& cur, const std::vector<int>& origin) {
    out.graph = cur;
    out.origin = origin;
    orient_edges(out.graph, out.owner, &out.max_out_degree);
  };
  if (g.edge_count() <= bypass_at) {
    std::vector<int> origin(g.edge_count());
    for (int i = 0; i < g.edge_count(); ++i) origin[i] = i;
    out.bypassed = true;
    finish(g, origin);
    return out;
  }

  const double target =
      static_cast<double>(N) * std::pow(c_sz * logN / eps, 3.0);
  const int phases = std::max(1, static_cast<int>(std::ceil(c_sp * logN * logN / (eps * eps))));
  Multigraph cur = g;
  std::vector<int> origin(g.edge_count());
  for (int i = 0; i < g.edge_count(); ++i) origin[i] = i;

  for (int ph = 0; ph < phases && cur.edge_count() > target; ++ph) {
    ++out.phases;
    Rng prng = rng.substream("phase", ph);
    std::vector<char> protect(cur.edge_count(), 0);
    std::vector<char> available(cur.edge_count(), 1);
    const int bundles = c_k * logN;
    for (int b = 0; b < bundles; ++b) {
      std::vector<int> sp = bs_spanner(cur, prng.substream("spanner", b), &available);
      if (sp.empty()) break;
      for (int eid : sp) {
        protect[eid] = 1;
        available[eid] = 0;
      }
    }
    Multigraph next(N);
    std::vector<int> next_origin;
    for (int eid = 0; eid < cur.edge_count(); ++eid) {
      const MultiEdge& e = cur.edge(eid);
      if (protect[eid]) {
        next.add_edge(e.a, e.b, e.cap, e.length, e.psi);
        next_origin.push_back(origin[eid]);
      } else if (prng.substream("sample", eid).bernoulli(0.25)) {
        next.add_edge(e.a, e.b, 4 * e.cap, e.length, e.psi);
        next_origin.push_back(origin[eid]);
      }
    }
    if (!next.connected()) break;  // keep cur; spanners should prevent this
    cur = std::move(next);
    origin = std::move(next_origin);
  }
  finish(cur, origin);
  return out;
}

}  // namespace congestflow
