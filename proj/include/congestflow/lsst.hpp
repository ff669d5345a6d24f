#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "multigraph.hpp"
#include "rng.hpp"

namespace congestflow {

// Clustering produced by the delayed multi-source ball growing.
struct SplitResult {
  std::vector<int> cluster_of;   // per node, -1 only for inactive nodes
  std::vector<int> source;       // per cluster: the seeding node
  std::vector<int> parent;       // BFS-tree parent within the cluster, -1 at source
  std::vector<int> radius;       // per cluster: realized BFS radius
  long rounds = 0;               // cluster rounds this construction costs
};

// Grows BFS balls from randomly delayed sources over 2 log N phases;
// every node joins the cluster of the first traversal reaching it, ties
// broken by smaller source id. Cluster radius is bounded by rho.
inline SplitResult split_graph(const Multigraph& g, int rho, Rng rng,
                               const std::vector<char>* active = nullptr,
                               const std::vector<char>* allowed_edge = nullptr) {
  const int N = g.node_count();
  if (rho < 1) throw std::runtime_error("split_graph: rho must be >= 1");
  const int logN = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(N, 2)))));
  const int max_delay = rho / (2 * logN);

  SplitResult res;
  res.cluster_of.assign(N, -1);
  res.parent.assign(N, -1);
  std::vector<char> is_active(N, 1);
  if (active) is_active.assign(active->begin(), active->end());
  int remaining = 0;
  for (int v = 0; v < N; ++v)
    if (is_active[v]) ++remaining;

  for (int t = 1; t <= 2 * logN && remaining > 0; ++t) {
    std::vector<int> vt;
    for (int v = 0; v < N; ++v)
      if (is_active[v] && res.cluster_of[v] < 0) vt.push_back(v);
    if (vt.empty()) break;

    // source sample: 12 * (2^{t/2} / N) * |V^t| nodes, or all of V^t
    // once it has shrunk below N / (12 * 2^{t/2})
    double scale = 12.0 * std::pow(2.0, t / 2.0) / static_cast<double>(N);
    std::vector<int> sources;
    if (static_cast<double>(vt.size()) < static_cast<double>(N) / (12.0 * std::pow(2.0, t / 2.0))) {
      sources = vt;
    } else {
      std::size_t want = static_cast<std::size_t>(std::ceil(scale * vt.size()));
      want = std::clamp<std::size_t>(want, 1, vt.size());
      std::shuffle(vt.begin(), vt.end(), rng.engine());
      sources.assign(vt.begin(), vt.begin() + want);
      std::sort(sources.begin(), sources.end());
    }

    // per-source delay and BFS budget
    const double span = rho * (1.0 - static_cast<double>(t - 1) / (2.0 * logN));
    struct Launch {
      int delay, budget;
    };
    std::vector<Launch> launch(N, {-1, -1});
    for (int s : sources) {
      int d = max_delay > 0 ? static_cast<int>(rng.uniform_int(0, max_delay)) : 0;
      int budget = std::max(0, static_cast<int>(std::floor(span)) - d);
      launch[s] = {d, budget};
    }

    // synchronized growth: key (arrival time, source id); a traversal
    // only expands from nodes it already covers
    using Item = std::tuple<int, int, int, int>;  // time, source, node, hops
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    for (int s : sources) pq.push({launch[s].delay, s, s, 0});
    std::vector<int> hops_of(N, -1);
    while (!pq.empty()) {
      auto [time, s, v, h] = pq.top();
      pq.pop();
      if (res.cluster_of[v] >= 0) continue;
      // claim v for s's cluster; s always claims itself before expanding
      int cid;
      if (v == s) {
        cid = static_cast<int>(res.source.size());
        res.source.push_back(s);
        res.radius.push_back(0);
      } else {
        cid = res.cluster_of[s];
      }
      res.cluster_of[v] = cid;
      hops_of[v] = h;
      res.radius[res.cluster_of[v]] = std::max(res.radius[res.cluster_of[v]], h);
      --remaining;
      if (h >= launch[s].budget) continue;
      for (auto [w, eid] : g.neighbors(v)) {
        if (!is_active[w] || res.cluster_of[w] >= 0) continue;
        if (allowed_edge && !(*allowed_edge)[eid]) continue;
        pq.push({time + 1, s, w, h + 1});
      }
    }
    // record BFS-tree parents: parent = claimed neighbor one hop closer
    // in the same cluster, smallest id first
    for (int v = 0; v < N; ++v) {
      if (hops_of[v] <= 0 || res.cluster_of[v] < 0) continue;
      if (res.parent[v] >= 0) continue;
      for (auto [w, eid] : g.neighbors(v)) {
        if (allowed_edge && !(*allowed_edge)[eid]) continue;
        if (res.cluster_of[w] == res.cluster_of[v] && hops_of[w] == hops_of[v] - 1) {
          res.parent[v] = w;
          break;
        }
      }
    }
    res.rounds += static_cast<long>(span) + max_delay + 1;
  }
  return res;
}

struct PartitionResult {
  SplitResult split;
  int restarts = 0;
  bool accepted = false;  // false only if the restart cap was hit
};

// Runs split_graph until no edge class is over-split, restarting with
// fresh randomness. Class i is over-split when more than
// c_split * |E_i| * log N / rho of its edges cross clusters.
inline PartitionResult partition(const Multigraph& g,
                                 const std::vector<std::vector<int>>& classes, int rho,
                                 Rng rng, double c_split = 16.0,
                                 const std::vector<char>* active = nullptr,
                                 const std::vector<char>* allowed_edge = nullptr) {
  const int N = g.node_count();
  const double logN = std::max(1.0, std::log2(static_cast<double>(std::max(N, 2))));
  const int cap = 64 * static_cast<int>(std::ceil(logN));
  PartitionResult best;
  int best_over = -1;
  for (int attempt = 0; attempt < cap; ++attempt) {
    SplitResult sr = split_graph(g, rho, rng.substream("partition", attempt), active, allowed_edge);
    int over = 0;
    for (const auto& cls : classes) {
      long cut = 0;
      for (int eid : cls) {
        const MultiEdge& e = g.edge(eid);
        if (sr.cluster_of[e.a] != sr.cluster_of[e.b]) ++cut;
      }
      if (static_cast<double>(cut) > c_split * static_cast<double>(cls.size()) * logN / rho)
        ++over;
    }
    if (best_over < 0 || over < best_over) {
      best_over = over;
      best.split = std::move(sr);
      best.restarts = attempt;
    }
    if (over == 0) {
      best.accepted = true;
      return best;
    }
  }
  best.restarts = cap;
  return best;
}

// Spanning tree of a cluster multigraph as a set of its edge ids, with
// a rooted orientation.
struct SpanningTreeResult {
  std::vector<int> edge_ids;     // |V|-1 multigraph edge ids
  int root = 0;
  std::vector<int> parent_node;  // per node, -1 at root
  std::vector<int> parent_edge;  // multigraph edge id toward parent, -1 at root
  long rounds = 0;
};

namespace detail {

inline void orient_tree(const Multigraph& g, SpanningTreeResult& t) {
  const int N = g.node_count();
  std::vector<char> in_tree(g.edge_count(), 0);
  for (int eid : t.edge_ids) in_tree[eid] = 1;
  t.parent_node.assign(N, -1);
  t.parent_edge.assign(N, -1);
  std::vector<char> seen(N, 0);
  std::queue<int> q;
  seen[t.root] = 1;
  q.push(t.root);
  int visited = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto [w, eid] : g.neighbors(u)) {
      if (!in_tree[eid] || seen[w]) continue;
      seen[w] = 1;
      t.parent_node[w] = u;
      t.parent_edge[w] = eid;
      q.push(w);
      ++visited;
    }
  }
  if (visited != N) throw std::runtime_error("spanning tree does not span");
}

}  // namespace detail

// Recommended weight-class base for an N-node instance.
inline double default_class_base(int N) {
  double l = std::log2(static_cast<double>(std::max(N, 4)));
  double ll = std::log2(std::max(l, 1.0));
  return std::max(4.0, std::round(std::pow(2.0, std::sqrt(6.0 * l * std::max(ll, 1.0)))));
}

// One construction pass: classify edges by length into powers of z,
// then iteratively cluster with radius z/4 over the first j classes,
// emit each cluster's BFS tree, and contract, until one node remains.
inline SpanningTreeResult low_stretch_tree_once(const Multigraph& g, Rng rng,
                                                double z_override = 0.0) {
  const int N = g.node_count();
  SpanningTreeResult result;
  if (N == 1) return result;
  const double z = z_override > 0.0 ? z_override : default_class_base(N);
  const int rho = std::max(1, static_cast<int>(z / 4.0));

  // class of an edge: i >= 1 such that length in [z^{i-1}, z^i)
  int max_class = 1;
  std::vector<int> cls(g.edge_count());
  for (int eid = 0; eid < g.edge_count(); ++eid) {
    double l = std::max(1.0, g.edge(eid).length);
    int c = 1 + static_cast<int>(std::floor(std::log(l) / std::log(z) + 1e-12));
    cls[eid] = std::max(1, c);
    max_class = std::max(max_class, cls[eid]);
  }

  // current contraction level: super[v] = current super-node of v
  std::vector<int> super(N);
  for (int v = 0; v < N; ++v) super[v] = v;
  int level_nodes = N;

  for (int j = 1; level_nodes > 1; ++j) {
    // active edges of classes 1..j at the current level
    Multigraph level(level_nodes);
    std::vector<int> level_to_orig;  // level edge -> original edge id
    std::vector<std::vector<int>> level_classes(j);
    for (int eid = 0; eid < g.edge_count(); ++eid) {
      if (cls[eid] > j) continue;
      int a = super[g.edge(eid).a], b = super[g.edge(eid).b];
      if (a == b) continue;  // self loop after contraction
      int lid = level.add_edge(a, b, g.edge(eid).cap, 1.0, eid);
      level_to_orig.push_back(eid);
      level_classes[cls[eid] - 1].push_back(lid);
    }

    PartitionResult pr = partition(level, level_classes, rho, rng.substream("iter", j));
    result.rounds += pr.split.rounds * (pr.restarts + 1);

    // cluster BFS-tree edges enter the spanning tree
    int contracted = 0;
    std::vector<int> relabel(level_nodes, -1);
    int next_id = 0;
    for (int v = 0; v < level_nodes; ++v) {
      int p = pr.split.parent[v];
      if (p >= 0) {
        // find the level edge used for (v, p): smallest id among parallels
        int chosen = -1;
        for (auto [w, lid] : level.neighbors(v))
          if (w == p && (chosen < 0 || lid < chosen)) chosen = lid;
        if (chosen < 0) throw std::runtime_error("lsst: parent edge missing");
        result.edge_ids.push_back(level_to_orig[chosen]);
        ++contracted;
      }
    }
    // contract clusters
    for (int v = 0; v < level_nodes; ++v) {
      int c = pr.split.cluster_of[v];
      int key = c >= 0 ? pr.split.source[c] : v;
      if (relabel[key] < 0) relabel[key] = next_id++;
    }
    std::vector<int> node_new(level_nodes);
    for (int v = 0; v < level_nodes; ++v) {
      int c = pr.split.cluster_of[v];
      node_new[v] = relabel[c >= 0 ? pr.split.source[c] : v];
    }
    for (int v = 0; v < N; ++v) super[v] = node_new[super[v]];
    level_nodes = next_id;

    if (contracted == 0 && j >= max_class) {
      // no progress with every class admitted: force-merge by one BFS
      // spanning tree of the remaining contracted graph
      Multigraph rest(level_nodes);
      std::vector<int> rest_to_orig;
      for (int eid = 0; eid < g.edge_count(); ++eid) {
        int a = super[g.edge(eid).a], b = super[g.edge(eid).b];
        if (a == b) continue;
        rest.add_edge(a, b, g.edge(eid).cap, 1.0, eid);
        rest_to_orig.push_back(eid);
      }
      if (!rest.connected()) throw std::runtime_error("lsst: input not connected");
      std::vector<char> used(level_nodes, 0);
      std::queue<int> q;
      used[0] = 1;
      q.push(0);
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (auto [w, lid] : rest.neighbors(u))
          if (!used[w]) {
            used[w] = 1;
            result.edge_ids.push_back(rest_to_orig[lid]);
            q.push(w);
          }
      }
      break;
    }
  }

  detail::orient_tree(g, result);
  return result;
}

// Sum of tree-path lengths over edges against the sum of direct
// lengths, optionally capacity-weighted.
inline double average_stretch(const Multigraph& g, const SpanningTreeResult& tree,
                              bool capacity_weighted) {
  const int N = g.node_count();
  // tree adjacency with lengths
  std::vector<std::vector<std::pair<int, double>>> tadj(N);
  for (int eid : tree.edge_ids) {
    const MultiEdge& e = g.edge(eid);
    double l = std::max(1.0, e.length);
    tadj[e.a].push_back({e.b, l});
    tadj[e.b].push_back({e.a, l});
  }
  auto tree_dist_from = [&](int s) {
    std::vector<double> d(N, -1.0);
    std::queue<int> q;
    d[s] = 0.0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (auto [w, l] : tadj[u])
        if (d[w] < 0) {
          d[w] = d[u] + l;
          q.push(w);
        }
    }
    return d;
  };
  // group edges by endpoint a to reuse distance maps
  std::vector<std::vector<int>> by_a(N);
  for (int eid = 0; eid < g.edge_count(); ++eid) by_a[g.edge(eid).a].push_back(eid);
  double num = 0.0, den = 0.0;
  for (int a = 0; a < N; ++a) {
    if (by_a[a].empty()) continue;
    auto d = tree_dist_from(a);
    for (int eid : by_a[a]) {
      const MultiEdge& e = g.edge(eid);
      double w = capacity_weighted ? static_cast<double>(e.cap) : 1.0;
      num += d[e.b] * w;
      den += std::max(1.0, e.length) * w;
    }
  }
  return den > 0.0 ? num / den : 1.0;
}

// Retry-with-measurement wrapper: resample up to max_tries while the
// measured average stretch exceeds 2 * alpha_cfg, keeping the best.
inline SpanningTreeResult low_stretch_tree(const Multigraph& g, Rng rng,
                                           double alpha_cfg = 0.0, int max_tries = 8,
                                           double z_override = 0.0) {
  if (alpha_cfg <= 0.0)
    alpha_cfg = 4.0 * std::ceil(std::log2(static_cast<double>(std::max(g.node_count(), 2))));
  SpanningTreeResult best;
  double best_stretch = -1.0;
  for (int t = 0; t < max_tries; ++t) {
    SpanningTreeResult cand = low_stretch_tree_once(g, rng.substream("try", t), z_override);
    double s = g.node_count() > 1 ? average_stretch(g, cand, true) : 1.0;
    if (best_stretch < 0.0 || s < best_stretch) {
      best_stretch = s;
      cand.rounds += best.rounds;
      best = std::move(cand);
    } else {
      best.rounds += cand.rounds;
    }
    if (best_stretch <= 2.0 * alpha_cfg) break;
  }
  return best;
}

}  // namespace congestflow
