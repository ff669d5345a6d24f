#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

namespace congestflow {

// Capacitated, lengthed multigraph over cluster vertices. Parallel edges
// are allowed; self-loops are not stored.
struct MultiEdge {
  int a = 0, b = 0;
  std::int64_t cap = 1;
  double length = 1.0;
  int psi = -1;  // physical edge id backing this cluster edge, -1 if none
};

class Multigraph {
public:
  Multigraph() = default;
  explicit Multigraph(int n) : n_(n), adj_(n) {}

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<MultiEdge>& edges() const { return edges_; }
  const MultiEdge& edge(int id) const { return edges_[id]; }

  int add_edge(int a, int b, std::int64_t cap, double length = 1.0, int psi = -1) {
    if (a == b) throw std::runtime_error("multigraph: self loop");
    if (a < 0 || a >= n_ || b < 0 || b >= n_)
      throw std::runtime_error("multigraph: endpoint out of range");
    int id = static_cast<int>(edges_.size());
    edges_.push_back({a, b, cap, length, psi});
    adj_[a].push_back({b, id});
    adj_[b].push_back({a, id});
    return id;
  }

  // (neighbor, edge id); parallel edges each appear
  const std::vector<std::pair<int, int>>& neighbors(int v) const { return adj_[v]; }

  void set_length(int eid, double length) { edges_[eid].length = length; }

  int other(int eid, int v) const {
    const MultiEdge& e = edges_[eid];
    return e.a == v ? e.b : e.a;
  }

  // Unweighted BFS hop distances; parallel edges act as one adjacency.
  std::vector<int> bfs_distances(int root, const std::vector<char>* allowed_edge = nullptr) const {
    std::vector<int> dist(n_, -1);
    std::queue<int> q;
    dist[root] = 0;
    q.push(root);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (auto [w, eid] : adj_[u]) {
        if (allowed_edge && !(*allowed_edge)[eid]) continue;
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return dist;
  }

  // Connected-component labels, optionally restricted to an edge subset.
  std::vector<int> components(const std::vector<char>* allowed_edge = nullptr) const {
    std::vector<int> comp(n_, -1);
    int c = 0;
    for (int s = 0; s < n_; ++s) {
      if (comp[s] >= 0) continue;
      comp[s] = c;
      std::queue<int> q;
      q.push(s);
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (auto [w, eid] : adj_[u]) {
          if (allowed_edge && !(*allowed_edge)[eid]) continue;
          if (comp[w] < 0) {
            comp[w] = c;
            q.push(w);
          }
        }
      }
      ++c;
    }
    return comp;
  }

  bool connected() const {
    auto comp = components();
    return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
  }

private:
  int n_ = 0;
  std::vector<MultiEdge> edges_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
};

}  // namespace congestflow
