#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace congestflow {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Undirected capacitated graph with a fixed edge orientation u -> v,
// u < v. The top level is simple; parallel input edges are merged by
// capacity summation. Immutable after construction.
class Graph {
public:
  struct Edge {
    int u = 0, v = 0;        // oriented u -> v, u < v
    std::int64_t cap = 0;
  };

  Graph() = default;

  // edges given as (u, v, cap); merges duplicates, validates
  // connectivity and the capacity bound (default n^4).
  static Graph build(int n, const std::vector<std::tuple<int, int, std::int64_t>>& input,
                     std::int64_t cap_bound = -1, std::vector<std::string>* warnings = nullptr) {
    if (n <= 0) throw GraphError("graph must have at least one node");
    if (cap_bound < 0) {
      double b = std::pow(static_cast<double>(std::max(n, 2)), 4.0);
      cap_bound = static_cast<std::int64_t>(std::min(b, 9.0e18));
    }
    std::map<std::pair<int, int>, std::int64_t> merged;
    for (const auto& [a, b, cap] : input) {
      if (a < 0 || a >= n || b < 0 || b >= n)
        throw GraphError("edge endpoint out of range");
      if (a == b) throw GraphError("self loop not allowed");
      if (cap < 1) throw GraphError("edge capacity must be >= 1");
      auto key = std::minmax(a, b);
      auto [it, fresh] = merged.emplace(key, 0);
      if (!fresh && warnings)
        warnings->push_back("duplicate edge {" + std::to_string(key.first) + "," +
                            std::to_string(key.second) + "} merged");
      it->second += cap;
    }
    Graph g;
    g.n_ = n;
    for (const auto& [key, cap] : merged) {
      if (cap > cap_bound)
        throw GraphError("capacity " + std::to_string(cap) + " exceeds bound " +
                         std::to_string(cap_bound));
      g.edges_.push_back({key.first, key.second, cap});
    }
    g.build_adjacency();
    if (!g.connected()) throw GraphError("graph is not connected");
    return g;
  }

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int id) const { return edges_[id]; }

  // (neighbor, edge id) pairs
  const std::vector<std::pair<int, int>>& neighbors(int v) const { return adj_[v]; }

  int source = -1;  // optional s/t carried by the input format
  int sink = -1;

  // Bf: excess per node for an unconstrained flow on the fixed orientation.
  std::vector<double> excess(const std::vector<double>& flow) const {
    if (flow.size() != edges_.size())
      throw GraphError("flow dimension mismatch");
    std::vector<double> ex(n_, 0.0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      ex[edges_[e].v] += flow[e];
      ex[edges_[e].u] -= flow[e];
    }
    return ex;
  }

  // max_e |f_e| / cap(e)
  double congestion(const std::vector<double>& flow) const {
    if (flow.size() != edges_.size())
      throw GraphError("flow dimension mismatch");
    double c = 0.0;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      c = std::max(c, std::abs(flow[e]) / static_cast<double>(edges_[e].cap));
    return c;
  }

  // total capacity crossing the cut (s, V \ s); in_s is an indicator per node
  double cut_capacity(const std::vector<char>& in_s) const {
    if (static_cast<int>(in_s.size()) != n_)
      throw GraphError("cut indicator dimension mismatch");
    int count = 0;
    for (char c : in_s) count += (c != 0);
    if (count == 0 || count == n_)
      throw GraphError("cut must be a proper nonempty subset");
    double total = 0.0;
    for (const Edge& e : edges_)
      if (in_s[e.u] != in_s[e.v]) total += static_cast<double>(e.cap);
    return total;
  }

  std::vector<int> bfs_distances(int root) const {
    std::vector<int> dist(n_, -1);
    std::queue<int> q;
    dist[root] = 0;
    q.push(root);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (auto [w, eid] : adj_[u])
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
    }
    return dist;
  }

  int diameter() const {  // exact hop diameter, fine at desk scale
    int d = 0;
    for (int v = 0; v < n_; ++v)
      for (int x : bfs_distances(v)) d = std::max(d, x);
    return d;
  }

private:
  void build_adjacency() {
    adj_.assign(n_, {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      adj_[edges_[e].u].push_back({edges_[e].v, static_cast<int>(e)});
      adj_[edges_[e].v].push_back({edges_[e].u, static_cast<int>(e)});
    }
  }

  bool connected() const {
    auto dist = bfs_distances(0);
    return std::all_of(dist.begin(), dist.end(), [](int d) { return d >= 0; });
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
};

// Demand vectors must be balanced: sum b_v = 0 up to 1e-9 * ||b||_1.
inline void check_balanced(const std::vector<double>& b) {
  double sum = 0.0, l1 = 0.0;
  for (double x : b) {
    sum += x;
    l1 += std::abs(x);
  }
  if (std::abs(sum) > 1e-9 * std::max(l1, 1.0))
    throw GraphError("demand vector is not balanced");
}

}  // namespace congestflow
