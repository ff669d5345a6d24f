#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "congest.hpp"
#include "graph.hpp"
#include "multigraph.hpp"

namespace congestflow {

// A partition of the physical nodes into leader-rooted, tree-spanned
// clusters, plus cluster-level edges each backed by a physical edge.
struct ClusterGraph {
  const Graph* g = nullptr;

  std::vector<int> cluster_of;   // per physical node
  std::vector<int> leader;       // per cluster
  std::vector<int> tree_parent;  // per physical node, -1 at leaders
  std::vector<int> depth;        // per cluster: tree depth

  struct CEdge {
    int ci = 0, cj = 0;          // incident clusters
    std::int64_t cap = 1;
    double length = 1.0;
    int psi = -1;                // backing physical edge id
  };
  std::vector<CEdge> cedges;

  int cluster_count() const { return static_cast<int>(leader.size()); }

  int max_depth() const {
    int d = 0;
    for (int x : depth) d = std::max(d, x);
    return d;
  }

  std::vector<std::vector<int>> members() const {
    std::vector<std::vector<int>> m(cluster_count());
    for (int v = 0; v < static_cast<int>(cluster_of.size()); ++v)
      m[cluster_of[v]].push_back(v);
    return m;
  }

  nlohmann::json to_json() const {
    auto mem = members();
    nlohmann::json out = nlohmann::json::array();
    for (int c = 0; c < cluster_count(); ++c) {
      nlohmann::json tree_edges = nlohmann::json::array();
      for (int v : mem[c])
        if (tree_parent[v] >= 0) tree_edges.push_back({v, tree_parent[v]});
      out.push_back({{"cluster_id", c},
                     {"leader", leader[c]},
                     {"members", mem[c]},
                     {"tree_edges", tree_edges},
                     {"depth", depth[c]}});
    }
    return out;
  }
};

inline ClusterGraph singleton_cluster_graph(const Graph& g) {
  ClusterGraph cg;
  cg.g = &g;
  int n = g.node_count();
  cg.cluster_of.resize(n);
  cg.leader.resize(n);
  cg.tree_parent.assign(n, -1);
  cg.depth.assign(n, 0);
  for (int v = 0; v < n; ++v) {
    cg.cluster_of[v] = v;
    cg.leader[v] = v;
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto& ed = g.edge(e);
    cg.cedges.push_back({ed.u, ed.v, ed.cap, 1.0, e});
  }
  return cg;
}

// Checks the structural conditions: partition with one leader per
// cluster, spanning in-cluster trees rooted at leaders, cluster edges
// backed by physical edges with one endpoint in each incident cluster,
// and at most one cluster edge per physical node pair per cluster pair.
inline std::vector<std::string> validate(const ClusterGraph& cg) {
  std::vector<std::string> bad;
  const Graph& g = *cg.g;
  const int n = g.node_count();
  const int N = cg.cluster_count();
  if (static_cast<int>(cg.cluster_of.size()) != n) {
    bad.push_back("cluster_of does not cover all nodes");
    return bad;
  }
  std::vector<int> size(N, 0);
  for (int v = 0; v < n; ++v) {
    int c = cg.cluster_of[v];
    if (c < 0 || c >= N) {
      bad.push_back("node " + std::to_string(v) + " has invalid cluster id");
      return bad;
    }
    ++size[c];
  }
  for (int c = 0; c < N; ++c) {
    if (size[c] == 0) bad.push_back("cluster " + std::to_string(c) + " is empty");
    int l = cg.leader[c];
    if (l < 0 || l >= n || cg.cluster_of[l] != c)
      bad.push_back("cluster " + std::to_string(c) + " leader not a member");
  }
  // leader uniqueness: a node may lead at most its own cluster
  std::set<int> leaders(cg.leader.begin(), cg.leader.end());
  if (static_cast<int>(leaders.size()) != N)
    bad.push_back("a node leads more than one cluster");
  // trees: parent edge must be a physical edge inside the cluster;
  // every node must reach its leader within the recorded depth
  std::vector<std::set<int>> phys(n);
  for (int e = 0; e < g.edge_count(); ++e) {
    phys[g.edge(e).u].insert(g.edge(e).v);
    phys[g.edge(e).v].insert(g.edge(e).u);
  }
  for (int v = 0; v < n; ++v) {
    int c = cg.cluster_of[v];
    int p = cg.tree_parent[v];
    if (v == cg.leader[c]) {
      if (p != -1) bad.push_back("leader " + std::to_string(v) + " has a parent");
      continue;
    }
    if (p < 0) {
      bad.push_back("non-leader " + std::to_string(v) + " has no parent");
      continue;
    }
    if (cg.cluster_of[p] != c)
      bad.push_back("parent of " + std::to_string(v) + " is outside its cluster");
    if (!phys[v].count(p))
      bad.push_back("tree edge (" + std::to_string(v) + "," + std::to_string(p) +
                    ") is not a physical edge");
  }
  for (int v = 0; v < n; ++v) {
    int c = cg.cluster_of[v];
    int steps = 0, w = v;
    bool ok = false;
    while (steps <= n) {
      if (w == cg.leader[c]) {
        ok = true;
        break;
      }
      w = cg.tree_parent[w];
      if (w < 0) break;
      ++steps;
    }
    if (!ok)
      bad.push_back("node " + std::to_string(v) + " does not reach its leader");
    else if (steps > cg.depth[c])
      bad.push_back("cluster " + std::to_string(c) + " depth " +
                    std::to_string(cg.depth[c]) + " understates node " + std::to_string(v));
  }
  // cluster edges
  std::set<std::tuple<int, int, int, int>> seen;  // (ci, cj, u, v) normalized
  for (std::size_t k = 0; k < cg.cedges.size(); ++k) {
    const auto& ce = cg.cedges[k];
    if (ce.psi < 0 || ce.psi >= g.edge_count()) {
      bad.push_back("cluster edge " + std::to_string(k) + " has invalid psi");
      continue;
    }
    const auto& pe = g.edge(ce.psi);
    int cu = cg.cluster_of[pe.u], cv = cg.cluster_of[pe.v];
    bool match = (cu == ce.ci && cv == ce.cj) || (cu == ce.cj && cv == ce.ci);
    if (!match || ce.ci == ce.cj) {
      bad.push_back("cluster edge " + std::to_string(k) +
                    " psi endpoints do not lie one in each incident cluster");
      continue;
    }
    auto [lo, hi] = std::minmax(ce.ci, ce.cj);
    if (!seen.insert({lo, hi, pe.u, pe.v}).second)
      bad.push_back("duplicate cluster edge over physical pair (" +
                    std::to_string(pe.u) + "," + std::to_string(pe.v) + ")");
  }
  return bad;
}

// One vertex per cluster; cluster edges become multigraph edges.
inline Multigraph contract(const ClusterGraph& cg) {
  Multigraph mg(cg.cluster_count());
  for (const auto& ce : cg.cedges)
    if (ce.ci != ce.cj) mg.add_edge(ce.ci, ce.cj, ce.cap, ce.length, ce.psi);
  return mg;
}

// A round-stepped cluster-level program. The cluster's leader holds the
// state; each round it may broadcast one message over every incident
// cluster edge. Inbound messages are combined by a declared aggregator
// (so each step is emulable by broadcast/convergecast on cluster trees).
enum class AggOp { Sum, Min, Max };

class ClusterProtocol {
public:
  virtual ~ClusterProtocol() = default;
  virtual void init(const Multigraph& mg) = 0;
  virtual AggOp agg_op() const = 0;
  // broadcast of cluster c this round; empty = silent
  virtual Message send(const Multigraph& mg, int c) = 0;
  // agg: op-combined inbound (empty if nothing arrived); count: #messages
  virtual void receive(const Multigraph& mg, int c, const Message& agg, int count) = 0;
  virtual bool done(int c) const = 0;
};

namespace detail {

inline Message combine(AggOp op, const Message& x, const Message& y) {
  if (x.empty()) return y;
  if (y.empty()) return x;
  switch (op) {
    case AggOp::Sum: {
      if (x.size() != y.size())
        throw std::runtime_error("sum aggregation over unequal message sizes");
      Message r(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
      return r;
    }
    case AggOp::Min:
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end()) ? x : y;
    case AggOp::Max:
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end()) ? y : x;
  }
  return x;
}

// One synchronous cluster round on the contracted multigraph. Returns
// true if any message was exchanged.
inline bool cluster_round(const Multigraph& mg, ClusterProtocol& proto, int* max_words) {
  const int N = mg.node_count();
  std::vector<Message> out(N);
  bool any = false;
  for (int c = 0; c < N; ++c) {
    out[c] = proto.send(mg, c);
    if (!out[c].empty()) any = true;
  }
  if (!any) return false;
  std::vector<Message> agg(N);
  std::vector<int> cnt(N, 0);
  AggOp op = proto.agg_op();
  for (int eid = 0; eid < mg.edge_count(); ++eid) {
    const MultiEdge& e = mg.edge(eid);
    for (auto [from, to] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
      if (out[from].empty()) continue;
      agg[to] = combine(op, agg[to], out[from]);
      ++cnt[to];
      if (max_words) *max_words = std::max(*max_words, static_cast<int>(out[from].size()));
    }
  }
  for (int c = 0; c < N; ++c) proto.receive(mg, c, agg[c], cnt[c]);
  return true;
}

}  // namespace detail

// Reference execution directly on contract(cg); returns cluster rounds.
inline long run_cluster_protocol_direct(const ClusterGraph& cg, ClusterProtocol& proto,
                                        long round_cap = 10000000) {
  Multigraph mg = contract(cg);
  proto.init(mg);
  long rounds = 0;
  while (detail::cluster_round(mg, proto, nullptr)) {
    ++rounds;
    if (rounds > round_cap) throw std::runtime_error("cluster round cap exceeded");
  }
  for (int c = 0; c < mg.node_count(); ++c)
    if (!proto.done(c)) throw std::runtime_error("cluster protocol deadlock");
  return rounds;
}

// Simulates the cluster protocol on the physical network. Each cluster
// round is emulated by a broadcast down the cluster tree, one exchange
// over the backing physical edges, and an aggregating convergecast back
// up; clusters larger than ceil(sqrt(n)) route through a global BFS tree
// pipeline instead of their own (possibly deep) trees. Outputs equal the
// direct execution; the ledger charges the per-round emulation cost.
inline long simulate_on_network(const ClusterGraph& cg, ClusterProtocol& proto,
                                RoundLedger& ledger, long round_cap = 10000000) {
  const Graph& g = *cg.g;
  const int n = g.node_count();
  Multigraph mg = contract(cg);
  const int N = mg.node_count();
  proto.init(mg);

  const int large_threshold = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  int max_depth_small = 0, n_large = 0;
  auto mem = cg.members();
  for (int c = 0; c < N; ++c) {
    if (static_cast<int>(mem[c].size()) > large_threshold)
      ++n_large;
    else
      max_depth_small = std::max(max_depth_small, cg.depth[c]);
  }
  const int D = (n_large > 0) ? g.diameter() : 0;

  // per cluster edge: the physical endpoint inside each incident cluster
  struct Port {
    int node_in_ci, node_in_cj;
  };
  std::vector<Port> ports(mg.edge_count());
  for (int eid = 0; eid < mg.edge_count(); ++eid) {
    const MultiEdge& e = mg.edge(eid);
    const auto& pe = g.edge(e.psi);
    if (cg.cluster_of[pe.u] == e.a)
      ports[eid] = {pe.u, pe.v};
    else
      ports[eid] = {pe.v, pe.u};
  }

  long cluster_rounds = 0;
  AggOp op = proto.agg_op();
  while (true) {
    // leader broadcasts: after the downcast every member of cluster c
    // holds out[c]; boundary nodes then push it over their psi edges
    std::vector<Message> out(N);
    bool any = false;
    for (int c = 0; c < N; ++c) {
      out[c] = proto.send(mg, c);
      if (!out[c].empty()) any = true;
    }
    if (!any) break;

    // physical exchange: per cluster edge, the boundary node of the
    // sending side hands the message to the other side's boundary node
    std::vector<std::vector<Message>> arrived(N);  // at boundary nodes, per cluster
    int max_words = 0;
    for (int eid = 0; eid < mg.edge_count(); ++eid) {
      const MultiEdge& e = mg.edge(eid);
      if (!out[e.a].empty()) {
        arrived[e.b].push_back(out[e.a]);
        max_words = std::max(max_words, static_cast<int>(out[e.a].size()));
      }
      if (!out[e.b].empty()) {
        arrived[e.a].push_back(out[e.b]);
        max_words = std::max(max_words, static_cast<int>(out[e.b].size()));
      }
    }
    ledger.note_message(max_words);

    // convergecast: boundary nodes' inbound is op-combined on the way
    // to the leader; op associativity+commutativity makes the physical
    // combine order immaterial, so combining in arrival order is exact
    for (int c = 0; c < N; ++c) {
      Message agg;
      for (const Message& m : arrived[c]) agg = detail::combine(op, agg, m);
      proto.receive(mg, c, agg, static_cast<int>(arrived[c].size()));
    }

    // charge: down + up the small-cluster trees, the BFS-tree pipeline
    // for large clusters, and one round for the psi-edge exchange
    long charge = 2L * max_depth_small + 1;
    if (n_large > 0) charge += 2L * (D + n_large);
    ledger.charge("simulate_on_network/round", charge, max_words);

    ++cluster_rounds;
    if (cluster_rounds > round_cap)
      throw std::runtime_error("cluster round cap exceeded");
  }
  for (int c = 0; c < N; ++c)
    if (!proto.done(c)) throw std::runtime_error("cluster protocol deadlock");
  return cluster_rounds;
}

}  // namespace congestflow
