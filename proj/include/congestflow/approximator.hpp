#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "congest.hpp"
#include "graph.hpp"
#include "jtree.hpp"
#include "lsst.hpp"
#include "multigraph.hpp"
#include "rng.hpp"
#include "sparsify.hpp"

namespace congestflow {

struct ApproxParams {
  double eps_sparsify = 0.5;  // per-level size reduction accuracy
  int beta = 0;               // contraction rate; 0 = derive from n
  int stop_threshold = 0;     // switch to the central tail; 0 = derive
  double alpha_cfg = 0.0;     // stretch target; 0 = 4 ceil(log2 n)
  int trees = 0;              // trees per approximator; 0 = ceil(log2 n)
  int max_members = 48;       // hard cap on members per level
};

inline int default_beta(int n) {
  double l = std::log2(static_cast<double>(std::max(n, 2)));
  return std::max(2, static_cast<int>(std::round(std::pow(2.0, std::pow(l, 0.75)))));
}

inline int default_stop_threshold(int n) {
  double l = std::log2(static_cast<double>(std::max(n, 2)));
  return std::max(32, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)) * l)));
}

// One candidate decomposition of the current cluster multigraph.
struct LevelMember {
  SpanningTreeResult tree;
  std::vector<double> tf;
  FSelection sel;
  HGraph H;
  Skeleton sk;
  JTreeLevel jt;
};

// A family of candidate decompositions with sampling weights. Lengths
// evolve multiplicatively so that later members favor edges the earlier
// trees loaded heavily; members stop early once every edge is either
// heavily loaded in some member's tree or moved to some member's core.
struct DistributionLevel {
  std::vector<LevelMember> members;
  std::vector<double> lambda;       // sampling weight per member
  bool covered = false;             // early stop triggered
};

inline LevelMember build_level_member(const Multigraph& cg, int j,
                                      const std::vector<int>& cluster_size, int n_phys,
                                      double alpha_cfg, bool use_removal, Rng rng) {
  LevelMember m;
  m.tree = low_stretch_tree(cg, rng.substream("lsst"), alpha_cfg);
  m.tf = tree_flow(cg, m.tree);
  std::vector<int> removal;
  if (use_removal)
    removal = sample_removal_set(cg, m.tree, cluster_size, n_phys, rng.substream("removal"));
  m.sel = select_F(cg, m.tree, m.tf, j, removal);
  m.H = build_H(cg, m.tree, m.tf, m.sel.F);
  m.sk = skeletonize(cg, m.tree, m.tf, m.sel.F);
  m.jt = build_jtree(cg, m.H, m.sk);
  return m;
}

inline DistributionLevel build_distribution_level(Multigraph& cg, int j,
                                                  const std::vector<int>& cluster_size,
                                                  int n_phys, double alpha_cfg, int s_cap,
                                                  bool use_removal, Rng rng) {
  const int m_edges = cg.edge_count();
  DistributionLevel dl;
  // initial lengths inversely proportional to capacity
  std::int64_t cap_max = 1;
  for (const MultiEdge& e : cg.edges()) cap_max = std::max(cap_max, e.cap);
  std::vector<double> len(m_edges);
  for (int eid = 0; eid < m_edges; ++eid)
    len[eid] = std::max(1.0, std::round(static_cast<double>(cap_max) /
                                        static_cast<double>(cg.edge(eid).cap)));

  std::vector<char> covered(m_edges, 0);
  for (int s = 0; s < s_cap; ++s) {
    for (int eid = 0; eid < m_edges; ++eid) cg.set_length(eid, len[eid]);
    LevelMember mem = build_level_member(cg, j, cluster_size, n_phys, alpha_cfg, use_removal,
                                         rng.substream("member", s));
    const double R = std::max(mem.sel.max_rload, 1e-12);
    // coverage: heavily loaded tree edges, and everything handed to the core
    std::vector<double> rload(m_edges, 0.0);
    for (int v = 0; v < cg.node_count(); ++v) {
      int eid = mem.tree.parent_edge[v];
      if (eid < 0) continue;
      rload[eid] = mem.tf[eid] / static_cast<double>(cg.edge(eid).cap);
      if (rload[eid] >= R / 2.0) covered[eid] = 1;
    }
    for (const auto& ce : mem.jt.core) covered[mem.H.origin[ce.h_edge]] = 1;
    dl.members.push_back(std::move(mem));

    if (std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; })) {
      dl.covered = true;
      break;
    }
    // lengthen loaded edges so the next tree avoids them
    double len_max = 1.0;
    for (int eid = 0; eid < m_edges; ++eid) {
      len[eid] *= std::exp(rload[eid] / (alpha_cfg * R));
      len_max = std::max(len_max, len[eid]);
    }
    const double limit = 4294967296.0;  // keep lengths in word range
    if (len_max > limit)
      for (double& l : len) l = std::max(1.0, l * (limit / len_max));
  }
  dl.lambda.assign(dl.members.size(), 1.0 / static_cast<double>(dl.members.size()));
  return dl;
}

// A rooted tree on the physical nodes assembled level by level: each
// merge hangs a cluster's root below its parent cluster's root, with
// the edge capacity fixed at the level that chose the edge. The edges
// need not exist in the underlying graph.
struct VirtualTree {
  int root = 0;
  std::vector<int> parent;                       // -1 at root
  std::vector<double> cap;                       // cap of (v, parent), 0 at root
  std::vector<int> via;                          // physical edge handle, -1 if virtual
  std::vector<std::vector<int>> level_cluster_of;  // cluster label per node per level
  long rounds = 0;
  int levels = 0;
  bool coverage_warning = false;  // some level hit the member cap uncovered
};

namespace detail {

// Capacity of the underlying graph crossing each (v, parent) cut of the
// assembled tree; the tree routing of every graph edge loads the edge
// with exactly this amount.
inline std::vector<double> phys_tree_crossing(const Graph& g, const VirtualTree& vt) {
  const int n = g.node_count();
  std::vector<int> depth(n, 0), order;
  {
    std::vector<std::vector<int>> ch(n);
    for (int v = 0; v < n; ++v)
      if (vt.parent[v] >= 0) ch[vt.parent[v]].push_back(v);
    order.reserve(n);
    std::vector<int> stack{vt.root};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      for (int c : ch[v]) {
        depth[c] = depth[v] + 1;
        stack.push_back(c);
      }
    }
  }
  std::vector<double> score(n, 0.0);
  for (const Graph::Edge& e : g.edges()) {
    int a = e.u, b = e.v;
    score[a] += static_cast<double>(e.cap);
    score[b] += static_cast<double>(e.cap);
    while (depth[a] > depth[b]) a = vt.parent[a];
    while (depth[b] > depth[a]) b = vt.parent[b];
    while (a != b) {
      a = vt.parent[a];
      b = vt.parent[b];
    }
    score[a] -= 2.0 * static_cast<double>(e.cap);
  }
  std::vector<double> load(score);
  for (int i = n - 1; i >= 0; --i) {
    int v = order[i];
    if (vt.parent[v] >= 0) load[vt.parent[v]] += load[v];
  }
  for (int i = 0; i < n; ++i) load[i] = std::abs(load[i]);
  load[vt.root] = 0.0;
  return load;
}

}  // namespace detail

// Draws one virtual tree: repeatedly sparsify the cluster multigraph,
// build a family of forest-plus-core decompositions, sample one, merge
// its forest components into new clusters, and recurse on the core.
// Below the stop threshold the same construction runs centrally (no
// depth-control removals) until the core is empty. Edge capacities are
// finally raised to at least the exact crossing capacity, so every cut
// of the tree dominates the corresponding cut of the graph.
inline VirtualTree sample_virtual_tree(const Graph& g, Rng rng, const ApproxParams& params = {},
                                       RoundLedger* ledger = nullptr) {
  const int n = g.node_count();
  const int beta = params.beta > 0 ? params.beta : default_beta(n);
  const int stop = params.stop_threshold > 0 ? params.stop_threshold : default_stop_threshold(n);
  const double alpha_cfg =
      params.alpha_cfg > 0.0
          ? params.alpha_cfg
          : 4.0 * std::ceil(std::log2(static_cast<double>(std::max(n, 2))));

  VirtualTree vt;
  vt.parent.assign(n, -1);
  vt.cap.assign(n, 0.0);
  vt.via.assign(n, -1);
  if (n <= 1) return vt;

  Multigraph cg(n);
  for (int eid = 0; eid < g.edge_count(); ++eid) {
    const Graph::Edge& e = g.edge(eid);
    cg.add_edge(e.u, e.v, e.cap, 1.0, eid);
  }
  std::vector<int> leader(n), cluster_size(n, 1), cluster_of(n);
  for (int v = 0; v < n; ++v) leader[v] = cluster_of[v] = v;
  vt.level_cluster_of.push_back(cluster_of);

  for (int level = 0; cg.node_count() > 1; ++level) {
    const int N = cg.node_count();
    Rng lrng = rng.substream("level", level);

    SparsifierOutput sp = sparsify(cg, params.eps_sparsify, lrng.substream("sparsify"));
    Multigraph cur = std::move(sp.graph);
    if (!sp.bypassed) {
      // compensate the sampling loss so cuts still dominate
      const double blow = 1.0 / (1.0 - params.eps_sparsify);
      Multigraph scaled(cur.node_count());
      for (const MultiEdge& e : cur.edges())
        scaled.add_edge(e.a, e.b,
                        std::max<std::int64_t>(
                            1, static_cast<std::int64_t>(std::llround(e.cap * blow))),
                        e.length, e.psi);
      cur = std::move(scaled);
    }

    const bool distributed = N > stop;
    int j = std::clamp(N / (4 * beta), 1, N - 1);
    const int s_cap = std::min(
        params.max_members,
        std::max(1, static_cast<int>(std::ceil(
                        8.0 * beta * std::log2(static_cast<double>(std::max(N, 2)))))));
    DistributionLevel dl = build_distribution_level(cur, j, cluster_size, n, alpha_cfg, s_cap,
                                                    distributed, lrng.substream("dist"));
    if (!dl.covered) vt.coverage_warning = true;
    int pick = static_cast<int>(
        lrng.substream("pick").uniform_int(0, static_cast<int>(dl.members.size()) - 1));
    const LevelMember* mem = &dl.members[pick];

    LevelMember fallback;
    int ncomp = *std::max_element(mem->sk.comp.begin(), mem->sk.comp.end()) + 1;
    if (ncomp == N && N > 1) {
      // removals froze every tree edge; merge the whole tree instead
      fallback = build_level_member(cur, 0, cluster_size, n, alpha_cfg, false,
                                    lrng.substream("fallback"));
      mem = &fallback;
      ncomp = *std::max_element(mem->sk.comp.begin(), mem->sk.comp.end()) + 1;
      if (ncomp == N) throw std::runtime_error("approximator: level failed to contract");
    }

    // hang each non-portal cluster's root below its parent's root
    for (int v = 0; v < N; ++v) {
      int p = mem->sk.parent_node[v];
      if (p < 0) continue;
      int eid = mem->sk.parent_edge[v];
      int child = leader[v];
      vt.parent[child] = leader[p];
      vt.cap[child] = std::max(1.0, static_cast<double>(std::llround(mem->tf[eid])));
      vt.via[child] = cur.edge(eid).psi;
    }

    // relabel clusters by component and rebuild the core multigraph
    std::vector<int> new_leader(ncomp), new_size(ncomp, 0);
    for (int c = 0; c < ncomp; ++c) new_leader[c] = leader[mem->sk.portal_of_comp[c]];
    for (int v = 0; v < N; ++v) new_size[mem->sk.comp[v]] += cluster_size[v];
    for (int x = 0; x < n; ++x) cluster_of[x] = mem->sk.comp[cluster_of[x]];
    Multigraph next(ncomp);
    for (const auto& ce : mem->jt.core)
      next.add_edge(mem->sk.comp[ce.p1], mem->sk.comp[ce.p2], ce.cap, 1.0, ce.psi);
    if (ncomp > 1 && !next.connected())
      throw std::runtime_error("approximator: core multigraph disconnected");

    long level_rounds = mem->tree.rounds +
                        2 * static_cast<long>(std::ceil(std::sqrt(static_cast<double>(n)))) + 1;
    vt.rounds += level_rounds;
    if (ledger) ledger->charge("approximator_level_" + std::to_string(level), level_rounds, 2);

    cg = std::move(next);
    leader = std::move(new_leader);
    cluster_size = std::move(new_size);
    vt.level_cluster_of.push_back(cluster_of);
    ++vt.levels;
  }
  vt.root = leader[0];

  // establish one-sided cut domination exactly
  std::vector<double> crossing = detail::phys_tree_crossing(g, vt);
  for (int v = 0; v < n; ++v)
    if (vt.parent[v] >= 0) vt.cap[v] = std::max(vt.cap[v], crossing[v]);
  return vt;
}

// R has one row per (tree, non-root node): the signed subtree demand
// divided by the tree capacity of the node's parent edge.
struct CongestionApproximator {
  std::vector<VirtualTree> trees;
  double alpha_cfg = 0.0;
  int n = 0;

  int rows() const { return static_cast<int>(trees.size()) * std::max(0, n - 1); }
};

inline CongestionApproximator build_approximator(const Graph& g, Rng rng,
                                                 const ApproxParams& params = {},
                                                 RoundLedger* ledger = nullptr) {
  CongestionApproximator R;
  R.n = g.node_count();
  R.alpha_cfg = params.alpha_cfg > 0.0
                    ? params.alpha_cfg
                    : 4.0 * std::ceil(std::log2(static_cast<double>(std::max(R.n, 2))));
  int k = params.trees > 0
              ? params.trees
              : std::max(1, static_cast<int>(std::ceil(
                                std::log2(static_cast<double>(std::max(R.n, 2))))));
  for (int t = 0; t < k; ++t)
    R.trees.push_back(sample_virtual_tree(g, rng.substream("tree", t), params, ledger));
  return R;
}

namespace detail {

inline std::vector<int> vt_preorder(const VirtualTree& vt) {
  const int n = static_cast<int>(vt.parent.size());
  std::vector<std::vector<int>> ch(n);
  for (int v = 0; v < n; ++v)
    if (vt.parent[v] >= 0) ch[vt.parent[v]].push_back(v);
  std::vector<int> order;
  order.reserve(n);
  std::vector<int> stack{vt.root};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int c : ch[v]) stack.push_back(c);
  }
  return order;
}

}  // namespace detail

// y = R b: row (t, v) is (sum of b over the subtree at v) / cap(v).
// Rows are ordered tree-major, then by node id skipping each root.
inline std::vector<double> apply_R(const CongestionApproximator& R,
                                   const std::vector<double>& b) {
  std::vector<double> y;
  y.reserve(R.rows());
  for (const VirtualTree& vt : R.trees) {
    auto order = detail::vt_preorder(vt);
    std::vector<double> sub(b);
    for (int i = static_cast<int>(order.size()) - 1; i >= 0; --i) {
      int v = order[i];
      if (vt.parent[v] >= 0) sub[vt.parent[v]] += sub[v];
    }
    for (int v = 0; v < R.n; ++v)
      if (vt.parent[v] >= 0) y.push_back(sub[v] / vt.cap[v]);
  }
  return y;
}

// pi = R^T y: each node accumulates, over all trees, the sum of
// y_row / cap along its root path (the adjoint of apply_R).
inline std::vector<double> apply_Rt(const CongestionApproximator& R,
                                    const std::vector<double>& y) {
  std::vector<double> pi(R.n, 0.0);
  std::size_t at = 0;
  for (const VirtualTree& vt : R.trees) {
    std::vector<double> w(R.n, 0.0);  // y / cap per non-root node
    for (int v = 0; v < R.n; ++v)
      if (vt.parent[v] >= 0) w[v] = y[at++] / vt.cap[v];
    auto order = detail::vt_preorder(vt);
    std::vector<double> pref(R.n, 0.0);
    for (int v : order) {
      if (vt.parent[v] >= 0) pref[v] = pref[vt.parent[v]] + w[v];
      pi[v] += pref[v];
    }
  }
  if (at != y.size()) throw std::runtime_error("apply_Rt: row count mismatch");
  return pi;
}

}  // namespace congestflow
