#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "lsst.hpp"
#include "multigraph.hpp"
#include "rng.hpp"

namespace congestflow {

namespace detail {

struct RootedIndex {
  std::vector<int> order;   // preorder
  std::vector<int> tin, tout;
  std::vector<int> depth;

  bool in_subtree(int x, int c) const { return tin[c] <= tin[x] && tin[x] < tout[c]; }
};

inline RootedIndex index_tree(const Multigraph& g, const SpanningTreeResult& tree) {
  const int N = g.node_count();
  RootedIndex ix;
  ix.tin.assign(N, -1);
  ix.tout.assign(N, -1);
  ix.depth.assign(N, 0);
  std::vector<std::vector<int>> children(N);
  for (int v = 0; v < N; ++v)
    if (tree.parent_node[v] >= 0) children[tree.parent_node[v]].push_back(v);
  int timer = 0;
  // iterative DFS for preorder intervals
  std::vector<std::pair<int, int>> stack{{tree.root, 0}};
  while (!stack.empty()) {
    auto& [v, k] = stack.back();
    if (k == 0) {
      ix.tin[v] = timer++;
      ix.order.push_back(v);
    }
    if (k < static_cast<int>(children[v].size())) {
      int c = children[v][k++];
      ix.depth[c] = ix.depth[v] + 1;
      stack.push_back({c, 0});
    } else {
      ix.tout[v] = timer;
      stack.pop_back();
    }
  }
  return ix;
}

inline int lca(const SpanningTreeResult& tree, const RootedIndex& ix, int a, int b) {
  while (ix.depth[a] > ix.depth[b]) a = tree.parent_node[a];
  while (ix.depth[b] > ix.depth[a]) b = tree.parent_node[b];
  while (a != b) {
    a = tree.parent_node[a];
    b = tree.parent_node[b];
  }
  return a;
}

}  // namespace detail

// |f'| per multigraph edge id (nonzero only on tree edges): capacity
// crossing the partition induced by removing the tree edge, i.e. the
// total commodity routed over it when every edge routes its capacity
// along its tree path. Computed by one subtree aggregation of +/-
// labeled contributions.
inline std::vector<double> tree_flow(const Multigraph& g, const SpanningTreeResult& tree) {
  const int N = g.node_count();
  auto ix = detail::index_tree(g, tree);
  std::vector<double> score(N, 0.0);
  for (const MultiEdge& e : g.edges()) {
    if (e.a == e.b) continue;
    double cap = static_cast<double>(e.cap);
    score[e.a] += cap;
    score[e.b] += cap;
    score[detail::lca(tree, ix, e.a, e.b)] -= 2.0 * cap;
  }
  // subtree sums in reverse preorder
  std::vector<double> sub(score);
  for (int i = N - 1; i >= 0; --i) {
    int v = ix.order[i];
    int p = tree.parent_node[v];
    if (p >= 0) sub[p] += sub[v];
  }
  std::vector<double> f(g.edge_count(), 0.0);
  for (int v = 0; v < N; ++v)
    if (tree.parent_edge[v] >= 0) f[tree.parent_edge[v]] = sub[v];
  return f;
}

// Same quantity via the three-term component decomposition: with C the
// component (under comp labels) of the child endpoint c,
//   f = f1 + f2 - f3 where
//   f1 counts capacity with exactly one endpoint in subtree(c) \ C,
//   f2 counts capacity leaving subtree(c) from subtree(c) ∩ C,
//   f3 counts capacity between subtree(c) ∩ C and subtree(c) \ C.
// Must agree with tree_flow exactly.
inline std::vector<double> tree_flow_decomposed(const Multigraph& g,
                                                const SpanningTreeResult& tree,
                                                const std::vector<int>& comp) {
  const int N = g.node_count();
  auto ix = detail::index_tree(g, tree);
  std::vector<double> f(g.edge_count(), 0.0);
  for (int v = 0; v < N; ++v) {
    int eid = tree.parent_edge[v];
    if (eid < 0) continue;
    int C = comp[v];
    double f1 = 0.0, f2 = 0.0, f3 = 0.0;
    for (const MultiEdge& e : g.edges()) {
      double cap = static_cast<double>(e.cap);
      bool a_in = ix.in_subtree(e.a, v), b_in = ix.in_subtree(e.b, v);
      bool a_inC = a_in && comp[e.a] == C, b_inC = b_in && comp[e.b] == C;
      bool a_exC = a_in && comp[e.a] != C, b_exC = b_in && comp[e.b] != C;
      if (a_exC != b_exC) f1 += cap;
      if ((a_inC && !b_in) || (b_inC && !a_in)) f2 += cap;
      if ((a_inC && b_exC) || (b_inC && a_exC)) f3 += cap;
    }
    f[eid] = f1 + f2 - f3;
  }
  return f;
}

// Depth-control sampling: each non-root tree edge joins the removal
// set independently with probability min(1, |child cluster| / sqrt(n)),
// where n is the physical network size.
inline std::vector<int> sample_removal_set(const Multigraph& g, const SpanningTreeResult& tree,
                                           const std::vector<int>& cluster_size, int n_phys,
                                           Rng rng) {
  std::vector<int> removal;
  const double sq = std::sqrt(static_cast<double>(std::max(n_phys, 1)));
  for (int v = 0; v < g.node_count(); ++v) {
    int eid = tree.parent_edge[v];
    if (eid < 0) continue;
    double q = std::min(1.0, static_cast<double>(cluster_size[v]) / sq);
    if (rng.substream("edge", eid).bernoulli(q)) removal.push_back(eid);
  }
  return removal;
}

struct FSelection {
  std::vector<int> F;       // F' ∪ R, deduplicated tree edge ids
  std::vector<int> Fprime;  // high-load classes below i0
  int i0 = 1;
  double max_rload = 0.0;
};

// Splits the tree edges into relative-load classes (R/2^i, R/2^{i-1}]
// and picks the smallest class index i0 whose class holds at least
// j / ceil(log2(maxload+1)) edges while the union of the heavier
// classes stays within j; F' is everything heavier than R/2^{i0-1}.
inline FSelection select_F(const Multigraph& g, const SpanningTreeResult& tree,
                           const std::vector<double>& tf, int j,
                           const std::vector<int>& removal) {
  std::vector<int> tree_edges;
  for (int v = 0; v < g.node_count(); ++v)
    if (tree.parent_edge[v] >= 0) tree_edges.push_back(tree.parent_edge[v]);
  for (int eid : removal) {
    bool in_tree = std::find(tree_edges.begin(), tree_edges.end(), eid) != tree_edges.end();
    if (!in_tree) throw std::runtime_error("removal set contains a non-tree edge");
  }
  if (j < 0 || j > static_cast<int>(tree_edges.size()))
    throw std::runtime_error("select_F: j out of range");

  FSelection sel;
  double R = 0.0;
  std::vector<double> rload(g.edge_count(), 0.0);
  for (int eid : tree_edges) {
    rload[eid] = tf[eid] / static_cast<double>(g.edge(eid).cap);
    R = std::max(R, rload[eid]);
  }
  sel.max_rload = R;
  const int i_max = std::max(1, static_cast<int>(std::ceil(std::log2(R + 1.0))));
  // class of an edge: smallest i >= 1 with rload > R / 2^i
  auto cls = [&](int eid) {
    for (int i = 1; i < i_max; ++i)
      if (rload[eid] > R / std::pow(2.0, i)) return i;
    return i_max;
  };
  std::vector<std::vector<int>> classes(i_max + 1);
  for (int eid : tree_edges) classes[cls(eid)].push_back(eid);

  const double need = static_cast<double>(j) / i_max;
  int i0 = 1;
  std::size_t cum = 0;
  for (int i = 1; i <= i_max; ++i) {
    if (cum <= static_cast<std::size_t>(j) &&
        static_cast<double>(classes[i].size()) >= need) {
      i0 = i;
      break;
    }
    cum += classes[i].size();
    i0 = i;  // degenerate fall-through keeps the last feasible index
  }
  sel.i0 = i0;
  for (int eid : tree_edges)
    if (rload[eid] > R / std::pow(2.0, i0 - 1) + 1e-12) sel.Fprime.push_back(eid);

  std::vector<char> in_f(g.edge_count(), 0);
  for (int eid : sel.Fprime) in_f[eid] = 1;
  for (int eid : removal) in_f[eid] = 1;
  for (int eid : tree_edges)
    if (in_f[eid]) sel.F.push_back(eid);
  return sel;
}

struct HGraph {
  Multigraph h;
  std::vector<int> origin;     // per H edge: source multigraph edge id
  std::vector<char> from_tree; // per H edge: carries the tree capacity
  std::vector<int> comp;       // components of tree \ F
};

// Keeps the forest tree \ F at tree capacities and re-adds, at their
// original capacities, all edges whose endpoints lie in different
// forest components. The input graph 1-embeds into the result.
inline HGraph build_H(const Multigraph& g, const SpanningTreeResult& tree,
                      const std::vector<double>& tf, const std::vector<int>& F) {
  const int N = g.node_count();
  std::vector<char> removed(g.edge_count(), 0);
  for (int eid : F) removed[eid] = 1;
  std::vector<char> forest(g.edge_count(), 0);
  for (int v = 0; v < N; ++v) {
    int eid = tree.parent_edge[v];
    if (eid >= 0 && !removed[eid]) forest[eid] = 1;
  }
  HGraph out;
  out.h = Multigraph(N);
  out.comp = g.components(&forest);
  for (int eid = 0; eid < g.edge_count(); ++eid) {
    const MultiEdge& e = g.edge(eid);
    if (forest[eid]) {
      std::int64_t cap = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(tf[eid])));
      out.h.add_edge(e.a, e.b, cap, e.length, e.psi);
      out.origin.push_back(eid);
      out.from_tree.push_back(1);
    } else if (out.comp[e.a] != out.comp[e.b]) {
      out.h.add_edge(e.a, e.b, e.cap, e.length, e.psi);
      out.origin.push_back(eid);
      out.from_tree.push_back(0);
    }
  }
  return out;
}

struct Skeleton {
  std::vector<char> is_portal;       // per vertex
  std::vector<char> is_primary;
  std::vector<char> in_skeleton;     // survived the pruning
  std::vector<int> D;                // path edges moved to the core (tree edge ids)
  std::vector<std::vector<int>> path_of_D;  // skeleton path (edge ids) per D entry
  std::vector<int> comp;             // components of tree \ (F ∪ D)
  std::vector<int> portal_of_comp;   // unique portal (or root) per component
  std::vector<int> parent_node;      // forest orientation toward the portal
  std::vector<int> parent_edge;
  int portal_count = 0;
};

// Portals and path contraction on the forest tree \ F: primary portals
// are F's endpoints, degree-1 non-portals are pruned (portals never
// are), remaining non-portal vertices of degree > 2 become secondary
// portals, and each portal-free skeleton path gives up its minimum-
// capacity edge (ties by id) to the core. The surviving forest splits
// into components holding exactly one portal each, rooted there.
inline Skeleton skeletonize(const Multigraph& g, const SpanningTreeResult& tree,
                            const std::vector<double>& tf, const std::vector<int>& F) {
  const int N = g.node_count();
  Skeleton sk;
  sk.is_portal.assign(N, 0);
  sk.is_primary.assign(N, 0);
  std::vector<char> removed(g.edge_count(), 0);
  for (int eid : F) removed[eid] = 1;
  std::vector<char> forest(g.edge_count(), 0);
  for (int v = 0; v < N; ++v) {
    int eid = tree.parent_edge[v];
    if (eid >= 0 && !removed[eid]) forest[eid] = 1;
  }
  for (int eid : F) {
    sk.is_portal[g.edge(eid).a] = sk.is_primary[g.edge(eid).a] = 1;
    sk.is_portal[g.edge(eid).b] = sk.is_primary[g.edge(eid).b] = 1;
  }

  // forest adjacency and iterative pruning
  std::vector<std::vector<std::pair<int, int>>> fadj(N);
  for (int eid = 0; eid < g.edge_count(); ++eid)
    if (forest[eid]) {
      fadj[g.edge(eid).a].push_back({g.edge(eid).b, eid});
      fadj[g.edge(eid).b].push_back({g.edge(eid).a, eid});
    }
  std::vector<int> deg(N);
  for (int v = 0; v < N; ++v) deg[v] = static_cast<int>(fadj[v].size());
  sk.in_skeleton.assign(N, 1);
  std::queue<int> q;
  for (int v = 0; v < N; ++v)
    if (!sk.is_portal[v] && deg[v] <= 1) q.push(v);
  std::vector<char> alive_edge = forest;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    if (!sk.in_skeleton[v]) continue;
    sk.in_skeleton[v] = 0;
    for (auto [w, eid] : fadj[v]) {
      if (!alive_edge[eid] || !sk.in_skeleton[w]) continue;
      alive_edge[eid] = 0;
      if (--deg[w] <= 1 && !sk.is_portal[w]) q.push(w);
    }
  }
  for (int v = 0; v < N; ++v)
    if (sk.in_skeleton[v] && !sk.is_portal[v] && deg[v] > 2) sk.is_portal[v] = 1;

  // walk portal-free skeleton paths; each gives its min-capacity edge
  auto skel_cap = [&](int eid) {
    // capacity in H: tree edges carry the tree flow value
    return std::max(1.0, std::llround(tf[eid]) * 1.0);
  };
  std::vector<char> edge_done(g.edge_count(), 0);
  for (int p = 0; p < N; ++p) {
    if (!sk.is_portal[p] || !sk.in_skeleton[p]) continue;
    for (auto [w0, eid0] : fadj[p]) {
      if (!alive_edge[eid0] || edge_done[eid0] || !sk.in_skeleton[w0]) continue;
      // traverse the path starting with (p, w0)
      std::vector<int> path{eid0};
      int prev = p, cur = w0;
      while (!sk.is_portal[cur]) {
        int nxt = -1, neid = -1;
        for (auto [w, eid] : fadj[cur]) {
          if (!alive_edge[eid] || w == prev || !sk.in_skeleton[w]) continue;
          nxt = w;
          neid = eid;
          break;
        }
        if (nxt < 0) break;  // dead end: pruned stub, not a portal path
        path.push_back(neid);
        prev = cur;
        cur = nxt;
      }
      for (int eid : path) edge_done[eid] = 1;
      if (!sk.is_portal[cur]) continue;  // not a portal-to-portal path
      int best = path[0];
      for (int eid : path)
        if (skel_cap(eid) < skel_cap(best) || (skel_cap(eid) == skel_cap(best) && eid < best))
          best = eid;
      sk.D.push_back(best);
      sk.path_of_D.push_back(path);
    }
  }

  // components of tree \ (F ∪ D), rooted at their unique portals
  std::vector<char> final_forest = forest;
  for (int eid : sk.D) final_forest[eid] = 0;
  sk.comp = g.components(&final_forest);
  int ncomp = *std::max_element(sk.comp.begin(), sk.comp.end()) + 1;
  sk.portal_of_comp.assign(ncomp, -1);
  for (int v = 0; v < N; ++v)
    if (sk.is_portal[v]) {
      if (sk.portal_of_comp[sk.comp[v]] >= 0)
        throw std::runtime_error("skeletonize: component with two portals");
      sk.portal_of_comp[sk.comp[v]] = v;
    }
  // portal-less components (only when F is empty): root at the
  // component vertex of smallest id
  for (int v = 0; v < N; ++v)
    if (sk.portal_of_comp[sk.comp[v]] < 0) sk.portal_of_comp[sk.comp[v]] = v;
  sk.parent_node.assign(N, -1);
  sk.parent_edge.assign(N, -1);
  for (int c = 0; c < ncomp; ++c) {
    int root = sk.portal_of_comp[c];
    std::queue<int> bq;
    bq.push(root);
    std::vector<char> vis(N, 0);
    vis[root] = 1;
    while (!bq.empty()) {
      int u = bq.front();
      bq.pop();
      for (auto [w, eid] : fadj[u]) {
        if (!final_forest[eid] || vis[w]) continue;
        vis[w] = 1;
        sk.parent_node[w] = u;
        sk.parent_edge[w] = eid;
        bq.push(w);
      }
    }
  }
  sk.portal_count = 0;
  for (int v = 0; v < N; ++v) sk.portal_count += sk.is_portal[v];
  return sk;
}

struct JTreeLevel {
  std::vector<int> forest_edges;  // tree edge ids surviving into the forest
  struct CoreEdge {
    int p1 = 0, p2 = 0;          // portal vertices
    std::int64_t cap = 1;
    int psi = -1;                 // physical edge backing it
    int h_edge = -1;              // index into the H edge list
  };
  std::vector<CoreEdge> core;
};

// Assembles the j-tree: the forest tree \ (F ∪ D) plus one portal-to-
// portal core edge per H edge crossing forest components, carrying the
// H capacity and the same physical edge.
inline JTreeLevel build_jtree(const Multigraph& g, const HGraph& H, const Skeleton& sk) {
  JTreeLevel j;
  std::vector<char> in_D(g.edge_count(), 0);
  for (int eid : sk.D) in_D[eid] = 1;
  for (int he = 0; he < H.h.edge_count(); ++he) {
    const MultiEdge& e = H.h.edge(he);
    int ca = sk.comp[e.a], cb = sk.comp[e.b];
    if (ca == cb) {
      if (!H.from_tree[he]) throw std::runtime_error("non-tree H edge inside a component");
      j.forest_edges.push_back(H.origin[he]);
    } else {
      j.core.push_back({sk.portal_of_comp[ca], sk.portal_of_comp[cb], e.cap, e.psi, he});
    }
  }
  return j;
}

// Explicit routings from the two embeddability arguments; returns the
// maximum relative load in each direction (H into J, J into H).
inline std::pair<double, double> verify_embeddings(const Multigraph& g,
                                                   const SpanningTreeResult& tree,
                                                   const std::vector<double>& tf,
                                                   const HGraph& H, const Skeleton& sk,
                                                   const JTreeLevel& j) {
  // capacities in J: forest edges by H capacity, core edges as built
  std::vector<double> j_forest_load(g.edge_count(), 0.0);
  std::vector<double> j_core_load(j.core.size(), 0.0);
  std::vector<double> h_load(H.h.edge_count(), 0.0);

  std::vector<int> core_of_h(H.h.edge_count(), -1);
  for (std::size_t k = 0; k < j.core.size(); ++k) core_of_h[j.core[k].h_edge] = static_cast<int>(k);
  std::vector<double> h_cap(H.h.edge_count());
  for (int he = 0; he < H.h.edge_count(); ++he)
    h_cap[he] = static_cast<double>(H.h.edge(he).cap);
  std::vector<int> h_of_origin(g.edge_count(), -1);
  for (int he = 0; he < H.h.edge_count(); ++he) h_of_origin[H.origin[he]] = he;

  auto walk_to_portal = [&](int v, double amount, std::vector<double>& load) {
    for (int w = v; sk.parent_edge[w] >= 0; w = sk.parent_node[w])
      load[sk.parent_edge[w]] += amount;
  };

  std::vector<char> in_D(g.edge_count(), 0);
  for (int eid : sk.D) in_D[eid] = 1;

  // H into J
  for (int he = 0; he < H.h.edge_count(); ++he) {
    const MultiEdge& e = H.h.edge(he);
    double cap = h_cap[he];
    int core_idx = core_of_h[he];
    if (core_idx < 0) {
      // surviving forest edge: route over itself
      j_forest_load[H.origin[he]] += cap;
      continue;
    }
    if (H.from_tree[he]) {
      // a D edge: along its skeleton path (minus itself) plus its core edge
      int d_idx = -1;
      for (std::size_t k = 0; k < sk.D.size(); ++k)
        if (sk.D[k] == H.origin[he]) d_idx = static_cast<int>(k);
      if (d_idx < 0) throw std::runtime_error("tree-origin core edge is not in D");
      for (int eid : sk.path_of_D[d_idx])
        if (eid != H.origin[he]) j_forest_load[eid] += cap;
      j_core_load[core_idx] += cap;
    } else {
      // cross edge: up to the portal on both sides plus its core edge
      walk_to_portal(e.a, cap, j_forest_load);
      walk_to_portal(e.b, cap, j_forest_load);
      j_core_load[core_idx] += cap;
    }
  }
  double h_into_j = 0.0;
  for (int eid : j.forest_edges) {
    int he = h_of_origin[eid];
    h_into_j = std::max(h_into_j, j_forest_load[eid] / h_cap[he]);
  }
  for (std::size_t k = 0; k < j.core.size(); ++k)
    h_into_j = std::max(h_into_j, j_core_load[k] / static_cast<double>(j.core[k].cap));

  // J into H
  for (int eid : j.forest_edges) h_load[h_of_origin[eid]] += h_cap[h_of_origin[eid]];
  for (std::size_t k = 0; k < j.core.size(); ++k) {
    const auto& ce = j.core[k];
    double cap = static_cast<double>(ce.cap);
    int he = ce.h_edge;
    if (H.from_tree[he]) {
      // D-core edge: along the full skeleton path it was cut from
      int d_idx = -1;
      for (std::size_t kk = 0; kk < sk.D.size(); ++kk)
        if (sk.D[kk] == H.origin[he]) d_idx = static_cast<int>(kk);
      for (int eid : sk.path_of_D[d_idx]) h_load[h_of_origin[eid]] += cap;
    } else {
      // cross-core edge: portal-to-endpoint forest paths plus the edge
      const MultiEdge& e = H.h.edge(he);
      auto down = [&](int v) {
        for (int w = v; sk.parent_edge[w] >= 0; w = sk.parent_node[w])
          h_load[h_of_origin[sk.parent_edge[w]]] += cap;
      };
      down(e.a);
      down(e.b);
      h_load[he] += cap;
    }
  }
  double j_into_h = 0.0;
  for (int he = 0; he < H.h.edge_count(); ++he)
    j_into_h = std::max(j_into_h, h_load[he] / h_cap[he]);
  return {h_into_j, j_into_h};
}

}  // namespace congestflow
