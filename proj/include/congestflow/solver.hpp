#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "approximator.hpp"
#include "graph.hpp"

namespace congestflow {

// ln sum_i (e^{x_i} + e^{-x_i}), computed with the max shifted out.
inline double soft_max(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double M = 0.0;
  for (double v : x) M = std::max(M, std::abs(v));
  double s = 0.0;
  for (double v : x) s += std::exp(v - M) + std::exp(-v - M);
  return M + std::log(s);
}

// Net outflow per node under the u -> v orientation of every edge.
inline std::vector<double> divergence(const Graph& g, const std::vector<double>& f) {
  std::vector<double> d(g.node_count(), 0.0);
  for (int e = 0; e < g.edge_count(); ++e) {
    d[g.edge(e).u] += f[e];
    d[g.edge(e).v] -= f[e];
  }
  return d;
}

// phi(f) = smax(f / cap) + smax(2 alpha R (b - Bf)): congestion of the
// flow plus the approximated congestion of routing what remains.
inline double potential(const Graph& g, const CongestionApproximator& R,
                        const std::vector<double>& f, const std::vector<double>& b,
                        double alpha) {
  const int m = g.edge_count();
  std::vector<double> x(m);
  for (int e = 0; e < m; ++e) x[e] = f[e] / static_cast<double>(g.edge(e).cap);
  std::vector<double> r = divergence(g, f);
  for (int v = 0; v < g.node_count(); ++v) r[v] = b[v] - r[v];
  std::vector<double> y = apply_R(R, r);
  for (double& v : y) v *= 2.0 * alpha;
  return soft_max(x) + soft_max(y);
}

// d phi / d f. The second term contracts the rows through the adjoint:
// with s the soft-max weights of the residual rows and pi = R^T s, edge
// (u, v) feels 2 alpha (pi_v - pi_u).
inline std::vector<double> grad_potential(const Graph& g, const CongestionApproximator& R,
                                          const std::vector<double>& f,
                                          const std::vector<double>& b, double alpha) {
  const int m = g.edge_count();
  std::vector<double> x(m);
  for (int e = 0; e < m; ++e) x[e] = f[e] / static_cast<double>(g.edge(e).cap);
  double M1 = 0.0;
  for (double v : x) M1 = std::max(M1, std::abs(v));
  double Z1 = 0.0;
  for (double v : x) Z1 += std::exp(v - M1) + std::exp(-v - M1);

  std::vector<double> r = divergence(g, f);
  for (int v = 0; v < g.node_count(); ++v) r[v] = b[v] - r[v];
  std::vector<double> y = apply_R(R, r);
  for (double& v : y) v *= 2.0 * alpha;
  double M2 = 0.0;
  for (double v : y) M2 = std::max(M2, std::abs(v));
  double Z2 = 0.0;
  for (double v : y) Z2 += std::exp(v - M2) + std::exp(-v - M2);
  std::vector<double> s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    s[i] = Z2 > 0.0 ? (std::exp(y[i] - M2) - std::exp(-y[i] - M2)) / Z2 : 0.0;
  std::vector<double> pi = apply_Rt(R, s);

  std::vector<double> grad(m);
  for (int e = 0; e < m; ++e) {
    double t1 = (std::exp(x[e] - M1) - std::exp(-x[e] - M1)) /
                (static_cast<double>(g.edge(e).cap) * Z1);
    grad[e] = t1 + 2.0 * alpha * (pi[g.edge(e).v] - pi[g.edge(e).u]);
  }
  return grad;
}

struct AlmostRouteResult {
  std::vector<double> flow;  // per edge, u -> v orientation
  long iterations = 0;
  long rescales = 0;         // 17/16 push-ups applied
  double scale = 1.0;        // total demand scaling that was undone
  bool stalled = false;      // hit the iteration cap before converging
};

// Called once per accepted gradient step with the potential immediately
// before and immediately after the update (never spanning a rescale).
using DescentObserver = std::function<void(double phi_before, double phi_after)>;

// Gradient descent on the scaled potential: the demand is first scaled
// so the residual term sits near the soft-max's sensitive range, then
// pushed up by 17/16 whenever the potential sags below 16 ln(n) / eps.
// Steps move every edge against the gradient sign, sized by the total
// weighted gradient. The base step delta / (1 + 4 alpha^2) always
// decreases the potential; a deterministic line search boosts it as far
// as the potential keeps decreasing and backs off otherwise, so descent
// stays monotone while skipping most of the conservative schedule.
// Terminates when the total weighted gradient drops below eps / 4.
inline AlmostRouteResult almost_route(const Graph& g, const CongestionApproximator& R,
                                      std::vector<double> b, double eps, double alpha,
                                      long max_iters = 1000000,
                                      const DescentObserver& observer = {}) {
  const int n = g.node_count();
  const int m = g.edge_count();
  AlmostRouteResult res;
  res.flow.assign(m, 0.0);

  std::vector<double> y0 = apply_R(R, b);
  double rb = 0.0;
  for (double v : y0) rb = std::max(rb, std::abs(v));
  if (rb == 0.0) return res;  // nothing to route

  const double k_b = 16.0 * std::log(static_cast<double>(std::max(n, 2))) /
                     (eps * 2.0 * alpha * rb);
  for (double& v : b) v *= k_b;
  res.scale = k_b;
  const double threshold = 16.0 * std::log(static_cast<double>(std::max(n, 2))) / eps;

  double boost = 1.0;  // line-search multiplier, persists across steps
  std::vector<double> trial(m);
  double phi = potential(g, R, res.flow, b, alpha);
  while (true) {
    while (phi < threshold) {
      for (double& v : res.flow) v *= 17.0 / 16.0;
      for (double& v : b) v *= 17.0 / 16.0;
      res.scale *= 17.0 / 16.0;
      ++res.rescales;
      phi = potential(g, R, res.flow, b, alpha);
    }
    std::vector<double> grad = grad_potential(g, R, res.flow, b, alpha);
    double delta = 0.0;
    for (int e = 0; e < m; ++e) delta += std::abs(static_cast<double>(g.edge(e).cap) * grad[e]);
    if (delta < eps / 4.0) break;
    const double base_step = delta / (1.0 + 4.0 * alpha * alpha);
    auto try_step = [&](double step) {
      for (int e = 0; e < m; ++e) {
        double d = 0.0;
        if (grad[e] > 0.0)
          d = -static_cast<double>(g.edge(e).cap) * step;
        else if (grad[e] < 0.0)
          d = static_cast<double>(g.edge(e).cap) * step;
        trial[e] = res.flow[e] + d;
      }
      return potential(g, R, trial, b, alpha);
    };
    double phi_new = try_step(base_step * boost);
    while (boost > 1.0 && phi_new > phi) {
      boost = std::max(1.0, boost / 4.0);
      phi_new = try_step(base_step * boost);
    }
    res.flow.swap(trial);
    if (observer) observer(phi, phi_new);
    phi = phi_new;
    boost = std::min(boost * 2.0, 1e8);
    if (++res.iterations >= max_iters) {
      res.stalled = true;
      break;
    }
  }
  for (double& v : res.flow) v /= res.scale;
  return res;
}

struct GraphSpanningTree {
  int root = 0;
  std::vector<int> parent_node;  // -1 at root
  std::vector<int> parent_edge;  // graph edge id toward parent
};

// Maximum-capacity spanning tree of the graph (Kruskal, ties by id).
inline GraphSpanningTree max_capacity_spanning_tree(const Graph& g) {
  const int n = g.node_count();
  std::vector<int> ids(g.edge_count());
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (g.edge(a).cap != g.edge(b).cap) return g.edge(a).cap > g.edge(b).cap;
    return a < b;
  });
  std::vector<int> dsu(n);
  std::iota(dsu.begin(), dsu.end(), 0);
  std::function<int(int)> find = [&](int x) { return dsu[x] == x ? x : dsu[x] = find(dsu[x]); };
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (int eid : ids) {
    int a = find(g.edge(eid).u), b = find(g.edge(eid).v);
    if (a == b) continue;
    dsu[a] = b;
    adj[g.edge(eid).u].push_back({g.edge(eid).v, eid});
    adj[g.edge(eid).v].push_back({g.edge(eid).u, eid});
  }
  GraphSpanningTree t;
  t.parent_node.assign(n, -1);
  t.parent_edge.assign(n, -1);
  std::vector<char> seen(n, 0);
  std::vector<int> stack{t.root};
  seen[t.root] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (auto [w, eid] : adj[u])
      if (!seen[w]) {
        seen[w] = 1;
        t.parent_node[w] = u;
        t.parent_edge[w] = eid;
        stack.push_back(w);
      }
  }
  for (int v = 0; v < n; ++v)
    if (v != t.root && t.parent_node[v] < 0)
      throw std::runtime_error("spanning tree construction failed");
  return t;
}

// Routes the demand exactly over the spanning tree (each node ships its
// subtree's surplus across its parent edge), adding into f.
inline void route_on_tree(const Graph& g, const GraphSpanningTree& t,
                          const std::vector<double>& b, std::vector<double>& f) {
  const int n = g.node_count();
  std::vector<std::vector<int>> ch(n);
  for (int v = 0; v < n; ++v)
    if (t.parent_node[v] >= 0) ch[t.parent_node[v]].push_back(v);
  std::vector<int> order;
  order.reserve(n);
  std::vector<int> stack{t.root};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int c : ch[v]) stack.push_back(c);
  }
  std::vector<double> sub(b);
  for (int i = n - 1; i >= 0; --i) {
    int v = order[i];
    if (t.parent_node[v] < 0) continue;
    sub[t.parent_node[v]] += sub[v];
    int eid = t.parent_edge[v];
    // positive surplus leaves v toward the parent
    if (g.edge(eid).u == v)
      f[eid] += sub[v];
    else
      f[eid] -= sub[v];
  }
}

struct MaxFlowSolveResult {
  double value = 0.0;
  std::vector<double> flow;     // per edge, u -> v orientation, congestion 1
  double congestion_raw = 0.0;  // of the unit flow before the final scaling
  double alpha_used = 0.0;
  int calls = 0;
  long iterations = 0;
  long rescales = 0;
  int alpha_doublings = 0;
  bool stalled = false;  // some call made no progress even after all retries
};

// Approximate max flow: route one unit from s to t through a sequence
// of routing calls of decreasing slack, clean up the residual exactly
// on a high-capacity spanning tree, and scale the unit flow so its
// worst edge sits exactly at capacity. The scaled value lower-bounds
// the true max flow and approaches it as eps shrinks.
inline MaxFlowSolveResult max_flow(const Graph& g, const CongestionApproximator& R, int s, int t,
                                   double eps, long max_iters = 10000) {
  if (s == t) throw std::runtime_error("max_flow: s == t");
  const int n = g.node_count();
  const int m = g.edge_count();
  std::vector<double> b0(n, 0.0);
  b0[s] = 1.0;
  b0[t] = -1.0;

  MaxFlowSolveResult out;
  out.flow.assign(m, 0.0);
  double alpha = R.alpha_cfg;
  const int T = static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max(m, 2))))) + 1;
  for (int i = 0; i < T; ++i) {
    // intermediate calls at the loose slack 1/2, only the last at eps
    double eps_i = (i == T - 1) ? eps : 0.5;
    std::vector<double> r = divergence(g, out.flow);
    for (int v = 0; v < n; ++v) r[v] = b0[v] - r[v];
    AlmostRouteResult ar = almost_route(g, R, r, eps_i, alpha, max_iters);
    // A capped call that still pushed the scale up made real progress;
    // only a call with no rescales at all earns a smoother retry.
    while (ar.stalled && ar.rescales == 0 && out.alpha_doublings < 5) {
      alpha *= 2.0;  // a looser quality estimate smooths the potential
      ++out.alpha_doublings;
      ar = almost_route(g, R, r, eps_i, alpha, max_iters);
    }
    // Hitting the cap mid-progress is routine at this cap size; only a
    // call that never advanced the scale counts as a genuine stall.
    out.stalled = out.stalled || (ar.stalled && ar.rescales == 0);
    out.iterations += ar.iterations;
    out.rescales += ar.rescales;
    ++out.calls;
    for (int e = 0; e < m; ++e) out.flow[e] += ar.flow[e];
  }
  out.alpha_used = alpha;
  // exact residual cleanup on a tree, then normalize to congestion 1
  GraphSpanningTree tree = max_capacity_spanning_tree(g);
  std::vector<double> r = divergence(g, out.flow);
  for (int v = 0; v < n; ++v) r[v] = b0[v] - r[v];
  route_on_tree(g, tree, r, out.flow);

  auto congestion_of = [&](const std::vector<double>& f) {
    double c = 0.0;
    for (int e = 0; e < m; ++e)
      c = std::max(c, std::abs(f[e]) / static_cast<double>(g.edge(e).cap));
    return c;
  };
  double cong = congestion_of(out.flow);
  if (cong <= 0.0) throw std::runtime_error("max_flow: produced an empty flow");
  out.congestion_raw = cong;
  out.value = 1.0 / cong;
  // normalize until the worst edge sits at capacity exactly
  for (int pass = 0; pass < 8; ++pass) {
    double c = congestion_of(out.flow);
    if (c == 1.0) break;
    for (double& v : out.flow) v /= c;
  }
  return out;
}

}  // namespace congestflow
