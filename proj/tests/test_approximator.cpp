#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <congestflow/approximator.hpp>
#include <congestflow/oracles.hpp>

#include "test_util.hpp"

using namespace congestflow;

namespace {

CongestionApproximator single_path_tree() {
  // 0 - 1 - 2 rooted at 0, both edges at capacity 2
  VirtualTree vt;
  vt.root = 0;
  vt.parent = {-1, 0, 1};
  vt.cap = {0.0, 2.0, 2.0};
  vt.via = {-1, -1, -1};
  CongestionApproximator R;
  R.n = 3;
  R.trees.push_back(vt);
  R.alpha_cfg = 8.0;
  return R;
}

// subtree membership of v in a virtual tree (ancestor walk)
std::vector<char> subtree_set(const VirtualTree& vt, int v) {
  const int n = static_cast<int>(vt.parent.size());
  std::vector<char> s(n, 0);
  for (int x = 0; x < n; ++x) {
    int w = x;
    while (w >= 0) {
      if (w == v) {
        s[x] = 1;
        break;
      }
      w = vt.parent[w];
    }
  }
  return s;
}

}  // namespace

TEST_CASE("row application on the hand-built path") {
  CongestionApproximator R = single_path_tree();
  SUBCASE("unit transfer demand") {
    auto y = apply_R(R, {1.0, 0.0, -1.0});
    REQUIRE(y.size() == 2);
    CHECK(y[0] == doctest::Approx(-0.5));  // subtree {1,2} holds -1, cap 2
    CHECK(y[1] == doctest::Approx(-0.5));  // subtree {2} holds -1, cap 2
  }
  SUBCASE("adjoint accumulates root paths") {
    auto pi = apply_Rt(R, {1.0, 0.0});
    REQUIRE(pi.size() == 3);
    CHECK(pi[0] == doctest::Approx(0.0));
    CHECK(pi[1] == doctest::Approx(0.5));
    CHECK(pi[2] == doctest::Approx(0.5));  // inherits the row at node 1
  }
  SUBCASE("row count is enforced") {
    CHECK_THROWS(apply_Rt(R, {1.0, 0.0, 0.0}));
  }
}

TEST_CASE("adjoint identity on sampled approximators") {
  Rng rng(81);
  for (int i = 0; i < 8; ++i) {
    int n = 8 + static_cast<int>(rng.substream("n", i).uniform_int(0, 16));
    Graph g = testutil::random_connected_graph(n, n, 6, rng.substream("g", i));
    ApproxParams params;
    params.trees = 2;
    auto R = build_approximator(g, rng.substream("R", i), params);
    for (int trial = 0; trial < 5; ++trial) {
      auto b = testutil::random_demand(n, rng.substream("b", i * 100 + trial));
      std::vector<double> p(R.rows());
      Rng prng = rng.substream("p", i * 100 + trial);
      for (double& v : p) v = prng.uniform() * 2.0 - 1.0;
      auto Rb = apply_R(R, b);
      auto Rtp = apply_Rt(R, p);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t k = 0; k < Rb.size(); ++k) lhs += p[k] * Rb[k];
      for (int v = 0; v < n; ++v) rhs += Rtp[v] * b[v];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
}

TEST_CASE("virtual tree structure") {
  Rng rng(82);
  for (int i = 0; i < 6; ++i) {
    int n = 8 + static_cast<int>(rng.substream("n", i).uniform_int(0, 24));
    Graph g = testutil::random_connected_graph(n, 2 * n, 8, rng.substream("g", i));
    VirtualTree vt = sample_virtual_tree(g, rng.substream("vt", i));
    // exactly one root, every node reaches it
    int roots = 0;
    for (int v = 0; v < n; ++v)
      if (vt.parent[v] < 0) ++roots;
    CHECK(roots == 1);
    CHECK(vt.parent[vt.root] == -1);
    for (int v = 0; v < n; ++v) {
      int w = v, steps = 0;
      while (vt.parent[w] >= 0 && steps <= n) {
        w = vt.parent[w];
        ++steps;
      }
      CHECK(w == vt.root);
      if (v != vt.root) CHECK(vt.cap[v] >= 1.0);
    }
    // cluster labels refine monotonically level by level
    for (std::size_t l = 0; l + 1 < vt.level_cluster_of.size(); ++l) {
      const auto& fine = vt.level_cluster_of[l];
      const auto& coarse = vt.level_cluster_of[l + 1];
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          if (fine[a] == fine[b]) CHECK(coarse[a] == coarse[b]);
    }
  }
}

TEST_CASE("every tree cut dominates the graph cut") {
  Rng rng(83);
  for (int i = 0; i < 10; ++i) {
    int n = 8 + static_cast<int>(rng.substream("n", i).uniform_int(0, 40));
    Graph g = testutil::random_connected_graph(n, 2 * n, 9, rng.substream("g", i));
    VirtualTree vt = sample_virtual_tree(g, rng.substream("vt", i));
    for (int v = 0; v < n; ++v) {
      if (vt.parent[v] < 0) continue;
      auto s = subtree_set(vt, v);
      CHECK(vt.cap[v] >= g.cut_capacity(s) - 1e-9);
    }
  }
}

TEST_CASE("estimated congestion lower-bounds the optimum") {
  Rng rng(84);
  int checked = 0;
  for (int i = 0; i < 12; ++i) {
    int n = 6 + static_cast<int>(rng.substream("n", i).uniform_int(0, 6));
    Graph g = testutil::random_connected_graph(n, n, 7, rng.substream("g", i));
    auto R = build_approximator(g, rng.substream("R", i));
    for (int trial = 0; trial < 4; ++trial) {
      Rng trng = rng.substream("t", i * 10 + trial);
      int s = static_cast<int>(trng.uniform_int(0, n - 1));
      int t = static_cast<int>(trng.uniform_int(0, n - 1));
      if (s == t) continue;
      double F = 1.0 + trng.uniform() * 10.0;
      std::vector<double> b(n, 0.0);
      b[s] = F;
      b[t] = -F;
      auto y = apply_R(R, b);
      double est = 0.0;
      for (double v : y) est = std::max(est, std::abs(v));
      double opt = oracle::st_opt_congestion(g, s, t, F);
      CHECK(est <= opt + 1e-9);
      ++checked;
    }
  }
  CHECK(checked >= 30);
}

TEST_CASE("distribution level on a tree multigraph merges in one member") {
  Rng rng(85);
  Multigraph g = testutil::random_multigraph(12, 0, 5, rng.substream("g"));
  std::vector<int> sizes(12, 1);
  DistributionLevel dl = build_distribution_level(g, 2, sizes, 12, 16.0, 8, false,
                                                  rng.substream("d"));
  REQUIRE(dl.members.size() == 1);
  CHECK(dl.covered);
  CHECK(dl.lambda[0] == doctest::Approx(1.0));
  // a tree has uniform relative load one, so F is empty and everything
  // collapses into a single component with an empty core
  CHECK(dl.members[0].jt.core.empty());
  int ncomp = *std::max_element(dl.members[0].sk.comp.begin(), dl.members[0].sk.comp.end()) + 1;
  CHECK(ncomp == 1);
}

TEST_CASE("approximator assembly and determinism") {
  Rng rng(86);
  Graph g = testutil::random_connected_graph(16, 16, 6, rng.substream("g"));
  ApproxParams params;
  params.trees = 3;
  auto A = build_approximator(g, rng.substream("R"), params);
  auto B = build_approximator(g, rng.substream("R"), params);
  REQUIRE(A.trees.size() == 3);
  CHECK(A.rows() == 3 * 15);
  for (int t = 0; t < 3; ++t) {
    CHECK(A.trees[t].parent == B.trees[t].parent);
    CHECK(A.trees[t].cap == B.trees[t].cap);
  }
}
