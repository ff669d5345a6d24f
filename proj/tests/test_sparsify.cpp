#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <queue>

#include <congestflow/multigraph.hpp>
#include <congestflow/sparsify.hpp>

#include "test_util.hpp"

using namespace congestflow;

namespace {

// weighted shortest path restricted to a set of kept edge ids
double spanner_dist(const Multigraph& g, const std::vector<int>& kept, int s, int t) {
  std::vector<char> in(g.edge_count(), 0);
  for (int e : kept) in[e] = 1;
  std::vector<double> d(g.node_count(), -1.0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({0.0, s});
  while (!pq.empty()) {
    auto [dist, v] = pq.top();
    pq.pop();
    if (d[v] >= 0.0) continue;
    d[v] = dist;
    if (v == t) break;
    for (auto [w, eid] : g.neighbors(v)) {
      if (!in[eid] || d[w] >= 0.0) continue;
      pq.push({dist + std::max(1.0, g.edge(eid).length), w});
    }
  }
  return d[t];
}

}  // namespace

TEST_CASE("spanner keeps every bridge") {
  SUBCASE("a tree keeps all edges") {
    Rng rng(61);
    Multigraph g = testutil::random_multigraph(20, 0, 4, rng.substream("g"), 8.0);
    auto kept = bs_spanner(g, rng.substream("s"));
    CHECK(kept.size() == 19);
  }
  SUBCASE("two nodes, one edge") {
    Multigraph g(2);
    g.add_edge(0, 1, 3);
    Rng rng(62);
    auto kept = bs_spanner(g, rng);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0] == 0);
  }
}

TEST_CASE("spanner stretch bound") {
  Rng rng(63);
  for (int i = 0; i < 10; ++i) {
    int n = 10 + static_cast<int>(rng.substream("n", i).uniform_int(0, 20));
    Multigraph g = testutil::random_multigraph(n, 3 * n, 5, rng.substream("g", i), 10.0);
    auto kept = bs_spanner(g, rng.substream("s", i));
    const double k = std::ceil(std::log2(static_cast<double>(n)));
    const double bound = 2.0 * k - 1.0;
    for (int eid = 0; eid < g.edge_count(); ++eid) {
      const MultiEdge& e = g.edge(eid);
      if (e.a == e.b) continue;
      double d = spanner_dist(g, kept, e.a, e.b);
      REQUIRE(d >= 0.0);  // spanner keeps endpoints connected
      CHECK(d <= bound * std::max(1.0, e.length) + 1e-9);
    }
  }
}

TEST_CASE("edge orientation") {
  Rng rng(64);
  for (int i = 0; i < 10; ++i) {
    int n = 8 + static_cast<int>(rng.substream("n", i).uniform_int(0, 24));
    Multigraph g = testutil::random_multigraph(n, 4 * n, 3, rng.substream("g", i));
    std::vector<int> owner;
    int max_out = 0;
    orient_edges(g, owner, &max_out);
    REQUIRE(static_cast<int>(owner.size()) == g.edge_count());
    std::vector<int> outdeg(n, 0);
    for (int eid = 0; eid < g.edge_count(); ++eid) {
      const MultiEdge& e = g.edge(eid);
      // totality: every edge oriented away from one of its endpoints
      REQUIRE((owner[eid] == e.a || owner[eid] == e.b));
      ++outdeg[owner[eid]];
    }
    CHECK(max_out == *std::max_element(outdeg.begin(), outdeg.end()));
    double d_avg = 2.0 * g.edge_count() / n;
    CHECK(static_cast<double>(max_out) <= 2.0 * d_avg + 1.0);
  }
}

TEST_CASE("sparsifier bypasses sparse inputs unchanged") {
  Rng rng(65);
  Multigraph g = testutil::random_multigraph(16, 20, 6, rng.substream("g"));
  SparsifierOutput out = sparsify(g, 0.5, rng.substream("s"));
  CHECK(out.bypassed);
  CHECK(out.phases == 0);
  REQUIRE(out.graph.edge_count() == g.edge_count());
  for (int eid = 0; eid < g.edge_count(); ++eid) {
    CHECK(out.origin[eid] == eid);
    CHECK(out.graph.edge(eid).cap == g.edge(eid).cap);
    CHECK(out.graph.edge(eid).a == g.edge(eid).a);
    CHECK(out.graph.edge(eid).b == g.edge(eid).b);
  }
}

TEST_CASE("sparsifier reduces dense multigraphs and stays connected") {
  Rng rng(66);
  // a dense multigraph on few nodes: many parallel edges
  Multigraph g = testutil::random_multigraph(16, 500, 4, rng.substream("g"));
  REQUIRE(g.edge_count() > 4 * 16 * 4);  // above the bypass limit
  // shrink the size target so phases actually run at this scale
  SparsifierOutput out = sparsify(g, 1.0, rng.substream("s"), 1.0, 2, 0.25);
  CHECK(!out.bypassed);
  CHECK(out.phases >= 1);
  CHECK(out.graph.edge_count() < g.edge_count());
  CHECK(out.graph.connected());
  for (int eid = 0; eid < out.graph.edge_count(); ++eid) {
    int orig = out.origin[eid];
    REQUIRE(orig >= 0);
    REQUIRE(orig < g.edge_count());
    CHECK(out.graph.edge(eid).a == g.edge(orig).a);
    CHECK(out.graph.edge(eid).b == g.edge(orig).b);
    CHECK(out.graph.edge(eid).cap >= g.edge(orig).cap);  // kept at >= original cap
  }
  CHECK(out.owner.size() == static_cast<std::size_t>(out.graph.edge_count()));
}

TEST_CASE("spanner respects the edge filter") {
  Rng rng(67);
  Multigraph g = testutil::random_multigraph(12, 30, 3, rng.substream("g"));
  std::vector<char> allowed(g.edge_count(), 1);
  for (int eid = 0; eid < g.edge_count(); eid += 2) allowed[eid] = 0;
  auto kept = bs_spanner(g, rng.substream("s"), &allowed);
  for (int eid : kept) CHECK(allowed[eid] == 1);
}
