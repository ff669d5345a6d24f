#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <congestflow/graph.hpp>
#include <congestflow/io.hpp>

#include "test_util.hpp"

using namespace congestflow;

TEST_CASE("excess basics") {
  Graph g = Graph::build(3, {{0, 1, 1}, {1, 2, 1}});
  SUBCASE("zero flow") {
    auto ex = g.excess({0.0, 0.0});
    for (double x : ex) CHECK(x == 0.0);
  }
  SUBCASE("unit path flow") {
    // one unit a->b->c
    auto ex = g.excess({1.0, 1.0});
    CHECK(ex[0] == -1.0);
    CHECK(ex[1] == 0.0);
    CHECK(ex[2] == 1.0);
  }
}

TEST_CASE("excess equals brute accumulation on K4") {
  Graph g = Graph::build(4, {{0, 1, 3}, {0, 2, 5}, {0, 3, 2},
                             {1, 2, 4}, {1, 3, 1}, {2, 3, 6}});
  Rng rng(11);
  std::vector<double> f(g.edge_count());
  for (double& x : f) x = rng.uniform() * 4.0 - 2.0;
  auto ex = g.excess(f);
  std::vector<double> brute(4, 0.0);
  for (int e = 0; e < g.edge_count(); ++e) {
    brute[g.edge(e).v] += f[e];
    brute[g.edge(e).u] -= f[e];
  }
  for (int v = 0; v < 4; ++v) CHECK(ex[v] == doctest::Approx(brute[v]).epsilon(1e-12));
  double total = 0.0;
  for (double x : ex) total += x;
  CHECK(total == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("congestion") {
  Graph g = Graph::build(2, {{0, 1, 4}});
  CHECK(g.congestion({0.0}) == 0.0);
  CHECK(g.congestion({2.0}) == doctest::Approx(0.5));
  // positive homogeneity
  CHECK(g.congestion({-6.0}) == doctest::Approx(3.0 * g.congestion({2.0})));
}

TEST_CASE("cut capacity") {
  Graph tri = Graph::build(3, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}});
  CHECK(tri.cut_capacity({1, 0, 0}) == doctest::Approx(2.0));
  CHECK(tri.cut_capacity({0, 1, 1}) == doctest::Approx(2.0));  // complement symmetry
  CHECK_THROWS(tri.cut_capacity({1, 1, 1}));

  Rng rng(5);
  Graph g = testutil::random_connected_graph(12, 14, 9, rng.substream("g"));
  std::vector<char> s(12, 0);
  for (int v = 0; v < 12; ++v) s[v] = rng.bernoulli(0.5) ? 1 : 0;
  s[0] = 1;
  s[1] = 0;
  double oracle = 0.0;
  for (const auto& e : g.edges())
    if (s[e.u] != s[e.v]) oracle += static_cast<double>(e.cap);
  CHECK(g.cut_capacity(s) == doctest::Approx(oracle));
}

TEST_CASE("graph build validation") {
  CHECK_THROWS_AS(Graph::build(2, {{0, 0, 1}}), GraphError);          // self loop
  CHECK_THROWS_AS(Graph::build(3, {{0, 1, 1}}), GraphError);          // disconnected
  CHECK_THROWS_AS(Graph::build(2, {{0, 1, 0}}), GraphError);          // zero cap
  std::vector<std::string> warnings;
  Graph g = Graph::build(2, {{0, 1, 2}, {1, 0, 3}}, -1, &warnings);   // merged duplicate
  CHECK(g.edge_count() == 1);
  CHECK(g.edge(0).cap == 5);
  CHECK(warnings.size() == 1);
}

TEST_CASE("dimacs parsing") {
  std::istringstream in(
      "c tiny instance\n"
      "p max 4 5\n"
      "n 1 s\n"
      "n 4 t\n"
      "a 1 2 3\n"
      "a 2 3 2\n"
      "a 3 4 3\n"
      "a 1 3 1\n"
      "a 2 4 1\n");
  Graph g = load_dimacs(in);
  CHECK(g.node_count() == 4);
  CHECK(g.edge_count() == 5);
  CHECK(g.source == 0);
  CHECK(g.sink == 3);

  std::istringstream bad("p max 2 1\na 1 2 0\n");
  CHECK_THROWS_AS(load_dimacs(bad), ParseError);
}

TEST_CASE("json parsing") {
  std::istringstream in(
      R"({"nodes": 3, "edges": [{"u":0,"v":1,"cap":2},{"u":1,"v":2,"cap":4}],)"
      R"( "source": 0, "sink": 2})");
  Graph g = load_json(in);
  CHECK(g.node_count() == 3);
  CHECK(g.edge_count() == 2);
  CHECK(g.source == 0);
  CHECK(g.sink == 2);
  std::istringstream bad(R"({"edges": []})");
  CHECK_THROWS_AS(load_json(bad), ParseError);
}

TEST_CASE("balanced demand check") {
  CHECK_NOTHROW(check_balanced({1.0, -0.5, -0.5}));
  CHECK_THROWS(check_balanced({1.0, 0.5}));
}
