#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "graph.hpp"

namespace congestflow {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// DIMACS max-flow format:
//   c <comment>
//   p max <n> <m>
//   n <id> s      (1-based node ids)
//   n <id> t
//   a <u> <v> <cap>
inline Graph load_dimacs(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  int n = -1;
  long declared_m = -1;
  int source = -1, sink = -1;
  std::vector<std::tuple<int, int, std::int64_t>> edges;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ParseError("dimacs line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == 'c') continue;
    std::istringstream ls(line);
    char kind;
    ls >> kind;
    if (kind == 'p') {
      std::string prob;
      ls >> prob >> n >> declared_m;
      if (!ls || prob != "max" || n <= 0) fail("bad problem line");
    } else if (kind == 'n') {
      int id;
      std::string role;
      ls >> id >> role;
      if (!ls || id < 1 || id > n) fail("bad node descriptor");
      if (role == "s")
        source = id - 1;
      else if (role == "t")
        sink = id - 1;
      else
        fail("node role must be s or t");
    } else if (kind == 'a') {
      if (n < 0) fail("arc before problem line");
      int u, v;
      std::int64_t cap;
      ls >> u >> v >> cap;
      if (!ls || u < 1 || u > n || v < 1 || v > n) fail("bad arc endpoints");
      if (cap < 1) fail("arc capacity must be >= 1");
      edges.emplace_back(u - 1, v - 1, cap);
    } else {
      fail(std::string("unknown record '") + kind + "'");
    }
  }
  if (n < 0) throw ParseError("dimacs: missing problem line");
  if (declared_m >= 0 && declared_m != static_cast<long>(edges.size()) && warnings)
    warnings->push_back("dimacs: declared m=" + std::to_string(declared_m) +
                        " but found " + std::to_string(edges.size()) + " arcs");
  Graph g = Graph::build(n, edges, -1, warnings);
  g.source = source;
  g.sink = sink;
  return g;
}

// JSON schema: {"nodes": n, "edges": [{"u":..,"v":..,"cap":..}, ...],
//               "source": s, "sink": t}   (0-based node ids)
inline Graph load_json(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("json: ") + e.what());
  }
  if (!j.contains("nodes") || !j.contains("edges"))
    throw ParseError("json: missing 'nodes' or 'edges'");
  int n = j["nodes"].get<int>();
  std::vector<std::tuple<int, int, std::int64_t>> edges;
  for (const auto& e : j["edges"])
    edges.emplace_back(e["u"].get<int>(), e["v"].get<int>(), e["cap"].get<std::int64_t>());
  Graph g = Graph::build(n, edges, -1, warnings);
  if (j.contains("source")) g.source = j["source"].get<int>();
  if (j.contains("sink")) g.sink = j["sink"].get<int>();
  return g;
}

inline Graph load_graph(std::istream& in, const std::string& format,
                        std::vector<std::string>* warnings = nullptr) {
  if (format == "dimacs" || format == "dimacs-max") return load_dimacs(in, warnings);
  if (format == "json") return load_json(in, warnings);
  throw ParseError("unknown graph format '" + format + "'");
}

}  // namespace congestflow
