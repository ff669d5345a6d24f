// Command-line front end: approximate max-flow solves, approximator
// diagnostics, and property-sweep verification. Reports are JSON-lines
// written to --output (or stdout); a human summary goes to stdout when
// a report file is used. Exit codes: 0 success, 1 input error, 2
// retries exhausted / property violations found.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <congestflow/approximator.hpp>
#include <congestflow/cluster.hpp>
#include <congestflow/congest.hpp>
#include <congestflow/graph.hpp>
#include <congestflow/io.hpp>
#include <congestflow/jtree.hpp>
#include <congestflow/lsst.hpp>
#include <congestflow/multigraph.hpp>
#include <congestflow/oracles.hpp>
#include <congestflow/rng.hpp>
#include <congestflow/solver.hpp>

using namespace congestflow;
using nlohmann::json;

namespace {

struct Options {
  std::string input;
  std::string format = "dimacs";
  double epsilon = 0.1;
  double alpha = 0.0;
  int trees = 0;
  int beta = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  long budget_words = 4;
  bool strict_budget = false;
  long max_iters = 10000;
  std::string output;
};

void add_common_flags(CLI::App* cmd, Options& o, bool needs_input) {
  auto* in = cmd->add_option("--input", o.input, "Graph file to load");
  if (needs_input) in->required();
  cmd->add_option("--format", o.format, "Input format: dimacs or json")
      ->check(CLI::IsMember({"dimacs", "json"}));
  cmd->add_option("--epsilon", o.epsilon, "Approximation accuracy")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", o.alpha, "Initial quality factor (0 = derive)");
  cmd->add_option("--trees", o.trees, "Trees per approximator (0 = derive)");
  cmd->add_option("--beta", o.beta, "Contraction rate (0 = derive)");
  cmd->add_option("--seed", o.seed, "Master random seed")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--budget-words", o.budget_words, "Words per edge per round");
  cmd->add_flag("--strict-budget", o.strict_budget, "Abort on any budget violation");
  cmd->add_option("--max-iters", o.max_iters, "Iteration cap per routing call");
  cmd->add_option("--output", o.output, "Write the JSON-lines report here");
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed_set) return o.seed;
  if (const char* env = std::getenv("CONGESTFLOW_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

ApproxParams make_params(const Options& o) {
  ApproxParams p;
  p.alpha_cfg = o.alpha;
  p.trees = o.trees;
  p.beta = o.beta;
  return p;
}

class Report {
 public:
  explicit Report(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
      to_file_ = true;
    }
  }
  void line(const json& j) { (to_file_ ? file_ : std::cout) << j.dump() << "\n"; }
  bool to_file() const { return to_file_; }

 private:
  std::ofstream file_;
  bool to_file_ = false;
};

Graph load(const Options& o) {
  std::ifstream in(o.input);
  if (!in) throw ParseError("cannot open input file: " + o.input);
  std::vector<std::string> warnings;
  Graph g = load_graph(in, o.format, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return g;
}

std::vector<char> vt_subtree(const VirtualTree& vt, int v) {
  const int n = static_cast<int>(vt.parent.size());
  std::vector<char> s(n, 0);
  for (int x = 0; x < n; ++x)
    for (int w = x; w >= 0; w = vt.parent[w])
      if (w == v) {
        s[x] = 1;
        break;
      }
  return s;
}

int cmd_solve(const Options& o) {
  Graph g = load(o);
  const int n = g.node_count();
  int s = g.source >= 0 ? g.source : 0;
  int t = g.sink >= 0 ? g.sink : n - 1;
  std::uint64_t seed = resolve_seed(o);
  Rng rng(seed);

  RoundLedger ledger;
  ledger.budget_words = o.budget_words;
  ledger.strict = o.strict_budget;
  auto R = build_approximator(g, rng.substream("approximator"), make_params(o), &ledger);
  auto out = max_flow(g, R, s, t, o.epsilon, o.max_iters);

  auto d = divergence(g, out.flow);
  double cons_err = 0.0;
  for (int v = 0; v < n; ++v) {
    double want = v == s ? out.value : (v == t ? -out.value : 0.0);
    cons_err = std::max(cons_err, std::abs(d[v] - want));
  }

  Report rep(o.output);
  rep.line({{"op", "solve"},
            {"input", o.input},
            {"format", o.format},
            {"nodes", n},
            {"edges", g.edge_count()},
            {"source", s},
            {"sink", t},
            {"epsilon", o.epsilon},
            {"seed", seed},
            {"trees", static_cast<int>(R.trees.size())},
            {"alpha_cfg", R.alpha_cfg}});
  long approx_rounds = 0;
  for (const auto& vt : R.trees) approx_rounds += vt.rounds;
  rep.line({{"op", "result"},
            {"value", out.value},
            {"congestion", g.congestion(out.flow)},
            {"conservation_max_err", cons_err},
            {"calls", out.calls},
            {"iterations", out.iterations},
            {"rescales", out.rescales},
            {"alpha_used", out.alpha_used},
            {"alpha_doublings", out.alpha_doublings},
            {"stalled", out.stalled},
            {"rounds", approx_rounds},
            {"ledger", ledger.to_json()}});
  rep.line({{"op", "flow"}, {"flow", out.flow}});
  if (rep.to_file())
    std::cout << "value " << out.value << ", congestion " << g.congestion(out.flow)
              << ", " << out.iterations << " iterations over " << out.calls
              << " calls, report written to " << o.output << "\n";
  return out.stalled ? 2 : 0;
}

int cmd_approx_stats(const Options& o) {
  Graph g = load(o);
  const int n = g.node_count();
  std::uint64_t seed = resolve_seed(o);
  Rng rng(seed);
  auto R = build_approximator(g, rng.substream("approximator"), make_params(o));

  Report rep(o.output);
  rep.line({{"op", "approx_stats"},
            {"input", o.input},
            {"nodes", n},
            {"edges", g.edge_count()},
            {"seed", seed},
            {"trees", static_cast<int>(R.trees.size())},
            {"alpha_cfg", R.alpha_cfg}});

  // per-tree cut domination sweep
  long cut_violations = 0;
  for (std::size_t ti = 0; ti < R.trees.size(); ++ti) {
    const VirtualTree& vt = R.trees[ti];
    long checked = 0, bad = 0;
    for (int v = 0; v < n; ++v) {
      if (vt.parent[v] < 0) continue;
      ++checked;
      if (vt.cap[v] < g.cut_capacity(vt_subtree(vt, v)) - 1e-9) ++bad;
    }
    cut_violations += bad;
    rep.line({{"op", "tree"},
              {"index", ti},
              {"levels", vt.levels},
              {"rounds", vt.rounds},
              {"cuts_checked", checked},
              {"cut_violations", bad},
              {"coverage_warning", vt.coverage_warning}});
  }

  // s-t sandwich sweep against the exact oracle
  const int pairs = 20;
  long low_violations = 0;
  double alpha_hat = 0.0;
  Rng prng = rng.substream("sweep");
  for (int k = 0; k < pairs; ++k) {
    int s = static_cast<int>(prng.substream("s", k).uniform_int(0, n - 1));
    int t = static_cast<int>(prng.substream("t", k).uniform_int(0, n - 1));
    if (s == t) t = (t + 1) % n;
    double F = 1.0 + prng.substream("F", k).uniform() * 20.0;
    std::vector<double> b(n, 0.0);
    b[s] = F;
    b[t] = -F;
    auto y = apply_R(R, b);
    double est = 0.0;
    for (double v : y) est = std::max(est, std::abs(v));
    double opt = oracle::st_opt_congestion(g, s, t, F);
    if (est > opt + 1e-9) ++low_violations;
    alpha_hat = std::max(alpha_hat, opt / est);
  }
  rep.line({{"op", "sandwich"},
            {"pairs", pairs},
            {"lower_violations", low_violations},
            {"alpha_hat", alpha_hat}});
  if (rep.to_file())
    std::cout << "alpha_hat " << alpha_hat << ", " << low_violations
              << " lower-side violations, " << cut_violations
              << " cut violations, report written to " << o.output << "\n";
  return (low_violations == 0 && cut_violations == 0) ? 0 : 2;
}

// ---- verification sweeps -------------------------------------------------

Multigraph random_multigraph(int n, int extra, std::int64_t cap_max, Rng rng) {
  Multigraph g(n);
  for (int v = 1; v < n; ++v)
    g.add_edge(static_cast<int>(rng.uniform_int(0, v - 1)), v, rng.uniform_int(1, cap_max));
  for (int i = 0; i < extra; ++i) {
    int a = static_cast<int>(rng.uniform_int(0, n - 1));
    int b = static_cast<int>(rng.uniform_int(0, n - 1));
    if (a != b) g.add_edge(a, b, rng.uniform_int(1, cap_max));
  }
  return g;
}

Graph random_graph(int n, int extra, std::int64_t cap_max, Rng rng) {
  std::vector<std::tuple<int, int, std::int64_t>> edges;
  for (int v = 1; v < n; ++v)
    edges.push_back({static_cast<int>(rng.uniform_int(0, v - 1)), v,
                     rng.uniform_int(1, cap_max)});
  int added = 0, tries = 0;
  while (added < extra && tries < 20 * extra + 50) {
    ++tries;
    int a = static_cast<int>(rng.uniform_int(0, n - 1));
    int b = static_cast<int>(rng.uniform_int(0, n - 1));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    bool dup = false;
    for (auto& [x, y, c] : edges)
      if (std::min(x, y) == a && std::max(x, y) == b) dup = true;
    if (dup) continue;
    edges.push_back({a, b, rng.uniform_int(1, cap_max)});
    ++added;
  }
  return Graph::build(n, edges);
}

ClusterGraph bfs_cluster_graph(const Graph& g, int seeds, Rng rng) {
  const int n = g.node_count();
  ClusterGraph cg;
  cg.g = &g;
  cg.cluster_of.assign(n, -1);
  cg.tree_parent.assign(n, -1);
  std::vector<int> seed_nodes;
  while (static_cast<int>(seed_nodes.size()) < std::min(seeds, n)) {
    int s = static_cast<int>(rng.uniform_int(0, n - 1));
    if (cg.cluster_of[s] >= 0) continue;
    cg.cluster_of[s] = static_cast<int>(seed_nodes.size());
    seed_nodes.push_back(s);
  }
  std::queue<int> q;
  for (int s : seed_nodes) q.push(s);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto [w, eid] : g.neighbors(u))
      if (cg.cluster_of[w] < 0) {
        cg.cluster_of[w] = cg.cluster_of[u];
        cg.tree_parent[w] = u;
        q.push(w);
      }
  }
  cg.leader = seed_nodes;
  cg.depth.assign(seed_nodes.size(), 0);
  for (int v = 0; v < n; ++v) {
    int d = 0;
    for (int w = v; cg.tree_parent[w] >= 0; w = cg.tree_parent[w]) ++d;
    cg.depth[cg.cluster_of[v]] = std::max(cg.depth[cg.cluster_of[v]], d);
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    int cu = cg.cluster_of[g.edge(e).u], cv = cg.cluster_of[g.edge(e).v];
    if (cu != cv) cg.cedges.push_back({cu, cv, g.edge(e).cap, 1.0, e});
  }
  return cg;
}

class MinFlood : public ClusterProtocol {
 public:
  void init(const Multigraph& mg) override {
    best_.resize(mg.node_count());
    fresh_.assign(mg.node_count(), 1);
    for (int c = 0; c < mg.node_count(); ++c) best_[c] = c;
  }
  AggOp agg_op() const override { return AggOp::Min; }
  Message send(const Multigraph&, int c) override {
    if (!fresh_[c]) return {};
    fresh_[c] = 0;
    return {best_[c]};
  }
  void receive(const Multigraph&, int c, const Message& agg, int) override {
    if (!agg.empty() && agg[0] < best_[c]) {
      best_[c] = agg[0];
      fresh_[c] = 1;
    }
  }
  bool done(int c) const override { return !fresh_[c]; }
  const std::vector<std::int64_t>& best() const { return best_; }

 private:
  std::vector<std::int64_t> best_;
  std::vector<char> fresh_;
};

class DegreeCount : public ClusterProtocol {
 public:
  void init(const Multigraph& mg) override {
    deg_.assign(mg.node_count(), -1);
    sent_.assign(mg.node_count(), 0);
  }
  AggOp agg_op() const override { return AggOp::Sum; }
  Message send(const Multigraph&, int c) override {
    if (sent_[c]) return {};
    sent_[c] = 1;
    return {1};
  }
  void receive(const Multigraph&, int c, const Message& agg, int) override {
    deg_[c] = agg.empty() ? 0 : agg[0];
  }
  bool done(int c) const override { return sent_[c]; }
  const std::vector<std::int64_t>& deg() const { return deg_; }

 private:
  std::vector<std::int64_t> deg_;
  std::vector<char> sent_;
};

int cmd_verify(const Options& o) {
  std::uint64_t seed = resolve_seed(o);
  Rng rng(seed);
  Report rep(o.output);
  rep.line({{"op", "verify"}, {"seed", seed}});
  long total_violations = 0;

  // tree routing equality against the brute oracle
  {
    long bad = 0;
    const int runs = 50;
    for (int i = 0; i < runs; ++i) {
      Rng r = rng.substream("treeflow", i);
      int n = 6 + static_cast<int>(r.substream("n").uniform_int(0, 20));
      Multigraph g = random_multigraph(n, 2 * n, 12, r.substream("g"));
      auto t = low_stretch_tree(g, r.substream("t"));
      auto f = tree_flow(g, t);
      auto brute = oracle::brute_tree_flow(g, t);
      for (int e = 0; e < g.edge_count(); ++e)
        if (f[e] != brute[e]) ++bad;
    }
    total_violations += bad;
    rep.line({{"op", "lemma"},
              {"name", "tree_flow_equality"},
              {"instances", runs},
              {"violations", bad},
              {"pass", bad == 0}});
  }

  // portal bound and embedding loads
  {
    long portal_bad = 0, embed_bad = 0;
    const int runs = 50;
    for (int i = 0; i < runs; ++i) {
      Rng r = rng.substream("jtree", i);
      int n = 10 + static_cast<int>(r.substream("n").uniform_int(0, 30));
      Multigraph g = random_multigraph(n, 3 * n, 9, r.substream("g"));
      auto t = low_stretch_tree(g, r.substream("t"));
      auto f = tree_flow(g, t);
      int j = 1 + static_cast<int>(r.substream("j").uniform_int(0, n / 3));
      auto sel = select_F(g, t, f, j, {});
      HGraph H = build_H(g, t, f, sel.F);
      Skeleton sk = skeletonize(g, t, f, sel.F);
      if (sk.portal_count >= 4 * j) ++portal_bad;
      JTreeLevel jt = build_jtree(g, H, sk);
      auto [h2j, j2h] = verify_embeddings(g, t, f, H, sk, jt);
      if (h2j > 6.0 || j2h > 6.0) ++embed_bad;
    }
    total_violations += portal_bad + embed_bad;
    rep.line({{"op", "lemma"},
              {"name", "portal_bound"},
              {"instances", runs},
              {"violations", portal_bad},
              {"pass", portal_bad == 0}});
    rep.line({{"op", "lemma"},
              {"name", "embedding_loads"},
              {"instances", runs},
              {"violations", embed_bad},
              {"pass", embed_bad == 0}});
  }

  // cluster simulation fidelity
  {
    long bad = 0;
    const int runs = 10;
    for (int i = 0; i < runs; ++i) {
      Rng r = rng.substream("sim", i);
      int n = 10 + static_cast<int>(r.substream("n").uniform_int(0, 20));
      Graph g = random_graph(n, n, 6, r.substream("g"));
      ClusterGraph cg = bfs_cluster_graph(
          g, 2 + static_cast<int>(r.substream("k").uniform_int(0, 3)), r.substream("c"));
      {
        MinFlood a, b;
        run_cluster_protocol_direct(cg, a);
        RoundLedger ledger;
        ledger.budget_words = o.budget_words;
        ledger.strict = o.strict_budget;
        simulate_on_network(cg, b, ledger);
        if (a.best() != b.best()) ++bad;
      }
      {
        DegreeCount a, b;
        run_cluster_protocol_direct(cg, a);
        RoundLedger ledger;
        ledger.budget_words = o.budget_words;
        ledger.strict = o.strict_budget;
        simulate_on_network(cg, b, ledger);
        if (a.deg() != b.deg()) ++bad;
      }
    }
    total_violations += bad;
    rep.line({{"op", "lemma"},
              {"name", "simulation_fidelity"},
              {"instances", 2 * runs},
              {"violations", bad},
              {"pass", bad == 0}});
  }

  rep.line({{"op", "summary"}, {"violations", total_violations}, {"pass", total_violations == 0}});
  if (rep.to_file())
    std::cout << (total_violations == 0 ? "all property suites passed"
                                        : "property violations found")
              << ", report written to " << o.output << "\n";
  return total_violations == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Round-accounted approximate max-flow toolkit"};
  app.require_subcommand(1);
  Options o;
  CLI::App* solve = app.add_subcommand("solve", "Approximate a maximum s-t flow");
  add_common_flags(solve, o, true);
  CLI::App* stats = app.add_subcommand("approx-stats",
                                       "Build an approximator and sweep its guarantees");
  add_common_flags(stats, o, true);
  CLI::App* verify = app.add_subcommand("verify", "Run the property suites on random fixtures");
  add_common_flags(verify, o, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (solve->parsed()) return cmd_solve(o);
    if (stats->parsed()) return cmd_approx_stats(o);
    if (verify->parsed()) return cmd_verify(o);
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const GraphError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
