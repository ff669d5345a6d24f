#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graph.hpp"

namespace congestflow {

// A message is a sequence of words; a word carries one node id or one
// bounded numeric value.
using Message = std::vector<std::int64_t>;

struct BudgetViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simulated-round and message-size accounting. Per-phase breakdown is
// keyed by a free-form label.
struct RoundLedger {
  long rounds = 0;
  int max_words = 0;
  int budget_words = 4;  // per edge, per round, per direction
  bool strict = false;
  long violations = 0;

  struct Phase {
    std::string label;
    long rounds = 0;
    int max_words = 0;
  };
  std::vector<Phase> phases;

  void charge(const std::string& label, long r, int words = 0) {
    rounds += r;
    max_words = std::max(max_words, words);
    phases.push_back({label, r, words});
  }

  void note_message(int words) {
    max_words = std::max(max_words, words);
    if (words > budget_words) {
      ++violations;
      if (strict)
        throw BudgetViolation("message of " + std::to_string(words) +
                              " words exceeds budget of " +
                              std::to_string(budget_words));
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json phases_json = nlohmann::json::array();
    for (const Phase& p : phases)
      phases_json.push_back({{"phase", p.label}, {"rounds", p.rounds}, {"max_words", p.max_words}});
    return {{"rounds", rounds},
            {"max_words", max_words},
            {"budget_words", budget_words},
            {"violations", violations},
            {"phases", phases_json}};
  }
};

// A round-stepped node program. Each round every node may emit one
// message per incident edge, then consumes the messages delivered to it.
// A node that emits nothing and reports done() is idle; the simulation
// stops once every node is idle and nothing is in flight.
class NodeProtocol {
public:
  virtual ~NodeProtocol() = default;

  virtual void init(const Graph& g) = 0;

  // out[k] is the message for the k-th incident edge of `node`
  // (indexing follows g.neighbors(node)); an empty Message means no send.
  virtual std::vector<Message> send(const Graph& g, int node) = 0;

  // inbound[k] is the message that arrived over the k-th incident edge
  // this round (empty if none).
  virtual void receive(const Graph& g, int node, const std::vector<Message>& inbound) = 0;

  virtual bool done(int node) const = 0;
};

// Executes the protocol round by round. Returns when all nodes are done
// and no messages were exchanged in the last attempted round; that idle
// round is not counted.
inline void run_protocol(const Graph& g, NodeProtocol& protocol, RoundLedger& ledger,
                         long round_cap = 10000000) {
  protocol.init(g);
  const int n = g.node_count();
  long rounds_this_run = 0;
  while (true) {
    // collect outbound
    std::vector<std::vector<Message>> outbound(n);
    bool any = false;
    for (int v = 0; v < n; ++v) {
      outbound[v] = protocol.send(g, v);
      if (outbound[v].size() != g.neighbors(v).size())
        throw std::runtime_error("protocol emitted wrong number of edge slots");
      for (const Message& m : outbound[v])
        if (!m.empty()) any = true;
    }
    if (!any) {
      bool all_done = true;
      for (int v = 0; v < n; ++v)
        if (!protocol.done(v)) all_done = false;
      if (all_done) break;
      throw std::runtime_error("protocol deadlock: no messages but not all nodes done");
    }
    // deliver
    std::vector<std::vector<Message>> inbound(n);
    for (int v = 0; v < n; ++v) inbound[v].resize(g.neighbors(v).size());
    for (int v = 0; v < n; ++v) {
      const auto& nbrs = g.neighbors(v);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const Message& m = outbound[v][k];
        if (m.empty()) continue;
        ledger.note_message(static_cast<int>(m.size()));
        int w = nbrs[k].first;
        int eid = nbrs[k].second;
        // find the slot of edge eid at w
        const auto& wn = g.neighbors(w);
        for (std::size_t j = 0; j < wn.size(); ++j)
          if (wn[j].second == eid) {
            inbound[w][j] = m;
            break;
          }
      }
    }
    for (int v = 0; v < n; ++v) protocol.receive(g, v, inbound[v]);
    ++rounds_this_run;
    if (rounds_this_run > round_cap)
      throw std::runtime_error("round cap exceeded; protocol may not terminate");
  }
  ledger.charge("run_protocol", rounds_this_run);
}

struct RootedTree {
  int root = 0;
  std::vector<int> parent;       // -1 at root
  std::vector<int> depth_of;     // hop depth per node
  int depth = 0;                 // longest root-leaf path

  std::vector<std::vector<int>> children() const {
    std::vector<std::vector<int>> ch(parent.size());
    for (std::size_t v = 0; v < parent.size(); ++v)
      if (parent[v] >= 0) ch[parent[v]].push_back(static_cast<int>(v));
    return ch;
  }
};

namespace detail {

// BFS flooding: each discovered node announces (dist, id) once; a node
// picks as parent the first discoverer, ties broken by smaller id.
class BfsProtocol : public NodeProtocol {
public:
  explicit BfsProtocol(int root) : root_(root) {}

  void init(const Graph& g) override {
    int n = g.node_count();
    dist_.assign(n, -1);
    parent_.assign(n, -1);
    pending_.assign(n, false);
    dist_[root_] = 0;
    pending_[root_] = true;
  }

  std::vector<Message> send(const Graph& g, int node) override {
    std::vector<Message> out(g.neighbors(node).size());
    if (pending_[node]) {
      for (auto& m : out) m = {dist_[node], node};
      pending_[node] = false;
    }
    return out;
  }

  void receive(const Graph& g, int node, const std::vector<Message>& inbound) override {
    if (dist_[node] >= 0) return;
    int best = -1;
    for (std::size_t k = 0; k < inbound.size(); ++k) {
      if (inbound[k].empty()) continue;
      int from = static_cast<int>(inbound[k][1]);
      if (best < 0 || from < best) {
        best = from;
        dist_[node] = static_cast<int>(inbound[k][0]) + 1;
      }
    }
    if (best >= 0) {
      parent_[node] = best;
      pending_[node] = true;
    }
  }

  bool done(int node) const override { return !pending_[node]; }

  const std::vector<int>& dist() const { return dist_; }
  const std::vector<int>& parent() const { return parent_; }

private:
  int root_;
  std::vector<int> dist_, parent_;
  std::vector<char> pending_;
};

}  // namespace detail

inline RootedTree bfs_tree(const Graph& g, int root, RoundLedger& ledger) {
  detail::BfsProtocol proto(root);
  RoundLedger inner;
  inner.budget_words = ledger.budget_words;
  inner.strict = ledger.strict;
  run_protocol(g, proto, inner);
  RootedTree t;
  t.root = root;
  t.parent = proto.parent();
  t.depth_of = proto.dist();
  t.depth = 0;
  for (int d : t.depth_of) t.depth = std::max(t.depth, d);
  ledger.charge("bfs_tree", t.depth, inner.max_words);
  ledger.violations += inner.violations;
  ledger.max_words = std::max(ledger.max_words, inner.max_words);
  return t;
}

// k independent convergecasts pipelined over a rooted tree. Each round
// every tree edge carries at most one (item, value) pair upward. Items
// are combined with an associative commutative op.
inline std::vector<double> pipelined_aggregate(
    const RootedTree& tree, const std::vector<std::vector<double>>& leaf_values,
    const std::function<double(double, double)>& op, RoundLedger& ledger,
    const std::string& label = "pipelined_aggregate") {
  const int n = static_cast<int>(tree.parent.size());
  const int k = n > 0 ? static_cast<int>(leaf_values[0].size()) : 0;
  auto children = tree.children();
  // acc[v][j]: partial aggregate of item j over v's received subtree data
  std::vector<std::vector<double>> acc(n);
  std::vector<std::vector<int>> missing(n);  // children yet to report, per item
  std::vector<int> next_item(n, 0);          // next item v may forward upward
  for (int v = 0; v < n; ++v) {
    acc[v] = leaf_values[v];
    missing[v].assign(k, static_cast<int>(children[v].size()));
  }
  long rounds = 0;
  int max_words = 0;
  while (true) {
    // a node may forward item j once all children contributed it; one
    // item per edge per round
    struct Send {
      int from, to, item;
      double value;
    };
    std::vector<Send> sends;
    for (int v = 0; v < n; ++v) {
      if (v == tree.root) continue;
      int j = next_item[v];
      if (j < k && missing[v][j] == 0) {
        sends.push_back({v, tree.parent[v], j, acc[v][j]});
        ++next_item[v];
      }
    }
    if (sends.empty()) break;
    for (const Send& s : sends) {
      acc[s.to][s.item] = op(acc[s.to][s.item], s.value);
      --missing[s.to][s.item];
      max_words = std::max(max_words, 2);  // item id + value
    }
    ++rounds;
  }
  ledger.charge(label, rounds, max_words);
  return acc[tree.root];
}

}  // namespace congestflow
