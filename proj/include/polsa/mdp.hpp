#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polsa/linalg.hpp"
#include "polsa/rng.hpp"

namespace polsa {

using linalg::Vec;

/// Finite shortest-path MDP on an undirected graph. Actions at a non-goal
/// node choose a neighbor; the move succeeds with success_prob and otherwise
/// lands uniformly on one of the node's neighbors. The highest-numbered node
/// is the goal: absorbing with a single action and zero cost. Cost is 1 per
/// step elsewhere.
struct Mdp {
  int n_states = 0;
  double beta = 0.0;
  double success_prob = 1.0;
  std::uint64_t seed = 0;  // provenance only

  std::vector<std::pair<int, int>> edges;          // undirected, first < second
  std::vector<std::vector<int>> actions;           // actions[x] = target nodes
  std::vector<std::vector<Vec>> trans;             // trans[x][u], length n_states
  std::vector<std::vector<double>> cost;           // cost[x][u]
  std::vector<int> pair_offset;                    // prefix sums over actions

  int goal() const { return n_states - 1; }
  int d() const { return pair_offset.back(); }
  int n_actions(int x) const { return static_cast<int>(actions[x].size()); }
  int pair_index(int x, int u) const { return pair_offset[x] + u; }
  std::pair<int, int> pair_at(int i) const {
    const auto it = std::upper_bound(pair_offset.begin(), pair_offset.end(), i);
    const int x = static_cast<int>(it - pair_offset.begin()) - 1;
    return {x, i - pair_offset[x]};
  }
};

/// Deterministic construction from an edge list; the generator and the file
/// loader both go through here, so reloaded instances are bit-identical.
inline Mdp mdp_from_edges(int n_states, std::vector<std::pair<int, int>> edges,
                          double success_prob, double beta, std::uint64_t seed = 0) {
  if (n_states < 2) throw std::invalid_argument("mdp_from_edges: need >= 2 states");
  if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("mdp_from_edges: beta in (0,1)");
  if (success_prob <= 0.0 || success_prob > 1.0) {
    throw std::invalid_argument("mdp_from_edges: success_prob in (0,1]");
  }
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first == e.second || e.first < 0 || e.second >= n_states) {
      throw std::invalid_argument("mdp_from_edges: bad edge");
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Mdp mdp;
  mdp.n_states = n_states;
  mdp.beta = beta;
  mdp.success_prob = success_prob;
  mdp.seed = seed;
  mdp.edges = edges;

  std::vector<std::vector<int>> neighbors(n_states);
  for (const auto& [i, j] : edges) {
    neighbors[i].push_back(j);
    neighbors[j].push_back(i);
  }
  for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());

  mdp.actions.resize(n_states);
  mdp.trans.resize(n_states);
  mdp.cost.resize(n_states);
  const int goal = n_states - 1;
  for (int x = 0; x < n_states; ++x) {
    if (x == goal) {
      mdp.actions[x] = {goal};
      Vec row = Vec::Zero(n_states);
      row(goal) = 1.0;
      mdp.trans[x] = {row};
      mdp.cost[x] = {0.0};
      continue;
    }
    if (neighbors[x].empty()) {
      throw std::invalid_argument("mdp_from_edges: node " + std::to_string(x) +
                                  " has no neighbors");
    }
    mdp.actions[x] = neighbors[x];
    const double stray = (1.0 - success_prob) / static_cast<double>(neighbors[x].size());
    for (int target : neighbors[x]) {
      Vec row = Vec::Zero(n_states);
      row(target) += success_prob;
      for (int nb : neighbors[x]) row(nb) += stray;
      mdp.trans[x].push_back(row);
      mdp.cost[x].push_back(1.0);
    }
  }
  mdp.pair_offset.assign(1, 0);
  for (int x = 0; x < n_states; ++x) {
    mdp.pair_offset.push_back(mdp.pair_offset.back() + mdp.n_actions(x));
  }
  return mdp;
}

/// Random graph: i.i.d. edges with probability edge_prob over all node pairs,
/// plus the chain edges (i, i+1) that force connectivity.
inline Mdp random_graph_mdp(int n_nodes, double edge_prob, double success_prob,
                            std::uint64_t rng_seed, double beta) {
  if (n_nodes < 2) throw std::invalid_argument("random_graph_mdp: need >= 2 nodes");
  if (edge_prob < 0.0 || edge_prob > 1.0) {
    throw std::invalid_argument("random_graph_mdp: edge_prob in [0,1]");
  }
  Rng rng(splitmix64(rng_seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n_nodes; ++i) {
    for (int j = i + 1; j < n_nodes; ++j) {
      if (unif(rng) < edge_prob) edges.emplace_back(i, j);
    }
  }
  for (int i = 0; i + 1 < n_nodes; ++i) edges.emplace_back(i, i + 1);
  return mdp_from_edges(n_nodes, std::move(edges), success_prob, beta, rng_seed);
}

/// Every state reachable from every state under the controlled transitions.
inline bool strongly_connected(const Mdp& mdp) {
  // The chain edges make the graph undirected-connected, but check directly
  // on the support of the transition kernels.
  auto reachable_from = [&](int start) {
    std::vector<bool> seen(mdp.n_states, false);
    std::queue<int> queue;
    queue.push(start);
    seen[start] = true;
    while (!queue.empty()) {
      const int x = queue.front();
      queue.pop();
      for (int u = 0; u < mdp.n_actions(x); ++u) {
        for (int y = 0; y < mdp.n_states; ++y) {
          if (mdp.trans[x][u](y) > 0.0 && !seen[y]) {
            seen[y] = true;
            queue.push(y);
          }
        }
      }
    }
    return seen;
  };
  // The goal is absorbing; require that every state reaches the goal and that
  // the non-goal subgraph is mutually reachable.
  for (int x = 0; x < mdp.n_states; ++x) {
    const auto seen = reachable_from(x);
    if (!seen[mdp.goal()]) return false;
    for (int y = 0; y + 1 < mdp.n_states; ++y) {
      if (x != mdp.goal() && !seen[y]) return false;
    }
  }
  return true;
}

/// Q indexed by state-action pair (the theta vector under the indicator basis).
using QTable = Vec;

inline double min_q(const Mdp& mdp, const QTable& q, int x) {
  double best = q(mdp.pair_index(x, 0));
  for (int u = 1; u < mdp.n_actions(x); ++u) {
    best = std::min(best, q(mdp.pair_index(x, u)));
  }
  return best;
}

/// Greedy action with lowest-index tie-breaking.
inline int greedy_action(const Mdp& mdp, const QTable& q, int x) {
  int best = 0;
  double best_val = q(mdp.pair_index(x, 0));
  for (int u = 1; u < mdp.n_actions(x); ++u) {
    const double v = q(mdp.pair_index(x, u));
    if (v < best_val) {
      best_val = v;
      best = u;
    }
  }
  return best;
}

/// Value iteration on Q; stops when the sup-norm update is below
/// tol * (1 - beta) / beta, which bounds the Bellman residual by tol.
inline QTable q_value_iteration(const Mdp& mdp, double tol = 1e-10) {
  if (tol <= 0.0) throw std::invalid_argument("q_value_iteration: tol > 0 required");
  QTable q = QTable::Zero(mdp.d());
  const double stop = tol * (1.0 - mdp.beta) / mdp.beta;
  for (int iter = 0; iter < 1000000; ++iter) {
    QTable next(mdp.d());
    for (int x = 0; x < mdp.n_states; ++x) {
      for (int u = 0; u < mdp.n_actions(x); ++u) {
        double backup = mdp.cost[x][u];
        const Vec& row = mdp.trans[x][u];
        for (int y = 0; y < mdp.n_states; ++y) {
          if (row(y) > 0.0) backup += mdp.beta * row(y) * min_q(mdp, q, y);
        }
        next(mdp.pair_index(x, u)) = backup;
      }
    }
    const double delta = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if (delta <= stop) break;
  }
  return q;
}

/// Sup-norm Bellman residual of a Q table.
inline double bellman_error(const Mdp& mdp, const QTable& q) {
  double worst = 0.0;
  for (int x = 0; x < mdp.n_states; ++x) {
    for (int u = 0; u < mdp.n_actions(x); ++u) {
      double backup = mdp.cost[x][u];
      const Vec& row = mdp.trans[x][u];
      for (int y = 0; y < mdp.n_states; ++y) {
        if (row(y) > 0.0) backup += mdp.beta * row(y) * min_q(mdp, q, y);
      }
      worst = std::max(worst, std::abs(backup - q(mdp.pair_index(x, u))));
    }
  }
  return worst;
}

struct Event {
  int x;
  int u;  // action index within actions[x]
  int x_next;
};

/// Exploration: async follows a trajectory with uniform random feasible
/// actions (restarting uniformly at a non-goal state when absorbed); clock
/// cycles deterministically through all state-action pairs.
struct ExplorationStream {
  enum class Kind { kAsync, kClock };
  Kind kind = Kind::kAsync;
  int state = 0;       // async only
  std::int64_t pos = 0;  // clock only

  static ExplorationStream async(int start_state = 0) {
    return {Kind::kAsync, start_state, 0};
  }
  static ExplorationStream clock() { return {Kind::kClock, 0, 0}; }
};

inline int sample_row(const Vec& row, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  for (Eigen::Index y = 0; y < row.size(); ++y) {
    u -= row(y);
    if (u <= 0.0) return static_cast<int>(y);
  }
  for (Eigen::Index y = row.size() - 1; y >= 0; --y) {
    if (row(y) > 0.0) return static_cast<int>(y);
  }
  return 0;
}

inline Event next_event(ExplorationStream& stream, const Mdp& mdp, Rng& rng) {
  Event event;
  if (stream.kind == ExplorationStream::Kind::kClock) {
    const auto [x, u] = mdp.pair_at(static_cast<int>(stream.pos % mdp.d()));
    ++stream.pos;
    event.x = x;
    event.u = u;
  } else {
    event.x = stream.state;
    std::uniform_int_distribution<int> pick(0, mdp.n_actions(event.x) - 1);
    event.u = pick(rng);
  }
  event.x_next = sample_row(mdp.trans[event.x][event.u], rng);
  if (stream.kind == ExplorationStream::Kind::kAsync) {
    if (event.x == mdp.goal()) {
      // The absorbing goal's single action is executed once, then the chain
      // restarts uniformly; every state-action pair keeps a positive visit
      // frequency (a singular goal row would otherwise leave matrix-gain
      // algorithms with an undetermined error direction).
      std::uniform_int_distribution<int> restart(0, mdp.n_states - 2);
      stream.state = restart(rng);
    } else {
      stream.state = event.x_next;
    }
  }
  return event;
}

// ---------------------------------------------------------------------------
// Serialization: plain text, enough to rebuild the instance bit-for-bit.

inline void save_mdp(const Mdp& mdp, std::ostream& os) {
  os << "polsa-mdp 1\n";
  os << "nodes " << mdp.n_states << "\n";
  os << "beta " << std::hexfloat << mdp.beta << "\n";
  os << "success_prob " << std::hexfloat << mdp.success_prob << std::defaultfloat << "\n";
  os << "seed " << mdp.seed << "\n";
  os << "edges " << mdp.edges.size() << "\n";
  for (const auto& [i, j] : mdp.edges) os << i << " " << j << "\n";
}

inline void save_mdp_file(const Mdp& mdp, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_mdp_file: cannot open " + path);
  save_mdp(mdp, os);
}

inline Mdp load_mdp(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "polsa-mdp" || version != 1) {
    throw std::runtime_error("load_mdp: not a polsa-mdp v1 file");
  }
  std::string key;
  int n_states = 0;
  double beta = 0.0, success_prob = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_edges = 0;
  // Hexfloat values are read via strtod: istream extraction does not accept
  // the hexfloat syntax it itself emits.
  auto read_double = [&is](const char* name) {
    std::string token;
    is >> token;
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
      throw std::runtime_error(std::string("load_mdp: bad number for ") + name +
                               ": '" + token + "'");
    }
    return value;
  };
  is >> key >> n_states;
  if (key != "nodes") throw std::runtime_error("load_mdp: expected 'nodes'");
  is >> key;
  if (key != "beta") throw std::runtime_error("load_mdp: expected 'beta'");
  beta = read_double("beta");
  is >> key;
  if (key != "success_prob") throw std::runtime_error("load_mdp: expected 'success_prob'");
  success_prob = read_double("success_prob");
  is >> key >> seed;
  if (key != "seed") throw std::runtime_error("load_mdp: expected 'seed'");
  is >> key >> n_edges;
  if (key != "edges") throw std::runtime_error("load_mdp: expected 'edges'");
  std::vector<std::pair<int, int>> edges(n_edges);
  for (auto& [i, j] : edges) is >> i >> j;
  if (!is) throw std::runtime_error("load_mdp: truncated file");
  return mdp_from_edges(n_states, std::move(edges), success_prob, beta, seed);
}

inline Mdp load_mdp_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_mdp_file: cannot open " + path);
  return load_mdp(is);
}

// ---------------------------------------------------------------------------
// Shipped instances.

/// Small 6-node shortest-path MDP (chain plus shortcuts), d = 16.
inline Mdp six_state_mdp() {
  std::vector<std::pair<int, int>> edges = {
      {0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 2}, {1, 3}, {2, 4}};
  return mdp_from_edges(6, std::move(edges), 0.8, 0.8);
}

// Seeds calibrated offline so the generated instances match the published
// state-action counts (d = 19 from a 10-node p = 0.2 graph, d = 117 from a
// 20-node p = 0.25 graph).
inline constexpr std::uint64_t kSeedD19 = 2336;
inline constexpr std::uint64_t kSeedD117 = 53;

inline Mdp mdp_preset(const std::string& name) {
  if (name == "six") return six_state_mdp();
  if (name == "d19") return random_graph_mdp(10, 0.2, 0.8, kSeedD19, 0.8);
  if (name == "d117") return random_graph_mdp(20, 0.25, 0.8, kSeedD117, 0.8);
  throw std::invalid_argument("unknown mdp preset: " + name);
}

}  // namespace polsa
