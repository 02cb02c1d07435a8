#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "petcon/errors.hpp"

namespace petcon {

/// Directed interaction topology over agents 0..n-1 with unweighted adjacency.
/// The convention throughout is a(i, j) == 1 means agent i *receives*
/// information from agent j; the diagonal is zero and entries are exactly
/// 0 or 1. Instances are immutable after construction.
class Digraph {
 public:
  /// Build from an edge list of (receiver, source) pairs.
  Digraph(int n, const std::vector<std::pair<int, int>>& edges) {
    if (n <= 0) throw std::invalid_argument("Digraph: agent count must be positive");
    adj_ = Eigen::MatrixXi::Zero(n, n);
    for (const auto& [receiver, source] : edges) {
      if (receiver < 0 || receiver >= n || source < 0 || source >= n)
        throw std::invalid_argument("Digraph: edge endpoint out of range");
      if (receiver == source)
        throw std::invalid_argument("Digraph: self-loops are not allowed");
      if (adj_(receiver, source) != 0)
        throw std::invalid_argument("Digraph: duplicate edge");
      adj_(receiver, source) = 1;
    }
    build_lists();
  }

  /// Build from a dense adjacency matrix. Entries must be exactly 0 or 1
  /// with a zero diagonal; weighted matrices are rejected.
  explicit Digraph(const Eigen::MatrixXi& adjacency) : adj_(adjacency) {
    check_adjacency();
    build_lists();
  }

  explicit Digraph(const Eigen::MatrixXd& adjacency) {
    if (adjacency.rows() != adjacency.cols())
      throw std::invalid_argument("Digraph: adjacency must be square");
    adj_.resize(adjacency.rows(), adjacency.cols());
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i)
      for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
        const double v = adjacency(i, j);
        if (v != 0.0 && v != 1.0)
          throw std::invalid_argument("Digraph: adjacency entries must be exactly 0 or 1");
        adj_(i, j) = static_cast<int>(v);
      }
    check_adjacency();
    build_lists();
  }

  int size() const { return static_cast<int>(adj_.rows()); }

  /// a(receiver, source)
  bool has_edge(int receiver, int source) const { return adj_(receiver, source) != 0; }

  /// d_i: how many agents i receives from.
  int in_degree(int i) const { return in_degree_[static_cast<std::size_t>(i)]; }

  /// The agents j with a(i, j) == 1.
  const std::vector<int>& in_neighbors(int i) const {
    return sources_[static_cast<std::size_t>(i)];
  }

  /// The agents that receive from j (information-flow successors).
  const std::vector<int>& out_neighbors(int j) const {
    return receivers_[static_cast<std::size_t>(j)];
  }

  const Eigen::MatrixXi& adjacency() const { return adj_; }

  /// Subgraph induced on `agents` (kept in the given order).
  Digraph induced_subgraph(const std::vector<int>& agents) const {
    const int m = static_cast<int>(agents.size());
    Eigen::MatrixXi sub(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sub(i, j) = adj_(agents[i], agents[j]);
    return Digraph(sub);
  }

 private:
  void check_adjacency() {
    if (adj_.rows() != adj_.cols())
      throw std::invalid_argument("Digraph: adjacency must be square");
    if (adj_.rows() == 0) throw std::invalid_argument("Digraph: agent count must be positive");
    for (Eigen::Index i = 0; i < adj_.rows(); ++i) {
      if (adj_(i, i) != 0) throw std::invalid_argument("Digraph: diagonal must be zero");
      for (Eigen::Index j = 0; j < adj_.cols(); ++j)
        if (adj_(i, j) != 0 && adj_(i, j) != 1)
          throw std::invalid_argument("Digraph: adjacency entries must be exactly 0 or 1");
    }
  }

  void build_lists() {
    const int n = size();
    in_degree_.assign(static_cast<std::size_t>(n), 0);
    sources_.assign(static_cast<std::size_t>(n), {});
    receivers_.assign(static_cast<std::size_t>(n), {});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (adj_(i, j) != 0) {
          ++in_degree_[static_cast<std::size_t>(i)];
          sources_[static_cast<std::size_t>(i)].push_back(j);
          receivers_[static_cast<std::size_t>(j)].push_back(i);
        }
  }

  Eigen::MatrixXi adj_;
  std::vector<int> in_degree_;
  std::vector<std::vector<int>> sources_;
  std::vector<std::vector<int>> receivers_;
};

/// L = D - A with D = diag(in-degrees). Row sums are zero and the diagonal
/// carries the in-degrees.
inline Eigen::MatrixXd laplacian(const Digraph& g) {
  const int n = g.size();
  Eigen::MatrixXd L = -g.adjacency().cast<double>();
  for (int i = 0; i < n; ++i) L(i, i) = static_cast<double>(g.in_degree(i));
  return L;
}

namespace detail {

/// Agents reachable from `root` along information flow (root included).
inline std::vector<bool> reachable_from(const Digraph& g, int root) {
  std::vector<bool> seen(static_cast<std::size_t>(g.size()), false);
  std::vector<int> stack{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    for (int i : g.out_neighbors(j))
      if (!seen[static_cast<std::size_t>(i)]) {
        seen[static_cast<std::size_t>(i)] = true;
        stack.push_back(i);
      }
  }
  return seen;
}

/// Same walk against the flow (who can reach `root`).
inline std::vector<bool> reaching(const Digraph& g, int root) {
  std::vector<bool> seen(static_cast<std::size_t>(g.size()), false);
  std::vector<int> stack{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j : g.in_neighbors(i))
      if (!seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        stack.push_back(j);
      }
  }
  return seen;
}

}  // namespace detail

inline bool is_strongly_connected(const Digraph& g) {
  const auto fwd = detail::reachable_from(g, 0);
  if (std::find(fwd.begin(), fwd.end(), false) != fwd.end()) return false;
  const auto bwd = detail::reaching(g, 0);
  return std::find(bwd.begin(), bwd.end(), false) == bwd.end();
}

/// True iff some root node reaches every agent along information-flow paths.
inline bool has_spanning_tree(const Digraph& g) {
  for (int r = 0; r < g.size(); ++r) {
    const auto seen = detail::reachable_from(g, r);
    if (std::find(seen.begin(), seen.end(), false) == seen.end()) return true;
  }
  return false;
}

/// Strongly connected components, each sorted by agent index. Component
/// order is unspecified here; condense() imposes the block order.
inline std::vector<std::vector<int>> strongly_connected_components(const Digraph& g) {
  // Iterative Tarjan over the receive-direction adjacency.
  const int n = g.size();
  std::vector<int> index(static_cast<std::size_t>(n), -1);
  std::vector<int> lowlink(static_cast<std::size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> components;
  int next_index = 0;

  struct Frame {
    int node;
    std::size_t child;
  };
  std::vector<Frame> call;

  for (int start = 0; start < n; ++start) {
    if (index[static_cast<std::size_t>(start)] != -1) continue;
    call.push_back({start, 0});
    index[static_cast<std::size_t>(start)] = lowlink[static_cast<std::size_t>(start)] = next_index++;
    stack.push_back(start);
    on_stack[static_cast<std::size_t>(start)] = true;

    while (!call.empty()) {
      Frame& f = call.back();
      const auto& succ = g.in_neighbors(f.node);
      if (f.child < succ.size()) {
        const int w = succ[f.child++];
        if (index[static_cast<std::size_t>(w)] == -1) {
          index[static_cast<std::size_t>(w)] = lowlink[static_cast<std::size_t>(w)] = next_index++;
          stack.push_back(w);
          on_stack[static_cast<std::size_t>(w)] = true;
          call.push_back({w, 0});
        } else if (on_stack[static_cast<std::size_t>(w)]) {
          lowlink[static_cast<std::size_t>(f.node)] =
              std::min(lowlink[static_cast<std::size_t>(f.node)], index[static_cast<std::size_t>(w)]);
        }
      } else {
        if (lowlink[static_cast<std::size_t>(f.node)] == index[static_cast<std::size_t>(f.node)]) {
          std::vector<int> comp;
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(w)] = false;
            comp.push_back(w);
          } while (w != f.node);
          std::sort(comp.begin(), comp.end());
          components.push_back(std::move(comp));
        }
        const int done = f.node;
        call.pop_back();
        if (!call.empty()) {
          const int parent = call.back().node;
          lowlink[static_cast<std::size_t>(parent)] =
              std::min(lowlink[static_cast<std::size_t>(parent)], lowlink[static_cast<std::size_t>(done)]);
        }
      }
    }
  }
  return components;
}

}  // namespace petcon
