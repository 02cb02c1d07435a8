#pragma once

// Deliberately independent re-implementations used to cross-check the
// library: reachability by Floyd-Warshall transitive closure (the library
// uses BFS), components by mutual-reachability partitioning (the library
// uses Tarjan), and a fine-grid Euler integrator working from the per-agent
// formulas with plain arrays (the library steps in closed form with Eigen).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

/// reach(i, j): information can flow from agent i to agent j. A(j, i) = 1
/// means j receives from i, i.e. an i -> j information arc.
inline std::vector<std::vector<bool>> reach_matrix(const Eigen::MatrixXi& adj) {
  const int n = static_cast<int>(adj.rows());
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n),
                                       std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (int j = 0; j < n; ++j)
      if (adj(j, i) != 0) reach[i][j] = true;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (reach[i][k])
        for (int j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = true;
  return reach;
}

inline bool is_strongly_connected(const Eigen::MatrixXi& adj) {
  const auto reach = reach_matrix(adj);
  const int n = static_cast<int>(adj.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!reach[i][j]) return false;
  return true;
}

inline bool has_spanning_tree(const Eigen::MatrixXi& adj) {
  const auto reach = reach_matrix(adj);
  const int n = static_cast<int>(adj.rows());
  for (int root = 0; root < n; ++root) {
    bool all = true;
    for (int j = 0; j < n && all; ++j) all = reach[root][j];
    if (all) return true;
  }
  return false;
}

/// Components of mutual reachability, each sorted, ordered by smallest
/// member.
inline std::vector<std::vector<int>> sccs(const Eigen::MatrixXi& adj) {
  const auto reach = reach_matrix(adj);
  const int n = static_cast<int>(adj.rows());
  std::vector<bool> placed(static_cast<std::size_t>(n), false);
  std::vector<std::vector<int>> comps;
  for (int i = 0; i < n; ++i) {
    if (placed[i]) continue;
    std::vector<int> comp;
    for (int j = 0; j < n; ++j)
      if (reach[i][j] && reach[j][i]) {
        comp.push_back(j);
        placed[j] = true;
      }
    comps.push_back(comp);
  }
  return comps;
}

struct EulerResult {
  /// State after each sampling period, starting with x0 (index = instant l).
  std::vector<std::vector<double>> samples;
  /// (agent, instant) broadcasts, including all agents at instant 0.
  std::vector<std::pair<int, long>> events;
  long converged_at = -1;
};

/// Integrates the per-agent loop with explicit Euler substeps. The input is
/// piecewise constant so Euler on an exact subdivision of each period is
/// exact up to rounding; this checks the closed-form stepping independently.
/// Undelayed protocol only (tau = 0).
inline EulerResult euler_run(const Eigen::MatrixXi& adj, const std::vector<double>& delta,
                             const std::vector<double>& sigma, double h,
                             const std::vector<double>& x0, long substeps, long horizon,
                             double tol) {
  const int n = static_cast<int>(adj.rows());
  std::vector<int> deg(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) deg[i] += adj(i, j);

  std::vector<double> x = x0;
  std::vector<double> x_hat = x0;
  EulerResult out;
  out.samples.push_back(x);
  for (int i = 0; i < n; ++i) out.events.push_back({i, 0});

  auto spread = [&](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  auto q_of = [&](int i) {
    double q = 0.0;
    for (int j = 0; j < n; ++j)
      if (adj(i, j) != 0) q += (x_hat[i] - x_hat[j]) * (x_hat[i] - x_hat[j]);
    return q;
  };
  if (spread(x) < tol) {
    out.converged_at = 0;
    return out;
  }

  std::vector<double> q_prev(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) q_prev[i] = q_of(i);

  const double dt = h / static_cast<double>(substeps);
  for (long l = 0; l < horizon; ++l) {
    std::vector<double> u(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      if (deg[i] == 0) continue;
      double s = 0.0;
      for (int j = 0; j < n; ++j)
        if (adj(i, j) != 0) s += x_hat[i] - x_hat[j];
      u[i] = -delta[i] / (h * deg[i]) * s;
    }
    for (long k = 0; k < substeps; ++k)
      for (int i = 0; i < n; ++i) x[i] += dt * u[i];

    out.samples.push_back(x);
    const long instant = l + 1;
    std::vector<int> fired;
    for (int i = 0; i < n; ++i) {
      if (deg[i] == 0) continue;
      const double e = x[i] - x_hat[i];
      if (e * e > sigma[i] * q_prev[i] / (4.0 * deg[i])) fired.push_back(i);
    }
    for (int i : fired) {
      x_hat[i] = x[i];
      out.events.push_back({i, instant});
    }
    for (int i = 0; i < n; ++i) q_prev[i] = q_of(i);

    if (spread(x) < tol) {
      out.converged_at = instant;
      break;
    }
  }
  return out;
}

/// All n-agent 0/1 adjacency matrices with zero diagonal, indexed by the bit
/// pattern of their off-diagonal entries in row-major order.
inline Eigen::MatrixXi digraph_from_bits(int n, std::uint64_t bits) {
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  int bit = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (bits >> bit & 1) adj(i, j) = 1;
      ++bit;
    }
  return adj;
}

inline std::uint64_t digraph_count(int n) { return std::uint64_t{1} << (n * (n - 1)); }

}  // namespace oracle
