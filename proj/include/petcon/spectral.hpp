#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "petcon/digraph.hpp"
#include "petcon/errors.hpp"

namespace petcon {

/// Tolerances used by the structural/spectral checks: exact-zero tests,
/// minimum-eigenvalue slack of positive semi-definite matrices, and residuals
/// of left null vectors. Dense double precision at n <= 100.
inline constexpr double kStructuralZeroTol = 1e-12;
inline constexpr double kPsdEigenvalueTol = -1e-9;
inline constexpr double kEigvecResidualTol = 1e-10;

/// Positive left null vector of a strongly connected digraph's Laplacian,
/// normalized to sum 1. Accepts any m x m block Laplacian, including the
/// 1x1 zero block of a singleton component, which yields (1).
///
/// Solves the stacked system [L^T; 1^T] xi = [0; 1] by least squares; the
/// system is consistent exactly when zero is a simple eigenvalue, and the
/// ones-row pins the normalization.
inline Eigen::VectorXd left_eigenvector(const Eigen::MatrixXd& block_laplacian) {
  const Eigen::Index m = block_laplacian.rows();
  if (m == 0 || block_laplacian.cols() != m)
    throw std::invalid_argument("left_eigenvector: block must be square and nonempty");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_probe(block_laplacian);
  if (rank_probe.rank() < m - 1)
    throw NotStronglyConnectedError("left_eigenvector: zero eigenvalue is not simple");

  Eigen::MatrixXd sys(m + 1, m);
  sys.topRows(m) = block_laplacian.transpose();
  sys.row(m).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs(m) = 1.0;
  Eigen::VectorXd xi = sys.colPivHouseholderQr().solve(rhs);

  const double residual = (xi.transpose() * block_laplacian).cwiseAbs().maxCoeff();
  if (residual > kEigvecResidualTol || xi.minCoeff() <= kStructuralZeroTol)
    throw NotStronglyConnectedError(
        "left_eigenvector: Laplacian has no positive left null vector "
        "(block is not strongly connected)");
  return xi;
}

/// Condensation of the interaction digraph into block upper triangular form.
///
/// Agents are permuted so the reordered Laplacian has one diagonal block per
/// strongly connected component and zeros below them; the unique component
/// with no external in-edges (the information root) is the last block K.
/// For each block the within-component Laplacian (tilde block), the
/// diagonal external-in-degree remainder H^k, and the positive left null
/// vector xi^k are precomputed.
struct SpectralDecomposition {
  /// permutation[p] = original agent index at reordered position p.
  std::vector<int> permutation;
  /// position_of[original agent] = reordered position.
  std::vector<int> position_of;
  std::vector<int> block_sizes;
  std::vector<int> block_offsets;
  /// Reordered Laplacian; block (k, j) is zero for j < k.
  Eigen::MatrixXd reordered_laplacian;
  /// Per-block Laplacian of the induced component subgraph.
  std::vector<Eigen::MatrixXd> tilde_blocks;
  /// Diagonal of H^k = L^{k,k} - tilde L^{k,k}; each entry counts in-edges
  /// from later blocks. Identically zero for the closed block.
  std::vector<Eigen::VectorXd> h_diag;
  /// Per-block positive left null vector of the tilde block, sum 1.
  std::vector<Eigen::VectorXd> xi;
  /// Index of the closed component; always block_count() - 1.
  int closed_scc_index = 0;

  int block_count() const { return static_cast<int>(block_sizes.size()); }

  Eigen::Block<const Eigen::MatrixXd> block(int k, int j) const {
    return reordered_laplacian.block(block_offsets[static_cast<std::size_t>(k)],
                                     block_offsets[static_cast<std::size_t>(j)],
                                     block_sizes[static_cast<std::size_t>(k)],
                                     block_sizes[static_cast<std::size_t>(j)]);
  }

  /// Original agent indices of block k, in reordered (ascending) order.
  std::vector<int> block_members(int k) const {
    const int off = block_offsets[static_cast<std::size_t>(k)];
    const int len = block_sizes[static_cast<std::size_t>(k)];
    return {permutation.begin() + off, permutation.begin() + off + len};
  }

  int block_of_agent(int original) const {
    const int pos = position_of[static_cast<std::size_t>(original)];
    int k = 0;
    while (k + 1 < block_count() && pos >= block_offsets[static_cast<std::size_t>(k + 1)]) ++k;
    return k;
  }
};

inline SpectralDecomposition condense(const Digraph& g) {
  const int n = g.size();
  auto comps = strongly_connected_components(g);
  const int num_comps = static_cast<int>(comps.size());

  // Membership map, then the condensation's receive-arcs (a -> b when some
  // agent of a receives from an agent of b).
  std::vector<int> comp_of(static_cast<std::size_t>(n), -1);
  for (int c = 0; c < num_comps; ++c)
    for (int v : comps[static_cast<std::size_t>(c)]) comp_of[static_cast<std::size_t>(v)] = c;

  std::vector<std::vector<int>> receives_from(static_cast<std::size_t>(num_comps));
  for (int i = 0; i < n; ++i)
    for (int j : g.in_neighbors(i)) {
      const int a = comp_of[static_cast<std::size_t>(i)];
      const int b = comp_of[static_cast<std::size_t>(j)];
      if (a != b) receives_from[static_cast<std::size_t>(a)].push_back(b);
    }
  for (auto& succ : receives_from) {
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
  }

  int sinks = 0;
  for (const auto& succ : receives_from)
    if (succ.empty()) ++sinks;
  if (sinks != 1)
    throw NoSpanningTreeError(
        "condense: the condensation has " + std::to_string(sinks) +
        " closed components; a spanning tree requires exactly one");

  // Longest receive-path length down to the closed component. Memoized DFS
  // over the (acyclic) condensation.
  std::vector<int> depth(static_cast<std::size_t>(num_comps), -1);
  auto depth_of = [&](auto&& self, int c) -> int {
    int& d = depth[static_cast<std::size_t>(c)];
    if (d != -1) return d;
    int best = 0;
    for (int b : receives_from[static_cast<std::size_t>(c)])
      best = std::max(best, 1 + self(self, b));
    return d = best;
  };
  for (int c = 0; c < num_comps; ++c) depth_of(depth_of, c);

  // Deepest receivers first, the closed component (depth 0) last; ties by
  // smallest original agent index for a reproducible permutation.
  std::vector<int> order(static_cast<std::size_t>(num_comps));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const int da = depth[static_cast<std::size_t>(a)];
    const int db = depth[static_cast<std::size_t>(b)];
    if (da != db) return da > db;
    return comps[static_cast<std::size_t>(a)].front() < comps[static_cast<std::size_t>(b)].front();
  });

  SpectralDecomposition out;
  out.permutation.reserve(static_cast<std::size_t>(n));
  for (int c : order) {
    out.block_offsets.push_back(static_cast<int>(out.permutation.size()));
    out.block_sizes.push_back(static_cast<int>(comps[static_cast<std::size_t>(c)].size()));
    out.permutation.insert(out.permutation.end(), comps[static_cast<std::size_t>(c)].begin(),
                           comps[static_cast<std::size_t>(c)].end());
  }
  out.position_of.assign(static_cast<std::size_t>(n), 0);
  for (int p = 0; p < n; ++p) out.position_of[static_cast<std::size_t>(out.permutation[static_cast<std::size_t>(p)])] = p;
  out.closed_scc_index = static_cast<int>(out.block_sizes.size()) - 1;

  const Eigen::MatrixXd L = laplacian(g);
  out.reordered_laplacian.resize(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      out.reordered_laplacian(p, q) =
          L(out.permutation[static_cast<std::size_t>(p)], out.permutation[static_cast<std::size_t>(q)]);

  for (int k = 0; k < out.block_count(); ++k) {
    const Eigen::MatrixXd diag_block = out.block(k, k);
    Eigen::MatrixXd tilde = diag_block;
    for (Eigen::Index i = 0; i < tilde.rows(); ++i)
      tilde(i, i) = -(diag_block.row(i).sum() - diag_block(i, i));
    out.tilde_blocks.push_back(tilde);
    out.h_diag.push_back((diag_block - tilde).diagonal());
    out.xi.push_back(left_eigenvector(tilde));
  }
  return out;
}

/// The Gramian pair of a strongly connected digraph: the symmetrized
/// weighted Laplacian R = (Xi L + L^T Xi) / 2 and the centering matrix
/// U = Xi - xi xi^T, with lambda2 the second-smallest eigenvalue of R and
/// mu_m the largest eigenvalue of U.
struct Gramians {
  Eigen::VectorXd xi;
  Eigen::MatrixXd R;
  Eigen::MatrixXd U;
  double lambda2 = 0.0;
  double mu_m = 0.0;
};

inline Gramians gramians(const Digraph& g) {
  if (!is_strongly_connected(g))
    throw NotStronglyConnectedError("gramians: digraph is not strongly connected");
  const Eigen::MatrixXd L = laplacian(g);
  Gramians out;
  out.xi = left_eigenvector(L);
  const Eigen::MatrixXd Xi = out.xi.asDiagonal();
  out.R = 0.5 * (Xi * L + L.transpose() * Xi);
  out.U = Xi - out.xi * out.xi.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_r(out.R);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_u(out.U);
  const Eigen::Index n = L.rows();
  out.lambda2 = n >= 2 ? es_r.eigenvalues()(1) : 0.0;
  out.mu_m = es_u.eigenvalues()(n - 1);
  return out;
}

}  // namespace petcon
