#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "petcon/digraph.hpp"
#include "petcon/engine.hpp"
#include "petcon/errors.hpp"
#include "petcon/protocol.hpp"
#include "petcon/spectral.hpp"

namespace petcon {

/// Per-block left null vectors of a decomposition, scattered back to
/// original agent indexing (every agent gets its own block's xi entry).
inline Eigen::VectorXd xi_by_agent(const SpectralDecomposition& decomp) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(decomp.permutation.size()));
  for (int k = 0; k < decomp.block_count(); ++k) {
    const auto members = decomp.block_members(k);
    for (std::size_t i = 0; i < members.size(); ++i)
      out(members[i]) = decomp.xi[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(i));
  }
  return out;
}

/// Consensus weights mu as a full-length vector: proportional to
/// delta_i^{-1} d_i xi_i on the closed component, zero elsewhere, sum 1.
/// A singleton closed component gets the indicator weight directly — its
/// agent has no in-neighbors, applies zero input, and never moves.
///
/// The weighted sum mu . x(t) is conserved by the closed loop (with or
/// without delay), which is what makes mu . x(0) the consensus value.
inline Eigen::VectorXd consensus_weights(const Digraph& g, const ProtocolParams& p,
                                         const SpectralDecomposition& decomp) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(g.size());
  const int K = decomp.closed_scc_index;
  const auto members = decomp.block_members(K);
  if (members.size() == 1) {
    w(members.front()) = 1.0;
    return w;
  }
  const Eigen::VectorXd& xi = decomp.xi[static_cast<std::size_t>(K)];
  double total = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const int agent = members[i];
    const double wi = g.in_degree(agent) * xi(static_cast<Eigen::Index>(i)) / p.delta(agent);
    w(agent) = wi;
    total += wi;
  }
  w /= total;
  return w;
}

/// Theoretical consensus value: the mu-weighted average of the closed
/// component's initial states. Throws NoSpanningTreeError when the digraph
/// has no spanning tree (no unique closed component).
inline double predicted_consensus(const Digraph& g, const ProtocolParams& p,
                                  const Eigen::VectorXd& x0) {
  const SpectralDecomposition decomp = condense(g);
  return consensus_weights(g, p, decomp).dot(x0);
}

/// Quadratic storage function of the protocol. For a strongly connected
/// digraph this is V(x) = (1/2) x^T Xi D Delta^{-1} x (c_ref unused). With
/// several components it is the spanning-tree variant V1: the same form on
/// every non-closed block, centered at c_ref (agents with zero in-degree
/// contribute nothing either way, matching d_i = 0).
inline double lyapunov(const Eigen::VectorXd& x, double c_ref, const Digraph& g,
                       const ProtocolParams& p, const SpectralDecomposition& decomp) {
  const Eigen::VectorXd xi = xi_by_agent(decomp);
  const bool strongly = decomp.block_count() == 1;
  double v = 0.0;
  const int K = decomp.closed_scc_index;
  for (int k = 0; k < decomp.block_count(); ++k) {
    if (!strongly && k == K) continue;
    for (int agent : decomp.block_members(k)) {
      const double z = strongly ? x(agent) : x(agent) - c_ref;
      v += xi(agent) * g.in_degree(agent) / p.delta(agent) * z * z;
    }
  }
  return 0.5 * v;
}

struct LyapunovSample {
  long step = 0;
  double t = 0.0;
  double value = 0.0;
};

/// Outcome of checking the telescoped Lyapunov bound along a trajectory.
struct LyapunovCheck {
  bool passed = true;
  /// V at the first checked instant plus the q_hat(0) credit term.
  double bound = 0.0;
  /// max over checked instants of V - bound; negative means headroom.
  double worst_margin = -std::numeric_limits<double>::infinity();
  long worst_step = 0;
  std::vector<LyapunovSample> series;
};

/// Verifies the strongly connected storage bound along a run:
/// V(lh) <= V(h) + (1/4) sum_i xi_i sigma_i q_hat_i(0) for all l >= 1, up to
/// a slack of 1e-8 * (1 + bound). V need not decrease per instant —
/// transient increases financed by the previous interval's q_hat credit are
/// expected — but the telescoped bound must hold.
///
/// For delayed runs the checked samples are V(lh + tau), the credit
/// coefficient becomes sigma_i + 2 tau delta_i / h, and the baseline is
/// V(h + tau); the trajectory must have been recorded with substeps.
inline LyapunovCheck lyapunov_bound_check(const Trajectory& traj, const Digraph& g,
                                          const ProtocolParams& p) {
  const SpectralDecomposition decomp = condense(g);
  if (decomp.block_count() != 1)
    throw NotStronglyConnectedError("lyapunov_bound_check: digraph is not strongly connected");
  const bool delayed = p.tau > 0.0;
  if (traj.states.empty()) throw std::invalid_argument("lyapunov_bound_check: empty trajectory");

  const Eigen::VectorXd xi = xi_by_agent(decomp);
  const Eigen::VectorXd q0 = q_hat_all(g, traj.states.front());
  double credit = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double coeff = delayed ? p.sigma(i) + 2.0 * p.tau * p.delta(i) / p.h : p.sigma(i);
    credit += xi(i) * coeff * q0(i);
  }
  credit *= 0.25;

  LyapunovCheck out;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (traj.at_offset[k] != delayed || traj.steps[k] < 1) continue;
    out.series.push_back(
        {traj.steps[k], traj.times[k], lyapunov(traj.states[k], 0.0, g, p, decomp)});
  }
  if (out.series.empty()) {
    const bool has_offsets =
        std::find(traj.at_offset.begin(), traj.at_offset.end(), true) != traj.at_offset.end();
    if (delayed && !has_offsets && traj.steps.back() >= 1)
      throw std::invalid_argument(
          "lyapunov_bound_check: delayed trajectory lacks the lh + tau breakpoints "
          "(rerun with record_substeps)");
    // Converged before the first checkable instant; the bound is vacuous.
    return out;
  }

  out.bound = out.series.front().value + credit;
  const double tol = 1e-8 * (1.0 + out.bound);
  for (const auto& s : out.series) {
    const double margin = s.value - out.bound;
    if (margin > out.worst_margin) {
      out.worst_margin = margin;
      out.worst_step = s.step;
    }
  }
  out.passed = out.worst_margin <= tol;
  return out;
}

/// Outcome of checking conservation of the mu-weighted state sum.
struct ConservationCheck {
  bool passed = true;
  double reference = 0.0;  ///< mu . x at the first breakpoint
  /// max over breakpoints of |mu.x - reference| / (1 + |reference|).
  double worst_deviation = 0.0;
  double tol = 1e-8;
};

/// Verifies mu . x(t) is constant across every recorded breakpoint, to a
/// relative tolerance (hybrid-scaled by 1 + |initial value| so a zero
/// weighted sum stays checkable).
inline ConservationCheck conservation_check(const Trajectory& traj, const Eigen::VectorXd& weights,
                                            double rel_tol = 1e-8) {
  if (traj.states.empty()) throw std::invalid_argument("conservation_check: empty trajectory");
  ConservationCheck out;
  out.tol = rel_tol;
  out.reference = weights.dot(traj.states.front());
  const double denom = 1.0 + std::abs(out.reference);
  for (const auto& x : traj.states)
    out.worst_deviation = std::max(out.worst_deviation,
                                   std::abs(weights.dot(x) - out.reference) / denom);
  out.passed = out.worst_deviation <= rel_tol;
  return out;
}

struct Lemma2Result {
  bool passed = true;
  /// max over agents of (x_hat_j - c_hat)^2 - (n-1) sum_i q_hat_i.
  double worst_margin = -std::numeric_limits<double>::infinity();
  int worst_agent = 0;
};

/// Checks the broadcast-spread inequality on a strongly connected digraph
/// with n >= 2: for every agent j,
///   (x_hat_j - c_hat)^2 <= (n - 1) sum_i q_hat_i,
/// where c_hat is the mu-weighted average of the broadcasts (mu built from
/// delta as in consensus_weights). Values are centered on their mean first;
/// both sides are shift-invariant and this keeps the evaluation well
/// conditioned far from the origin.
inline Lemma2Result lemma2_check(const Digraph& g, const Eigen::VectorXd& delta,
                                 const Eigen::VectorXd& x_hat) {
  const int n = g.size();
  if (n < 2) throw std::invalid_argument("lemma2_check: needs at least two agents");
  if (!is_strongly_connected(g))
    throw NotStronglyConnectedError("lemma2_check: digraph is not strongly connected");

  const Eigen::VectorXd xi = left_eigenvector(laplacian(g));
  Eigen::VectorXd mu(n);
  for (int i = 0; i < n; ++i) mu(i) = g.in_degree(i) * xi(i) / delta(i);
  mu /= mu.sum();

  const Eigen::VectorXd centered = x_hat.array() - x_hat.mean();
  const double c_hat = mu.dot(centered);
  const double rhs = (n - 1) * q_hat_all(g, centered).sum();

  Lemma2Result out;
  for (int j = 0; j < n; ++j) {
    const double lhs = (centered(j) - c_hat) * (centered(j) - c_hat);
    const double margin = lhs - rhs;
    if (margin > out.worst_margin) {
      out.worst_margin = margin;
      out.worst_agent = j;
    }
  }
  out.passed = out.worst_margin <= 0.0;
  return out;
}

/// Everything the CLI summarizes about one run: the theoretical consensus
/// value and its weights, the storage-function series and bound (strongly
/// connected runs only), and named pass/fail checks.
struct AnalysisReport {
  double predicted_c = 0.0;
  Eigen::VectorXd weights;
  std::vector<LyapunovSample> lyapunov_series;
  double bound_constant = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, bool>> checks;

  bool all_passed() const {
    for (const auto& [name, ok] : checks)
      if (!ok) return false;
    return true;
  }
};

/// Runs every applicable check against a finished trajectory:
/// "converged", "limit_matches_prediction" (final states within limit_tol of
/// the predicted value), "conservation", and — for strongly connected
/// digraphs whose trajectories carry the needed breakpoints —
/// "lyapunov_bound".
inline AnalysisReport analyze(const Digraph& g, const ProtocolParams& p,
                              const Eigen::VectorXd& x0, const Trajectory& traj,
                              double limit_tol = 1e-6) {
  const SpectralDecomposition decomp = condense(g);
  AnalysisReport rep;
  rep.weights = consensus_weights(g, p, decomp);
  rep.predicted_c = rep.weights.dot(x0);

  const bool converged = traj.converged_at.has_value();
  rep.checks.emplace_back("converged", converged);

  bool limit_ok = converged;
  if (converged) {
    const Eigen::VectorXd err = traj.final_state().array() - rep.predicted_c;
    limit_ok = err.cwiseAbs().maxCoeff() <= limit_tol;
  }
  rep.checks.emplace_back("limit_matches_prediction", limit_ok);

  rep.checks.emplace_back("conservation", conservation_check(traj, rep.weights).passed);

  const bool can_check_bound =
      decomp.block_count() == 1 &&
      (p.tau == 0.0 || (!traj.at_offset.empty() &&
                        std::find(traj.at_offset.begin(), traj.at_offset.end(), true) !=
                            traj.at_offset.end()));
  if (can_check_bound) {
    const LyapunovCheck lc = lyapunov_bound_check(traj, g, p);
    rep.lyapunov_series = lc.series;
    rep.bound_constant = lc.bound;
    rep.checks.emplace_back("lyapunov_bound", lc.passed);
  }
  return rep;
}

}  // namespace petcon
