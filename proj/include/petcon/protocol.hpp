#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "petcon/digraph.hpp"
#include "petcon/errors.hpp"

namespace petcon {

/// Per-agent protocol parameters for the sampled event-triggered scheme.
///
/// Each agent i applies, over one sampling interval of length h, the input
///   u_i = -(delta_i / (h d_i)) * sum_j a_ij (xhat_i - xhat_j)
/// evaluated on the broadcast values xhat, possibly delayed by tau; agents
/// with in-degree zero apply no input. The trigger compares the squared
/// judgement error against sigma_i / (4 d_i) times the previous interval's
/// broadcast disagreement q_hat_i.
struct ProtocolParams {
  Eigen::VectorXd delta;  ///< per-agent gains, each in (0, 1/2)
  Eigen::VectorXd sigma;  ///< per-agent trigger thresholds, each in (0, 1 - 2 delta_i)
  double h = 1.0;         ///< sampling period, > 0
  double tau = 0.0;       ///< broadcast delay, in [0, h); delayed theory needs tau < h * beta
};

/// Largest admissible delay fraction beta = min over agents of
/// min{1, (1 - 2 delta_i - sigma_i) / (4 delta_i)}; delays tau < beta * h
/// preserve the convergence guarantee. Positive whenever the parameters
/// satisfy sigma_i < 1 - 2 delta_i.
inline double delay_bound(const ProtocolParams& p) {
  double beta = 1.0;
  for (Eigen::Index i = 0; i < p.delta.size(); ++i)
    beta = std::min(beta, (1.0 - 2.0 * p.delta(i) - p.sigma(i)) / (4.0 * p.delta(i)));
  return beta;
}

/// Structured result of validating a (digraph, parameters) pair.
struct ValidationReport {
  bool ok = true;
  std::vector<std::string> issues;

  void flag(const std::string& what) {
    ok = false;
    issues.push_back(what);
  }
};

/// Checks the convergence conditions against a digraph: vector lengths equal
/// the agent count, h > 0 and 0 <= tau < h, per agent 0 < delta_i < 1/2 and
/// 0 < sigma_i < 1 - 2 delta_i, all values finite, and the digraph has a
/// spanning tree. With `delayed`, tau must additionally satisfy
/// 0 < tau < h * beta (beta from delay_bound) — the delayed theorems need
/// strictly positive delay under the tightened bound.
inline ValidationReport validate(const Digraph& g, const ProtocolParams& p, bool delayed) {
  ValidationReport rep;
  const int n = g.size();
  if (p.delta.size() != n)
    rep.flag("delta: expected " + std::to_string(n) + " entries, got " +
             std::to_string(p.delta.size()));
  if (p.sigma.size() != n)
    rep.flag("sigma: expected " + std::to_string(n) + " entries, got " +
             std::to_string(p.sigma.size()));
  const bool h_ok = std::isfinite(p.h) && p.h > 0.0;
  if (!h_ok) rep.flag("h: must be finite and > 0");
  if (!std::isfinite(p.tau) || p.tau < 0.0)
    rep.flag("tau: must be finite and >= 0");
  else if (h_ok && p.tau >= p.h)
    rep.flag("tau: must be < h");

  bool agents_ok = p.delta.size() == n && p.sigma.size() == n;
  if (agents_ok)
    for (int i = 0; i < n; ++i) {
      const double d = p.delta(i);
      const double s = p.sigma(i);
      if (!std::isfinite(d) || d <= 0.0 || d >= 0.5) {
        rep.flag("delta[" + std::to_string(i + 1) + "]: must lie in (0, 1/2)");
        agents_ok = false;
      } else if (!std::isfinite(s) || s <= 0.0 || s >= 1.0 - 2.0 * d) {
        rep.flag("sigma[" + std::to_string(i + 1) + "]: must lie in (0, 1 - 2 delta)");
        agents_ok = false;
      }
    }

  if (delayed && agents_ok && h_ok && std::isfinite(p.tau)) {
    const double beta = delay_bound(p);
    if (p.tau <= 0.0 || p.tau >= p.h * beta)
      rep.flag("tau: delayed runs need 0 < tau < h*beta = " + std::to_string(p.h * beta));
  }
  if (!has_spanning_tree(g)) rep.flag("digraph: no agent can reach all others");
  return rep;
}

/// validate() with the delay-admissibility conditions applied exactly when
/// the parameters carry a positive delay.
inline ValidationReport validate(const Digraph& g, const ProtocolParams& p) {
  return validate(g, p, p.tau > 0.0);
}

/// Control input of agent i given the (possibly delayed) broadcast vector.
/// Zero when the agent has no in-neighbors.
inline double control_input(const Digraph& g, const ProtocolParams& p, int agent,
                            const Eigen::VectorXd& x_hat) {
  const int d = g.in_degree(agent);
  if (d == 0) return 0.0;
  double spread = 0.0;
  for (int j : g.in_neighbors(agent)) spread += x_hat(agent) - x_hat(j);
  return -(p.delta(agent) / (p.h * d)) * spread;
}

/// Broadcast disagreement of agent i: q_hat_i = sum_j a_ij (xhat_i - xhat_j)^2.
inline double q_hat(const Digraph& g, int agent, const Eigen::VectorXd& x_hat) {
  double q = 0.0;
  for (int j : g.in_neighbors(agent)) {
    const double diff = x_hat(agent) - x_hat(j);
    q += diff * diff;
  }
  return q;
}

inline Eigen::VectorXd q_hat_all(const Digraph& g, const Eigen::VectorXd& x_hat) {
  Eigen::VectorXd q(g.size());
  for (int i = 0; i < g.size(); ++i) q(i) = q_hat(g, i, x_hat);
  return q;
}

/// Per-agent broadcast bookkeeping between sampling instants. At t = 0
/// every agent broadcasts its initial state and the first q_hat snapshot is
/// taken; thereafter the engine refreshes q_hat_prev after each instant's
/// commits so that instant l judges against the values held over
/// [(l-1)h, lh).
struct TriggerState {
  Eigen::VectorXd x_hat;             ///< currently held broadcast values
  Eigen::VectorXd q_hat_prev;        ///< q_hat snapshot from the previous instant
  std::vector<long> last_event_step; ///< sampling index of each agent's last broadcast

  TriggerState(const Digraph& g, const Eigen::VectorXd& x0)
      : x_hat(x0),
        q_hat_prev(q_hat_all(g, x0)),
        last_event_step(static_cast<std::size_t>(x0.size()), 0) {}
};

/// Trigger test of agent i at a sampling instant: fires exactly when the
/// squared judgement error (x_current - held broadcast)^2 strictly exceeds
/// sigma_i * q_hat_prev_i / (4 d_i). Agents with no in-neighbors never fire
/// (their threshold is vacuous and their input identically zero). On a true
/// result the caller commits x_hat_i <- x_current.
inline bool trigger_check(const Digraph& g, const ProtocolParams& p, int agent, double x_current,
                          const TriggerState& state) {
  const int d = g.in_degree(agent);
  if (d == 0) return false;
  const double e = x_current - state.x_hat(agent);
  return e * e > p.sigma(agent) * state.q_hat_prev(agent) / (4.0 * d);
}

}  // namespace petcon
