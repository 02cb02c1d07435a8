#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "petcon/digraph.hpp"
#include "petcon/errors.hpp"
#include "petcon/protocol.hpp"

namespace petcon {

/// Run-control knobs. The dynamics themselves live in ProtocolParams.
struct SimConfig {
  long horizon_steps = 100000;     ///< number of sampling periods to simulate, >= 1
  double convergence_tol = 1e-8;   ///< max-min disagreement declaring consensus, > 0
  bool record_substeps = false;    ///< also record states at lh + tau when tau > 0
};

/// A broadcast record: agent fired its trigger at sampling instant `step`
/// (time step * h). Timestamps are integer indices by construction, which
/// rules out Zeno accumulation structurally.
struct Event {
  int agent = 0;
  long step = 0;
};

/// Piecewise-linear closed-loop trajectory sampled at its breakpoints.
///
/// Breakpoints are the instants where the input changes: every sampling
/// instant lh, plus lh + tau for delayed runs when requested. `steps[k]`
/// is the sampling index l of breakpoint k and `at_offset[k]` marks the
/// lh + tau substeps. States are continuous across breakpoints; each stored
/// state is bitwise the start of the following segment.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<long> steps;
  std::vector<bool> at_offset;
  std::vector<Event> events;
  std::optional<long> converged_at;

  const Eigen::VectorXd& final_state() const { return states.back(); }
};

/// Max-min spread of a state vector; zero exactly at consensus.
inline double disagreement(const Eigen::VectorXd& x) {
  if (x.size() == 0) return 0.0;
  return x.maxCoeff() - x.minCoeff();
}

/// The per-period update matrix M = Delta D^{-1} L. Rows of agents with no
/// in-neighbors are zero (their input is identically zero), matching the
/// convention that D^{-1} acts only on positive in-degrees.
inline Eigen::MatrixXd closed_loop_matrix(const Digraph& g, const ProtocolParams& p) {
  const int n = g.size();
  Eigen::MatrixXd M = laplacian(g);
  for (int i = 0; i < n; ++i) {
    const int d = g.in_degree(i);
    if (d == 0)
      M.row(i).setZero();
    else
      M.row(i) *= p.delta(i) / d;
  }
  return M;
}

/// State advanced one full period under constant input from x_hat:
/// x((l+1)h) = x(lh) - Delta D^{-1} L x_hat. The sampling period cancels
/// against the 1/h in the control gain, so the map is h-independent.
inline Eigen::VectorXd step_undelayed(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat,
                                      const Digraph& g, const ProtocolParams& p) {
  const Eigen::MatrixXd M = closed_loop_matrix(g, p);
  return x - M * x_hat;
}

/// State advanced one period when broadcasts arrive tau late: the input on
/// [lh, lh+tau) still derives from x_hat_prev, switching to x_hat on
/// [lh+tau, (l+1)h). For the very first period (first_period = true) the
/// leading segment carries zero input because nothing has been broadcast
/// tau earlier.
inline Eigen::VectorXd step_delayed(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat_prev,
                                    const Eigen::VectorXd& x_hat, const Digraph& g,
                                    const ProtocolParams& p, bool first_period = false) {
  const Eigen::MatrixXd M = closed_loop_matrix(g, p);
  const Eigen::VectorXd mid =
      first_period ? x : Eigen::VectorXd(x - (p.tau / p.h) * (M * x_hat_prev));
  return mid - ((p.h - p.tau) / p.h) * (M * x_hat);
}

/// Simulates the sampled event-triggered loop from x0.
///
/// Per sampling instant: advance the state one period in closed form, then
/// judge every agent's trigger against the broadcasts held over the period
/// that just ended, commit the fired broadcasts, and snapshot the broadcast
/// disagreement q_hat for the next instant's thresholds. At l = 0 every
/// agent broadcasts its initial state. The run stops at the horizon or as
/// soon as the max-min disagreement at a sampling instant drops below
/// cfg.convergence_tol.
///
/// Throws InvalidParametersError unless (g, p, x0, cfg) validates (bypass
/// with skip_validation for exploratory runs) and NonFiniteStateError if the
/// state ever leaves the finite range.
inline Trajectory run(const Digraph& g, const ProtocolParams& p, const Eigen::VectorXd& x0,
                      const SimConfig& cfg = {}, bool skip_validation = false) {
  const int n = g.size();
  if (!skip_validation) {
    ValidationReport rep = validate(g, p);
    if (x0.size() != n)
      rep.flag("x0: expected " + std::to_string(n) + " entries, got " + std::to_string(x0.size()));
    else if (!x0.allFinite())
      rep.flag("x0: entries must be finite");
    if (cfg.horizon_steps < 1) rep.flag("horizon_steps: must be >= 1");
    if (!std::isfinite(cfg.convergence_tol) || cfg.convergence_tol <= 0.0)
      rep.flag("convergence_tol: must be finite and > 0");
    if (!rep.ok) {
      std::string msg = "run: invalid inputs:";
      for (const auto& s : rep.issues) msg += "\n  - " + s;
      throw InvalidParametersError(msg);
    }
  }

  const Eigen::MatrixXd M = closed_loop_matrix(g, p);
  const bool delayed = p.tau > 0.0;
  const bool substeps = delayed && cfg.record_substeps;

  Trajectory traj;
  traj.events.reserve(static_cast<std::size_t>(n));

  Eigen::VectorXd x = x0;
  TriggerState ts(g, x0);           // t = 0: every agent broadcasts its initial state
  Eigen::VectorXd x_hat_prev = x0;  // broadcasts held over the previous period
  for (int i = 0; i < n; ++i) traj.events.push_back({i, 0});

  auto record = [&](double t, long step, bool offset, const Eigen::VectorXd& state) {
    traj.times.push_back(t);
    traj.states.push_back(state);
    traj.steps.push_back(step);
    traj.at_offset.push_back(offset);
  };
  record(0.0, 0, false, x);
  if (disagreement(x) < cfg.convergence_tol) {
    traj.converged_at = 0;
    return traj;
  }

  for (long l = 0; l < cfg.horizon_steps; ++l) {
    if (delayed) {
      const Eigen::VectorXd mid =
          l == 0 ? x : Eigen::VectorXd(x - (p.tau / p.h) * (M * x_hat_prev));
      if (substeps) record(static_cast<double>(l) * p.h + p.tau, l, true, mid);
      x = mid - ((p.h - p.tau) / p.h) * (M * ts.x_hat);
    } else {
      x = x - M * ts.x_hat;
    }
    if (!x.allFinite())
      throw NonFiniteStateError("run: non-finite state at sampling instant " +
                                std::to_string(l + 1));

    const long instant = l + 1;
    record(static_cast<double>(instant) * p.h, instant, false, x);

    // Judge all triggers against the broadcasts and q_hat of the period that
    // just ended, then commit the fired updates together.
    x_hat_prev = ts.x_hat;
    std::vector<int> fired;
    for (int i = 0; i < n; ++i)
      if (trigger_check(g, p, i, x(i), ts)) fired.push_back(i);
    for (int i : fired) {
      ts.x_hat(i) = x(i);
      ts.last_event_step[static_cast<std::size_t>(i)] = instant;
      traj.events.push_back({i, instant});
    }
    ts.q_hat_prev = q_hat_all(g, ts.x_hat);

    if (disagreement(x) < cfg.convergence_tol) {
      traj.converged_at = instant;
      break;
    }
  }
  return traj;
}

}  // namespace petcon
