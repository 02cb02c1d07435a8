#include "petcon/analysis.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "petcon/digraph.hpp"
#include "petcon/engine.hpp"
#include "petcon/scenario.hpp"

using petcon::Digraph;
using petcon::ProtocolParams;
using petcon::SimConfig;
using petcon::Trajectory;

namespace {

ProtocolParams uniform_params(int n, double delta, double sigma, double h, double tau = 0.0) {
  ProtocolParams p;
  p.delta = Eigen::VectorXd::Constant(n, delta);
  p.sigma = Eigen::VectorXd::Constant(n, sigma);
  p.h = h;
  p.tau = tau;
  return p;
}

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

TEST(PredictedConsensus, RootStateForChain) {
  const Digraph chain(3, {{1, 0}, {2, 1}});  // agent 0 is the root
  Eigen::VectorXd x0(3);
  x0 << 7.5, -3, 100;
  EXPECT_DOUBLE_EQ(petcon::predicted_consensus(chain, uniform_params(3, 0.25, 0.2, 1.0), x0),
                   7.5);
}

TEST(PredictedConsensus, WeightedAverageOnCycle) {
  const Digraph cycle(3, {{0, 1}, {1, 2}, {2, 0}});
  ProtocolParams p = uniform_params(3, 0.25, 0.2, 1.0);
  p.delta(1) = 0.2;  // weights proportional to (4, 5, 4)
  Eigen::VectorXd x0(3);
  x0 << 0, 0, 13;
  EXPECT_NEAR(petcon::predicted_consensus(cycle, p, x0), 4.0, 1e-12);
}

TEST(PredictedConsensus, UniformWeightsOnSymmetricRing) {
  const Digraph ring(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {0, 2}, {2, 0}});
  Eigen::VectorXd x0(3);
  x0 << 3, 6, 9;
  EXPECT_NEAR(petcon::predicted_consensus(ring, uniform_params(3, 0.25, 0.2, 1.0), x0), 6.0,
              1e-12);
}

TEST(PredictedConsensus, ThrowsWithoutSpanningTree) {
  Eigen::VectorXd x0(2);
  x0 << 1, 2;
  EXPECT_THROW(petcon::predicted_consensus(Digraph(2, {}), uniform_params(2, 0.25, 0.2, 1.0), x0),
               petcon::NoSpanningTreeError);
}

TEST(PredictedConsensus, ShiftEquivariant) {
  std::mt19937_64 rng(5);
  const auto sc = petcon::generate(petcon::TopologyKind::SpanningTree, 6, 31);
  const Digraph g = sc.digraph();
  const double base = petcon::predicted_consensus(g, sc.params, sc.x0);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = 200.0 * u01(rng) - 100.0;
    const Eigen::VectorXd shifted = sc.x0.array() + a;
    ASSERT_NEAR(petcon::predicted_consensus(g, sc.params, shifted), base + a,
                1e-10 * (1.0 + std::abs(base + a)));
  }
}

TEST(PredictedConsensus, IgnoresStatesOutsideClosedComponent) {
  std::mt19937_64 rng(6);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc =
        petcon::generate(petcon::TopologyKind::SpanningTree, 3 + static_cast<int>(seed % 5), seed);
    const Digraph g = sc.digraph();
    const auto decomp = petcon::condense(g);
    const Eigen::VectorXd w = petcon::consensus_weights(g, sc.params, decomp);
    const double base = petcon::predicted_consensus(g, sc.params, sc.x0);
    Eigen::VectorXd perturbed = sc.x0;
    for (int i = 0; i < g.size(); ++i)
      if (w(i) == 0.0) perturbed(i) += 1000.0 * u01(rng) - 500.0;
    ASSERT_EQ(petcon::predicted_consensus(g, sc.params, perturbed), base);
  }
}

TEST(ConsensusWeights, NormalizedOnClosedComponentOnly) {
  // Closed 2-cycle {0,1} feeding 2 downstream agents.
  const Digraph g(4, {{0, 1}, {1, 0}, {2, 0}, {3, 2}});
  ProtocolParams p = uniform_params(4, 0.25, 0.2, 1.0);
  p.delta(1) = 0.2;
  const Eigen::VectorXd w = petcon::consensus_weights(g, p, petcon::condense(g));
  EXPECT_GE(w.minCoeff(), 0.0);
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  EXPECT_EQ(w(2), 0.0);
  EXPECT_EQ(w(3), 0.0);
  EXPECT_NEAR(w(0), 4.0 / 9.0, 1e-12);  // delta^{-1} d xi = (4, 5) * 1/2, normalized
  EXPECT_NEAR(w(1), 5.0 / 9.0, 1e-12);
}

TEST(ConsensusWeights, SingletonRootGetsIndicatorWeight) {
  const Digraph chain(3, {{1, 0}, {2, 1}});
  const Eigen::VectorXd w =
      petcon::consensus_weights(chain, uniform_params(3, 0.25, 0.2, 1.0), petcon::condense(chain));
  EXPECT_EQ(w(0), 1.0);
  EXPECT_EQ(w(1), 0.0);
  EXPECT_EQ(w(2), 0.0);
}

TEST(Lyapunov, HandValues) {
  const Digraph g(2, {{0, 1}, {1, 0}});
  const ProtocolParams p = uniform_params(2, 0.25, 0.2, 1.0);
  const auto decomp = petcon::condense(g);
  EXPECT_DOUBLE_EQ(petcon::lyapunov(Eigen::VectorXd::Zero(2), 0.0, g, p, decomp), 0.0);
  Eigen::VectorXd x(2);
  x << 1, -1;
  EXPECT_DOUBLE_EQ(petcon::lyapunov(x, 0.0, g, p, decomp), 2.0);
}

TEST(Lyapunov, ShiftedFormVanishesAtReference) {
  // Spanning-tree variant: the non-closed blocks centered at c_ref.
  const Digraph g(3, {{1, 0}, {2, 1}});
  const ProtocolParams p = uniform_params(3, 0.25, 0.2, 1.0);
  const auto decomp = petcon::condense(g);
  const Eigen::VectorXd at_consensus = Eigen::VectorXd::Constant(3, 5.5);
  EXPECT_DOUBLE_EQ(petcon::lyapunov(at_consensus, 5.5, g, p, decomp), 0.0);
  Eigen::VectorXd off(3);
  off << 5.5, 6.5, 5.5;  // only agent 1 (in-degree 1) is off the reference
  EXPECT_DOUBLE_EQ(petcon::lyapunov(off, 5.5, g, p, decomp), 2.0);  // 1/2 * 1 * 1 * 4 * 1
}

TEST(LyapunovBoundCheck, PassesOnValidRuns) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto sc = petcon::generate(petcon::TopologyKind::StronglyConnected,
                                     3 + static_cast<int>(seed % 6), seed + 900);
    const Trajectory traj = petcon::run(sc.digraph(), sc.params, sc.x0);
    const petcon::LyapunovCheck check = petcon::lyapunov_bound_check(traj, sc.digraph(), sc.params);
    ASSERT_TRUE(check.passed) << "seed " << seed << " margin " << check.worst_margin;
  }
}

TEST(LyapunovBoundCheck, DetectsCorruptedTrajectory) {
  const auto sc = petcon::generate(petcon::TopologyKind::StronglyConnected, 4, 12);
  Trajectory traj = petcon::run(sc.digraph(), sc.params, sc.x0);
  ASSERT_GE(traj.states.size(), 6u);
  traj.states[5](0) += 1000.0;
  EXPECT_FALSE(petcon::lyapunov_bound_check(traj, sc.digraph(), sc.params).passed);
}

TEST(LyapunovBoundCheck, DelayedVariantUsesOffsetSamples) {
  auto sc = petcon::generate(petcon::TopologyKind::StronglyConnected, 5, 44);
  sc.params.tau = 0.9 * sc.params.h * petcon::delay_bound(sc.params);
  SimConfig cfg;
  cfg.record_substeps = true;
  const Trajectory traj = petcon::run(sc.digraph(), sc.params, sc.x0, cfg);
  const petcon::LyapunovCheck check = petcon::lyapunov_bound_check(traj, sc.digraph(), sc.params);
  EXPECT_TRUE(check.passed) << "margin " << check.worst_margin;
  for (const auto& s : check.series) EXPECT_GT(s.t, s.step * sc.params.h - 1e-12);

  // Without recorded substeps the delayed check is impossible and says so.
  const Trajectory bare = petcon::run(sc.digraph(), sc.params, sc.x0);
  EXPECT_THROW(petcon::lyapunov_bound_check(bare, sc.digraph(), sc.params), std::invalid_argument);
}

TEST(LyapunovBoundCheck, RequiresStrongConnectivity) {
  const auto sc = petcon::generate(petcon::TopologyKind::SpanningTree, 4, 2);
  const Trajectory traj = petcon::run(sc.digraph(), sc.params, sc.x0);
  EXPECT_THROW(petcon::lyapunov_bound_check(traj, sc.digraph(), sc.params),
               petcon::NotStronglyConnectedError);
}

TEST(ConservationCheck, HoldsAlongRuns) {
  const auto sc = petcon::generate(petcon::TopologyKind::StronglyConnected, 6, 77);
  const Digraph g = sc.digraph();
  const Trajectory traj = petcon::run(g, sc.params, sc.x0);
  const Eigen::VectorXd w = petcon::consensus_weights(g, sc.params, petcon::condense(g));
  const petcon::ConservationCheck check = petcon::conservation_check(traj, w);
  EXPECT_TRUE(check.passed) << "worst " << check.worst_deviation;
}

TEST(ConservationCheck, FlagsDrift) {
  const auto sc = petcon::generate(petcon::TopologyKind::StronglyConnected, 4, 78);
  const Digraph g = sc.digraph();
  Trajectory traj = petcon::run(g, sc.params, sc.x0);
  ASSERT_GE(traj.states.size(), 3u);
  traj.states[2].array() += 1.0;
  const Eigen::VectorXd w = petcon::consensus_weights(g, sc.params, petcon::condense(g));
  EXPECT_FALSE(petcon::conservation_check(traj, w).passed);
}

TEST(Lemma2Check, HandValues) {
  const Digraph g(2, {{0, 1}, {1, 0}});
  const Eigen::VectorXd delta = Eigen::VectorXd::Constant(2, 0.25);
  Eigen::VectorXd x_hat(2);
  x_hat << 0, 2;  // c_hat = 1, worst lhs 1, rhs 8
  const petcon::Lemma2Result res = petcon::lemma2_check(g, delta, x_hat);
  EXPECT_TRUE(res.passed);
  EXPECT_NEAR(res.worst_margin, 1.0 - 8.0, 1e-12);

  EXPECT_TRUE(petcon::lemma2_check(g, delta, Eigen::VectorXd::Constant(2, 3.0)).passed);
}

TEST(Lemma2Check, RejectsUnsuitableInputs) {
  const Eigen::VectorXd delta1 = Eigen::VectorXd::Constant(1, 0.25);
  EXPECT_THROW(petcon::lemma2_check(Digraph(1, {}), delta1, Eigen::VectorXd::Zero(1)),
               std::invalid_argument);
  const Eigen::VectorXd delta3 = Eigen::VectorXd::Constant(3, 0.25);
  EXPECT_THROW(petcon::lemma2_check(Digraph(3, {{1, 0}, {2, 1}}), delta3, Eigen::VectorXd::Zero(3)),
               petcon::NotStronglyConnectedError);
}

TEST(Lemma2Check, HoldsOnRandomTriples) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    const Digraph g = petcon::generate(petcon::TopologyKind::StronglyConnected, n,
                                       static_cast<std::uint64_t>(trial) + 5000)
                          .digraph();
    Eigen::VectorXd delta(n), x_hat(n);
    for (int i = 0; i < n; ++i) delta(i) = 0.05 + 0.4 * u01(rng);
    for (int i = 0; i < n; ++i) x_hat(i) = 20.0 * u01(rng) - 10.0;
    ASSERT_TRUE(petcon::lemma2_check(g, delta, x_hat).passed) << "trial " << trial;
  }
}

TEST(Analyze, ReportsAllChecksOnHealthyRun) {
  const auto sc = petcon::generate(petcon::TopologyKind::StronglyConnected, 5, 321);
  const Digraph g = sc.digraph();
  const Trajectory traj = petcon::run(g, sc.params, sc.x0);
  const petcon::AnalysisReport rep = petcon::analyze(g, sc.params, sc.x0, traj);
  EXPECT_TRUE(rep.all_passed());
  EXPECT_NEAR(rep.weights.sum(), 1.0, 1e-12);
  EXPECT_FALSE(rep.lyapunov_series.empty());
  ASSERT_TRUE(traj.converged_at.has_value());
  EXPECT_LE((traj.final_state().array() - rep.predicted_c).abs().maxCoeff(), 1e-6);
}

TEST(Analyze, ConvergedRunsLandOnPrediction) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const bool sc_kind = seed % 2 == 0;
    const auto sc = petcon::generate(sc_kind ? petcon::TopologyKind::StronglyConnected
                                             : petcon::TopologyKind::SpanningTree,
                                     3 + static_cast<int>(seed % 6), seed + 7000);
    const Digraph g = sc.digraph();
    const Trajectory traj = petcon::run(g, sc.params, sc.x0);
    ASSERT_TRUE(traj.converged_at.has_value()) << sc.name;
    const double c = petcon::predicted_consensus(g, sc.params, sc.x0);
    const double tol = std::max(10.0 * sc.config.convergence_tol, 1e-6);
    ASSERT_LE((traj.final_state().array() - c).abs().maxCoeff(), tol) << sc.name;
  }
}

}  // namespace
