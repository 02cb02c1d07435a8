#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "petcon/analysis.hpp"
#include "petcon/engine.hpp"
#include "petcon/errors.hpp"
#include "petcon/io.hpp"
#include "petcon/scenario.hpp"

namespace petcon {

/// Exit codes shared by the command layer and the CLI binary.
/// 0 success, 1 I/O or internal failure, 2 validation failure,
/// 3 valid run that did not converge within the horizon.
enum ExitCode : int {
  kExitOk = 0,
  kExitIoError = 1,
  kExitInvalid = 2,
  kExitNotConverged = 3,
};

struct RunFlags {
  bool no_validate = false;     ///< run despite invariant violations
  bool record_substeps = false; ///< record lh + tau breakpoints when tau > 0
  std::optional<long> max_steps;
  std::optional<double> tol;
};

/// Executes one scenario into output_dir: trajectory.csv, events.csv,
/// summary.txt (echoed to `out`), and lyapunov.csv when the bound applies.
/// Validation issues go to `err` and exit 2 unless flags.no_validate.
inline int run_command(const Scenario& scenario, const std::filesystem::path& output_dir,
                       const RunFlags& flags, std::ostream& out, std::ostream& err) {
  Scenario sc = scenario;
  sc.config.record_substeps = flags.record_substeps;
  if (flags.max_steps) sc.config.horizon_steps = *flags.max_steps;
  if (flags.tol) sc.config.convergence_tol = *flags.tol;

  const ValidationReport rep = validate_scenario(sc);
  if (!rep.ok) {
    err << "validation failed for scenario '" << sc.name << "':\n";
    for (const auto& issue : rep.issues) err << "  - " << issue << "\n";
    if (!flags.no_validate) return kExitInvalid;
    err << "continuing anyway (--no-validate)\n";
  }

  Trajectory traj;
  std::optional<Digraph> graph;
  try {
    graph.emplace(sc.digraph());
    traj = run(*graph, sc.params, sc.x0, sc.config, /*skip_validation=*/true);
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return rep.ok ? kExitIoError : kExitInvalid;
  }

  std::optional<AnalysisReport> analysis;
  try {
    analysis = analyze(*graph, sc.params, sc.x0, traj);
  } catch (const std::exception&) {
    // No spanning tree (possible only under --no-validate): trajectory and
    // events are still written, theory-level predictions are not available.
  }

  std::ostringstream summary;
  summary << "scenario: " << sc.name << "\n";
  summary << "agents: " << sc.size() << "\n";
  if (analysis) summary << "predicted_c: " << format_double(analysis->predicted_c) << "\n";
  if (traj.converged_at)
    summary << "converged_at: l=" << *traj.converged_at << " (t="
            << format_double(static_cast<double>(*traj.converged_at) * sc.params.h) << ")\n";
  else
    summary << "converged_at: none within " << sc.config.horizon_steps << " steps\n";
  summary << "final_disagreement: " << format_double(disagreement(traj.final_state())) << "\n";
  summary << "events_per_agent:";
  {
    std::vector<long> counts(static_cast<std::size_t>(sc.size()), 0);
    for (const auto& e : traj.events) ++counts[static_cast<std::size_t>(e.agent)];
    for (int i = 0; i < sc.size(); ++i) summary << " " << (i + 1) << ":" << counts[static_cast<std::size_t>(i)];
    summary << "\n";
  }
  summary << "sampling_instants: " << traj.steps.back() + 1 << "\n";
  summary << "validation: " << (rep.ok ? "ok" : "failed (see stderr)") << "\n";
  if (analysis) {
    for (const auto& [name, ok] : analysis->checks)
      summary << "check_" << name << ": " << (ok ? "pass" : "fail") << "\n";
    if (!analysis->lyapunov_series.empty())
      summary << "lyapunov_bound: " << format_double(analysis->bound_constant) << "\n";
  } else {
    summary << "analysis: unavailable (no spanning tree)\n";
  }

  try {
    std::filesystem::create_directories(output_dir);
    std::ofstream traj_csv(output_dir / "trajectory.csv");
    std::ofstream events_csv(output_dir / "events.csv");
    std::ofstream summary_txt(output_dir / "summary.txt");
    if (!traj_csv || !events_csv || !summary_txt)
      throw ParseError("cannot open output files in '" + output_dir.string() + "'");
    write_trajectory_csv(traj_csv, traj);
    write_events_csv(events_csv, traj.events, sc.params.h);
    summary_txt << summary.str();
    if (analysis && !analysis->lyapunov_series.empty()) {
      std::ofstream lyap_csv(output_dir / "lyapunov.csv");
      if (!lyap_csv) throw ParseError("cannot open lyapunov.csv in '" + output_dir.string() + "'");
      write_lyapunov_csv(lyap_csv, analysis->lyapunov_series, analysis->bound_constant);
    }
  } catch (const std::exception& e) {
    err << "output failed: " << e.what() << "\n";
    return kExitIoError;
  }

  out << summary.str();
  return traj.converged_at ? kExitOk : kExitNotConverged;
}

/// Runs every scenario file into its own subdirectory of output_root (named
/// by file stem). Returns the worst per-scenario exit code; unreadable or
/// malformed files count as I/O failures.
inline int batch_command(const std::vector<std::filesystem::path>& files,
                         const std::filesystem::path& output_root, const RunFlags& flags,
                         std::ostream& out, std::ostream& err) {
  int worst = kExitOk;
  for (const auto& file : files) {
    out << "=== " << file.string() << "\n";
    int code = kExitOk;
    try {
      const Scenario sc = load_scenario(file, /*validate_invariants=*/false);
      code = run_command(sc, output_root / file.stem(), flags, out, err);
    } catch (const ValidationError& e) {
      err << e.what() << "\n";
      code = kExitInvalid;
    } catch (const std::exception& e) {
      err << file.string() << ": " << e.what() << "\n";
      code = kExitIoError;
    }
    out << "exit: " << code << "\n";
    worst = std::max(worst, code);
  }
  return worst;
}

}  // namespace petcon
