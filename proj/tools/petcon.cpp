#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "petcon/petcon.hpp"

namespace fs = std::filesystem;

namespace {

petcon::RunFlags make_flags(bool no_validate, bool record_substeps, long max_steps, double tol) {
  petcon::RunFlags flags;
  flags.no_validate = no_validate;
  flags.record_substeps = record_substeps;
  if (max_steps > 0) flags.max_steps = max_steps;
  if (tol > 0.0) flags.tol = tol;
  return flags;
}

int cmd_validate(const std::string& file) {
  try {
    const petcon::Scenario sc = petcon::load_scenario(file, /*validate_invariants=*/false);
    const petcon::ValidationReport rep = petcon::validate_scenario(sc);
    if (rep.ok) {
      std::cout << "scenario '" << sc.name << "': valid (" << sc.size() << " agents, "
                << sc.edges.size() << " edges)\n";
      return petcon::kExitOk;
    }
    std::cerr << "scenario '" << sc.name << "': invalid\n";
    for (const auto& issue : rep.issues) std::cerr << "  - " << issue << "\n";
    return petcon::kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return petcon::kExitIoError;
  }
}

int cmd_generate(const std::string& kind, int n, std::uint64_t seed, const std::string& out_file) {
  try {
    const petcon::TopologyKind k = kind == "strongly-connected"
                                       ? petcon::TopologyKind::StronglyConnected
                                       : petcon::TopologyKind::SpanningTree;
    const petcon::Scenario sc = petcon::generate(k, n, seed);
    if (out_file.empty())
      std::cout << petcon::to_json(sc).dump(2) << "\n";
    else
      petcon::save_scenario(out_file, sc);
    return petcon::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return petcon::kExitIoError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "petcon: event-triggered sampled-data consensus on directed graphs — "
      "simulate scenarios, check theory-level predictions, emit CSV results"};
  app.require_subcommand(1);

  std::string scenario_file;
  std::string output_dir = "out";
  bool no_validate = false;
  bool record_substeps = false;
  long max_steps = 0;
  double tol = 0.0;

  CLI::App* validate = app.add_subcommand("validate", "Check a scenario file's invariants");
  validate->add_option("scenario", scenario_file, "scenario JSON file")->required();

  CLI::App* run = app.add_subcommand("run", "Simulate one scenario and write CSV results");
  run->add_option("scenario", scenario_file, "scenario JSON file")->required();
  run->add_option("-o,--output", output_dir, "output directory (default: out)");
  run->add_flag("--no-validate", no_validate, "run even if invariants fail");
  run->add_flag("--record-substeps", record_substeps,
                "also record states at lh + tau (delayed runs)");
  run->add_option("--max-steps", max_steps, "override the scenario's horizon");
  run->add_option("--tol", tol, "override the scenario's convergence tolerance");

  std::string kind = "strongly-connected";
  int n = 5;
  std::uint64_t seed = 0;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("generate", "Emit a random scenario of a topology class");
  gen->add_option("--kind", kind, "strongly-connected | spanning-tree")
      ->check(CLI::IsMember({"strongly-connected", "spanning-tree"}));
  gen->add_option("-n,--agents", n, "agent count (>= 2)");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("-o,--output", gen_out, "output file (default: stdout)");

  std::vector<std::string> batch_files;
  CLI::App* batch = app.add_subcommand("batch", "Run many scenarios into per-scenario directories");
  batch->add_option("scenarios", batch_files, "scenario JSON files")->required();
  batch->add_option("-o,--output", output_dir, "output root (default: out)");
  batch->add_flag("--no-validate", no_validate, "run even if invariants fail");
  batch->add_flag("--record-substeps", record_substeps,
                  "also record states at lh + tau (delayed runs)");
  batch->add_option("--max-steps", max_steps, "override each scenario's horizon");
  batch->add_option("--tol", tol, "override each scenario's convergence tolerance");

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return cmd_validate(scenario_file);
  if (gen->parsed()) return cmd_generate(kind, n, seed, gen_out);

  const petcon::RunFlags flags = make_flags(no_validate, record_substeps, max_steps, tol);
  if (run->parsed()) {
    try {
      const petcon::Scenario sc =
          petcon::load_scenario(scenario_file, /*validate_invariants=*/false);
      return petcon::run_command(sc, output_dir, flags, std::cout, std::cerr);
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return petcon::kExitIoError;
    }
  }
  if (batch->parsed()) {
    std::vector<fs::path> files(batch_files.begin(), batch_files.end());
    return petcon::batch_command(files, output_dir, flags, std::cout, std::cerr);
  }
  return petcon::kExitIoError;
}
