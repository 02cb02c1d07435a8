#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "petcon/digraph.hpp"
#include "petcon/engine.hpp"
#include "petcon/errors.hpp"
#include "petcon/protocol.hpp"

namespace petcon {

/// One self-contained experiment: topology, initial states, protocol
/// parameters, and run control. Serialized as versioned JSON; edges and
/// agents are 1-based in files, 0-based in memory.
struct Scenario {
  std::string name;
  std::vector<std::pair<int, int>> edges;  ///< (receiver, source), 0-based
  Eigen::VectorXd x0;
  ProtocolParams params;
  SimConfig config;

  int size() const { return static_cast<int>(x0.size()); }
  Digraph digraph() const { return Digraph(size(), edges); }
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key,
                                           const char* type_name,
                                           bool (nlohmann::json::*is_type)() const) {
  if (!j.contains(key)) throw SchemaError("missing field '" + key + "'");
  const nlohmann::json& v = j.at(key);
  if (!(v.*is_type)())
    throw SchemaError("field '" + key + "': expected " + type_name);
  return v;
}

inline Eigen::VectorXd number_array(const nlohmann::json& j, const std::string& key) {
  const auto& arr = require_field(j, key, "an array", &nlohmann::json::is_array);
  Eigen::VectorXd out(arr.size());
  Eigen::Index i = 0;
  for (const auto& v : arr) {
    if (!v.is_number())
      throw SchemaError("field '" + key + "': expected an array of numbers");
    out(i++) = v.get<double>();
  }
  return out;
}

}  // namespace detail

/// Structural validation of a scenario: sizes, edge sanity, all protocol and
/// run-control invariants, spanning tree. Returns every issue found.
inline ValidationReport validate_scenario(const Scenario& sc) {
  ValidationReport rep;
  const int n = sc.size();
  if (n < 1) rep.flag("x0: need at least one agent");

  bool edges_ok = true;
  std::set<std::pair<int, int>> seen;
  for (const auto& [recv, src] : sc.edges) {
    if (recv < 0 || recv >= n || src < 0 || src >= n) {
      rep.flag("edges: endpoint out of range in (" + std::to_string(recv + 1) + ", " +
               std::to_string(src + 1) + ")");
      edges_ok = false;
    } else if (recv == src) {
      rep.flag("edges: self-loop on agent " + std::to_string(recv + 1));
      edges_ok = false;
    } else if (!seen.insert({recv, src}).second) {
      rep.flag("edges: duplicate edge (" + std::to_string(recv + 1) + ", " +
               std::to_string(src + 1) + ")");
      edges_ok = false;
    }
  }
  if (!sc.x0.allFinite()) rep.flag("x0: entries must be finite");
  if (sc.config.horizon_steps < 1) rep.flag("horizon_steps: must be >= 1");
  if (!std::isfinite(sc.config.convergence_tol) || sc.config.convergence_tol <= 0.0)
    rep.flag("convergence_tol: must be finite and > 0");

  if (n >= 1 && edges_ok) {
    const ValidationReport inner = validate(sc.digraph(), sc.params);
    for (const auto& issue : inner.issues) rep.flag(issue);
  }
  return rep;
}

/// Builds a Scenario from parsed JSON. Enforces the exact schema — the ten
/// fields version, name, edges, x0, delta, sigma, h, tau, horizon_steps,
/// convergence_tol and nothing else — then checks all invariants.
/// Throws SchemaError (shape) or ValidationError (invariants), naming the
/// offending field.
inline Scenario from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("top level: expected an object");
  static const std::set<std::string> known = {"version", "name",  "edges", "x0",
                                              "delta",   "sigma", "h",     "tau",
                                              "horizon_steps", "convergence_tol"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw SchemaError("unexpected field '" + key + "'");

  const auto& version =
      detail::require_field(j, "version", "an integer", &nlohmann::json::is_number_integer);
  if (version.get<long>() != 1)
    throw SchemaError("field 'version': unsupported version " + version.dump());

  Scenario sc;
  sc.name = detail::require_field(j, "name", "a string", &nlohmann::json::is_string).get<std::string>();

  const auto& edges =
      detail::require_field(j, "edges", "an array", &nlohmann::json::is_array);
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw SchemaError("field 'edges': expected [receiver, source] integer pairs");
    sc.edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
  }

  sc.x0 = detail::number_array(j, "x0");
  sc.params.delta = detail::number_array(j, "delta");
  sc.params.sigma = detail::number_array(j, "sigma");
  sc.params.h = detail::require_field(j, "h", "a number", &nlohmann::json::is_number).get<double>();
  sc.params.tau =
      detail::require_field(j, "tau", "a number", &nlohmann::json::is_number).get<double>();
  sc.config.horizon_steps =
      detail::require_field(j, "horizon_steps", "an integer", &nlohmann::json::is_number_integer)
          .get<long>();
  sc.config.convergence_tol =
      detail::require_field(j, "convergence_tol", "a number", &nlohmann::json::is_number)
          .get<double>();
  return sc;
}

inline nlohmann::json to_json(const Scenario& sc) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [recv, src] : sc.edges) edges.push_back({recv + 1, src + 1});
  nlohmann::json x0 = nlohmann::json::array();
  for (Eigen::Index i = 0; i < sc.x0.size(); ++i) x0.push_back(sc.x0(i));
  nlohmann::json delta = nlohmann::json::array();
  for (Eigen::Index i = 0; i < sc.params.delta.size(); ++i) delta.push_back(sc.params.delta(i));
  nlohmann::json sigma = nlohmann::json::array();
  for (Eigen::Index i = 0; i < sc.params.sigma.size(); ++i) sigma.push_back(sc.params.sigma(i));
  return nlohmann::json{{"version", 1},
                        {"name", sc.name},
                        {"edges", edges},
                        {"x0", x0},
                        {"delta", delta},
                        {"sigma", sigma},
                        {"h", sc.params.h},
                        {"tau", sc.params.tau},
                        {"horizon_steps", sc.config.horizon_steps},
                        {"convergence_tol", sc.config.convergence_tol}};
}

/// Parses scenario text. Throws ParseError on malformed JSON; see from_json
/// for schema and validation errors.
inline Scenario parse_scenario(const std::string& text, bool validate_invariants = true) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  Scenario sc = from_json(j);
  if (validate_invariants) {
    const ValidationReport rep = validate_scenario(sc);
    if (!rep.ok) {
      std::string msg = "scenario '" + sc.name + "':";
      for (const auto& s : rep.issues) msg += "\n  - " + s;
      throw ValidationError(msg);
    }
  }
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path, bool validate_invariants = true) {
  std::ifstream in(path);
  if (!in) throw ParseError("scenario: cannot open '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario(text, validate_invariants);
}

inline void save_scenario(const std::filesystem::path& path, const Scenario& sc) {
  std::ofstream out(path);
  if (!out) throw ParseError("scenario: cannot open '" + path.string() + "' for writing");
  out << to_json(sc).dump(2) << "\n";
}

enum class TopologyKind { StronglyConnected, SpanningTree };

namespace detail {

/// Uniform double in [0, 1) from the raw 64-bit stream; fixed construction
/// so generated scenarios are bit-stable across platforms and library
/// versions.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Integer in [0, bound) by scaling; bound is tiny (< 2^32) so the bias is
/// far below anything observable and the draw count stays deterministic.
inline int uniform_int(std::mt19937_64& rng, int bound) {
  return static_cast<int>(uniform01(rng) * bound);
}

inline std::vector<int> random_permutation(std::mt19937_64& rng, int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(detail::uniform_int(rng, i + 1))]);
  return perm;
}

}  // namespace detail

/// Deterministic-in-seed random scenario of the requested topology class.
///
/// Strongly connected digraphs start from a directed Hamiltonian cycle on a
/// random agent order; spanning-tree (and deliberately not strongly
/// connected) digraphs start from a closed cycle (possibly a single root)
/// over a random subset, reached by nobody, plus an arborescence feeding
/// every remaining agent. Both classes then gain random extra edges — never
/// one that would let the closed set receive outside information. Gains and
/// thresholds are drawn inside the convergence conditions (0 < delta < 1/2,
/// 0 < sigma < 1 - 2 delta), initial states in [-10, 10], the sampling
/// period log-uniform in [0.01, 10], and tau = 0.
inline Scenario generate(TopologyKind kind, int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate: need at least two agents");
  std::mt19937_64 rng(seed);
  Scenario sc;

  const std::vector<int> perm = detail::random_permutation(rng, n);
  std::set<std::pair<int, int>> edge_set;
  int closed_size = n;
  if (kind == TopologyKind::StronglyConnected) {
    for (int i = 0; i < n; ++i)
      edge_set.insert({perm[static_cast<std::size_t>((i + 1) % n)], perm[static_cast<std::size_t>(i)]});
  } else {
    closed_size = 1 + detail::uniform_int(rng, n - 1);
    if (closed_size >= 2)
      for (int i = 0; i < closed_size; ++i)
        edge_set.insert({perm[static_cast<std::size_t>((i + 1) % closed_size)],
                         perm[static_cast<std::size_t>(i)]});
    for (int i = closed_size; i < n; ++i)
      edge_set.insert({perm[static_cast<std::size_t>(i)],
                       perm[static_cast<std::size_t>(detail::uniform_int(rng, i))]});
  }

  // Extra edges; receivers inside the closed set are off limits so the
  // closed component stays closed (and the spanning-tree class stays
  // non-strongly-connected).
  const double extra_prob = detail::uniform(rng, 0.0, 0.35);
  for (int pi = 0; pi < n; ++pi)
    for (int pj = 0; pj < n; ++pj) {
      if (pi == pj) continue;
      if (kind == TopologyKind::SpanningTree && pi < closed_size) continue;
      const int recv = perm[static_cast<std::size_t>(pi)];
      const int src = perm[static_cast<std::size_t>(pj)];
      const double draw = detail::uniform01(rng);
      if (draw < extra_prob) edge_set.insert({recv, src});
    }
  sc.edges.assign(edge_set.begin(), edge_set.end());

  sc.x0.resize(n);
  sc.params.delta.resize(n);
  sc.params.sigma.resize(n);
  for (int i = 0; i < n; ++i) sc.x0(i) = detail::uniform(rng, -10.0, 10.0);
  for (int i = 0; i < n; ++i) sc.params.delta(i) = detail::uniform(rng, 0.05, 0.45);
  for (int i = 0; i < n; ++i)
    sc.params.sigma(i) = detail::uniform(rng, 0.1, 0.9) * (1.0 - 2.0 * sc.params.delta(i));
  sc.params.h = std::pow(10.0, detail::uniform(rng, -2.0, 1.0));
  sc.params.tau = 0.0;

  const char* kind_name =
      kind == TopologyKind::StronglyConnected ? "strongly-connected" : "spanning-tree";
  sc.name = std::string(kind_name) + "-n" + std::to_string(n) + "-seed" + std::to_string(seed);
  return sc;
}

}  // namespace petcon
