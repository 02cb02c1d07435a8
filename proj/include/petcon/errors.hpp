#pragma once

#include <stdexcept>
#include <string>

namespace petcon {

/// The condensation of the interaction digraph has no unique root component,
/// so no node can reach every other along information-flow paths.
struct NoSpanningTreeError : std::runtime_error {
  explicit NoSpanningTreeError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation that requires a strongly connected (sub)graph was handed one
/// that is not (zero is not a simple eigenvalue of the Laplacian, or the left
/// null vector is not entrywise positive).
struct NotStronglyConnectedError : std::runtime_error {
  explicit NotStronglyConnectedError(const std::string& what) : std::runtime_error(what) {}
};

/// Protocol parameters fail the consensus conditions and the caller did not
/// ask for an unchecked run.
struct InvalidParametersError : std::runtime_error {
  explicit InvalidParametersError(const std::string& what) : std::runtime_error(what) {}
};

/// A simulated state stopped being finite. The closed loop under valid
/// parameters cannot produce this; it signals a harness or input bug.
struct NonFiniteStateError : std::runtime_error {
  explicit NonFiniteStateError(const std::string& what) : std::runtime_error(what) {}
};

/// Scenario file is not syntactically valid JSON.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Scenario file parses but has missing, extra, or wrongly typed fields.
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// Scenario fields are well formed but break an invariant (range, duplicate
/// edge, inconsistent lengths, ...). The message names the offending field.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace petcon
