#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipewright/catalog.hpp"
#include "pipewright/pipeline.hpp"

namespace pipewright {

/// One code per graph constraint. Declaration order is the report order.
enum class IssueCode {
  // node rules
  InputHasPredecessor,   // an input node has no previous nodes
  InputParamCount,       // an input node has exactly one output parameter
  OutputHasSuccessor,    // an output node has no next nodes
  DupOutput,             // no two output nodes on the same incoming link
  RouterPredecessor,     // a router is preceded by a single input node
  RouterOutputs,         // a router has >= 2 outputs of distinct modalities
  RouterChain,           // no router -> router connection
  UnknownFunction,       // function id is in the catalog
  InvalidParam,          // node params are catalog parameters with legal values
  MissingRequiredParam,  // every required input is fed by an edge or a param
  // edge rules
  MultipleIncoming,      // an input parameter has at most one incoming edge
  DanglingOutput,        // a non-output node's output parameter is consumed
  Unreachable,           // every node is reachable from an input node
  InvalidEndpoint,       // edges connect existing parameters
  ModalityMismatch,      // connected parameters share a modality
};

inline constexpr std::size_t kIssueCodeCount = 15;

enum class Fixability { Mechanical, LlmAssisted };

std::string_view to_string(IssueCode c) noexcept;
std::string_view to_string(Fixability f) noexcept;
std::optional<IssueCode> issue_code_from_string(std::string_view s) noexcept;
std::array<IssueCode, kIssueCodeCount> all_issue_codes() noexcept;

/// DUP_OUTPUT and INVALID_ENDPOINT have a deterministic rewrite; everything
/// else needs the builder to reconstruct part of the graph.
Fixability classify_fixability(IssueCode c) noexcept;
/// String form; throws NotFoundError for unknown codes.
Fixability classify_fixability(std::string_view code);

struct IssueLocation {
  std::vector<std::string> nodes;
  std::string port;  // port or parameter name, when the rule is port-level
  std::optional<Edge> edge;
  auto operator<=>(const IssueLocation&) const = default;
};

struct ValidationIssue {
  IssueCode code;
  Fixability fixability;
  IssueLocation location;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool is_valid() const noexcept { return issues.empty(); }
  std::size_t count(IssueCode c) const noexcept;
  std::size_t count(Fixability f) const noexcept;
};

/// Checks every graph constraint and reports one issue per violated
/// (rule, location), sorted by code then location. Never throws on bad
/// graphs; keeps going after the first violation.
ValidationReport validate(const Pipeline& p, const FunctionCatalog& catalog);

struct AppliedFix {
  IssueCode code;
  std::string description;
  std::vector<std::string> removed_nodes;
  std::vector<Edge> removed_edges;
};

struct FixResult {
  Pipeline pipeline;
  std::vector<AppliedFix> fixes;
};

/// Applies the rewrites for mechanical issues in `report` (which must come
/// from validate(p)): duplicate outputs keep the smallest node id, edges
/// with nonexistent endpoints are dropped. LLM-assisted issues are left
/// alone.
FixResult apply_mechanical_fixes(const Pipeline& p, const ValidationReport& report);

nlohmann::json report_to_json(const ValidationReport& r);

}  // namespace pipewright
