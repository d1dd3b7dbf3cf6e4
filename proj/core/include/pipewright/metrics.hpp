#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipewright/pipeline.hpp"

namespace pipewright {

using Embedding = std::vector<double>;
using EmbedFn = std::function<Embedding(const std::string&)>;
/// Decides whether two script bodies perform the same task.
using CodeEquivalenceFn = std::function<bool(const std::string&, const std::string&)>;

struct MatchConfig {
  double prompt_similarity_threshold = 0.5;
  double edit_cost = 1.0;
  std::chrono::duration<double> time_budget{60.0};
  /// Prompt embeddings for generic LLM nodes. Defaults to the hashing
  /// token-count embedder.
  EmbedFn embed;
  /// Defaults to byte equality of the normalized code.
  CodeEquivalenceFn code_equivalence;

  /// Throws std::invalid_argument when a field is out of range.
  void check() const;
};

bool node_match(const Node& a, const Node& b, const MatchConfig& cfg);

/// Node mapping from the graph of `a` into the graph of `b`.
using NodeMapping = std::map<std::string, std::string>;

bool edge_match(const Edge& a, const Edge& b, const NodeMapping& mapping);

struct ExactMatchResult {
  bool matched = false;
  NodeMapping witness;  // gen node id -> ref node id
};

/// Isomorphism test under node_match / edge_match (VF2 state-space search,
/// with candidate pairs pre-filtered by node signature).
ExactMatchResult exact_match(const Pipeline& gen, const Pipeline& ref, const MatchConfig& cfg);

enum class EditKind { Insert, Delete, Substitute };
enum class EditEntity { Node, Edge };
enum class SubstitutionCause { ParameterMismatch, WrongFunction, WrongNodeType, PayloadMismatch };

std::string_view to_string(EditKind k) noexcept;
std::string_view to_string(EditEntity e) noexcept;
std::string_view to_string(SubstitutionCause c) noexcept;

struct EditOp {
  EditKind kind;
  EditEntity entity;
  std::string detail;
  std::optional<SubstitutionCause> cause;  // node substitutions only
};

struct GedResult {
  double distance = 0.0;
  std::vector<EditOp> edit_script;
  double normalized = 0.0;  // distance / (|nodes_ref| + |edges_ref|)
  bool timed_out = false;
  std::uint64_t expanded_states = 0;
};

/// Depth-first branch-and-bound graph edit distance from `gen` to `ref`
/// (deleting what only gen has, inserting what only ref has). Optimal
/// unless the time budget runs out, in which case the best path found so
/// far is returned with timed_out set.
GedResult ged(const Pipeline& gen, const Pipeline& ref, const MatchConfig& cfg);

/// Cause of substituting node a by node b (they must not match).
SubstitutionCause substitution_cause(const Node& a, const Node& b);

struct EditHistogram {
  std::map<std::string, std::size_t> by_kind;       // "insert", "delete", "substitute"
  std::map<std::string, std::size_t> by_operation;  // "substitute_node", ...
  std::map<std::string, std::size_t> by_cause;
  std::size_t total_operations = 0;
  std::size_t total_substitutions = 0;

  /// count / total for each bucket; empty when there are no operations.
  std::map<std::string, double> kind_shares() const;
  std::map<std::string, double> operation_shares() const;
  std::map<std::string, double> cause_shares() const;
};

EditHistogram error_breakdown(const std::vector<GedResult>& results);

nlohmann::json ged_to_json(const GedResult& r);

}  // namespace pipewright
