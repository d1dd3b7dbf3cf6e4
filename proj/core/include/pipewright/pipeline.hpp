#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pipewright/modality.hpp"

namespace pipewright {

enum class NodeKind { Input, Output, Function, Router, Decision, Script, GenericLLM };

std::string_view to_string(NodeKind k) noexcept;
std::optional<NodeKind> node_kind_from_string(std::string_view s) noexcept;

struct Port {
  std::string name;
  Modality modality = Modality::Text;
  bool operator==(const Port&) const = default;
  auto operator<=>(const Port&) const = default;
};

using ParamMap = std::map<std::string, std::string>;

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Function;
  std::string function_id;  // non-empty iff kind == Function
  ParamMap params;
  std::vector<Port> input_ports;
  std::vector<Port> output_ports;
  std::string payload;  // prompt (GenericLLM) or code (Script); opaque
  std::optional<std::string> model_id;  // bound by the matchmaker
  bool unresolved = false;              // matchmaker found no model or fallback

  const Port* input(std::string_view name) const noexcept;
  const Port* output(std::string_view name) const noexcept;

  bool operator==(const Node&) const = default;
};

struct PortRef {
  std::string node;
  std::string port;

  /// "node.port"; the port is split off at the last dot.
  std::string str() const { return node + "." + port; }
  static std::optional<PortRef> parse(std::string_view text);

  bool operator==(const PortRef&) const = default;
  auto operator<=>(const PortRef&) const = default;
};

struct Edge {
  PortRef from;
  PortRef to;

  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

/// A typed dataflow graph. Nodes are kept sorted by id and edges sorted
/// lexicographically (see canonicalize), which makes serialization and
/// comparison deterministic.
struct Pipeline {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::map<std::string, std::string> metadata;

  const Node* find(std::string_view id) const noexcept;
  Node* find(std::string_view id) noexcept;

  std::vector<const Edge*> edges_into(std::string_view node) const;
  std::vector<const Edge*> edges_out_of(std::string_view node) const;
  std::vector<const Node*> nodes_of_kind(NodeKind k) const;

  void canonicalize();
  bool operator==(const Pipeline&) const = default;
};

/// Node ids in a topological order (ties broken by id), or nullopt when the
/// edges between existing nodes contain a cycle. Edges naming missing nodes
/// are ignored.
std::optional<std::vector<std::string>> topological_order(const Pipeline& p);

/// One path of the chain-of-branches decomposition: everything upstream of a
/// single Output node.
struct Branch {
  std::string output_node_id;
  std::vector<std::string> node_ids_in_path_order;
  std::string comment;
  bool reachable_from_input = true;
};

/// One branch per Output node, in output-id order. A branch holds every node
/// that can reach its output (so shared prefixes repeat across branches),
/// listed in topological order. An output with no Input ancestor is reported
/// through `reachable_from_input = false`. Comments come from the pipeline
/// metadata key "branch.<output id>".
std::vector<Branch> extract_branches(const Pipeline& p);

enum class SpecRole { Input, Output };

struct SpecRow {
  SpecRole role = SpecRole::Input;
  std::string name;
  Modality modality = Modality::Text;
  std::optional<std::string> language;
  std::map<std::string, std::string> extra;
  bool operator==(const SpecRow&) const = default;
};

/// Inputs and outputs a solution must expose, with modality and parameters.
struct Specification {
  std::vector<SpecRow> rows;

  std::vector<const SpecRow*> inputs() const;
  std::vector<const SpecRow*> outputs() const;
  /// Throws ParseError when there is not at least one input and one output.
  void check() const;
  bool operator==(const Specification&) const = default;
};

}  // namespace pipewright
