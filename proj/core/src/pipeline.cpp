#include "pipewright/pipeline.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <unordered_map>

#include "pipewright/error.hpp"

namespace pipewright {
namespace {

const Port* find_port(const std::vector<Port>& ports, std::string_view name) {
  for (const auto& p : ports) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
    case NodeKind::Input: return "input";
    case NodeKind::Output: return "output";
    case NodeKind::Function: return "function";
    case NodeKind::Router: return "router";
    case NodeKind::Decision: return "decision";
    case NodeKind::Script: return "script";
    case NodeKind::GenericLLM: return "generic_llm";
  }
  return "function";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) noexcept {
  for (NodeKind k : {NodeKind::Input, NodeKind::Output, NodeKind::Function, NodeKind::Router,
                     NodeKind::Decision, NodeKind::Script, NodeKind::GenericLLM}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

const Port* Node::input(std::string_view name) const noexcept { return find_port(input_ports, name); }
const Port* Node::output(std::string_view name) const noexcept { return find_port(output_ports, name); }

std::optional<PortRef> PortRef::parse(std::string_view text) {
  auto dot = text.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size()) return std::nullopt;
  return PortRef{std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
}

const Node* Pipeline::find(std::string_view id) const noexcept {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const Node& n, std::string_view key) { return n.id < key; });
  if (it != nodes.end() && it->id == id) return &*it;
  // Tolerate pipelines that have not been canonicalized yet.
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

Node* Pipeline::find(std::string_view id) noexcept {
  return const_cast<Node*>(std::as_const(*this).find(id));
}

std::vector<const Edge*> Pipeline::edges_into(std::string_view node) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges) {
    if (e.to.node == node) out.push_back(&e);
  }
  return out;
}

std::vector<const Edge*> Pipeline::edges_out_of(std::string_view node) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges) {
    if (e.from.node == node) out.push_back(&e);
  }
  return out;
}

std::vector<const Node*> Pipeline::nodes_of_kind(NodeKind k) const {
  std::vector<const Node*> out;
  for (const auto& n : nodes) {
    if (n.kind == k) out.push_back(&n);
  }
  return out;
}

void Pipeline::canonicalize() {
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
  std::sort(edges.begin(), edges.end());
}

std::optional<std::vector<std::string>> topological_order(const Pipeline& p) {
  std::map<std::string, int> indegree;
  std::map<std::string, std::set<std::string>> succ;
  for (const auto& n : p.nodes) indegree[n.id] = 0;
  for (const auto& e : p.edges) {
    if (!indegree.count(e.from.node) || !indegree.count(e.to.node)) continue;
    if (succ[e.from.node].insert(e.to.node).second) ++indegree[e.to.node];
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.push(id);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto& s : succ[id]) {
      if (--indegree[s] == 0) ready.push(s);
    }
  }
  if (order.size() != indegree.size()) return std::nullopt;
  return order;
}

std::vector<Branch> extract_branches(const Pipeline& p) {
  auto order = topological_order(p);
  if (!order) throw Error("extract_branches: pipeline contains a cycle");
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < order->size(); ++i) rank[(*order)[i]] = i;

  std::unordered_map<std::string, std::vector<std::string>> pred;
  for (const auto& e : p.edges) {
    if (rank.count(e.from.node) && rank.count(e.to.node)) pred[e.to.node].push_back(e.from.node);
  }

  std::vector<Branch> branches;
  for (const Node* out : p.nodes_of_kind(NodeKind::Output)) {
    std::set<std::string> seen{out->id};
    std::vector<std::string> stack{out->id};
    while (!stack.empty()) {
      std::string id = stack.back();
      stack.pop_back();
      for (const auto& s : pred[id]) {
        if (seen.insert(s).second) stack.push_back(s);
      }
    }
    Branch b;
    b.output_node_id = out->id;
    b.node_ids_in_path_order.assign(seen.begin(), seen.end());
    std::sort(b.node_ids_in_path_order.begin(), b.node_ids_in_path_order.end(),
              [&](const std::string& a, const std::string& c) { return rank[a] < rank[c]; });
    b.reachable_from_input = std::any_of(seen.begin(), seen.end(), [&](const std::string& id) {
      const Node* n = p.find(id);
      return n && n->kind == NodeKind::Input;
    });
    if (auto it = p.metadata.find("branch." + out->id); it != p.metadata.end()) b.comment = it->second;
    branches.push_back(std::move(b));
  }
  std::sort(branches.begin(), branches.end(),
            [](const Branch& a, const Branch& b) { return a.output_node_id < b.output_node_id; });
  return branches;
}

std::vector<const SpecRow*> Specification::inputs() const {
  std::vector<const SpecRow*> out;
  for (const auto& r : rows) {
    if (r.role == SpecRole::Input) out.push_back(&r);
  }
  return out;
}

std::vector<const SpecRow*> Specification::outputs() const {
  std::vector<const SpecRow*> out;
  for (const auto& r : rows) {
    if (r.role == SpecRole::Output) out.push_back(&r);
  }
  return out;
}

void Specification::check() const {
  if (inputs().empty()) throw ParseError("specification", "at least one input row is required");
  if (outputs().empty()) throw ParseError("specification", "at least one output row is required");
}

}  // namespace pipewright
