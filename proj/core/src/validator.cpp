#include "pipewright/validator.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "pipewright/error.hpp"

namespace pipewright {
namespace {

constexpr std::array<std::pair<IssueCode, std::string_view>, kIssueCodeCount> kCodeNames = {{
    {IssueCode::InputHasPredecessor, "INPUT_HAS_PREDECESSOR"},
    {IssueCode::InputParamCount, "INPUT_PARAM_COUNT"},
    {IssueCode::OutputHasSuccessor, "OUTPUT_HAS_SUCCESSOR"},
    {IssueCode::DupOutput, "DUP_OUTPUT"},
    {IssueCode::RouterPredecessor, "ROUTER_PREDECESSOR"},
    {IssueCode::RouterOutputs, "ROUTER_OUTPUTS"},
    {IssueCode::RouterChain, "ROUTER_CHAIN"},
    {IssueCode::UnknownFunction, "UNKNOWN_FUNCTION"},
    {IssueCode::InvalidParam, "INVALID_PARAM"},
    {IssueCode::MissingRequiredParam, "MISSING_REQUIRED_PARAM"},
    {IssueCode::MultipleIncoming, "MULTIPLE_INCOMING"},
    {IssueCode::DanglingOutput, "DANGLING_OUTPUT"},
    {IssueCode::Unreachable, "UNREACHABLE"},
    {IssueCode::InvalidEndpoint, "INVALID_ENDPOINT"},
    {IssueCode::ModalityMismatch, "MODALITY_MISMATCH"},
}};

class Checker {
 public:
  Checker(const Pipeline& p, const FunctionCatalog& catalog) : p_(p), catalog_(catalog) {
    for (const auto& n : p_.nodes) nodes_[n.id] = &n;
  }

  ValidationReport run() {
    if (p_.nodes.empty()) {
      add(IssueCode::Unreachable, {}, "pipeline has no nodes, so no input node to start from");
    }
    classify_edges();
    check_inputs();
    check_duplicate_outputs();
    check_routers();
    check_functions();
    check_incoming();
    check_dangling();
    check_reachability();

    std::stable_sort(report_.issues.begin(), report_.issues.end(),
                     [](const ValidationIssue& a, const ValidationIssue& b) {
                       if (a.code != b.code) return a.code < b.code;
                       return a.location < b.location;
                     });
    return std::move(report_);
  }

 private:
  // Port of `node` named `port` on the given side; nullopt when the node is
  // a function unknown to the catalog (ports cannot be checked).
  enum class PortState { Present, Missing, Unknown };

  PortState port_state(const Node& n, const std::string& port, bool output_side) const {
    if (n.kind == NodeKind::Function && !catalog_.find(n.function_id)) return PortState::Unknown;
    const Port* found = output_side ? n.output(port) : n.input(port);
    return found ? PortState::Present : PortState::Missing;
  }

  void add(IssueCode code, IssueLocation loc, std::string message) {
    report_.issues.push_back({code, classify_fixability(code), std::move(loc), std::move(message)});
  }

  void classify_edges() {
    for (const auto& e : p_.edges) {
      const Node* src = lookup(e.from.node);
      const Node* dst = lookup(e.to.node);
      if (!src || !dst) {
        add(IssueCode::InvalidEndpoint, {{}, "", e},
            "edge " + e.from.str() + " -> " + e.to.str() + " references a node that does not exist");
        continue;
      }
      bool attributed = false;
      if (dst->kind == NodeKind::Input) {
        add(IssueCode::InputHasPredecessor, {{dst->id}, "", e},
            "input node '" + dst->id + "' receives an edge from '" + src->id + "'");
        attributed = true;
      }
      if (src->kind == NodeKind::Output) {
        add(IssueCode::OutputHasSuccessor, {{src->id}, "", e},
            "output node '" + src->id + "' feeds '" + dst->id + "'");
        attributed = true;
      }
      if (attributed) continue;

      PortState s = port_state(*src, e.from.port, true);
      PortState d = port_state(*dst, e.to.port, false);
      if (s == PortState::Missing || d == PortState::Missing) {
        const PortRef& bad = s == PortState::Missing ? e.from : e.to;
        add(IssueCode::InvalidEndpoint, {{}, "", e},
            "edge " + e.from.str() + " -> " + e.to.str() + " uses nonexistent parameter " + bad.str());
        continue;
      }
      valid_.push_back(&e);
      if (s == PortState::Present && d == PortState::Present && dst->kind != NodeKind::Router) {
        Modality from = src->output(e.from.port)->modality;
        Modality to = dst->input(e.to.port)->modality;
        if (from != to) {
          add(IssueCode::ModalityMismatch, {{}, "", e},
              "edge " + e.from.str() + " -> " + e.to.str() + " connects " + std::string(to_string(from)) +
                  " to " + std::string(to_string(to)));
        }
      }
    }
  }

  void check_inputs() {
    for (const Node* n : p_.nodes_of_kind(NodeKind::Input)) {
      if (n->output_ports.size() != 1 || !n->input_ports.empty()) {
        add(IssueCode::InputParamCount, {{n->id}, "", {}},
            "input node '" + n->id + "' has " + std::to_string(n->output_ports.size()) + " output and " +
                std::to_string(n->input_ports.size()) + " input parameters; expected exactly one output");
      }
    }
  }

  void check_duplicate_outputs() {
    std::map<PortRef, std::set<std::string>> outputs_by_link;
    for (const Edge* e : valid_) {
      if (lookup(e->to.node)->kind == NodeKind::Output) outputs_by_link[e->from].insert(e->to.node);
    }
    for (const auto& [link, outs] : outputs_by_link) {
      if (outs.size() < 2) continue;
      add(IssueCode::DupOutput, {{outs.begin(), outs.end()}, link.port, {}},
          std::to_string(outs.size()) + " output nodes share the incoming link " + link.str());
    }
  }

  void check_routers() {
    for (const Node* r : p_.nodes_of_kind(NodeKind::Router)) {
      std::set<std::string> preds;
      bool fed_by_router = false;
      for (const Edge* e : valid_) {
        if (e->to.node != r->id) continue;
        const Node* src = lookup(e->from.node);
        preds.insert(src->id);
        if (src->kind == NodeKind::Router) {
          fed_by_router = true;
          add(IssueCode::RouterChain, {{src->id, r->id}, "", *e},
              "router '" + src->id + "' is connected to router '" + r->id + "'");
        }
      }
      if (!fed_by_router) {
        const Node* only = preds.size() == 1 ? lookup(*preds.begin()) : nullptr;
        if (!only || only->kind != NodeKind::Input) {
          add(IssueCode::RouterPredecessor, {{r->id}, "", {}},
              "router '" + r->id + "' must be preceded by exactly one input node (has " +
                  std::to_string(preds.size()) + " predecessors)");
        }
      }
      std::set<Modality> mods;
      for (const auto& port : r->output_ports) mods.insert(port.modality);
      if (r->output_ports.size() < 2 || mods.size() != r->output_ports.size()) {
        add(IssueCode::RouterOutputs, {{r->id}, "", {}},
            "router '" + r->id + "' needs two or more output parameters with distinct modalities");
      }
    }
  }

  void check_functions() {
    for (const Node* n : p_.nodes_of_kind(NodeKind::Function)) {
      const FunctionSpec* spec = catalog_.find(n->function_id);
      if (!spec) {
        add(IssueCode::UnknownFunction, {{n->id}, "", {}},
            "node '" + n->id + "' uses unknown function '" + n->function_id + "'");
        continue;
      }
      for (const auto& [name, value] : n->params) {
        const ParamSpec* ps = spec->input(name);
        if (!ps || !ps->configurable()) {
          add(IssueCode::InvalidParam, {{n->id}, name, {}},
              "'" + name + "' is not a parameter of " + spec->id);
        } else if (std::find(ps->allowed_values.begin(), ps->allowed_values.end(), value) ==
                   ps->allowed_values.end()) {
          add(IssueCode::InvalidParam, {{n->id}, name, {}},
              "value '" + value + "' is not allowed for " + spec->id + "." + name);
        }
      }
      for (const auto& in : spec->inputs) {
        if (!in.required) continue;
        bool fed = std::any_of(valid_.begin(), valid_.end(), [&](const Edge* e) {
          return e->to.node == n->id && e->to.port == in.name;
        });
        bool set_statically = in.configurable() && n->params.count(in.name);
        if (!fed && !set_statically) {
          add(IssueCode::MissingRequiredParam, {{n->id}, in.name, {}},
              "node '" + n->id + "' (" + spec->id + ") is missing required input '" + in.name + "'");
        }
      }
    }
  }

  void check_incoming() {
    std::map<PortRef, int> incoming;
    for (const Edge* e : valid_) ++incoming[e->to];
    for (const auto& [port, count] : incoming) {
      if (count > 1) {
        add(IssueCode::MultipleIncoming, {{port.node}, port.port, {}},
            "input parameter " + port.str() + " has " + std::to_string(count) + " incoming edges");
      }
    }
  }

  void check_dangling() {
    std::set<PortRef> consumed;
    for (const Edge* e : valid_) consumed.insert(e->from);
    for (const auto& n : p_.nodes) {
      if (n.kind == NodeKind::Output) continue;
      for (const auto& port : n.output_ports) {
        if (!consumed.count({n.id, port.name})) {
          add(IssueCode::DanglingOutput, {{n.id}, port.name, {}},
              "output parameter " + n.id + "." + port.name + " has no outgoing edge");
        }
      }
    }
  }

  void check_reachability() {
    std::set<std::string> seen;
    std::deque<std::string> queue;
    for (const Node* n : p_.nodes_of_kind(NodeKind::Input)) {
      seen.insert(n->id);
      queue.push_back(n->id);
    }
    std::map<std::string, std::vector<std::string>> succ;
    for (const Edge* e : valid_) succ[e->from.node].push_back(e->to.node);
    while (!queue.empty()) {
      std::string id = queue.front();
      queue.pop_front();
      for (const auto& s : succ[id]) {
        if (seen.insert(s).second) queue.push_back(s);
      }
    }
    for (const auto& n : p_.nodes) {
      if (!seen.count(n.id)) {
        add(IssueCode::Unreachable, {{n.id}, "", {}}, "node '" + n.id + "' is not reachable from any input node");
      }
    }
  }

  const Node* lookup(const std::string& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : it->second;
  }

  const Pipeline& p_;
  const FunctionCatalog& catalog_;
  std::map<std::string, const Node*> nodes_;
  std::vector<const Edge*> valid_;
  ValidationReport report_;
};

}  // namespace

std::string_view to_string(IssueCode c) noexcept {
  for (const auto& [code, name] : kCodeNames) {
    if (code == c) return name;
  }
  return "UNKNOWN";
}

std::string_view to_string(Fixability f) noexcept {
  return f == Fixability::Mechanical ? "mechanical" : "llm_assisted";
}

std::optional<IssueCode> issue_code_from_string(std::string_view s) noexcept {
  for (const auto& [code, name] : kCodeNames) {
    if (name == s) return code;
  }
  return std::nullopt;
}

std::array<IssueCode, kIssueCodeCount> all_issue_codes() noexcept {
  std::array<IssueCode, kIssueCodeCount> out{};
  for (std::size_t i = 0; i < kIssueCodeCount; ++i) out[i] = kCodeNames[i].first;
  return out;
}

Fixability classify_fixability(IssueCode c) noexcept {
  switch (c) {
    case IssueCode::DupOutput:
    case IssueCode::InvalidEndpoint:
      return Fixability::Mechanical;
    default:
      return Fixability::LlmAssisted;
  }
}

Fixability classify_fixability(std::string_view code) {
  auto c = issue_code_from_string(code);
  if (!c) throw NotFoundError("unknown issue code '" + std::string(code) + "'");
  return classify_fixability(*c);
}

std::size_t ValidationReport::count(IssueCode c) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [c](const ValidationIssue& i) { return i.code == c; }));
}

std::size_t ValidationReport::count(Fixability f) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [f](const ValidationIssue& i) { return i.fixability == f; }));
}

ValidationReport validate(const Pipeline& p, const FunctionCatalog& catalog) {
  return Checker(p, catalog).run();
}

FixResult apply_mechanical_fixes(const Pipeline& p, const ValidationReport& report) {
  FixResult result{p, {}};
  std::set<std::string> removed;
  std::set<Edge> dropped;

  for (const auto& issue : report.issues) {
    if (issue.code == IssueCode::DupOutput) {
      std::vector<std::string> survivors;
      for (const auto& id : issue.location.nodes) {
        if (!removed.count(id) && p.find(id)) survivors.push_back(id);
      }
      if (survivors.size() < 2) continue;
      std::sort(survivors.begin(), survivors.end());
      AppliedFix fix{issue.code, "kept output '" + survivors.front() + "', removed duplicates", {}, {}};
      for (std::size_t i = 1; i < survivors.size(); ++i) {
        removed.insert(survivors[i]);
        fix.removed_nodes.push_back(survivors[i]);
      }
      result.fixes.push_back(std::move(fix));
    } else if (issue.code == IssueCode::InvalidEndpoint && issue.location.edge) {
      if (dropped.insert(*issue.location.edge).second) {
        result.fixes.push_back({issue.code, "removed edge " + issue.location.edge->from.str() + " -> " +
                                                issue.location.edge->to.str(),
                                {}, {*issue.location.edge}});
      }
    }
  }

  auto& out = result.pipeline;
  std::erase_if(out.nodes, [&](const Node& n) { return removed.count(n.id) > 0; });
  std::erase_if(out.edges, [&](const Edge& e) {
    return dropped.count(e) || removed.count(e.from.node) || removed.count(e.to.node);
  });
  for (const auto& id : removed) out.metadata.erase("branch." + id);
  out.canonicalize();
  return result;
}

nlohmann::json report_to_json(const ValidationReport& r) {
  nlohmann::json issues = nlohmann::json::array();
  for (const auto& i : r.issues) {
    nlohmann::json loc = {{"nodes", i.location.nodes}};
    if (!i.location.port.empty()) loc["port"] = i.location.port;
    if (i.location.edge) loc["edge"] = {{"from", i.location.edge->from.str()}, {"to", i.location.edge->to.str()}};
    issues.push_back({{"code", to_string(i.code)},
                      {"fixability", to_string(i.fixability)},
                      {"location", std::move(loc)},
                      {"message", i.message}});
  }
  return {{"issues", std::move(issues)}, {"is_valid", r.is_valid()}};
}

}  // namespace pipewright
