#include <sstream>

#include "agent_util.hpp"
#include "pipewright/agents.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/prompts.hpp"
#include "pipewright/synthesis.hpp"

namespace pipewright {

using detail::trim;

SyntaxInspection inspector_syntax(const Pipeline& draft, const FunctionCatalog& catalog) {
  SyntaxInspection out;
  auto first = validate(draft, catalog);
  auto fixed = apply_mechanical_fixes(draft, first);
  out.pipeline = std::move(fixed.pipeline);
  out.fixes = std::move(fixed.fixes);
  out.report = out.fixes.empty() ? std::move(first) : validate(out.pipeline, catalog);
  return out;
}

std::string describe_branch(const Pipeline& p, const Branch& b) {
  std::ostringstream out;
  int step = 0;
  for (const auto& id : b.node_ids_in_path_order) {
    const Node* n = p.find(id);
    if (!n) continue;
    out << ++step << ". " << id << ": ";
    switch (n->kind) {
      case NodeKind::Input:
        out << "input " << (n->output_ports.empty() ? "?" : std::string(to_string(n->output_ports[0].modality)));
        break;
      case NodeKind::Output:
        out << "output " << (n->input_ports.empty() ? "?" : std::string(to_string(n->input_ports[0].modality)));
        break;
      case NodeKind::Function: out << n->function_id; break;
      default: out << to_string(n->kind); break;
    }
    for (const auto& [k, v] : n->params) out << ", " << k << "=" << v;
    std::string feeds;
    for (const auto* e : p.edges_into(id)) feeds += (feeds.empty() ? "" : ", ") + e->from.str() + " -> " + e->to.port;
    if (!feeds.empty()) out << " (from " << feeds << ")";
    out << "\n";
  }
  return out.str();
}

std::vector<SemanticIssue> inspector_semantics(const Pipeline& draft, const Specification& spec, LlmGateway& llm,
                                               const AgentConfig& cfg) {
  std::vector<SemanticIssue> issues;
  const std::string spec_text = describe_specification(spec);
  for (const auto& b : extract_branches(draft)) {
    const std::string prompt = render_prompt("inspector_semantics", {{"specification", spec_text},
                                                                     {"output", b.output_node_id},
                                                                     {"comment", b.comment.empty() ? "(none)" : b.comment},
                                                                     {"steps", describe_branch(draft, b)}});
    const std::string reply = trim(detail::chat_once(llm, ModelRole::Inspector, "", {{"user", prompt}}));
    if (detail::starts_with_ci(reply, "PASS")) continue;
    auto doc = detail::extract_json(reply);
    if (doc && doc->is_object() && doc->contains("issues") && (*doc)["issues"].is_array()) {
      bool ok = true;
      for (const auto& i : (*doc)["issues"]) ok = ok && i.is_string();
      if (ok) {
        for (const auto& i : (*doc)["issues"]) issues.push_back({b.output_node_id, i.get<std::string>()});
        continue;
      }
    }
    cfg.emit("warning", {{"stage", "inspector_semantics"},
                         {"branch", b.output_node_id},
                         {"message", "unreadable verdict treated as a pass"},
                         {"reply", reply}});
  }
  return issues;
}

namespace {

std::vector<std::string> issue_lines(const Draft& d) {
  std::vector<std::string> out;
  for (const auto& i : d.report.issues) out.push_back(std::string(to_string(i.code)) + ": " + i.message);
  for (const auto& i : d.semantic) out.push_back("branch " + i.branch + ": " + i.description);
  return out;
}

nlohmann::json issues_json(const Draft& d) {
  auto sem = nlohmann::json::array();
  for (const auto& i : d.semantic) sem.push_back({{"branch", i.branch}, {"description", i.description}});
  return {{"pipeline", pipeline_to_json(d.pipeline)}, {"syntax", report_to_json(d.report)}, {"semantic", sem}};
}

}  // namespace

LoopResult run_loop(Session& session, LlmGateway& llm, const AgentConfig& cfg) {
  if (!session.confirmed || !session.refined_query) throw AgentError("session " + session.id + " is not confirmed");
  if (!session.specification) throw AgentError("session " + session.id + " has no specification");
  if (cfg.max_iterations < 1) throw AgentError("max_iterations must be at least 1");
  const FunctionCatalog& catalog = cfg.functions();

  const std::size_t first_draft = session.drafts.size();
  std::vector<std::string> issues;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    session.advance(SessionStatus::Building, cfg);
    session.iteration_count = iter;
    const Pipeline* prior = iter == 1 ? nullptr : &session.drafts.back().pipeline;
    Pipeline built = builder_build(*session.refined_query, *session.specification, llm, cfg, prior,
                                   iter == 1 ? nullptr : &issues);

    session.advance(SessionStatus::Inspecting, cfg);
    auto syntax = inspector_syntax(built, catalog);
    if (!syntax.fixes.empty()) {
      auto fixes = nlohmann::json::array();
      for (const auto& f : syntax.fixes) fixes.push_back({{"code", std::string(to_string(f.code))}, {"description", f.description}});
      cfg.emit("fixes", fixes);
    }
    Draft d{std::move(syntax.pipeline), std::move(syntax.report), {}};
    if (d.report.is_valid()) d.semantic = inspector_semantics(d.pipeline, *session.specification, llm, cfg);
    cfg.emit("issues", issues_json(d));
    session.drafts.push_back(std::move(d));

    const Draft& last = session.drafts.back();
    if (last.issue_count() == 0) return {last.pipeline, false};
    issues = issue_lines(last);
  }

  std::size_t best = first_draft;
  for (std::size_t i = first_draft; i < session.drafts.size(); ++i) {
    if (session.drafts[i].issue_count() <= session.drafts[best].issue_count()) best = i;
  }
  session.degraded = true;
  cfg.emit("warning", {{"stage", "run_loop"},
                       {"message", "iteration limit reached"},
                       {"draft", best - first_draft + 1},
                       {"issues", session.drafts[best].issue_count()}});
  return {session.drafts[best].pipeline, true};
}

}  // namespace pipewright
