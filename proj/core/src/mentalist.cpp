#include <algorithm>
#include <set>
#include <sstream>

#include "agent_util.hpp"
#include "pipewright/agents.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/prompts.hpp"

namespace pipewright {

using detail::extract_json;
using detail::starts_with_ci;
using detail::trim;

namespace {

std::string modality_list() {
  std::string out;
  for (auto m : kAllModalities) {
    if (!out.empty()) out += ", ";
    out += to_string(m);
  }
  return out;
}

}  // namespace

MentalistReply mentalist_turn(Session& session, const std::string& user_message, LlmGateway& llm,
                              const AgentConfig& cfg, const std::vector<Attachment>& attachments) {
  if (session.status != SessionStatus::Clarifying) {
    throw AgentError("session " + session.id + " is not clarifying");
  }
  if (session.turns >= cfg.max_turns) {
    session.fail("clarification turn limit (" + std::to_string(cfg.max_turns) + ") reached", cfg);
    throw AgentError(session.failure_reason);
  }

  std::string content = user_message;
  for (const auto& a : attachments) {
    Attachment copy = a;
    copy.context = user_message;
    session.attachments.push_back(std::move(copy));
    content += "\n[attached " + std::string(to_string(a.modality)) + " file]";
  }
  session.messages.push_back({"user", content});
  ++session.turns;
  cfg.emit("message", {{"role", "user"}, {"content", content}});

  const std::string system = render_prompt("clarifier", {{"modalities", modality_list()}});
  const std::string raw = trim(detail::chat_once(llm, ModelRole::Clarifier, system, session.messages));
  session.messages.push_back({"assistant", raw});

  MentalistReply out;
  if (starts_with_ci(raw, "REFINED:")) {
    out.refined_query = trim(std::string_view(raw).substr(8));
    out.reply = *out.refined_query;
    session.refined_query = out.refined_query;
    cfg.emit("refined_query", {{"text", *out.refined_query}});
  } else {
    out.reply = starts_with_ci(raw, "QUESTION:") ? trim(std::string_view(raw).substr(9)) : raw;
  }
  cfg.emit("message", {{"role", "assistant"}, {"content", out.reply}, {"raw", raw}});
  return out;
}

Specification extract_specification(const std::string& refined_query, LlmGateway& llm, const AgentConfig& cfg) {
  const std::string system = render_prompt("extractor", {{"modalities", modality_list()}});
  std::vector<ChatMessage> turns = {{"user", refined_query}};
  std::string error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string reply = detail::chat_once(llm, ModelRole::Utility, system, turns);
    auto doc = extract_json(reply);
    try {
      if (!doc) throw ParseError("specification", "no JSON object in the reply");
      Specification spec = specification_from_json(*doc, "specification");
      cfg.emit("specification", specification_to_json(spec));
      return spec;
    } catch (const Error& e) {
      error = e.what();
      cfg.emit("warning", {{"stage", "extract_specification"}, {"message", error}});
    }
    turns.push_back({"assistant", reply});
    turns.push_back({"user", "That reply was not usable: " + error + "\nReply with the corrected JSON object only."});
  }
  throw AgentError("specification extraction failed twice: " + error);
}

AttachmentMatch match_attachments(const Session& session, const Specification& spec, LlmGateway& llm,
                                  const AgentConfig& cfg) {
  AttachmentMatch out;
  if (session.attachments.empty()) return out;
  const auto inputs = spec.inputs();

  // Direct assignment when each attachment has exactly one candidate row
  // and no row is wanted twice.
  std::vector<const SpecRow*> only(session.attachments.size(), nullptr);
  std::map<std::string, int> demand;
  bool direct = true;
  for (std::size_t i = 0; i < session.attachments.size(); ++i) {
    std::vector<const SpecRow*> fits;
    for (const auto* r : inputs) {
      if (r->modality == session.attachments[i].modality) fits.push_back(r);
    }
    if (fits.size() == 1) {
      only[i] = fits.front();
      ++demand[fits.front()->name];
    } else if (!fits.empty()) {
      direct = false;
    }
  }
  for (const auto& [name, n] : demand) direct = direct && n == 1;
  if (direct) {
    for (std::size_t i = 0; i < session.attachments.size(); ++i) {
      const auto& ref = session.attachments[i].content_ref;
      if (only[i]) {
        out.inputs[ref] = only[i]->name;
      } else {
        out.unassigned.push_back(ref);
      }
    }
    cfg.emit("attachments", {{"inputs", out.inputs}, {"unassigned", out.unassigned}, {"method", "direct"}});
    return out;
  }

  std::ostringstream files, rows;
  for (std::size_t i = 0; i < session.attachments.size(); ++i) {
    const auto& a = session.attachments[i];
    files << (i + 1) << ". " << a.file_name << " (" << to_string(a.modality) << "), attached with: \"" << a.context
          << "\"\n";
  }
  for (const auto* r : inputs) rows << "- " << r->name << " (" << to_string(r->modality) << ")\n";
  std::ostringstream convo;
  for (const auto& m : session.messages) convo << m.role << ": " << m.content << "\n";
  const std::string prompt = render_prompt(
      "attachment_matcher", {{"conversation", convo.str()}, {"attachments", files.str()}, {"inputs", rows.str()}});
  const std::string reply = detail::chat_once(llm, ModelRole::Utility, "", {{"user", prompt}});

  auto doc = extract_json(reply);
  std::set<std::string> taken;
  for (std::size_t i = 0; i < session.attachments.size(); ++i) {
    const auto& a = session.attachments[i];
    const std::string key = std::to_string(i + 1);
    const SpecRow* row = nullptr;
    if (doc && doc->is_object() && doc->contains(key) && (*doc)[key].is_string()) {
      const auto name = (*doc)[key].get<std::string>();
      for (const auto* r : inputs) {
        if (r->name == name && r->modality == a.modality && !taken.count(name)) row = r;
      }
    }
    if (row) {
      taken.insert(row->name);
      out.inputs[a.content_ref] = row->name;
    } else {
      out.unassigned.push_back(a.content_ref);
    }
  }
  cfg.emit("attachments", {{"inputs", out.inputs}, {"unassigned", out.unassigned}, {"method", "model"}});
  return out;
}

}  // namespace pipewright
