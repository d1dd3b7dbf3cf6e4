#include "pipewright/agents.hpp"
#include "pipewright/pipeline_io.hpp"

namespace pipewright {

std::string_view to_string(SessionStatus s) noexcept {
  switch (s) {
    case SessionStatus::Clarifying: return "clarifying";
    case SessionStatus::Building: return "building";
    case SessionStatus::Inspecting: return "inspecting";
    case SessionStatus::Matching: return "matching";
    case SessionStatus::Done: return "done";
    case SessionStatus::Failed: return "failed";
  }
  return "failed";
}

std::optional<SessionStatus> session_status_from_string(std::string_view s) noexcept {
  for (auto st : {SessionStatus::Clarifying, SessionStatus::Building, SessionStatus::Inspecting,
                  SessionStatus::Matching, SessionStatus::Done, SessionStatus::Failed}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

namespace {

bool allowed(SessionStatus from, SessionStatus to) {
  using S = SessionStatus;
  if (from == S::Done || from == S::Failed) return false;
  if (to == S::Failed) return true;
  switch (from) {
    case S::Clarifying: return to == S::Building;
    case S::Building: return to == S::Inspecting;
    case S::Inspecting: return to == S::Building || to == S::Matching;
    case S::Matching: return to == S::Done;
    default: return false;
  }
}

}  // namespace

void Session::advance(SessionStatus next, const AgentConfig& cfg) {
  if (next == status) return;
  if (!allowed(status, next)) {
    throw AgentError("session " + id + ": cannot move from " + std::string(to_string(status)) + " to " +
                     std::string(to_string(next)));
  }
  status = next;
  cfg.emit("status", {{"status", std::string(to_string(status))}});
}

void Session::fail(std::string reason, const AgentConfig& cfg) {
  if (status == SessionStatus::Failed || status == SessionStatus::Done) return;
  failure_reason = std::move(reason);
  status = SessionStatus::Failed;
  cfg.emit("status", {{"status", "failed"}, {"reason", failure_reason}});
}

void Session::confirm(const AgentConfig& cfg) {
  if (status != SessionStatus::Clarifying) throw AgentError("session " + id + " is not awaiting confirmation");
  if (!refined_query) throw AgentError("session " + id + " has no refined query to confirm");
  if (confirmed) throw AgentError("session " + id + " is already confirmed");
  confirmed = true;
  cfg.emit("confirmed", {{"refined_query", *refined_query}});
}

nlohmann::json session_to_json(const Session& s) {
  nlohmann::json doc;
  doc["id"] = s.id;
  doc["status"] = std::string(to_string(s.status));
  auto& msgs = doc["messages"] = nlohmann::json::array();
  for (const auto& m : s.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  auto& att = doc["attachments"] = nlohmann::json::array();
  for (const auto& a : s.attachments) {
    att.push_back({{"file_name", a.file_name},
                   {"modality", std::string(to_string(a.modality))},
                   {"content_ref", a.content_ref},
                   {"context", a.context}});
  }
  doc["refined_query"] = s.refined_query ? nlohmann::json(*s.refined_query) : nlohmann::json();
  doc["confirmed"] = s.confirmed;
  doc["specification"] = s.specification ? specification_to_json(*s.specification) : nlohmann::json();
  doc["attachment_inputs"] = s.attachment_inputs;
  doc["unassigned_attachments"] = s.unassigned_attachments;
  auto& drafts = doc["drafts"] = nlohmann::json::array();
  for (const auto& d : s.drafts) {
    auto sem = nlohmann::json::array();
    for (const auto& i : d.semantic) sem.push_back({{"branch", i.branch}, {"description", i.description}});
    drafts.push_back({{"pipeline", pipeline_to_json(d.pipeline)}, {"report", report_to_json(d.report)}, {"semantic", sem}});
  }
  doc["iteration_count"] = s.iteration_count;
  doc["turns"] = s.turns;
  doc["failure_reason"] = s.failure_reason;
  doc["degraded"] = s.degraded;
  doc["final_pipeline"] = s.final_pipeline ? pipeline_to_json(*s.final_pipeline) : nlohmann::json();
  return doc;
}

}  // namespace pipewright
