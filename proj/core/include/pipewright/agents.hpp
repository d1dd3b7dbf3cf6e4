#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipewright/catalog.hpp"
#include "pipewright/llm_gateway.hpp"
#include "pipewright/pipeline.hpp"
#include "pipewright/validator.hpp"

namespace pipewright {

/// An agent step could not produce a usable result (malformed LLM output
/// after the re-ask, turn limit, illegal state).
class AgentError : public Error {
 public:
  using Error::Error;
};

enum class SessionStatus { Clarifying, Building, Inspecting, Matching, Done, Failed };

std::string_view to_string(SessionStatus s) noexcept;
std::optional<SessionStatus> session_status_from_string(std::string_view s) noexcept;

struct Attachment {
  std::string file_name;  // shown to the attachment matcher, never to the builder
  Modality modality = Modality::Text;
  std::string content_ref;  // content hash assigned by the store
  std::string context;      // the user message the file arrived with
  bool operator==(const Attachment&) const = default;
};

struct SemanticIssue {
  std::string branch;  // output node id
  std::string description;
  bool operator==(const SemanticIssue&) const = default;
};

struct Draft {
  Pipeline pipeline;
  ValidationReport report;  // residual syntax issues after mechanical fixes
  std::vector<SemanticIssue> semantic;
  std::size_t issue_count() const { return report.issues.size() + semantic.size(); }
};

struct AgentEvent {
  std::string type;  // status, message, refined_query, specification, attachments,
                     // draft, fixes, issues, warning, pipeline, error
  nlohmann::json data;
};

using EventSink = std::function<void(const AgentEvent&)>;

struct AgentConfig {
  int max_iterations = 3;
  int max_turns = 8;
  const FunctionCatalog* catalog = nullptr;  // builtin when null
  EventSink sink;

  const FunctionCatalog& functions() const { return catalog ? *catalog : FunctionCatalog::builtin(); }
  void emit(std::string type, nlohmann::json data) const {
    if (sink) sink({std::move(type), std::move(data)});
  }
};

struct Session {
  std::string id;
  std::vector<ChatMessage> messages;  // user/assistant turns only
  std::vector<Attachment> attachments;
  std::optional<std::string> refined_query;
  bool confirmed = false;
  std::optional<Specification> specification;
  std::map<std::string, std::string> attachment_inputs;  // content_ref -> input row name
  std::vector<std::string> unassigned_attachments;
  std::vector<Draft> drafts;
  int iteration_count = 0;
  int turns = 0;
  SessionStatus status = SessionStatus::Clarifying;
  std::string failure_reason;
  bool degraded = false;
  std::optional<Pipeline> final_pipeline;

  /// Moves along clarifying -> building <-> inspecting -> matching -> done;
  /// any state may fail. Throws AgentError on other transitions.
  void advance(SessionStatus next, const AgentConfig& cfg);
  void fail(std::string reason, const AgentConfig& cfg);
  /// Accepts the pending refined query. Throws AgentError when there is
  /// none or it was already confirmed.
  void confirm(const AgentConfig& cfg);
};

nlohmann::json session_to_json(const Session& s);

// --- Mentalist --------------------------------------------------------------

struct MentalistReply {
  std::string reply;
  std::optional<std::string> refined_query;
};

/// One clarification turn. The model answers either "QUESTION: ..." or
/// "REFINED: ..."; a refined query waits for Session::confirm. Attachments
/// arriving with the message are registered on the session and shown to
/// the model by modality only. Exceeding cfg.max_turns fails the session.
MentalistReply mentalist_turn(Session& session, const std::string& user_message, LlmGateway& llm,
                              const AgentConfig& cfg, const std::vector<Attachment>& attachments = {});

/// Structured rows for the confirmed refined query. A malformed reply is
/// re-asked once with the error; a second failure throws AgentError.
Specification extract_specification(const std::string& refined_query, LlmGateway& llm, const AgentConfig& cfg);

struct AttachmentMatch {
  std::map<std::string, std::string> inputs;  // content_ref -> input row name
  std::vector<std::string> unassigned;        // content_refs needing user confirmation
};

/// Assigns attachments to input rows. When every attachment has exactly one
/// input row of its modality (and no two share it) no model call is made;
/// otherwise the model decides from the conversational context. Answers
/// that name a missing row, the wrong modality or a taken row leave the
/// attachment unassigned.
AttachmentMatch match_attachments(const Session& session, const Specification& spec, LlmGateway& llm,
                                  const AgentConfig& cfg);

// --- Builder ----------------------------------------------------------------

/// Chain-of-branches construction: one model call per output row, each
/// answered with "COMMENT: ..." and a JSON fragment that may reference
/// nodes of earlier branches. With a prior draft the model instead returns
/// a complete revised pipeline addressing `issues`. Each call gets one
/// re-ask on a parse error, then AgentError.
Pipeline builder_build(const std::string& refined_query, const Specification& spec, LlmGateway& llm,
                       const AgentConfig& cfg, const Pipeline* prior_draft = nullptr,
                       const std::vector<std::string>* issues = nullptr);

// --- Inspector --------------------------------------------------------------

struct SyntaxInspection {
  Pipeline pipeline;  // after mechanical fixes
  std::vector<AppliedFix> fixes;
  ValidationReport report;  // residual
};

SyntaxInspection inspector_syntax(const Pipeline& draft, const FunctionCatalog& catalog);

/// Plain-text node sequence of one branch, as shown to the model.
std::string describe_branch(const Pipeline& p, const Branch& b);

/// Asks the inspector model, branch by branch, whether the steps satisfy
/// the specification. Replies are "PASS" or {"issues": [...]}; anything else
/// counts as a pass and emits a warning event.
std::vector<SemanticIssue> inspector_semantics(const Pipeline& draft, const Specification& spec, LlmGateway& llm,
                                               const AgentConfig& cfg);

struct LoopResult {
  Pipeline pipeline;
  bool degraded = false;
};

/// Builder/inspector loop on a confirmed session with a specification.
/// Stops at the first draft without issues or after cfg.max_iterations
/// builder calls; at the cap the draft with the fewest issues (latest on
/// ties) is returned marked degraded. Gateway failures propagate with the
/// drafts kept on the session.
LoopResult run_loop(Session& session, LlmGateway& llm, const AgentConfig& cfg);

}  // namespace pipewright
