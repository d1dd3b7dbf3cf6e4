#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pipewright/agents.hpp"

namespace pipewright {

struct ModelEntry {
  std::string model_id;
  std::string function_id;
  std::string supplier;
  std::vector<std::string> domains;
  std::string version;
  bool is_default = false;
  bool operator==(const ModelEntry&) const = default;
};

/// Models available per function. Every function that has entries has
/// exactly one default.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  explicit ModelRegistry(std::vector<ModelEntry> entries);

  static ModelRegistry from_json(std::string_view text);
  static ModelRegistry load(const std::string& path);
  static const ModelRegistry& builtin();

  std::vector<const ModelEntry*> for_function(std::string_view function_id) const;
  const std::vector<ModelEntry>& entries() const noexcept { return entries_; }

 private:
  std::vector<ModelEntry> entries_;
};

struct ModelPreferences {
  std::optional<std::string> supplier;
  std::optional<std::string> domain;
  bool latest = false;
  bool empty() const { return !supplier && !domain && !latest; }
};

/// Parses {"supplier": ..., "domain": ..., "latest": ...}; nullopt on
/// anything else.
std::optional<ModelPreferences> parse_preferences(std::string_view reply);

/// Registry choice for one function: entries narrowed by supplier, then
/// domain (a filter that would leave nothing is skipped), then the newest
/// version when `latest` is set, else the default, else the first by id.
const ModelEntry* choose_model(const ModelRegistry& registry, std::string_view function_id,
                               const ModelPreferences& prefs);

/// GenericLLM node prompting for `task_description`, with the relevant part
/// of the user request appended. Only text-to-text is supported: other
/// modalities or an empty description throw AgentError.
Node make_generic_node(const std::string& id, const std::string& task_description,
                       const std::string& query_fragment, Modality in = Modality::Text,
                       Modality out = Modality::Text);

/// Script node whose payload is the script template with the model's
/// method body filled in. The code is stored, never run.
Node generate_script(const std::string& id, const std::string& task_description, const std::vector<Port>& inputs,
                     const std::vector<Port>& outputs, LlmGateway& llm);

struct MatchmakerResult {
  Pipeline pipeline;
  ModelPreferences preferences;
  std::vector<std::string> notes;
};

/// Binds a model to every Function node. Functions without registry
/// entries become GenericLLM nodes when text-to-text and are marked
/// unresolved otherwise. Script nodes with an empty payload get one from
/// generate_script, using the "task" param or metadata "task.<id>".
MatchmakerResult matchmaker_assign(const Pipeline& pipeline, const std::vector<ChatMessage>& conversation,
                                   const ModelRegistry& registry, LlmGateway& llm, const AgentConfig& cfg);

/// Everything after confirmation: specification, attachments, build loop,
/// matchmaker. Leaves the session done (possibly degraded) or failed.
void run_after_confirmation(Session& session, LlmGateway& llm, const ModelRegistry& registry,
                            const AgentConfig& cfg);

}  // namespace pipewright
