#pragma once

// Helpers shared by the agent translation units.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipewright/llm_gateway.hpp"

namespace pipewright::detail {

std::string trim(std::string_view s);
std::string lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// The first JSON object in a reply, tolerating code fences and prose
/// around it.
std::optional<nlohmann::json> extract_json(std::string_view reply);

/// Contents of the first ``` fenced block, or the whole reply.
std::string strip_fences(std::string_view reply);

std::string chat_once(LlmGateway& llm, ModelRole role, const std::string& system,
                      const std::vector<ChatMessage>& turns);

}  // namespace pipewright::detail
