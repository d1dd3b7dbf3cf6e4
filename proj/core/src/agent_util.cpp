#include "agent_util.hpp"

#include <cctype>

namespace pipewright::detail {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && lower(s.substr(0, prefix.size())) == lower(prefix);
}

std::optional<nlohmann::json> extract_json(std::string_view reply) {
  std::string body = strip_fences(reply);
  auto open = body.find('{');
  auto close = body.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  try {
    return nlohmann::json::parse(body.substr(open, close - open + 1));
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;
  }
}

std::string strip_fences(std::string_view reply) {
  auto open = reply.find("```");
  if (open == std::string_view::npos) return std::string(reply);
  auto line_end = reply.find('\n', open);
  if (line_end == std::string_view::npos) return std::string(reply);
  auto close = reply.find("```", line_end);
  if (close == std::string_view::npos) close = reply.size();
  return std::string(reply.substr(line_end + 1, close - line_end - 1));
}

std::string chat_once(LlmGateway& llm, ModelRole role, const std::string& system,
                      const std::vector<ChatMessage>& turns) {
  ChatRequest req;
  req.model = llm.model(role);
  if (!system.empty()) req.messages.push_back({"system", system});
  req.messages.insert(req.messages.end(), turns.begin(), turns.end());
  return llm.chat(req).content;
}

}  // namespace pipewright::detail
