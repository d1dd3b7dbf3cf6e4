#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipewright/error.hpp"

namespace pipewright {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;

  /// Throws std::invalid_argument unless messages are non-empty and, after
  /// an optional leading system turn, alternate user/assistant starting
  /// with user.
  void check() const;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::string finish_reason = "stop";
  TokenUsage usage;
};

class GatewayError : public Error {
 public:
  GatewayError(const std::string& message, int attempts = 0)
      : Error(message), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Replay ran past the end of the transcript, or the request no longer
/// matches the recorded digest.
class TranscriptError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

enum class ModelRole { Clarifier, Builder, Inspector, Utility, Embedding };

std::string_view to_string(ModelRole r) noexcept;

class LlmGateway {
 public:
  virtual ~LlmGateway() = default;
  virtual ChatResponse chat(const ChatRequest& req) = 0;
  virtual std::vector<double> embed(const std::string& text) = 0;
  /// Model name configured for a role.
  virtual std::string model(ModelRole role) const = 0;
};

/// Stable hex digest of the model-independent part of a request: the
/// messages, temperature and length limit.
std::string request_digest(const ChatRequest& req);

/// Replays canned responses by call position. A transcript is a JSON array
/// of {"request_digest": "...", "response": "..."}; entries whose digest is
/// present must match the incoming request. Embeddings come from the
/// hashing embedder. In stamping mode digests are not checked and the
/// observed ones are recorded instead, so a transcript can be regenerated
/// after a deliberate prompt change.
class ScriptedGateway : public LlmGateway {
 public:
  explicit ScriptedGateway(nlohmann::json transcript, bool stamping = false);
  static ScriptedGateway from_file(const std::string& path, bool stamping = false);
  /// Convenience: responses in order, no digests.
  static ScriptedGateway from_responses(const std::vector<std::string>& responses);

  ChatResponse chat(const ChatRequest& req) override;
  std::vector<double> embed(const std::string& text) override;
  std::string model(ModelRole role) const override { return std::string(to_string(role)); }

  std::size_t calls() const;
  std::size_t remaining() const;
  /// The transcript with each consumed entry's digest filled in.
  nlohmann::json stamped() const;
  /// Requests seen so far, in order.
  std::vector<ChatRequest> requests() const;

 private:
  mutable std::mutex mu_;
  nlohmann::json entries_;
  bool stamping_;
  std::size_t cursor_ = 0;
  std::vector<ChatRequest> seen_;
};

struct HttpReply {
  int status = 0;  // 0 when the request never completed
  std::string body;
  std::string error;
};

/// POSTs a JSON body to `path` below the configured base URL.
using HttpTransport = std::function<HttpReply(const std::string& path, const std::string& body,
                                              const std::map<std::string, std::string>& headers,
                                              std::chrono::duration<double> timeout)>;
using Sleeper = std::function<void(std::chrono::duration<double>)>;

struct GatewayConfig {
  std::string url;  // e.g. http://localhost:8000/v1
  std::string api_key;
  std::map<ModelRole, std::string> models;
  std::chrono::duration<double> timeout{60.0};
  int retries = 2;
  std::chrono::duration<double> backoff{0.5};

  /// PIPEWRIGHT_LLM_URL, PIPEWRIGHT_LLM_API_KEY, PIPEWRIGHT_MODEL_<ROLE>,
  /// PIPEWRIGHT_LLM_TIMEOUT (seconds), PIPEWRIGHT_LLM_RETRIES.
  static GatewayConfig from_env();
};

/// Chat-completions and embeddings over HTTP. Transient failures
/// (transport errors, 429, 5xx) are retried with exponential backoff; the
/// whole call, retries included, stays within timeout * (retries + 1).
class HttpGateway : public LlmGateway {
 public:
  explicit HttpGateway(GatewayConfig cfg);
  HttpGateway(GatewayConfig cfg, HttpTransport transport, Sleeper sleeper);

  ChatResponse chat(const ChatRequest& req) override;
  std::vector<double> embed(const std::string& text) override;
  std::string model(ModelRole role) const override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  GatewayConfig cfg_;
  HttpTransport transport_;
  Sleeper sleep_;
};

/// Default transport backed by cpp-httplib.
HttpTransport make_httplib_transport(const std::string& base_url);

}  // namespace pipewright
