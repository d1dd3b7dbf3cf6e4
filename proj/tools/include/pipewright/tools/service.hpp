#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "pipewright/agents.hpp"
#include "pipewright/matchmaker.hpp"

namespace pipewright::tools {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Gives each session its gateway.
using GatewayFactory = std::function<std::shared_ptr<LlmGateway>(const std::string& session_id)>;

struct ServiceConfig {
  std::filesystem::path data_dir = "pipewright-data";
  int max_iterations = 3;
  int max_turns = 8;
  const FunctionCatalog* catalog = nullptr;
  const ModelRegistry* registry = nullptr;
  GatewayFactory gateway;
  /// Longest wait a GET /events long-poll may ask for, in seconds.
  double max_poll_wait = 30.0;
};

/// SHA-256 of `bytes`, lower-case hex.
std::string sha256_hex(std::string_view bytes);
/// Throws Error on malformed input.
std::string base64_decode(std::string_view text);

/// Session API over plain request/response values, so it can be driven
/// without a socket. Sessions persist as append-only JSONL event logs under
/// data_dir/sessions and are replayed on construction; a session that was
/// mid-build when the process stopped comes back failed. Attachment bytes
/// are stored under data_dir/attachments by content hash.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse handle(const ApiRequest& req);

  /// Blocks until no confirm job is running.
  void wait_idle();

 private:
  struct Entry;

  ApiResponse create_session();
  ApiResponse post_message(Entry& e, const std::string& body);
  ApiResponse confirm(Entry& e);
  ApiResponse events(Entry& e, const std::map<std::string, std::string>& query);
  ApiResponse pipeline(Entry& e);
  ApiResponse summary(Entry& e);
  ApiResponse validate_body(const std::string& body);
  ApiResponse evaluate_body(const std::string& body);

  std::shared_ptr<Entry> find(const std::string& id);
  std::shared_ptr<Entry> open_entry(const std::string& id, bool replay);
  AgentConfig agent_config(Entry& e) const;

  ServiceConfig cfg_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// Serves `service` over HTTP. Blocks for the life of the process.
void serve_http(Service& service, const std::string& host, int port);

}  // namespace pipewright::tools
