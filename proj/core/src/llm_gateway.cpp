#include "pipewright/llm_gateway.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pipewright/embedding.hpp"

namespace pipewright {

void ChatRequest::check() const {
  if (messages.empty()) throw std::invalid_argument("chat request has no messages");
  std::size_t i = messages.front().role == "system" ? 1 : 0;
  if (i == messages.size()) throw std::invalid_argument("chat request has only a system turn");
  for (bool user = true; i < messages.size(); ++i, user = !user) {
    const auto& role = messages[i].role;
    if (role != (user ? "user" : "assistant")) {
      throw std::invalid_argument("message " + std::to_string(i) + ": expected role " +
                                  (user ? "user" : "assistant") + ", got '" + role + "'");
    }
  }
}

std::string_view to_string(ModelRole r) noexcept {
  switch (r) {
    case ModelRole::Clarifier: return "clarifier";
    case ModelRole::Builder: return "builder";
    case ModelRole::Inspector: return "inspector";
    case ModelRole::Utility: return "utility";
    case ModelRole::Embedding: return "embedding";
  }
  return "utility";
}

std::string request_digest(const ChatRequest& req) {
  nlohmann::json doc = {{"temperature", req.temperature}, {"max_tokens", req.max_tokens}};
  auto& msgs = doc["messages"] = nlohmann::json::array();
  for (const auto& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

// ---------------------------------------------------------------------------

ScriptedGateway::ScriptedGateway(nlohmann::json transcript, bool stamping)
    : entries_(std::move(transcript)), stamping_(stamping) {
  if (!entries_.is_array()) throw ParseError("transcript", "expected a JSON array");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    const std::string where = "transcript[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("response") || !e["response"].is_string()) {
      throw ParseError(where, "entry needs a string 'response'");
    }
    if (e.contains("request_digest") && !e["request_digest"].is_string() && !e["request_digest"].is_null()) {
      throw ParseError(where, "'request_digest' must be a string");
    }
  }
}

ScriptedGateway ScriptedGateway::from_file(const std::string& path, bool stamping) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open transcript " + path);
  try {
    return ScriptedGateway(nlohmann::json::parse(in), stamping);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, e.what());
  }
}

ScriptedGateway ScriptedGateway::from_responses(const std::vector<std::string>& responses) {
  auto doc = nlohmann::json::array();
  for (const auto& r : responses) doc.push_back({{"response", r}});
  return ScriptedGateway(std::move(doc));
}

ChatResponse ScriptedGateway::chat(const ChatRequest& req) {
  req.check();
  std::lock_guard lock(mu_);
  if (cursor_ >= entries_.size()) {
    throw TranscriptError("transcript exhausted after " + std::to_string(entries_.size()) + " responses");
  }
  auto& entry = entries_[cursor_];
  const std::string digest = request_digest(req);
  if (stamping_) {
    entry["request_digest"] = digest;
  } else if (entry.contains("request_digest") && entry["request_digest"].is_string() &&
             entry["request_digest"].get<std::string>() != digest) {
    throw TranscriptError("transcript diverged at call " + std::to_string(cursor_) + ": expected digest " +
                          entry["request_digest"].get<std::string>() + ", got " + digest);
  }
  ++cursor_;
  seen_.push_back(req);
  ChatResponse r;
  r.content = entry["response"].get<std::string>();
  return r;
}

std::vector<double> ScriptedGateway::embed(const std::string& text) { return hashing_embed(text); }

std::size_t ScriptedGateway::calls() const {
  std::lock_guard lock(mu_);
  return cursor_;
}

std::size_t ScriptedGateway::remaining() const {
  std::lock_guard lock(mu_);
  return entries_.size() - cursor_;
}

nlohmann::json ScriptedGateway::stamped() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::vector<ChatRequest> ScriptedGateway::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

// ---------------------------------------------------------------------------

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

bool transient(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

}  // namespace

GatewayConfig GatewayConfig::from_env() {
  GatewayConfig cfg;
  cfg.url = env_or("PIPEWRIGHT_LLM_URL", "");
  cfg.api_key = env_or("PIPEWRIGHT_LLM_API_KEY", "");
  for (auto role : {ModelRole::Clarifier, ModelRole::Builder, ModelRole::Inspector, ModelRole::Utility,
                    ModelRole::Embedding}) {
    std::string var = "PIPEWRIGHT_MODEL_";
    for (char c : to_string(role)) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    auto name = env_or(var.c_str(), "");
    if (!name.empty()) cfg.models[role] = name;
  }
  try {
    cfg.timeout = std::chrono::duration<double>(std::stod(env_or("PIPEWRIGHT_LLM_TIMEOUT", "60")));
    cfg.retries = std::stoi(env_or("PIPEWRIGHT_LLM_RETRIES", "2"));
  } catch (const std::exception&) {
    throw Error("PIPEWRIGHT_LLM_TIMEOUT / PIPEWRIGHT_LLM_RETRIES must be numeric");
  }
  if (cfg.timeout.count() <= 0 || cfg.retries < 0) throw Error("invalid gateway timeout or retry cap");
  return cfg;
}

HttpGateway::HttpGateway(GatewayConfig cfg)
    : HttpGateway(cfg, make_httplib_transport(cfg.url),
                  [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }) {}

HttpGateway::HttpGateway(GatewayConfig cfg, HttpTransport transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleep_(std::move(sleeper)) {}

std::string HttpGateway::model(ModelRole role) const {
  auto it = cfg_.models.find(role);
  if (it != cfg_.models.end()) return it->second;
  it = cfg_.models.find(ModelRole::Utility);
  if (it != cfg_.models.end()) return it->second;
  throw Error("no model configured for role " + std::string(to_string(role)));
}

nlohmann::json HttpGateway::post(const std::string& path, const nlohmann::json& body) {
  using clock = std::chrono::steady_clock;
  using secs = std::chrono::duration<double>;
  const auto start = clock::now();
  const secs budget = cfg_.timeout * (cfg_.retries + 1);
  std::map<std::string, std::string> headers = {{"Content-Type", "application/json"}};
  if (!cfg_.api_key.empty()) headers["Authorization"] = "Bearer " + cfg_.api_key;
  const std::string payload = body.dump();

  std::string last;
  secs delay = cfg_.backoff;
  int attempt = 0;
  while (true) {
    ++attempt;
    secs left = budget - secs(clock::now() - start);
    HttpReply reply = transport_(path, payload, headers, std::min(cfg_.timeout, left));
    if (reply.status >= 200 && reply.status < 300) {
      try {
        return nlohmann::json::parse(reply.body);
      } catch (const nlohmann::json::parse_error& e) {
        throw GatewayError(path + ": malformed response body: " + e.what(), attempt);
      }
    }
    last = reply.status == 0 ? reply.error : "HTTP " + std::to_string(reply.status) + ": " + reply.body;
    if (!transient(reply.status)) throw GatewayError(path + ": " + last, attempt);
    if (attempt > cfg_.retries) break;
    left = budget - secs(clock::now() - start);
    if (left <= secs::zero()) break;
    sleep_(std::min(delay, left));
    delay *= 2;
    if (budget - secs(clock::now() - start) <= secs::zero()) break;
  }
  throw GatewayError(path + ": giving up after " + std::to_string(attempt) + " attempt(s): " + last, attempt);
}

ChatResponse HttpGateway::chat(const ChatRequest& req) {
  req.check();
  nlohmann::json body = {{"model", req.model}, {"temperature", req.temperature}, {"max_tokens", req.max_tokens}};
  auto& msgs = body["messages"] = nlohmann::json::array();
  for (const auto& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});

  auto doc = post("/chat/completions", body);
  try {
    const auto& choice = doc.at("choices").at(0);
    ChatResponse r;
    r.content = choice.at("message").at("content").get<std::string>();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      r.finish_reason = choice["finish_reason"].get<std::string>();
    }
    if (doc.contains("usage") && doc["usage"].is_object()) {
      r.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
      r.usage.completion_tokens = doc["usage"].value("completion_tokens", 0);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(std::string("unexpected chat response shape: ") + e.what());
  }
}

std::vector<double> HttpGateway::embed(const std::string& text) {
  auto doc = post("/embeddings", {{"model", model(ModelRole::Embedding)}, {"input", text}});
  try {
    return doc.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(std::string("unexpected embedding response shape: ") + e.what());
  }
}

}  // namespace pipewright
