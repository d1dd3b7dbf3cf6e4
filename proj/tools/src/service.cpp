#include "pipewright/tools/service.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "pipewright/evaluation.hpp"
#include "pipewright/metrics.hpp"
#include "pipewright/pipeline_io.hpp"

namespace pipewright::tools {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean += c;
  }
  if (clean.size() % 4 != 0) throw Error("base64 length is not a multiple of 4");
  std::string out(clean.size() / 4 * 3, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw Error("malformed base64");
  std::size_t pad = 0;
  for (auto it = clean.rbegin(); it != clean.rend() && *it == '='; ++it) ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

// ---------------------------------------------------------------------------

struct Service::Entry {
  std::string id;
  fs::path log_path;

  std::mutex state_mu;  // guards `session` and `gateway`
  Session session;
  std::shared_ptr<LlmGateway> gateway;
  std::atomic<bool> busy{false};
  std::thread worker;

  std::mutex ev_mu;  // guards everything below
  std::condition_variable ev_cv;
  std::vector<json> events;
  std::string status = "clarifying";
  std::optional<json> pipeline;
  bool replaying = false;

  void append(const std::string& type, json data) {
    std::lock_guard lock(ev_mu);
    json ev = {{"seq", events.size()}, {"type", type}, {"data", std::move(data)}};
    if (!replaying) {
      std::ofstream out(log_path, std::ios::app);
      if (!out) throw Error("cannot append to " + log_path.string());
      out << ev.dump() << "\n";
      out.flush();
    }
    if (type == "status") status = ev["data"].value("status", status);
    if (type == "pipeline" && ev["data"].contains("pipeline")) pipeline = ev["data"]["pipeline"];
    events.push_back(std::move(ev));
    ev_cv.notify_all();
  }
};

namespace {

ApiResponse error(int status, const std::string& message) { return {status, {{"error", message}}}; }

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(path);
  while (std::getline(in, part, '/')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body.empty() ? "{}" : body);
  } catch (const json::parse_error& e) {
    throw ParseError("body", e.what());
  }
}

std::string new_session_id() {
  static std::mt19937_64 rng{std::random_device{}()};
  static std::mutex mu;
  std::lock_guard lock(mu);
  static const char* hex = "0123456789abcdef";
  std::string id = "s";
  auto x = rng();
  for (int i = 0; i < 12; ++i, x >>= 4) id += hex[x & 15];
  return id;
}

// Folds one logged event into the session state.
void replay_event(Session& s, const json& ev, const FunctionCatalog& catalog) {
  const std::string type = ev.value("type", "");
  const json& d = ev.contains("data") ? ev["data"] : json::object();
  if (type == "message") {
    const std::string role = d.value("role", "");
    s.messages.push_back({role, role == "assistant" ? d.value("raw", d.value("content", "")) : d.value("content", "")});
    if (role == "user") ++s.turns;
  } else if (type == "attachment") {
    Attachment a;
    a.file_name = d.value("file_name", "");
    a.modality = modality_from_string(d.value("modality", "text")).value_or(Modality::Text);
    a.content_ref = d.value("content_ref", "");
    a.context = d.value("context", "");
    s.attachments.push_back(std::move(a));
  } else if (type == "refined_query") {
    s.refined_query = d.value("text", "");
  } else if (type == "confirmed") {
    s.confirmed = true;
  } else if (type == "status") {
    s.status = session_status_from_string(d.value("status", "")).value_or(s.status);
    if (s.status == SessionStatus::Failed) s.failure_reason = d.value("reason", "");
  } else if (type == "specification") {
    s.specification = specification_from_json(d, "specification");
  } else if (type == "attachments") {
    s.attachment_inputs = d.value("inputs", std::map<std::string, std::string>{});
    s.unassigned_attachments = d.value("unassigned", std::vector<std::string>{});
  } else if (type == "draft") {
    ++s.iteration_count;
  } else if (type == "issues") {
    Draft draft;
    draft.pipeline = pipeline_from_json(d.at("pipeline"), catalog, "issues.pipeline");
    draft.report = validate(draft.pipeline, catalog);
    for (const auto& i : d.value("semantic", json::array())) {
      draft.semantic.push_back({i.value("branch", ""), i.value("description", "")});
    }
    s.drafts.push_back(std::move(draft));
  } else if (type == "pipeline") {
    s.final_pipeline = pipeline_from_json(d.at("pipeline"), catalog, "pipeline");
    s.degraded = d.value("degraded", false);
  }
}

}  // namespace

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  fs::create_directories(cfg_.data_dir / "sessions");
  fs::create_directories(cfg_.data_dir / "attachments");
  std::vector<fs::path> logs;
  for (const auto& f : fs::directory_iterator(cfg_.data_dir / "sessions")) {
    if (f.path().extension() == ".jsonl") logs.push_back(f.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& p : logs) {
    auto e = open_entry(p.stem().string(), true);
    sessions_[e->id] = e;
  }
}

Service::~Service() { wait_idle(); }

void Service::wait_idle() {
  std::vector<std::shared_ptr<Entry>> all;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, e] : sessions_) all.push_back(e);
  }
  for (auto& e : all) {
    if (e->worker.joinable()) e->worker.join();
  }
}

AgentConfig Service::agent_config(Entry& e) const {
  AgentConfig a;
  a.max_iterations = cfg_.max_iterations;
  a.max_turns = cfg_.max_turns;
  a.catalog = cfg_.catalog;
  a.sink = [&e](const AgentEvent& ev) { e.append(ev.type, ev.data); };
  return a;
}

std::shared_ptr<Service::Entry> Service::open_entry(const std::string& id, bool replay) {
  auto e = std::make_shared<Entry>();
  e->id = id;
  e->session.id = id;
  e->log_path = cfg_.data_dir / "sessions" / (id + ".jsonl");
  if (!replay) {
    e->append("created", {{"id", id}});
    return e;
  }
  const FunctionCatalog& catalog = cfg_.catalog ? *cfg_.catalog : FunctionCatalog::builtin();
  std::ifstream in(e->log_path);
  std::string line;
  e->replaying = true;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    json ev;
    try {
      ev = json::parse(line);
      replay_event(e->session, ev, catalog);
    } catch (const std::exception& ex) {
      throw ParseError(e->log_path.string() + ":" + std::to_string(n), ex.what());
    }
    e->append(ev.value("type", ""), ev.value("data", json::object()));
  }
  e->replaying = false;
  auto st = e->session.status;
  if (st == SessionStatus::Building || st == SessionStatus::Inspecting || st == SessionStatus::Matching) {
    e->session.fail("interrupted by a service restart", agent_config(*e));
  }
  return e;
}

std::shared_ptr<Service::Entry> Service::find(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

ApiResponse Service::handle(const ApiRequest& req) {
  try {
    auto parts = split_path(req.path);
    const bool get = req.method == "GET", post = req.method == "POST";
    if (parts.size() == 1 && parts[0] == "sessions") return post ? create_session() : error(405, "use POST");
    if (parts.size() == 1 && parts[0] == "validate") return post ? validate_body(req.body) : error(405, "use POST");
    if (parts.size() == 1 && parts[0] == "evaluate") return post ? evaluate_body(req.body) : error(405, "use POST");
    if (parts.size() >= 2 && parts.size() <= 3 && parts[0] == "sessions") {
      auto e = find(parts[1]);
      if (!e) return error(404, "unknown session '" + parts[1] + "'");
      if (parts.size() == 2) return get ? summary(*e) : error(405, "use GET");
      const auto& what = parts[2];
      if (what == "messages") return post ? post_message(*e, req.body) : error(405, "use POST");
      if (what == "confirm") return post ? confirm(*e) : error(405, "use POST");
      if (what == "events") return get ? events(*e, req.query) : error(405, "use GET");
      if (what == "pipeline") return get ? pipeline(*e) : error(405, "use GET");
    }
    return error(404, "no route for " + req.method + " " + req.path);
  } catch (const ParseError& ex) {
    return error(400, ex.what());
  } catch (const std::invalid_argument& ex) {
    return error(400, ex.what());
  } catch (const GatewayError& ex) {
    return error(502, ex.what());
  } catch (const std::exception& ex) {
    return error(500, ex.what());
  }
}

ApiResponse Service::create_session() {
  std::shared_ptr<Entry> e;
  {
    std::lock_guard lock(mu_);
    std::string id;
    do {
      id = new_session_id();
    } while (sessions_.count(id));
    e = open_entry(id, false);
    sessions_[id] = e;
  }
  return {201, {{"id", e->id}, {"status", "clarifying"}}};
}

ApiResponse Service::post_message(Entry& e, const std::string& body) {
  json doc = parse_body(body);
  if (!doc.is_object() || !doc.contains("text") || !doc["text"].is_string() || doc["text"].get<std::string>().empty()) {
    throw ParseError("body", "expected {\"text\": non-empty string, \"attachments\"?: [...]}");
  }
  std::vector<Attachment> files;
  for (const auto& a : doc.value("attachments", json::array())) {
    if (!a.is_object() || !a.contains("modality") || !a["modality"].is_string()) {
      throw ParseError("body.attachments", "each attachment needs a modality");
    }
    auto m = modality_from_string(a["modality"].get<std::string>());
    if (!m) throw ParseError("body.attachments", "unknown modality '" + a["modality"].get<std::string>() + "'");
    std::string bytes;
    if (a.contains("content_base64")) {
      bytes = base64_decode(a["content_base64"].get<std::string>());
    } else {
      bytes = a.value("content", "");
    }
    const std::string hash = sha256_hex(bytes);
    const fs::path blob = cfg_.data_dir / "attachments" / hash;
    if (!fs::exists(blob)) {
      std::ofstream out(blob, std::ios::binary);
      out << bytes;
    }
    files.push_back({a.value("file_name", ""), *m, "sha256:" + hash, ""});
  }

  if (e.busy) return error(409, "session is building");
  std::lock_guard lock(e.state_mu);
  if (e.session.status != SessionStatus::Clarifying || e.session.confirmed) {
    return error(409, "session is " + std::string(to_string(e.session.status)) + ", not clarifying");
  }
  if (!e.gateway) {
    if (!cfg_.gateway) return error(503, "no LLM gateway configured");
    e.gateway = cfg_.gateway(e.id);
  }
  const AgentConfig acfg = agent_config(e);
  const std::size_t before = e.session.attachments.size();
  MentalistReply r;
  try {
    r = mentalist_turn(e.session, doc["text"].get<std::string>(), *e.gateway, acfg, files);
  } catch (const AgentError& ex) {
    return {409, {{"error", ex.what()}, {"status", std::string(to_string(e.session.status))}}};
  }
  for (std::size_t i = before; i < e.session.attachments.size(); ++i) {
    const auto& a = e.session.attachments[i];
    e.append("attachment", {{"file_name", a.file_name},
                            {"modality", std::string(to_string(a.modality))},
                            {"content_ref", a.content_ref},
                            {"context", a.context}});
  }
  return {200,
          {{"reply", r.reply},
           {"refined_query", r.refined_query ? json(*r.refined_query) : json()},
           {"status", std::string(to_string(e.session.status))}}};
}

ApiResponse Service::confirm(Entry& e) {
  if (e.busy) return error(409, "session is already building");
  std::lock_guard lock(e.state_mu);
  if (!e.gateway) {
    if (!cfg_.gateway) return error(503, "no LLM gateway configured");
    e.gateway = cfg_.gateway(e.id);
  }
  const AgentConfig acfg = agent_config(e);
  try {
    e.session.confirm(acfg);
  } catch (const AgentError& ex) {
    return {409, {{"error", ex.what()}, {"status", std::string(to_string(e.session.status))}}};
  }
  if (e.worker.joinable()) e.worker.join();
  e.busy = true;
  const ModelRegistry& registry = cfg_.registry ? *cfg_.registry : ModelRegistry::builtin();
  e.worker = std::thread([&e, acfg, &registry] {
    std::lock_guard wlock(e.state_mu);
    run_after_confirmation(e.session, *e.gateway, registry, acfg);
    e.busy = false;
    std::lock_guard elock(e.ev_mu);
    e.ev_cv.notify_all();
  });
  return {202, {{"status", "building"}}};
}

ApiResponse Service::events(Entry& e, const std::map<std::string, std::string>& query) {
  std::size_t since = 0;
  double wait = 0.0;
  try {
    if (auto it = query.find("since"); it != query.end()) since = std::stoul(it->second);
    if (auto it = query.find("wait"); it != query.end()) wait = std::stod(it->second);
  } catch (const std::exception&) {
    throw ParseError("query", "since and wait must be numbers");
  }
  wait = std::clamp(wait, 0.0, cfg_.max_poll_wait);
  std::unique_lock lock(e.ev_mu);
  if (wait > 0) {
    e.ev_cv.wait_for(lock, std::chrono::duration<double>(wait), [&] { return e.events.size() > since; });
  }
  json page = json::array();
  for (std::size_t i = since; i < e.events.size(); ++i) page.push_back(e.events[i]);
  return {200, {{"events", page}, {"next", e.events.size()}, {"status", e.status}}};
}

ApiResponse Service::pipeline(Entry& e) {
  std::lock_guard lock(e.ev_mu);
  if (e.status != "done" || !e.pipeline) {
    return {409, {{"error", "pipeline is not ready"}, {"status", e.status}}};
  }
  return {200, *e.pipeline};
}

ApiResponse Service::summary(Entry& e) {
  std::lock_guard lock(e.ev_mu);
  return {200, {{"id", e.id}, {"status", e.status}, {"busy", e.busy.load()}, {"events", e.events.size()}}};
}

ApiResponse Service::validate_body(const std::string& body) {
  json doc = parse_body(body);
  const json& p = doc.is_object() && doc.contains("pipeline") ? doc["pipeline"] : doc;
  const FunctionCatalog& catalog = cfg_.catalog ? *cfg_.catalog : FunctionCatalog::builtin();
  return {200, report_to_json(validate(pipeline_from_json(p, catalog, "pipeline"), catalog))};
}

ApiResponse Service::evaluate_body(const std::string& body) {
  json doc = parse_body(body);
  if (!doc.is_object() || !doc.contains("generated") || !doc.contains("reference")) {
    throw ParseError("body", "expected {\"generated\", \"reference\", \"config\"?}");
  }
  const FunctionCatalog& catalog = cfg_.catalog ? *cfg_.catalog : FunctionCatalog::builtin();
  Pipeline gen = pipeline_from_json(doc["generated"], catalog, "generated");
  Pipeline ref = pipeline_from_json(doc["reference"], catalog, "reference");
  MatchConfig mc;
  if (doc.contains("config")) {
    const auto& c = doc["config"];
    if (!c.is_object()) throw ParseError("config", "expected an object");
    try {
      mc.prompt_similarity_threshold = c.value("prompt_similarity_threshold", mc.prompt_similarity_threshold);
      mc.edit_cost = c.value("edit_cost", mc.edit_cost);
      mc.time_budget = std::chrono::duration<double>(c.value("time_budget", mc.time_budget.count()));
    } catch (const json::exception& ex) {
      throw ParseError("config", ex.what());
    }
  }
  mc.check();
  auto em = exact_match(gen, ref, mc);
  return {200, {{"exact_match", em.matched}, {"witness", em.witness}, {"ged", ged_to_json(ged(gen, ref, mc))}}};
}

}  // namespace pipewright::tools
