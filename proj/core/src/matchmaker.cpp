#include "pipewright/matchmaker.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "agent_util.hpp"
#include "pipewright/assets.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/prompts.hpp"

namespace pipewright {

using detail::lower;
using detail::trim;

ModelRegistry::ModelRegistry(std::vector<ModelEntry> entries) : entries_(std::move(entries)) {
  std::map<std::string, int> defaults;
  std::set<std::string> ids;
  for (const auto& e : entries_) {
    if (e.model_id.empty() || e.function_id.empty()) throw ParseError("registry", "entry without model_id or function");
    if (!ids.insert(e.model_id).second) throw ParseError("registry", "duplicate model_id '" + e.model_id + "'");
    defaults[lower(e.function_id)] += e.is_default ? 1 : 0;
  }
  for (const auto& [f, n] : defaults) {
    if (n != 1) {
      throw ParseError("registry", "function '" + f + "' has " + std::to_string(n) + " default models, expected 1");
    }
  }
}

ModelRegistry ModelRegistry::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("registry", e.what());
  }
  if (!doc.is_object() || !doc.contains("models") || !doc["models"].is_array()) {
    throw ParseError("registry", "expected {\"models\": [...]}");
  }
  std::vector<ModelEntry> entries;
  for (std::size_t i = 0; i < doc["models"].size(); ++i) {
    const auto& m = doc["models"][i];
    const std::string where = "registry.models[" + std::to_string(i) + "]";
    try {
      ModelEntry e;
      e.model_id = m.at("model_id").get<std::string>();
      e.function_id = m.at("function").get<std::string>();
      e.supplier = m.value("supplier", "");
      e.domains = m.value("domains", std::vector<std::string>{});
      e.version = m.value("version", "");
      e.is_default = m.value("default", false);
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(where, ex.what());
    }
  }
  return ModelRegistry(std::move(entries));
}

ModelRegistry ModelRegistry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open registry " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

const ModelRegistry& ModelRegistry::builtin() {
  static const ModelRegistry r = from_json(assets::get("registry.json"));
  return r;
}

std::vector<const ModelEntry*> ModelRegistry::for_function(std::string_view function_id) const {
  std::vector<const ModelEntry*> out;
  const std::string key = lower(function_id);
  for (const auto& e : entries_) {
    if (lower(e.function_id) == key) out.push_back(&e);
  }
  return out;
}

std::optional<ModelPreferences> parse_preferences(std::string_view reply) {
  auto doc = detail::extract_json(reply);
  if (!doc || !doc->is_object()) return std::nullopt;
  ModelPreferences p;
  auto text = [&](const char* key) -> std::optional<std::string> {
    if (!doc->contains(key) || (*doc)[key].is_null()) return std::nullopt;
    if (!(*doc)[key].is_string()) throw std::invalid_argument(key);
    auto v = trim((*doc)[key].get<std::string>());
    if (v.empty()) return std::nullopt;
    return v;
  };
  try {
    p.supplier = text("supplier");
    p.domain = text("domain");
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
  if (doc->contains("latest")) {
    if (!(*doc)["latest"].is_boolean()) return std::nullopt;
    p.latest = (*doc)["latest"].get<bool>();
  }
  return p;
}

namespace {

// Dotted numeric comparison; non-numeric parts compare as strings.
bool version_less(const std::string& a, const std::string& b) {
  std::istringstream ia(a), ib(b);
  std::string pa, pb;
  while (true) {
    bool ga = static_cast<bool>(std::getline(ia, pa, '.'));
    bool gb = static_cast<bool>(std::getline(ib, pb, '.'));
    if (!ga || !gb) return !ga && gb;
    bool na = !pa.empty() && std::all_of(pa.begin(), pa.end(), ::isdigit);
    bool nb = !pb.empty() && std::all_of(pb.begin(), pb.end(), ::isdigit);
    if (na && nb) {
      if (std::stoll(pa) != std::stoll(pb)) return std::stoll(pa) < std::stoll(pb);
    } else if (pa != pb) {
      return pa < pb;
    }
  }
}

template <typename Pred>
void narrow(std::vector<const ModelEntry*>& c, Pred keep) {
  std::vector<const ModelEntry*> kept;
  for (const auto* e : c) {
    if (keep(*e)) kept.push_back(e);
  }
  if (!kept.empty()) c = std::move(kept);
}

std::string user_text(const std::vector<ChatMessage>& conversation) {
  std::string out;
  for (const auto& m : conversation) {
    if (m.role == "user") out += (out.empty() ? "" : "\n") + m.content;
  }
  return out;
}

}  // namespace

const ModelEntry* choose_model(const ModelRegistry& registry, std::string_view function_id,
                               const ModelPreferences& prefs) {
  auto c = registry.for_function(function_id);
  if (c.empty()) return nullptr;
  if (prefs.supplier) narrow(c, [&](const ModelEntry& e) { return lower(e.supplier) == lower(*prefs.supplier); });
  if (prefs.domain) {
    narrow(c, [&](const ModelEntry& e) {
      return std::any_of(e.domains.begin(), e.domains.end(),
                         [&](const std::string& d) { return lower(d) == lower(*prefs.domain); });
    });
  }
  if (prefs.latest) {
    return *std::max_element(c.begin(), c.end(), [](const ModelEntry* a, const ModelEntry* b) {
      if (a->version != b->version) return version_less(a->version, b->version);
      return a->model_id > b->model_id;
    });
  }
  for (const auto* e : c) {
    if (e->is_default) return e;
  }
  return *std::min_element(c.begin(), c.end(), [](auto* a, auto* b) { return a->model_id < b->model_id; });
}

Node make_generic_node(const std::string& id, const std::string& task_description, const std::string& query_fragment,
                       Modality in, Modality out) {
  if (trim(task_description).empty()) throw AgentError("generic node needs a task description");
  if (in != Modality::Text || out != Modality::Text) {
    throw AgentError("generic LLM fallback supports text to text only, not " + std::string(to_string(in)) + " to " +
                     std::string(to_string(out)));
  }
  Node n;
  n.id = id;
  n.kind = NodeKind::GenericLLM;
  n.input_ports = {{"text", Modality::Text}};
  n.output_ports = {{"text", Modality::Text}};
  n.payload = trim(render_prompt("generic_node", {{"task", trim(task_description)}, {"request", trim(query_fragment)}}));
  return n;
}

Node generate_script(const std::string& id, const std::string& task_description, const std::vector<Port>& inputs,
                     const std::vector<Port>& outputs, LlmGateway& llm) {
  if (inputs.empty() || outputs.empty()) throw AgentError("script node needs inputs and outputs");
  auto list = [](const std::vector<Port>& ps) {
    std::string s;
    for (const auto& p : ps) s += (s.empty() ? "" : ", ") + p.name + " (" + std::string(to_string(p.modality)) + ")";
    return s;
  };
  std::string args, returns;
  for (const auto& p : inputs) args += ", " + p.name;
  for (const auto& p : outputs) returns += (returns.empty() ? "" : ", ") + ("\"" + p.name + "\"");

  const std::string prompt = render_prompt(
      "script_body", {{"task", task_description}, {"inputs", list(inputs)}, {"outputs", list(outputs)}, {"returns", returns}});
  const std::string body = detail::strip_fences(detail::chat_once(llm, ModelRole::Utility, "", {{"user", prompt}}));

  // Re-indent the body under the method definition.
  std::istringstream lines(body);
  std::string line, indented;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    indented += line.find_first_not_of(" \t") == std::string::npos ? "\n" : "        " + line + "\n";
  }
  while (!indented.empty() && indented.front() == '\n') indented.erase(0, 1);
  if (trim(indented).empty()) indented = "        raise NotImplementedError\n";

  Node n;
  n.id = id;
  n.kind = NodeKind::Script;
  n.input_ports = inputs;
  n.output_ports = outputs;
  n.payload = render_template(assets::get("script_template.py"),
                              {{"task", task_description},
                               {"inputs", list(inputs)},
                               {"outputs", list(outputs)},
                               {"arguments", args},
                               {"body", indented}});
  return n;
}

MatchmakerResult matchmaker_assign(const Pipeline& pipeline, const std::vector<ChatMessage>& conversation,
                                   const ModelRegistry& registry, LlmGateway& llm, const AgentConfig& cfg) {
  MatchmakerResult out;
  out.pipeline = pipeline;
  const FunctionCatalog& catalog = cfg.functions();
  const std::string request = user_text(conversation);

  const std::string reply = detail::chat_once(llm, ModelRole::Utility, "",
                                              {{"user", render_prompt("matchmaker_preferences", {{"conversation", request}})}});
  if (auto prefs = parse_preferences(reply)) {
    out.preferences = *prefs;
  } else {
    cfg.emit("warning", {{"stage", "matchmaker"}, {"message", "unreadable preferences, using defaults"}, {"reply", reply}});
  }

  for (auto& n : out.pipeline.nodes) {
    if (n.kind == NodeKind::Script && trim(n.payload).empty()) {
      std::string task;
      if (auto it = n.params.find("task"); it != n.params.end()) task = it->second;
      if (auto it = out.pipeline.metadata.find("task." + n.id); task.empty() && it != out.pipeline.metadata.end()) {
        task = it->second;
      }
      if (task.empty()) {
        n.unresolved = true;
        out.notes.push_back(n.id + ": script without a task description left unresolved");
        continue;
      }
      Node s = generate_script(n.id, task, n.input_ports, n.output_ports, llm);
      n.payload = s.payload;
      out.notes.push_back(n.id + ": script generated");
      continue;
    }
    if (n.kind != NodeKind::Function) continue;

    if (const ModelEntry* m = choose_model(registry, n.function_id, out.preferences)) {
      n.model_id = m->model_id;
      out.notes.push_back(n.id + ": " + m->model_id);
      continue;
    }

    // No registry entry: a generic LLM node can stand in for text-to-text
    // functions. It keeps the function's port names so the edges stay put.
    const FunctionSpec* spec = catalog.find(n.function_id);
    auto data = spec ? spec->data_inputs() : std::vector<const ParamSpec*>{};
    const bool text_only = spec && data.size() == 1 && data[0]->modality == Modality::Text &&
                           std::all_of(spec->outputs.begin(), spec->outputs.end(),
                                       [](const ParamSpec& p) { return p.modality == Modality::Text; }) &&
                           spec->outputs.size() == 1;
    try {
      if (!text_only) throw AgentError("no registry model for " + n.function_id + " and it is not text to text");
      std::string task = spec->display_name;
      if (!spec->note.empty()) task += " (" + spec->note + ")";
      for (const auto& [k, v] : n.params) task += ", " + k + "=" + v;
      Node g = make_generic_node(n.id, task, request);
      g.input_ports = n.input_ports;
      g.output_ports = n.output_ports;
      g.params = n.params;
      out.notes.push_back(n.id + ": generic LLM node replaces " + n.function_id);
      n = std::move(g);
    } catch (const AgentError& e) {
      n.unresolved = true;
      out.notes.push_back(n.id + ": unresolved, " + e.what());
    }
  }
  cfg.emit("matchmaker", {{"notes", out.notes}});
  return out;
}

void run_after_confirmation(Session& session, LlmGateway& llm, const ModelRegistry& registry, const AgentConfig& cfg) {
  try {
    if (!session.confirmed || !session.refined_query) throw AgentError("refined query not confirmed");
    session.advance(SessionStatus::Building, cfg);
    session.specification = extract_specification(*session.refined_query, llm, cfg);
    if (!session.attachments.empty()) {
      auto m = match_attachments(session, *session.specification, llm, cfg);
      session.attachment_inputs = std::move(m.inputs);
      session.unassigned_attachments = std::move(m.unassigned);
    }
    LoopResult loop = run_loop(session, llm, cfg);
    if (loop.degraded && !validate(loop.pipeline, cfg.functions()).is_valid()) {
      session.final_pipeline = std::move(loop.pipeline);
      session.fail("iteration limit reached with structural issues left", cfg);
      return;
    }
    session.advance(SessionStatus::Matching, cfg);
    auto mm = matchmaker_assign(loop.pipeline, session.messages, registry, llm, cfg);
    session.final_pipeline = std::move(mm.pipeline);
    session.advance(SessionStatus::Done, cfg);
    cfg.emit("pipeline", {{"degraded", session.degraded}, {"pipeline", pipeline_to_json(*session.final_pipeline)}});
  } catch (const std::exception& e) {
    cfg.emit("error", {{"message", e.what()}});
    session.fail(e.what(), cfg);
  }
}

}  // namespace pipewright
