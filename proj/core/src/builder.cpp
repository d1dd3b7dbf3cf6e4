#include <sstream>

#include "agent_util.hpp"
#include "pipewright/agents.hpp"
#include "pipewright/assets.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/prompts.hpp"
#include "pipewright/synthesis.hpp"

namespace pipewright {

using detail::extract_json;
using detail::trim;

namespace {

std::string catalog_summary(const FunctionCatalog& catalog) {
  std::ostringstream out;
  auto ports = [&](const std::vector<ParamSpec>& ps) {
    std::string s;
    for (const auto& p : ps) {
      if (!s.empty()) s += ", ";
      s += p.name + ":" + std::string(to_string(p.modality));
      if (p.configurable()) s += p.required ? "*" : "?";
    }
    return s;
  };
  for (const auto& f : catalog.functions()) {
    out << f.id << "(" << ports(f.inputs) << ") -> " << ports(f.outputs) << "\n";
  }
  return out.str();
}

std::string few_shot_examples() {
  std::ostringstream out;
  int n = 0;
  for (const auto& name : assets::list()) {
    if (name.rfind("few_shot/", 0) != 0) continue;
    out << "Example " << ++n << ":\n" << trim(assets::get(name)) << "\n\n";
  }
  return out.str();
}

std::string builder_system(const FunctionCatalog& catalog) {
  std::string modalities;
  for (auto m : kAllModalities) modalities += (modalities.empty() ? "" : ", ") + std::string(to_string(m));
  return render_prompt("builder_system", {{"modalities", modalities},
                                          {"catalog", catalog_summary(catalog)},
                                          {"languages", [&] {
                                             std::string s;
                                             for (const auto& l : catalog.languages()) s += (s.empty() ? "" : ", ") + l;
                                             return s;
                                           }()},
                                          {"examples", few_shot_examples()}});
}

std::string comment_of(std::string_view reply) {
  std::istringstream in{std::string(reply)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (detail::starts_with_ci(t, "COMMENT:")) return trim(std::string_view(t).substr(8));
  }
  return {};
}

nlohmann::json empty_doc() {
  return {{"nodes", nlohmann::json::array()}, {"edges", nlohmann::json::array()}, {"metadata", nlohmann::json::object()}};
}

// Adds a branch fragment to `doc`. Nodes already present must be repeated
// verbatim or not at all. Returns the ids of the new Output nodes.
std::vector<std::string> merge_fragment(nlohmann::json& doc, const nlohmann::json& frag) {
  if (!frag.is_object()) throw ParseError("fragment", "expected a JSON object");
  for (const auto& [k, v] : frag.items()) {
    if (k != "nodes" && k != "edges" && k != "metadata") throw ParseError("fragment", "unknown field '" + k + "'");
  }
  std::vector<std::string> outputs;
  if (frag.contains("nodes")) {
    if (!frag["nodes"].is_array()) throw ParseError("fragment.nodes", "expected an array");
    for (const auto& n : frag["nodes"]) {
      if (!n.is_object() || !n.contains("id") || !n["id"].is_string()) {
        throw ParseError("fragment.nodes", "every node needs a string id");
      }
      const auto id = n["id"].get<std::string>();
      const nlohmann::json* existing = nullptr;
      for (const auto& m : doc["nodes"]) {
        if (m["id"] == n["id"]) existing = &m;
      }
      if (existing) {
        if (*existing != n) throw ParseError("fragment.nodes", "node '" + id + "' redefines an existing node");
        continue;
      }
      doc["nodes"].push_back(n);
      if (n.contains("kind") && n["kind"] == "output") outputs.push_back(id);
    }
  }
  if (frag.contains("edges")) {
    if (!frag["edges"].is_array()) throw ParseError("fragment.edges", "expected an array");
    for (const auto& e : frag["edges"]) {
      bool seen = false;
      for (const auto& f : doc["edges"]) seen = seen || f == e;
      if (!seen) doc["edges"].push_back(e);
    }
  }
  if (frag.contains("metadata")) {
    if (!frag["metadata"].is_object()) throw ParseError("fragment.metadata", "expected an object");
    for (const auto& [k, v] : frag["metadata"].items()) doc["metadata"][k] = v;
  }
  return outputs;
}

// Runs `attempt` on the model reply, re-asking once with the error.
template <typename F>
auto ask_with_retry(LlmGateway& llm, const std::string& system, const std::string& prompt, const std::string& what,
                    const AgentConfig& cfg, F attempt) {
  std::vector<ChatMessage> turns = {{"user", prompt}};
  std::string error;
  for (int i = 0; i < 2; ++i) {
    const std::string reply = detail::chat_once(llm, ModelRole::Builder, system, turns);
    try {
      return attempt(reply);
    } catch (const std::exception& e) {
      error = e.what();
      cfg.emit("warning", {{"stage", what}, {"message", error}});
    }
    turns.push_back({"assistant", reply});
    turns.push_back({"user", "That answer could not be used: " + error + "\nAnswer again in the requested format."});
  }
  throw AgentError(what + " failed twice: " + error);
}

}  // namespace

Pipeline builder_build(const std::string& refined_query, const Specification& spec, LlmGateway& llm,
                       const AgentConfig& cfg, const Pipeline* prior_draft, const std::vector<std::string>* issues) {
  spec.check();
  const FunctionCatalog& catalog = cfg.functions();
  const std::string system = builder_system(catalog);
  const std::string spec_text = describe_specification(spec);

  if (prior_draft) {
    std::string issue_text;
    if (issues) {
      for (const auto& i : *issues) issue_text += "- " + i + "\n";
    }
    const std::string prompt = render_prompt("builder_repair", {{"query", refined_query},
                                                                 {"specification", spec_text},
                                                                 {"draft", serialize_pipeline_json(*prior_draft)},
                                                                 {"issues", issue_text}});
    Pipeline p = ask_with_retry(llm, system, prompt, "builder repair", cfg, [&](const std::string& reply) {
      auto doc = extract_json(reply);
      if (!doc) throw ParseError("pipeline", "no JSON object in the reply");
      return pipeline_from_json(*doc, catalog, "pipeline");
    });
    cfg.emit("draft", {{"pipeline", pipeline_to_json(p)}, {"repair", true}});
    return p;
  }

  nlohmann::json doc = empty_doc();
  const auto outputs = spec.outputs();
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const SpecRow& row = *outputs[k];
    std::ostringstream target;
    target << row.name << " (" << to_string(row.modality);
    if (row.language) target << ", language " << *row.language;
    target << ")";
    const std::string prompt =
        render_prompt("builder_branch", {{"query", refined_query},
                                         {"specification", spec_text},
                                         {"index", std::to_string(k + 1)},
                                         {"count", std::to_string(outputs.size())},
                                         {"output", target.str()},
                                         {"existing", doc["nodes"].empty() ? "(nothing yet)" : doc.dump(2)}});
    const std::string where = "branch " + std::to_string(k + 1);
    doc = ask_with_retry(llm, system, prompt, where, cfg, [&](const std::string& reply) {
      auto frag = extract_json(reply);
      if (!frag) throw ParseError(where, "no JSON fragment in the reply");
      nlohmann::json next = doc;
      auto added = merge_fragment(next, *frag);
      if (added.empty()) throw ParseError(where, "the branch adds no output node");
      const std::string comment = comment_of(reply);
      for (const auto& id : added) next["metadata"]["branch." + id] = comment;
      pipeline_from_json(next, catalog, where);  // parse check only
      cfg.emit("branch", {{"index", k + 1}, {"comment", comment}, {"fragment", *frag}});
      return next;
    });
  }
  Pipeline p = pipeline_from_json(doc, catalog, "pipeline");
  cfg.emit("draft", {{"pipeline", pipeline_to_json(p)}, {"repair", false}});
  return p;
}

}  // namespace pipewright
