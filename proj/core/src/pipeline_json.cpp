#include <algorithm>
#include <set>

#include "pipewright/error.hpp"
#include "pipewright/pipeline_io.hpp"

namespace pipewright {
namespace {

using nlohmann::json;

std::string at(const std::string& where, const std::string& path) {
  return where.empty() ? path : where + "." + path;
}

std::vector<Port> parse_ports(const json& node, const char* key, const std::string& loc) {
  std::vector<Port> ports;
  if (!node.contains(key)) return ports;
  const auto& arr = node[key];
  if (!arr.is_array()) throw ParseError(loc, "expected an array of ports");
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& p = arr[i];
    const std::string here = loc + "[" + std::to_string(i) + "]";
    if (!p.is_object() || !p.contains("name") || !p["name"].is_string() ||
        p["name"].get<std::string>().empty()) {
      throw ParseError(here, "port needs a non-empty string 'name'");
    }
    if (!p.contains("modality") || !p["modality"].is_string()) {
      throw ParseError(here, "port needs a string 'modality'");
    }
    const auto mod_name = p["modality"].get<std::string>();
    auto mod = modality_from_string(mod_name);
    if (!mod) throw ParseError(here + ".modality", "unknown modality '" + mod_name + "'");
    Port port{p["name"].get<std::string>(), *mod};
    if (port.name.find('.') != std::string::npos) {
      throw ParseError(here, "port names may not contain '.'");
    }
    if (!names.insert(port.name).second) throw ParseError(here, "duplicate port '" + port.name + "'");
    ports.push_back(std::move(port));
  }
  return ports;
}

Node parse_node(const json& j, const FunctionCatalog& catalog, const std::string& loc) {
  if (!j.is_object()) throw ParseError(loc, "node must be an object");
  for (const auto& [key, value] : j.items()) {
    static const std::set<std::string> known = {"id",      "kind",    "function", "params", "payload",
                                                "inputs",  "outputs", "model",    "unresolved"};
    if (!known.count(key)) throw ParseError(loc, "unknown node field '" + key + "'");
  }
  Node n;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
    throw ParseError(loc + ".id", "node needs a non-empty string id");
  }
  n.id = j["id"].get<std::string>();
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw ParseError(loc + ".kind", "node '" + n.id + "' is missing 'kind'");
  }
  const auto kind_name = j["kind"].get<std::string>();
  auto kind = node_kind_from_string(kind_name);
  if (!kind) throw ParseError(loc + ".kind", "unknown node kind '" + kind_name + "'");
  n.kind = *kind;

  if (j.contains("function")) {
    if (!j["function"].is_string()) throw ParseError(loc + ".function", "expected a string");
    n.function_id = j["function"].get<std::string>();
  }
  if (n.kind == NodeKind::Function && n.function_id.empty()) {
    throw ParseError(loc + ".function", "function node '" + n.id + "' needs a function id");
  }
  if (n.kind != NodeKind::Function && !n.function_id.empty()) {
    throw ParseError(loc + ".function", "only function nodes carry a function id");
  }

  if (j.contains("params")) {
    const auto& params = j["params"];
    if (!params.is_object()) throw ParseError(loc + ".params", "expected an object");
    for (const auto& [key, value] : params.items()) {
      if (!value.is_string()) {
        throw ParseError(loc + ".params." + key, "parameter values must be strings");
      }
      n.params.emplace(key, value.get<std::string>());
    }
  }

  if (j.contains("payload")) {
    if (!j["payload"].is_string()) throw ParseError(loc + ".payload", "expected a string");
    n.payload = j["payload"].get<std::string>();
  }
  if (!n.payload.empty() && n.kind != NodeKind::Script && n.kind != NodeKind::GenericLLM) {
    throw ParseError(loc + ".payload", "only script and generic_llm nodes carry a payload");
  }
  if (n.kind == NodeKind::GenericLLM && n.payload.empty()) {
    throw ParseError(loc + ".payload", "generic_llm node '" + n.id + "' needs a prompt");
  }

  if (j.contains("model")) {
    if (!j["model"].is_string()) throw ParseError(loc + ".model", "expected a string");
    n.model_id = j["model"].get<std::string>();
  }
  if (j.contains("unresolved")) {
    if (!j["unresolved"].is_boolean()) throw ParseError(loc + ".unresolved", "expected a boolean");
    n.unresolved = j["unresolved"].get<bool>();
  }

  if (n.kind == NodeKind::Function) {
    if (j.contains("inputs") || j.contains("outputs")) {
      throw ParseError(loc, "function node '" + n.id + "' takes its ports from the catalog");
    }
    if (const auto* spec = catalog.find(n.function_id)) {
      for (const auto& p : spec->inputs) n.input_ports.push_back({p.name, p.modality});
      for (const auto& p : spec->outputs) n.output_ports.push_back({p.name, p.modality});
    }
  } else {
    n.input_ports = parse_ports(j, "inputs", loc + ".inputs");
    n.output_ports = parse_ports(j, "outputs", loc + ".outputs");
  }

  if (n.kind == NodeKind::Output && (n.input_ports.size() != 1 || !n.output_ports.empty())) {
    throw ParseError(loc, "output node '" + n.id + "' needs exactly one input port and no output ports");
  }
  return n;
}

}  // namespace

Pipeline pipeline_from_json(const json& doc, const FunctionCatalog& catalog, const std::string& where) {
  if (!doc.is_object()) throw ParseError(where, "pipeline document must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "nodes" && key != "edges" && key != "metadata") {
      throw ParseError(where, "unknown top-level field '" + key + "'");
    }
  }
  Pipeline p;
  if (doc.contains("nodes")) {
    const auto& nodes = doc["nodes"];
    if (!nodes.is_array()) throw ParseError(at(where, "nodes"), "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string loc = at(where, "nodes[" + std::to_string(i) + "]");
      Node n = parse_node(nodes[i], catalog, loc);
      if (!ids.insert(n.id).second) throw ParseError(loc + ".id", "duplicate node id '" + n.id + "'");
      p.nodes.push_back(std::move(n));
    }
  }
  if (doc.contains("edges")) {
    const auto& edges = doc["edges"];
    if (!edges.is_array()) throw ParseError(at(where, "edges"), "expected an array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string loc = at(where, "edges[" + std::to_string(i) + "]");
      const auto& e = edges[i];
      if (!e.is_object() || !e.contains("from") || !e.contains("to") || !e["from"].is_string() ||
          !e["to"].is_string()) {
        throw ParseError(loc, "edge needs string fields 'from' and 'to'");
      }
      auto from = PortRef::parse(e["from"].get<std::string>());
      auto to = PortRef::parse(e["to"].get<std::string>());
      if (!from) throw ParseError(loc + ".from", "expected 'node.port', got '" + e["from"].get<std::string>() + "'");
      if (!to) throw ParseError(loc + ".to", "expected 'node.port', got '" + e["to"].get<std::string>() + "'");
      p.edges.push_back({*from, *to});
    }
  }
  if (doc.contains("metadata")) {
    const auto& meta = doc["metadata"];
    if (!meta.is_object()) throw ParseError(at(where, "metadata"), "expected an object");
    for (const auto& [key, value] : meta.items()) {
      if (!value.is_string()) throw ParseError(at(where, "metadata." + key), "expected a string");
      p.metadata.emplace(key, value.get<std::string>());
    }
  }
  p.canonicalize();
  if (!topological_order(p)) throw ParseError(at(where, "edges"), "pipeline graph contains a cycle");
  return p;
}

Pipeline parse_pipeline_json(std::string_view text, const FunctionCatalog& catalog) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  return pipeline_from_json(doc, catalog);
}

json pipeline_to_json(const Pipeline& input) {
  Pipeline p = input;
  p.canonicalize();
  auto ports = [](const std::vector<Port>& ps) {
    json arr = json::array();
    for (const auto& port : ps) arr.push_back({{"name", port.name}, {"modality", to_string(port.modality)}});
    return arr;
  };
  json nodes = json::array();
  for (const auto& n : p.nodes) {
    json j = {{"id", n.id}, {"kind", to_string(n.kind)}};
    if (n.kind == NodeKind::Function) {
      j["function"] = n.function_id;
    } else {
      j["inputs"] = ports(n.input_ports);
      j["outputs"] = ports(n.output_ports);
    }
    if (!n.params.empty()) j["params"] = n.params;
    if (!n.payload.empty()) j["payload"] = n.payload;
    if (n.model_id) j["model"] = *n.model_id;
    if (n.unresolved) j["unresolved"] = true;
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& e : p.edges) edges.push_back({{"from", e.from.str()}, {"to", e.to.str()}});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"metadata", p.metadata}};
}

std::string serialize_pipeline_json(const Pipeline& p) { return pipeline_to_json(p).dump(2) + "\n"; }

json specification_to_json(const Specification& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    json j = {{"role", r.role == SpecRole::Input ? "input" : "output"},
              {"name", r.name},
              {"modality", to_string(r.modality)}};
    if (r.language) j["language"] = *r.language;
    if (!r.extra.empty()) j["params"] = r.extra;
    rows.push_back(std::move(j));
  }
  return {{"rows", std::move(rows)}};
}

namespace {

SpecRow parse_row(const json& j, SpecRole role, const std::string& loc) {
  if (!j.is_object()) throw ParseError(loc, "row must be an object");
  SpecRow r;
  r.role = role;
  if (!j.contains("name") || !j["name"].is_string()) throw ParseError(loc + ".name", "missing row name");
  r.name = j["name"].get<std::string>();
  if (!j.contains("modality") || !j["modality"].is_string()) {
    throw ParseError(loc + ".modality", "missing row modality");
  }
  auto mod = modality_from_string(j["modality"].get<std::string>());
  if (!mod) throw ParseError(loc + ".modality", "unknown modality '" + j["modality"].get<std::string>() + "'");
  r.modality = *mod;
  if (j.contains("language") && !j["language"].is_null()) {
    if (!j["language"].is_string()) throw ParseError(loc + ".language", "expected a string");
    r.language = j["language"].get<std::string>();
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ParseError(loc + ".params", "expected an object");
    for (const auto& [k, v] : j["params"].items()) {
      if (!v.is_string()) throw ParseError(loc + ".params." + k, "expected a string");
      r.extra.emplace(k, v.get<std::string>());
    }
  }
  return r;
}

}  // namespace

Specification specification_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ParseError(where, "specification must be an object");
  Specification s;
  if (doc.contains("rows")) {
    const auto& rows = doc["rows"];
    if (!rows.is_array()) throw ParseError(at(where, "rows"), "expected an array");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string loc = at(where, "rows[" + std::to_string(i) + "]");
      const auto& row = rows[i];
      const std::string role = row.is_object() ? row.value("role", "") : "";
      if (role != "input" && role != "output") throw ParseError(loc + ".role", "role must be input or output");
      s.rows.push_back(parse_row(row, role == "input" ? SpecRole::Input : SpecRole::Output, loc));
    }
  } else {
    for (auto [key, role] : {std::pair{"inputs", SpecRole::Input}, std::pair{"outputs", SpecRole::Output}}) {
      if (!doc.contains(key)) continue;
      const auto& rows = doc[key];
      if (!rows.is_array()) throw ParseError(at(where, key), "expected an array");
      for (std::size_t i = 0; i < rows.size(); ++i) {
        s.rows.push_back(parse_row(rows[i], role, at(where, std::string(key) + "[" + std::to_string(i) + "]")));
      }
    }
  }
  s.check();
  return s;
}

}  // namespace pipewright
