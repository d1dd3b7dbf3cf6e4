#include "pipewright/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pipewright/assets.hpp"
#include "pipewright/error.hpp"

namespace pipewright {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

const ParamSpec* find_param(const std::vector<ParamSpec>& ps, std::string_view name) {
  for (const auto& p : ps) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<ParamSpec> parse_params(const json& arr, const std::vector<std::string>& languages,
                                    const std::string& where) {
  if (!arr.is_array()) throw ParseError(where, "expected an array of parameters");
  std::vector<ParamSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& p = arr[i];
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!p.is_object() || !p.contains("name") || !p["name"].is_string() ||
        !p.contains("modality") || !p["modality"].is_string()) {
      throw ParseError(at, "parameter needs string fields 'name' and 'modality'");
    }
    ParamSpec spec;
    spec.name = p["name"].get<std::string>();
    auto mod = modality_from_string(p["modality"].get<std::string>());
    if (!mod) throw ParseError(at, "unknown modality '" + p["modality"].get<std::string>() + "'");
    spec.modality = *mod;
    spec.required = p.value("required", true);
    if (p.contains("values")) {
      const auto& v = p["values"];
      if (v.is_string() && v.get<std::string>() == "languages") {
        spec.allowed_values = languages;
      } else if (v.is_array()) {
        spec.allowed_values = v.get<std::vector<std::string>>();
      } else {
        throw ParseError(at, "'values' must be \"languages\" or an array of strings");
      }
      if (spec.allowed_values.empty()) throw ParseError(at, "empty value domain");
    }
    if (find_param(out, spec.name)) throw ParseError(at, "duplicate parameter '" + spec.name + "'");
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace

const ParamSpec* FunctionSpec::input(std::string_view name) const noexcept {
  return find_param(inputs, name);
}

const ParamSpec* FunctionSpec::output(std::string_view name) const noexcept {
  return find_param(outputs, name);
}

std::vector<const ParamSpec*> FunctionSpec::required_params() const {
  std::vector<const ParamSpec*> out;
  for (const auto& p : inputs) {
    if (p.configurable() && p.required) out.push_back(&p);
  }
  return out;
}

std::vector<const ParamSpec*> FunctionSpec::data_inputs() const {
  std::vector<const ParamSpec*> out;
  for (const auto& p : inputs) {
    if (!p.configurable()) out.push_back(&p);
  }
  return out;
}

FunctionCatalog::FunctionCatalog(std::vector<FunctionSpec> functions,
                                 std::vector<std::string> languages)
    : functions_(std::move(functions)), languages_(std::move(languages)) {
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    const auto& f = functions_[i];
    if (f.inputs.empty() || f.outputs.empty()) {
      throw ParseError("functions[" + std::to_string(i) + "]",
                       "function '" + f.id + "' needs at least one input and one output");
    }
    auto [it, inserted] = index_.emplace(lower(f.id), i);
    if (!inserted) {
      throw ParseError("functions[" + std::to_string(i) + "]", "duplicate function id '" + f.id + "'");
    }
  }
}

FunctionCatalog FunctionCatalog::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("catalog", e.what());
  }
  if (!doc.is_object() || !doc.contains("functions") || !doc["functions"].is_array()) {
    throw ParseError("catalog", "expected an object with a 'functions' array");
  }
  std::vector<std::string> languages;
  if (doc.contains("languages")) languages = doc["languages"].get<std::vector<std::string>>();

  std::vector<FunctionSpec> functions;
  const auto& arr = doc["functions"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& f = arr[i];
    const std::string at = "functions[" + std::to_string(i) + "]";
    if (!f.is_object() || !f.contains("id") || !f["id"].is_string() || f["id"].get<std::string>().empty()) {
      throw ParseError(at, "function needs a non-empty string 'id'");
    }
    FunctionSpec spec;
    spec.id = f["id"].get<std::string>();
    spec.display_name = f.value("name", spec.id);
    spec.category = f.value("category", "");
    spec.note = f.value("note", "");
    spec.inputs = parse_params(f.value("inputs", json::array()), languages, at + ".inputs");
    spec.outputs = parse_params(f.value("outputs", json::array()), languages, at + ".outputs");
    functions.push_back(std::move(spec));
  }
  return FunctionCatalog(std::move(functions), std::move(languages));
}

FunctionCatalog FunctionCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open catalog file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

const FunctionCatalog& FunctionCatalog::builtin() {
  static const FunctionCatalog catalog = from_json(assets::get("catalog.json"));
  return catalog;
}

const FunctionSpec* FunctionCatalog::find(std::string_view id) const noexcept {
  auto it = index_.find(lower(id));
  return it == index_.end() ? nullptr : &functions_[it->second];
}

const FunctionSpec& FunctionCatalog::at(std::string_view id) const {
  if (const auto* f = find(id)) return *f;
  throw NotFoundError("unknown function id '" + std::string(id) + "'");
}

}  // namespace pipewright
