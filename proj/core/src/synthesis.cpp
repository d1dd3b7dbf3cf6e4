#include "pipewright/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "pipewright/pipeline_io.hpp"
#include "pipewright/prompts.hpp"

namespace pipewright {

std::string_view to_string(AmbiguityLevel a) noexcept {
  switch (a) {
    case AmbiguityLevel::Unambiguous: return "unambiguous";
    case AmbiguityLevel::Ambiguous: return "ambiguous";
    case AmbiguityLevel::VeryAmbiguous: return "very_ambiguous";
  }
  return "unambiguous";
}

std::optional<AmbiguityLevel> ambiguity_from_string(std::string_view s) noexcept {
  if (s == "unambiguous") return AmbiguityLevel::Unambiguous;
  if (s == "ambiguous") return AmbiguityLevel::Ambiguous;
  if (s == "very_ambiguous") return AmbiguityLevel::VeryAmbiguous;
  return std::nullopt;
}

std::string_view to_string(Provenance p) noexcept { return p == Provenance::Manual ? "manual" : "synthetic"; }

std::optional<Provenance> provenance_from_string(std::string_view s) noexcept {
  if (s == "manual") return Provenance::Manual;
  if (s == "synthetic") return Provenance::Synthetic;
  return std::nullopt;
}

namespace {

// Uniform index in [0, n) by rejection, so results do not depend on the
// standard library's distribution implementations.
std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

bool carries_language(Modality m) { return m == Modality::Text || m == Modality::Audio || m == Modality::Video; }

struct OutPort {
  std::size_t node;  // index into Pipeline::nodes
  std::string port;
  Modality modality;
  std::optional<std::string> language;
  int consumers = 0;
};

class Expander {
 public:
  explicit Expander(const SynthesisConfig& cfg)
      : cfg_(cfg), catalog_(cfg.catalog ? *cfg.catalog : FunctionCatalog::builtin()), rng_(cfg.seed) {
    if (cfg.n_function_nodes < 1) throw Error("n_function_nodes must be at least 1");
    if (cfg.n_inputs < 1) throw Error("n_inputs must be at least 1");
    if (cfg.max_children < 1) throw Error("max_children must be at least 1");
    if (catalog_.empty()) throw Error("function catalog is empty");
    languages_ = catalog_.languages();
    if (languages_.empty()) languages_ = {"en"};
    for (const auto& f : catalog_.functions()) {
      auto data = f.data_inputs();
      if (data.size() != 1 || !data.front()->required) continue;
      if (f.outputs.empty() || static_cast<int>(f.outputs.size()) > cfg.max_children) continue;
      usable_.push_back(&f);
    }
  }

  // A random walk can strand itself (every open port carries a modality
  // nothing consumes), so dead ends restart on the same generator.
  Pipeline run() {
    constexpr int kAttempts = 256;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      p_ = Pipeline{};
      children_.clear();
      ports_.clear();
      functions_ = 0;
      if (grow()) return std::move(p_);
    }
    throw Error("catalog cannot grow a pipeline with " + std::to_string(cfg_.n_function_nodes) +
                " function nodes within " + std::to_string(kAttempts) + " attempts");
  }

 private:
  bool grow() {
    static const Modality kInputModalities[] = {Modality::Text, Modality::Audio, Modality::Image, Modality::Video};
    for (int i = 1; i <= cfg_.n_inputs; ++i) {
      Node n;
      n.id = "in" + std::to_string(i);
      n.kind = NodeKind::Input;
      Modality m = kInputModalities[pick(rng_, std::size(kInputModalities))];
      n.output_ports = {{"out", m}};
      std::optional<std::string> lang;
      if (carries_language(m)) {
        lang = random_language();
        n.params["language"] = *lang;
      }
      add_node(std::move(n));
      ports_.push_back({p_.nodes.size() - 1, "out", m, lang});
    }

    for (int k = 0; k < cfg_.n_function_nodes; ++k) {
      std::vector<std::size_t> points;
      if (k < cfg_.n_inputs) {
        // Every input gets at least one consumer before growth goes free.
        if (!candidates(ports_[k]).empty()) points.push_back(k);
      }
      if (points.empty()) {
        for (std::size_t i = 0; i < ports_.size(); ++i) {
          if (can_attach(i) && !candidates(ports_[i]).empty()) points.push_back(i);
        }
      }
      if (points.empty()) return false;
      std::size_t at = points[pick(rng_, points.size())];
      auto options = candidates(ports_[at]);
      attach(at, *options[pick(rng_, options.size())]);
    }

    int outputs = 0;
    for (std::size_t i = 0; i < ports_.size(); ++i) {
      if (ports_[i].consumers > 0) continue;
      OutPort src = ports_[i];
      Node n;
      n.id = "out" + std::to_string(++outputs);
      n.kind = NodeKind::Output;
      n.input_ports = {{"in", src.modality}};
      if (src.language) n.params["language"] = *src.language;
      add_edge(src, n.id, "in");
      add_node(std::move(n));
      ++ports_[i].consumers;
    }
    p_.canonicalize();
    return true;
  }

  std::string random_language() { return languages_[pick(rng_, languages_.size())]; }

  void add_node(Node n) {
    children_.emplace_back(0);
    p_.nodes.push_back(std::move(n));
  }

  void add_edge(const OutPort& src, const std::string& to, const std::string& port) {
    p_.edges.push_back({{p_.nodes[src.node].id, src.port}, {to, port}});
    ++children_[src.node];
  }

  int uncovered(std::size_t node) const {
    int u = 0;
    for (const auto& op : ports_) {
      if (op.node == node && op.consumers == 0) ++u;
    }
    return u;
  }

  // Attaching must leave room for Output caps on the parent's other ports.
  bool can_attach(std::size_t port) const {
    const auto& op = ports_[port];
    int after = children_[op.node] + 1 + uncovered(op.node) - (op.consumers == 0 ? 1 : 0);
    return after <= cfg_.max_children;
  }

  std::vector<const FunctionSpec*> candidates(const OutPort& op) const {
    const Node& parent = p_.nodes[op.node];
    std::vector<const FunctionSpec*> out;
    for (const auto* f : usable_) {
      if (f->data_inputs().front()->modality != op.modality) continue;
      if (parent.kind == NodeKind::Function && f->id == parent.function_id) continue;
      out.push_back(f);
    }
    return out;
  }

  void attach(std::size_t at, const FunctionSpec& f) {
    const OutPort src = ports_[at];
    Node n;
    n.id = "f" + std::to_string(++functions_);
    n.kind = NodeKind::Function;
    n.function_id = f.id;
    n.input_ports.reserve(f.inputs.size());
    for (const auto& in : f.inputs) n.input_ports.push_back({in.name, in.modality});
    for (const auto& out : f.outputs) n.output_ports.push_back({out.name, out.modality});

    std::optional<std::string> lang = src.language;
    for (const auto* param : f.required_params()) {
      if (param->name == "target_language") continue;
      if (param->name == "language" || param->name == "source_language") {
        if (!lang) lang = random_language();
        n.params[param->name] = *lang;
      } else {
        n.params[param->name] = random_language();
      }
    }
    if (f.input("target_language") && f.input("target_language")->required) {
      std::vector<std::string> others;
      for (const auto& l : languages_) {
        if (!lang || l != *lang) others.push_back(l);
      }
      lang = others[pick(rng_, others.size())];
      n.params["target_language"] = *lang;
    }

    add_edge(src, n.id, f.data_inputs().front()->name);
    ++ports_[at].consumers;
    add_node(std::move(n));
    for (const auto& out : f.outputs) {
      ports_.push_back({p_.nodes.size() - 1, out.name, out.modality,
                        carries_language(out.modality) ? lang : std::nullopt});
    }
  }

  const SynthesisConfig& cfg_;
  const FunctionCatalog& catalog_;
  std::mt19937_64 rng_;
  std::vector<std::string> languages_;
  std::vector<const FunctionSpec*> usable_;
  Pipeline p_;
  std::vector<int> children_;
  std::vector<OutPort> ports_;
  int functions_ = 0;
};

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

std::string describe_steps(const Pipeline& p) {
  std::ostringstream out;
  auto order = topological_order(p);
  if (!order) return "(cyclic)";
  for (const auto& id : *order) {
    const Node* n = p.find(id);
    if (n->kind != NodeKind::Function) continue;
    out << "- " << n->function_id;
    if (!n->params.empty()) {
      out << " (";
      bool first = true;
      for (const auto& [k, v] : n->params) {
        out << (first ? "" : ", ") << k << "=" << v;
        first = false;
      }
      out << ")";
    }
    out << "\n";
  }
  return out.str();
}

std::string ask(LlmGateway& llm, const std::string& prompt) {
  ChatRequest req;
  req.model = llm.model(ModelRole::Utility);
  req.messages = {{"user", prompt}};
  return llm.chat(req).content;
}

}  // namespace

Pipeline expand_pipeline(const SynthesisConfig& cfg) { return Expander(cfg).run(); }

Specification specification_from_pipeline(const Pipeline& p) {
  Specification s;
  auto row = [&](const Node& n, SpecRole role, Modality m) {
    SpecRow r;
    r.role = role;
    auto label = p.metadata.find("label." + n.id);
    r.name = label != p.metadata.end() ? label->second : n.id;
    r.modality = m;
    for (const auto& [k, v] : n.params) {
      if (k == "language") {
        r.language = v;
      } else {
        r.extra[k] = v;
      }
    }
    s.rows.push_back(std::move(r));
  };
  for (const auto& n : p.nodes) {
    if (n.kind == NodeKind::Input && !n.output_ports.empty()) row(n, SpecRole::Input, n.output_ports.front().modality);
  }
  for (const auto& n : p.nodes) {
    if (n.kind == NodeKind::Output && !n.input_ports.empty()) row(n, SpecRole::Output, n.input_ports.front().modality);
  }
  return s;
}

std::string describe_specification(const Specification& s) {
  std::ostringstream out;
  for (const auto& r : s.rows) {
    out << "- " << (r.role == SpecRole::Input ? "input" : "output") << " " << r.name << ": " << to_string(r.modality);
    if (r.language) out << ", language " << *r.language;
    for (const auto& [k, v] : r.extra) out << ", " << k << " " << v;
    out << "\n";
  }
  return out.str();
}

SynthesizedQueries generate_spec_and_queries(const Pipeline& p, LlmGateway& llm) {
  SynthesizedQueries q;
  q.specification = specification_from_pipeline(p);
  q.specification.check();
  const std::string spec = describe_specification(q.specification);
  q.clear_query = trim(ask(llm, render_prompt("synth_clear_query", {{"specification", spec}, {"steps", describe_steps(p)}})));
  q.ambiguous_query =
      trim(ask(llm, render_prompt("synth_ambiguous_query", {{"specification", spec}, {"clear_query", q.clear_query}})));
  return q;
}

std::optional<AmbiguityLevel> parse_ambiguity_verdict(std::string_view reply) {
  std::string s = lower(reply);
  std::replace(s.begin(), s.end(), '_', ' ');
  if (s.find("very ambiguous") != std::string::npos) return AmbiguityLevel::VeryAmbiguous;
  if (s.find("unambiguous") != std::string::npos) return AmbiguityLevel::Unambiguous;
  if (s.find("ambiguous") != std::string::npos) return AmbiguityLevel::Ambiguous;
  return std::nullopt;
}

AmbiguityLevel rate_ambiguity(const std::string& query, LlmGateway& llm) {
  std::string reply = ask(llm, render_prompt("rate_ambiguity", {{"query", query}}));
  auto level = parse_ambiguity_verdict(reply);
  if (!level) throw Error("cannot read an ambiguity level from reply: " + reply);
  return *level;
}

// ---------------------------------------------------------------------------

nlohmann::json entry_to_json(const DatasetEntry& e) {
  return {{"id", e.id},
          {"ambiguous_query", e.ambiguous_query},
          {"clear_query", e.clear_query},
          {"specification", specification_to_json(e.specification)},
          {"reference", pipeline_to_json(e.reference)},
          {"ambiguity_level", std::string(to_string(e.ambiguity_level))},
          {"provenance", std::string(to_string(e.provenance))}};
}

DatasetEntry entry_from_json(const nlohmann::json& doc, const FunctionCatalog& catalog, const std::string& where) {
  static const std::set<std::string> kFields = {"id",        "ambiguous_query", "clear_query", "specification",
                                                "reference", "ambiguity_level", "provenance"};
  if (!doc.is_object()) throw ParseError(where, "dataset entry must be an object");
  for (const auto& [k, v] : doc.items()) {
    if (!kFields.count(k)) throw ParseError(where, "unknown field '" + k + "'");
  }
  auto str = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_string()) throw ParseError(where, std::string("'") + key + "' must be a string");
    return doc[key].get<std::string>();
  };
  DatasetEntry e;
  e.id = str("id");
  if (e.id.empty()) throw ParseError(where, "empty id");
  e.ambiguous_query = str("ambiguous_query");
  e.clear_query = str("clear_query");
  if (!doc.contains("specification")) throw ParseError(where, "missing 'specification'");
  e.specification = specification_from_json(doc["specification"], where + ".specification");
  if (!doc.contains("reference")) throw ParseError(where, "missing 'reference'");
  e.reference = pipeline_from_json(doc["reference"], catalog, where + ".reference");
  auto level = ambiguity_from_string(str("ambiguity_level"));
  if (!level) throw ParseError(where, "unknown ambiguity_level '" + doc["ambiguity_level"].get<std::string>() + "'");
  e.ambiguity_level = *level;
  auto prov = provenance_from_string(str("provenance"));
  if (!prov) throw ParseError(where, "unknown provenance '" + doc["provenance"].get<std::string>() + "'");
  e.provenance = *prov;
  return e;
}

void write_dataset(std::ostream& out, const std::vector<DatasetEntry>& entries) {
  for (const auto& e : entries) out << entry_to_json(e).dump() << "\n";
}

void write_dataset_file(const std::string& path, const std::vector<DatasetEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_dataset(out, entries);
}

std::vector<DatasetEntry> read_dataset(std::istream& in, const FunctionCatalog& catalog) {
  std::vector<DatasetEntry> entries;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(n);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where, e.what());
    }
    try {
      entries.push_back(entry_from_json(doc, catalog, where));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(where, e.what());
    }
  }
  return entries;
}

std::vector<DatasetEntry> read_dataset_file(const std::string& path, const FunctionCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path);
  return read_dataset(in, catalog);
}

}  // namespace pipewright
