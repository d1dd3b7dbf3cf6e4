#include "pipewright/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "pipewright/pipeline_io.hpp"

namespace pipewright {

void write_generated(std::ostream& out, const std::vector<GeneratedPipeline>& items) {
  for (const auto& g : items) out << nlohmann::json{{"id", g.id}, {"pipeline", pipeline_to_json(g.pipeline)}}.dump() << "\n";
}

std::vector<GeneratedPipeline> read_generated(std::istream& in, const FunctionCatalog& catalog) {
  std::vector<GeneratedPipeline> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(n);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where, e.what());
    }
    if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string() || !doc.contains("pipeline")) {
      throw ParseError(where, "expected {\"id\": string, \"pipeline\": object}");
    }
    out.push_back({doc["id"].get<std::string>(), pipeline_from_json(doc["pipeline"], catalog, where + ".pipeline")});
  }
  return out;
}

std::vector<GeneratedPipeline> read_generated_file(const std::string& path, const FunctionCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_generated(in, catalog);
}

std::string size_bin(std::size_t nodes, std::size_t width) {
  if (width == 0) throw Error("size bin width must be positive");
  if (nodes == 0) return "0";
  std::size_t lo = (nodes - 1) / width * width + 1;
  return std::to_string(lo) + "-" + std::to_string(lo + width - 1);
}

namespace {

struct Acc {
  std::size_t n = 0, em = 0;
  double ged = 0.0;
  void add(const PairRecord& r) {
    ++n;
    em += r.exact_match ? 1 : 0;
    ged += r.ged.normalized;
  }
  BinStats stats() const {
    if (n == 0) return {};
    return {n, 100.0 * static_cast<double>(em) / static_cast<double>(n), 100.0 * ged / static_cast<double>(n)};
  }
};

double round4(double x) { return std::round(x * 1e4) / 1e4; }

nlohmann::json bin_json(const BinStats& b) {
  return {{"n", b.n}, {"em_percent", round4(b.em_percent)}, {"ged_percent", round4(b.ged_percent)}};
}

nlohmann::json counts_json(const std::map<std::string, std::size_t>& counts, const std::map<std::string, double>& shares) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : counts) out[k] = {{"count", v}, {"share", round4(shares.at(k))}};
  return out;
}

}  // namespace

EvaluationReport evaluate_dataset(const std::vector<DatasetEntry>& entries,
                                  const std::vector<GeneratedPipeline>& generated, const MatchConfig& cfg,
                                  std::size_t size_bin_width) {
  cfg.check();
  std::map<std::string, const DatasetEntry*> refs;
  for (const auto& e : entries) {
    if (!refs.emplace(e.id, &e).second) throw Error("duplicate dataset id '" + e.id + "'");
  }
  std::map<std::string, const Pipeline*> gens;
  for (const auto& g : generated) {
    if (!gens.emplace(g.id, &g.pipeline).second) throw Error("duplicate generated id '" + g.id + "'");
  }
  for (const auto& [id, e] : refs) {
    if (!gens.count(id)) throw Error("no generated pipeline for dataset id '" + id + "'");
  }
  for (const auto& [id, g] : gens) {
    if (!refs.count(id)) throw Error("generated pipeline '" + id + "' has no dataset entry");
  }

  EvaluationReport report;
  Acc all;
  std::map<std::string, Acc> amb, size;
  std::vector<GedResult> results;
  for (const auto& [id, e] : refs) {
    const Pipeline& gen = *gens.at(id);
    PairRecord r;
    r.id = id;
    r.ged = ged(gen, e->reference, cfg);
    // A completed search at distance 0 is an isomorphism; otherwise VF2
    // decides, so timeouts never turn into false negatives.
    r.exact_match = (!r.ged.timed_out && r.ged.distance == 0.0) || exact_match(gen, e->reference, cfg).matched;
    r.ambiguity = e->ambiguity_level;
    r.reference_nodes = e->reference.nodes.size();
    r.size_bin = size_bin(r.reference_nodes, size_bin_width);
    all.add(r);
    amb[std::string(to_string(r.ambiguity))].add(r);
    size[r.size_bin].add(r);
    if (r.ged.timed_out) ++report.timeouts;
    results.push_back(r.ged);
    report.records.push_back(std::move(r));
  }
  report.n = all.n;
  auto total = all.stats();
  report.em_percent = total.em_percent;
  report.ged_percent = total.ged_percent;
  for (const auto& [k, a] : amb) report.by_ambiguity[k] = a.stats();
  for (const auto& [k, a] : size) report.by_size[k] = a.stats();
  report.edits = error_breakdown(results);
  return report;
}

nlohmann::json evaluation_to_json(const EvaluationReport& r) {
  nlohmann::json doc;
  doc["n"] = r.n;
  doc["em_percent"] = round4(r.em_percent);
  doc["ged_percent"] = round4(r.ged_percent);
  doc["timeouts"] = r.timeouts;
  doc["by_ambiguity"] = nlohmann::json::object();
  for (const auto& [k, b] : r.by_ambiguity) doc["by_ambiguity"][k] = bin_json(b);
  doc["by_size"] = nlohmann::json::object();
  for (const auto& [k, b] : r.by_size) doc["by_size"][k] = bin_json(b);
  doc["edits"] = {{"total_operations", r.edits.total_operations},
                  {"total_substitutions", r.edits.total_substitutions},
                  {"by_kind", counts_json(r.edits.by_kind, r.edits.kind_shares())},
                  {"by_operation", counts_json(r.edits.by_operation, r.edits.operation_shares())},
                  {"by_cause", counts_json(r.edits.by_cause, r.edits.cause_shares())}};
  auto& pairs = doc["pairs"] = nlohmann::json::array();
  for (const auto& p : r.records) {
    auto g = ged_to_json(p.ged);
    g["normalized"] = round4(p.ged.normalized);
    pairs.push_back({{"id", p.id},
                     {"exact_match", p.exact_match},
                     {"ambiguity", std::string(to_string(p.ambiguity))},
                     {"reference_nodes", p.reference_nodes},
                     {"size_bin", p.size_bin},
                     {"ged", std::move(g)}});
  }
  return doc;
}

}  // namespace pipewright
