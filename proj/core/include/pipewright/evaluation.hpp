#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipewright/metrics.hpp"
#include "pipewright/synthesis.hpp"

namespace pipewright {

/// A builder output to score, keyed by the dataset entry id.
struct GeneratedPipeline {
  std::string id;
  Pipeline pipeline;
};

/// JSONL, one {"id": ..., "pipeline": {...}} per line.
void write_generated(std::ostream& out, const std::vector<GeneratedPipeline>& items);
std::vector<GeneratedPipeline> read_generated(std::istream& in, const FunctionCatalog& catalog);
std::vector<GeneratedPipeline> read_generated_file(const std::string& path, const FunctionCatalog& catalog);

struct PairRecord {
  std::string id;
  bool exact_match = false;
  GedResult ged;
  AmbiguityLevel ambiguity = AmbiguityLevel::Unambiguous;
  std::size_t reference_nodes = 0;
  std::string size_bin;
};

struct BinStats {
  std::size_t n = 0;
  double em_percent = 0.0;
  double ged_percent = 0.0;
};

struct EvaluationReport {
  std::vector<PairRecord> records;  // in entry-id order
  std::size_t n = 0;
  double em_percent = 0.0;
  double ged_percent = 0.0;  // mean normalized distance x 100
  std::size_t timeouts = 0;
  std::map<std::string, BinStats> by_ambiguity;
  std::map<std::string, BinStats> by_size;
  EditHistogram edits;
};

/// Size bin label for a reference with `nodes` nodes: "1-5", "6-10", ...
std::string size_bin(std::size_t nodes, std::size_t width = 5);

/// Scores every entry against the generated pipeline with the same id.
/// Timed-out GED runs enter the averages with their upper-bound distance
/// and are counted in `timeouts`. Throws Error when the id sets differ.
EvaluationReport evaluate_dataset(const std::vector<DatasetEntry>& entries,
                                  const std::vector<GeneratedPipeline>& generated, const MatchConfig& cfg,
                                  std::size_t size_bin_width = 5);

/// Deterministic: sorted keys, percentages rounded to 4 decimals.
nlohmann::json evaluation_to_json(const EvaluationReport& r);

}  // namespace pipewright
