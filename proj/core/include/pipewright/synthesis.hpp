#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipewright/catalog.hpp"
#include "pipewright/llm_gateway.hpp"
#include "pipewright/pipeline.hpp"

namespace pipewright {

enum class AmbiguityLevel { Unambiguous, Ambiguous, VeryAmbiguous };
enum class Provenance { Manual, Synthetic };

std::string_view to_string(AmbiguityLevel a) noexcept;
std::optional<AmbiguityLevel> ambiguity_from_string(std::string_view s) noexcept;
std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> provenance_from_string(std::string_view s) noexcept;

struct SynthesisConfig {
  int n_function_nodes = 1;
  int max_children = 2;
  int n_inputs = 1;
  std::uint64_t seed = 0;
  const FunctionCatalog* catalog = nullptr;  // builtin when null
};

/// Grows a tree-like pipeline from `n_inputs` Input nodes by attaching
/// catalog functions whose single data input matches an open output port,
/// until exactly `n_function_nodes` functions exist, then caps every
/// uncovered port with an Output node. Required configuration inputs
/// (languages) are set as static params, following the language carried
/// along each port. Deterministic for a given seed; no node ends up with
/// more than `max_children` successors. Throws Error if the catalog cannot
/// extend the graph.
Pipeline expand_pipeline(const SynthesisConfig& cfg);

/// Specification rows read off the Input and Output nodes: name from
/// metadata "label.<id>" (else the id), modality from the port, language
/// from the "language" param, the remaining params as extras.
Specification specification_from_pipeline(const Pipeline& p);

/// One line per row, e.g. "- input in1: video, language en".
std::string describe_specification(const Specification& s);

struct SynthesizedQueries {
  Specification specification;
  std::string clear_query;
  std::string ambiguous_query;
};

/// Specification from the pipeline; the clear query and the deliberately
/// under-specified one come from two utility-model calls.
SynthesizedQueries generate_spec_and_queries(const Pipeline& p, LlmGateway& llm);

/// Asks the utility model for a verdict. Throws Error (with the raw reply)
/// when no level can be read from the response.
AmbiguityLevel rate_ambiguity(const std::string& query, LlmGateway& llm);
/// The parsing half of rate_ambiguity.
std::optional<AmbiguityLevel> parse_ambiguity_verdict(std::string_view reply);

struct DatasetEntry {
  std::string id;
  std::string ambiguous_query;
  std::string clear_query;
  Specification specification;
  Pipeline reference;
  AmbiguityLevel ambiguity_level = AmbiguityLevel::Unambiguous;
  Provenance provenance = Provenance::Synthetic;
  bool operator==(const DatasetEntry&) const = default;
};

nlohmann::json entry_to_json(const DatasetEntry& e);
DatasetEntry entry_from_json(const nlohmann::json& doc, const FunctionCatalog& catalog,
                             const std::string& where = "");

/// One compact JSON object per line.
void write_dataset(std::ostream& out, const std::vector<DatasetEntry>& entries);
void write_dataset_file(const std::string& path, const std::vector<DatasetEntry>& entries);
/// Blank lines are skipped; a bad line throws ParseError naming "line N".
std::vector<DatasetEntry> read_dataset(std::istream& in, const FunctionCatalog& catalog);
std::vector<DatasetEntry> read_dataset_file(const std::string& path, const FunctionCatalog& catalog);

}  // namespace pipewright
