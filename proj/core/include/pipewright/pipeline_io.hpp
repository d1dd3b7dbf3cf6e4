#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pipewright/catalog.hpp"
#include "pipewright/pipeline.hpp"

namespace pipewright {

// JSON is the canonical storage and wire format:
//   {"nodes": [{"id", "kind", "function", "params", "payload",
//               "inputs", "outputs", "model", "unresolved"}],
//    "edges": [{"from": "node.port", "to": "node.port"}],
//    "metadata": {...}}
// Function nodes take their ports from the catalog and never serialize them.
// A Function whose id is missing from the catalog parses with empty ports;
// the validator reports it.

Pipeline parse_pipeline_json(std::string_view text, const FunctionCatalog& catalog);
Pipeline pipeline_from_json(const nlohmann::json& doc, const FunctionCatalog& catalog,
                            const std::string& where = "");
nlohmann::json pipeline_to_json(const Pipeline& p);
/// Deterministic: nodes by id, edges sorted, keys sorted, 2-space indent.
std::string serialize_pipeline_json(const Pipeline& p);

/// DOT interchange form. Node attributes: kind, function, params
/// (URL-encoded key=value pairs joined by '&'), payload, inputs/outputs
/// ("name:modality,..."), model, unresolved. Edge attribute ports="out->in".
/// Graph attribute metadata carries the metadata map like params.
Pipeline parse_pipeline_dot(std::string_view text, const FunctionCatalog& catalog);
std::string serialize_pipeline_dot(const Pipeline& p);

nlohmann::json specification_to_json(const Specification& s);
Specification specification_from_json(const nlohmann::json& doc, const std::string& where = "");

std::string url_encode(std::string_view s);
/// Throws ParseError on malformed escapes.
std::string url_decode(std::string_view s);

}  // namespace pipewright
