#pragma once

#include <string>
#include <string_view>
#include <vector>

// Text assets compiled into the library: default function catalog, model
// registry, prompt templates, builder few-shot pipelines, script template.
namespace pipewright::assets {

/// Throws std::out_of_range for unknown names.
std::string_view get(std::string_view name);
std::vector<std::string> list();

}  // namespace pipewright::assets
