#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pipewright/modality.hpp"

namespace pipewright {

struct ParamSpec {
  std::string name;
  Modality modality = Modality::Text;
  bool required = true;
  // Non-empty for configurable ports (language codes and the like): the port
  // may be fed by an edge or set statically through the node's params.
  std::vector<std::string> allowed_values;

  bool configurable() const noexcept { return !allowed_values.empty(); }
  bool operator==(const ParamSpec&) const = default;
};

struct FunctionSpec {
  std::string id;
  std::string display_name;
  std::string category;  // primary modality group, as listed in the catalog
  std::string note;      // curation note for the modality signature
  std::vector<ParamSpec> inputs;
  std::vector<ParamSpec> outputs;

  const ParamSpec* input(std::string_view name) const noexcept;
  const ParamSpec* output(std::string_view name) const noexcept;

  /// Configurable inputs marked required.
  std::vector<const ParamSpec*> required_params() const;
  /// Inputs that can only be satisfied by an edge.
  std::vector<const ParamSpec*> data_inputs() const;

  bool operator==(const FunctionSpec&) const = default;
};

/// The library of AI functions a pipeline may use. Immutable once loaded.
class FunctionCatalog {
 public:
  FunctionCatalog() = default;
  explicit FunctionCatalog(std::vector<FunctionSpec> functions,
                           std::vector<std::string> languages = {});

  /// Parses the catalog document; throws ParseError on schema violations,
  /// duplicate ids or functions without inputs/outputs.
  static FunctionCatalog from_json(std::string_view text);
  static FunctionCatalog load(const std::filesystem::path& path);
  /// The catalog compiled into the library.
  static const FunctionCatalog& builtin();

  /// Case-insensitive lookup; nullptr when absent.
  const FunctionSpec* find(std::string_view id) const noexcept;
  /// Throws NotFoundError.
  const FunctionSpec& at(std::string_view id) const;

  const std::vector<FunctionSpec>& functions() const noexcept { return functions_; }
  /// Language codes used as the value domain of language parameters.
  const std::vector<std::string>& languages() const noexcept { return languages_; }
  bool empty() const noexcept { return functions_.empty(); }
  std::size_t size() const noexcept { return functions_.size(); }

 private:
  std::vector<FunctionSpec> functions_;
  std::vector<std::string> languages_;
  std::map<std::string, std::size_t, std::less<>> index_;  // lower-cased id
};

}  // namespace pipewright
