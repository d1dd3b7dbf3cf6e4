#pragma once

#include <map>
#include <string>
#include <string_view>

namespace pipewright {

/// Template text of the embedded asset "prompts/<name>.txt".
std::string_view prompt_template(std::string_view name);

/// Replaces every {{key}} with vars.at(key). Unknown keys and unterminated
/// placeholders throw Error.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Loads and renders in one step.
std::string render_prompt(std::string_view name, const std::map<std::string, std::string>& vars);

}  // namespace pipewright
