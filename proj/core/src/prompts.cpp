#include "pipewright/prompts.hpp"

#include "pipewright/assets.hpp"
#include "pipewright/error.hpp"

namespace pipewright {

std::string_view prompt_template(std::string_view name) {
  try {
    return assets::get("prompts/" + std::string(name) + ".txt");
  } catch (const std::out_of_range&) {
    throw NotFoundError("no prompt template '" + std::string(name) + "'");
  }
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw Error("unterminated placeholder in prompt template");
    out.append(tmpl.substr(pos, open - pos));
    std::string key(tmpl.substr(open + 2, close - open - 2));
    auto it = vars.find(key);
    if (it == vars.end()) throw Error("prompt template needs '" + key + "'");
    out += it->second;
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string render_prompt(std::string_view name, const std::map<std::string, std::string>& vars) {
  return render_template(prompt_template(name), vars);
}

}  // namespace pipewright
