#include "pipewright/modality.hpp"

namespace pipewright {

std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::Text: return "text";
    case Modality::Audio: return "audio";
    case Modality::Image: return "image";
    case Modality::Video: return "video";
    case Modality::Label: return "label";
    case Modality::Number: return "number";
    case Modality::Tabular: return "tabular";
    case Modality::Embedding: return "embedding";
  }
  return "text";
}

std::optional<Modality> modality_from_string(std::string_view s) noexcept {
  for (Modality m : kAllModalities) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

}  // namespace pipewright
