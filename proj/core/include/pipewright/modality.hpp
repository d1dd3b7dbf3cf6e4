#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace pipewright {

enum class Modality { Text, Audio, Image, Video, Label, Number, Tabular, Embedding };

inline constexpr std::array<Modality, 8> kAllModalities = {
    Modality::Text,  Modality::Audio,  Modality::Image,   Modality::Video,
    Modality::Label, Modality::Number, Modality::Tabular, Modality::Embedding};

std::string_view to_string(Modality m) noexcept;

/// Exact, lower-case names only ("text", "audio", ...).
std::optional<Modality> modality_from_string(std::string_view s) noexcept;

}  // namespace pipewright
