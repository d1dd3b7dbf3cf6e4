#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pipewright {

inline constexpr std::size_t kHashingEmbeddingDims = 4096;

/// Lower-cased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Deterministic offline embedding: token counts hashed (FNV-1a 64, modulo
/// `dims`) into a fixed-size vector, then L2-normalized. Text without
/// tokens maps to the zero vector.
std::vector<double> hashing_embed(std::string_view text, std::size_t dims = kHashingEmbeddingDims);

/// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace pipewright
