#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gtn/mlp.hpp"

namespace gtn {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Writes the model in the little-endian binary layout documented in
/// docs/model_format.md. Parameters round-trip bit-exactly.
void save_model(const MlpModel& model, const std::filesystem::path& path);

/// Reads a model written by save_model. Throws Error(kModelFormat) on a bad
/// magic, unknown version, size mismatch between declared shape and payload,
/// truncation, trailing bytes, or checksum failure.
MlpModel load_model(const std::filesystem::path& path);

std::string serialize_model(const MlpModel& model);
MlpModel deserialize_model(const std::string& bytes);

}  // namespace gtn
