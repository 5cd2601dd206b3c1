#pragma once

#include <cstdint>
#include <string>

#include "kidc/model_params.hpp"

namespace kidc::models {

// Checkpoint file layout, all integers little-endian:
//   magic "KIDC" | u32 version (=1) | tensor records... | u32 CRC-32
// each record: u32 name length | UTF-8 name | u32 rank | u32 dims... |
//              f32 values, row-major
// The CRC covers every byte between the version field and the CRC itself.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

// load + schema validation against a config in one step
ModelParams load_params_for(const std::string& path, const ModelConfig& cfg);

std::uint32_t crc32(const unsigned char* data, std::size_t len);

}  // namespace kidc::models
