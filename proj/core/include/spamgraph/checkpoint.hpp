#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spamgraph/model.hpp"

namespace spamgraph {

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
};

// FSQ1 layout, all integers little-endian:
//   "FSQ1"
//   u64 config_length, config JSON bytes
//   u64 tensor_count
//   per tensor, in visit_params order:
//     u32 name_length, name bytes, u32 rank, u64 dims[rank], float32 payload
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spamgraph
