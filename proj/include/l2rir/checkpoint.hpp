#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2rir/layers.hpp"

namespace l2rir {

class L2RirNet;

// Binary tensor archive, little-endian:
//   magic "L2RIRCK1" | u64 header length | UTF-8 JSON header |
//   u64 tensor count | per tensor: u32 name length, name bytes,
//   4 x i32 extents (n, c, h, w), numel x f64 values.
struct Archive {
  nlohmann::json header;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void write_archive(const std::filesystem::path& path, const Archive& archive);
// Throws IoError for unreadable or corrupt files.
Archive read_archive(const std::filesystem::path& path);

Archive to_archive(const nlohmann::json& header, const nn::ParameterSet& params);
// Copies archive tensors into params. Names and shapes must match one to one;
// throws ConfigError otherwise.
void load_parameters(const Archive& archive, nn::ParameterSet& params);

// header = {"kind": "l2rir", "model": <ModelConfig>, "extra": extra}
void save_model(const std::filesystem::path& path, const L2RirNet& model, const nlohmann::json& extra = {});
std::unique_ptr<L2RirNet> load_model(const std::filesystem::path& path);

}  // namespace l2rir
