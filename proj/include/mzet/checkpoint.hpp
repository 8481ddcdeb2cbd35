#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mzet/model.hpp"

namespace mzet {

inline constexpr uint32_t kCheckpointVersion = 1;

// Container layout (little-endian):
//   "MZETCKPT" | u32 version | u32 manifest bytes | manifest text |
//   u32 tensor count | per tensor: u32 name bytes, name, u32 rows, u32 cols,
//   rows*cols float32 in row-major order.
struct Checkpoint {
  std::string manifest;
  std::vector<std::pair<std::string, Mat>> tensors;
};

void WriteCheckpoint(const std::filesystem::path& path, const std::string& manifest,
                     const ModelParams& params);
// VersionError on a foreign magic or version; LoadError on truncation.
Checkpoint ReadCheckpoint(const std::filesystem::path& path);

// Copies tensors by name. Missing names or shape mismatches raise
// VersionError, since they mean the checkpoint belongs to another model.
void AssignTensors(const Checkpoint& ckpt, ModelParams* params);

std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

}  // namespace mzet
