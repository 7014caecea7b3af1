#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scfnet/model.hpp"

namespace scfnet {

// Checkpoint binary layout (little-endian):
//   magic "SCFN" | format version u32 | fingerprint length u16 + UTF-8 JSON |
//   tensor count u32 | per tensor: name length u16, name, dtype u8 (0 = f32),
//   rank u8, dims u32 x rank, payload f32 row-major.
constexpr uint32_t kCheckpointVersion = 1;

struct TensorSummary {
  std::string name;
  std::vector<uint32_t> dims;
};

void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path);

ModelParams<float> load_checkpoint(const std::filesystem::path& path);

// Reads `extractor.*` tensors verbatim from the checkpoint and freshly
// initializes a classifier for new_config (which may differ in channel and
// class count). The result has its extractor flagged frozen.
ModelParams<float> load_extractor_only(const std::filesystem::path& path,
                                       const ModelConfig& new_config, uint64_t seed);

// Tensor names/shapes plus the stored fingerprint, without building params.
struct CheckpointInfo {
  uint32_t version = 0;
  std::string fingerprint;
  std::vector<TensorSummary> tensors;
};
CheckpointInfo inspect_checkpoint(const std::filesystem::path& path);

}  // namespace scfnet
