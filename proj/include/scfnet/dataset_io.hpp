#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scfnet/types.hpp"

namespace scfnet {

struct Violation {
  std::string segment_id;  // empty for dataset-level violations
  std::string rule;
};

// Empty result iff all Dataset invariants hold. Reports, never throws.
std::vector<Violation> validate_dataset(const Dataset& dataset);

// Writes manifest.json plus one raw little-endian f32 blob per segment
// (channel-major: all samples of channel 0, then channel 1, ...).
// Throws ValidationError if the dataset breaks an invariant, and
// std::runtime_error on I/O failure. Bit-exact roundtrip with load_dataset.
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);

Dataset load_dataset(const std::filesystem::path& directory);

}  // namespace scfnet
