#pragma once

#include <string>
#include <vector>

#include "scfnet/types.hpp"

namespace scfnet {

enum class Arch { Scfnet, End2End };

std::string arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

struct ModelConfig {
  Arch arch = Arch::Scfnet;
  int n_channels = 16;
  int window_samples = 512;
  int feature_width = 16;  // k; 64 at clinical scale, 16 for desk tests
  std::vector<int> inception_kernels = {3, 5, 7, 9};
  int n_resnet_blocks = 9;
  std::vector<int> resnet_stage_strides = {1, 1, 1, 2, 1, 1, 2, 1, 1};
  int lstm_hidden = 16;  // equals feature_width
  int classifier_hidden = 128;
  int n_classes = 4;
  double dropout = 0.0;

  // Inception stride 2 times the product of the block strides.
  int total_downsampling() const {
    int d = 2;
    for (int s : resnet_stage_strides) d *= s;
    return d;
  }
  int sequence_length() const { return window_samples / total_downsampling(); }
  int feature_block_width() const { return 2 * feature_width; }

  // Throws ValidationError when an invariant fails.
  void validate() const;
};

// Full config as canonical JSON (sorted keys); stored in checkpoints.
std::string config_fingerprint(const ModelConfig& cfg);

// Subset of the fingerprint that must match for extractor reuse: arch,
// feature width, inception kernels, block count/strides, lstm width.
std::string extractor_fingerprint(const ModelConfig& cfg);

ModelConfig config_from_fingerprint(const std::string& json_text);

}  // namespace scfnet
