#pragma once

#include <vector>

#include "scfnet/rng.hpp"
#include "scfnet/types.hpp"

namespace scfnet {

struct AugmentConfig {
  bool enable_rrc = true;
  double rrc_lower = 0.8;  // (l, m), crop fraction range
  double rrc_upper = 1.0;

  bool enable_timeout = true;
  int timeout_lower = 0;  // (t_l, t_u), zeroed span length range in samples
  int timeout_upper = 2000;

  bool enable_channel_swap = true;
  std::vector<int> left_channels;   // disjoint equal-length hemisphere index lists;
  std::vector<int> right_channels;  // both empty disables the swap
  double p_shuffle_within = 0.5;
  double p_swap_hemispheres = 0.5;
};

// Throws ValidationError if the config is inconsistent for windows of
// `window_samples` samples and `n_channels` channels.
void validate_augment_config(const AugmentConfig& cfg, int n_channels, int window_samples);

// --- deterministic kernels (draws supplied by the caller) ---

// Crop [start, start+crop_len) and linearly resize back to the input length.
// The same interval applies to every channel. crop_len == T is the identity.
Windowf crop_resize(const Windowf& window, Eigen::Index start, Eigen::Index crop_len);

// Zero samples [start, start+len) on all channels.
Windowf zero_span(const Windowf& window, Eigen::Index start, Eigen::Index len);

// Reorder rows so output row i = input row perm[i].
Windowf permute_rows(const Windowf& window, const std::vector<int>& perm);

// --- randomized operations ---

// Draw p ~ U(l, m), crop round(p*T) samples at a uniform start, resize back.
Windowf random_resized_crop(const Windowf& window, double l, double m, Rng& rng);

// Draw t ~ U{t_l..t_u}, zero a t-sample span at a uniform start.
Windowf time_out(const Windowf& window, int t_l, int t_u, Rng& rng);

// With probability p_shuffle_within permute rows within each hemisphere
// (independently), then with probability p_swap_hemispheres exchange the two
// blocks position-wise. Rows outside both lists are untouched.
Windowf hemisphere_swap(const Windowf& window, const AugmentConfig& cfg, Rng& rng);

// Apply every enabled augmentation in order: RRC, time-out, channel swap.
Windowf apply_augmentations(const Windowf& window, const AugmentConfig& cfg, Rng& rng);

}  // namespace scfnet
