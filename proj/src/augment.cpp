#include "scfnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace scfnet {

void validate_augment_config(const AugmentConfig& cfg, int n_channels, int window_samples) {
  if (cfg.enable_rrc) {
    if (!(cfg.rrc_lower > 0.0 && cfg.rrc_lower <= cfg.rrc_upper && cfg.rrc_upper <= 1.0))
      throw ValidationError("augment: rrc_range must satisfy 0 < l <= m <= 1");
    if (std::llround(cfg.rrc_lower * window_samples) < 1)
      throw ValidationError("augment: rrc lower bound yields an empty crop");
  }
  if (cfg.enable_timeout) {
    if (cfg.timeout_lower < 0 || cfg.timeout_lower > cfg.timeout_upper ||
        cfg.timeout_upper > window_samples)
      throw ValidationError("augment: timeout_range must satisfy 0 <= t_l <= t_u <= window_samples");
  }
  if (cfg.enable_channel_swap && !(cfg.left_channels.empty() && cfg.right_channels.empty())) {
    if (cfg.left_channels.size() != cfg.right_channels.size())
      throw ValidationError("augment: hemisphere index lists must have equal length");
    std::set<int> seen;
    for (int i : cfg.left_channels) {
      if (i < 0 || i >= n_channels) throw ValidationError("augment: left channel index out of range");
      if (!seen.insert(i).second) throw ValidationError("augment: hemisphere index lists overlap");
    }
    for (int i : cfg.right_channels) {
      if (i < 0 || i >= n_channels) throw ValidationError("augment: right channel index out of range");
      if (!seen.insert(i).second) throw ValidationError("augment: hemisphere index lists overlap");
    }
    if (!(cfg.p_shuffle_within >= 0.0 && cfg.p_shuffle_within <= 1.0 &&
          cfg.p_swap_hemispheres >= 0.0 && cfg.p_swap_hemispheres <= 1.0))
      throw ValidationError("augment: swap probabilities must be in [0, 1]");
  }
}

Windowf crop_resize(const Windowf& window, Eigen::Index start, Eigen::Index crop_len) {
  const Eigen::Index T = window.cols();
  if (crop_len < 1) throw ValidationError("crop_resize: degenerate crop of zero samples");
  if (start < 0 || start + crop_len > T) throw ValidationError("crop_resize: crop interval out of range");

  Windowf out(window.rows(), T);
  // Endpoint-aligned mapping keeps crop_len == T an exact identity and maps
  // an affine input to an affine output.
  const double scale = (T > 1) ? static_cast<double>(crop_len - 1) / static_cast<double>(T - 1) : 0.0;
  for (Eigen::Index j = 0; j < T; ++j) {
    const double pos = static_cast<double>(j) * scale;
    auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    double frac = pos - static_cast<double>(i0);
    if (i0 >= crop_len - 1) {
      i0 = crop_len - 1;
      frac = 0.0;
    }
    if (frac == 0.0) {
      out.col(j) = window.col(start + i0);
    } else {
      out.col(j) = static_cast<float>(1.0 - frac) * window.col(start + i0) +
                   static_cast<float>(frac) * window.col(start + i0 + 1);
    }
  }
  return out;
}

Windowf zero_span(const Windowf& window, Eigen::Index start, Eigen::Index len) {
  if (start < 0 || start + len > window.cols()) throw ValidationError("zero_span: span out of range");
  Windowf out = window;
  if (len > 0) out.middleCols(start, len).setZero();
  return out;
}

Windowf permute_rows(const Windowf& window, const std::vector<int>& perm) {
  Windowf out(window.rows(), window.cols());
  for (size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = window.row(perm[i]);
  return out;
}

Windowf random_resized_crop(const Windowf& window, double l, double m, Rng& rng) {
  const Eigen::Index T = window.cols();
  const double p = rng.uniform(l, m);
  const auto crop_len = static_cast<Eigen::Index>(std::llround(p * static_cast<double>(T)));
  if (crop_len < 1) throw ValidationError("random_resized_crop: degenerate crop of zero samples");
  const Eigen::Index start =
      (crop_len >= T) ? 0 : static_cast<Eigen::Index>(rng.uniform_int(0, T - crop_len));
  return crop_resize(window, start, std::min(crop_len, T));
}

Windowf time_out(const Windowf& window, int t_l, int t_u, Rng& rng) {
  const Eigen::Index T = window.cols();
  const auto t = static_cast<Eigen::Index>(rng.uniform_int(t_l, t_u));
  const Eigen::Index start = (t >= T) ? 0 : static_cast<Eigen::Index>(rng.uniform_int(0, T - t));
  return zero_span(window, start, t);
}

Windowf hemisphere_swap(const Windowf& window, const AugmentConfig& cfg, Rng& rng) {
  if (cfg.left_channels.empty() && cfg.right_channels.empty()) return window;
  validate_augment_config(cfg, static_cast<int>(window.rows()), static_cast<int>(window.cols()));

  // perm[i] = source row for output row i. Draw order: left shuffle, right
  // shuffle, hemisphere exchange.
  std::vector<int> perm(window.rows());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);

  if (rng.uniform() < cfg.p_shuffle_within) {
    std::vector<int> p = rng.permutation(static_cast<int>(cfg.left_channels.size()));
    for (size_t i = 0; i < p.size(); ++i) perm[cfg.left_channels[i]] = cfg.left_channels[p[i]];
  }
  if (rng.uniform() < cfg.p_shuffle_within) {
    std::vector<int> p = rng.permutation(static_cast<int>(cfg.right_channels.size()));
    for (size_t i = 0; i < p.size(); ++i) perm[cfg.right_channels[i]] = cfg.right_channels[p[i]];
  }
  if (rng.uniform() < cfg.p_swap_hemispheres) {
    for (size_t i = 0; i < cfg.left_channels.size(); ++i)
      std::swap(perm[cfg.left_channels[i]], perm[cfg.right_channels[i]]);
  }
  return permute_rows(window, perm);
}

Windowf apply_augmentations(const Windowf& window, const AugmentConfig& cfg, Rng& rng) {
  Windowf out = window;
  if (cfg.enable_rrc) out = random_resized_crop(out, cfg.rrc_lower, cfg.rrc_upper, rng);
  if (cfg.enable_timeout) out = time_out(out, cfg.timeout_lower, cfg.timeout_upper, rng);
  if (cfg.enable_channel_swap) out = hemisphere_swap(out, cfg, rng);
  return out;
}

}  // namespace scfnet
