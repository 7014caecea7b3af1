#include "scfnet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "scfnet/rng.hpp"

namespace scfnet {

Recording resample(const Recording& recording, double target_rate_hz) {
  if (target_rate_hz <= 0.0) throw ValidationError("resample: target rate must be positive");
  if (target_rate_hz == recording.sample_rate_hz) return recording;

  const Eigen::Index n_in = recording.samples();
  const auto n_out = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(n_in) * target_rate_hz / recording.sample_rate_hz));

  Recording out;
  out.patient_id = recording.patient_id;
  out.channel_names = recording.channel_names;
  out.sample_rate_hz = target_rate_hz;
  out.data.resize(recording.channels(), n_out);

  const double step = recording.sample_rate_hz / target_rate_hz;  // source samples per output sample
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * step;
    auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    double frac = pos - static_cast<double>(i0);
    if (i0 >= n_in - 1) {
      i0 = n_in - 1;
      frac = 0.0;
    }
    for (Eigen::Index c = 0; c < recording.channels(); ++c) {
      const float a = recording.data(c, i0);
      if (frac == 0.0) {
        out.data(c, i) = a;
      } else {
        const float b = recording.data(c, i0 + 1);
        out.data(c, i) = static_cast<float>((1.0 - frac) * a + frac * b);
      }
    }
  }
  return out;
}

Recording select_channels(const Recording& recording, const std::vector<std::string>& names) {
  std::vector<Eigen::Index> indices;
  std::vector<std::string> missing;
  for (const std::string& name : names) {
    auto it = std::find(recording.channel_names.begin(), recording.channel_names.end(), name);
    if (it == recording.channel_names.end()) {
      missing.push_back(name);
    } else {
      indices.push_back(it - recording.channel_names.begin());
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "select_channels: recording lacks channel(s):";
    for (const auto& m : missing) msg << " " << m;
    throw ValidationError(msg.str());
  }

  Recording out;
  out.patient_id = recording.patient_id;
  out.sample_rate_hz = recording.sample_rate_hz;
  out.channel_names = names;
  out.data.resize(static_cast<Eigen::Index>(indices.size()), recording.samples());
  for (size_t r = 0; r < indices.size(); ++r) out.data.row(r) = recording.data.row(indices[r]);
  return out;
}

std::vector<Segment> segment(const Recording& recording, double window_seconds) {
  const auto window = static_cast<Eigen::Index>(std::llround(window_seconds * recording.sample_rate_hz));
  std::vector<Segment> out;
  if (window < 1 || recording.samples() < window) return out;

  const Eigen::Index n = recording.samples() / window;
  out.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Segment s;
    s.id = recording.patient_id + "_w" + std::to_string(i);
    s.patient_id = recording.patient_id;
    s.channel_names = recording.channel_names;
    s.data = recording.data.middleCols(i * window, window);
    out.push_back(std::move(s));
  }
  return out;
}

Dataset filter_by_votes(const Dataset& dataset, int min_experts) {
  Dataset out = dataset;
  out.segments.clear();
  for (const Segment& s : dataset.segments) {
    if (vote_sum(s.votes) > min_experts) out.segments.push_back(s);
  }
  return out;
}

SoftLabel normalize_votes(const std::vector<int>& votes) {
  const long total = vote_sum(votes);
  if (votes.empty() || total <= 0) throw ValidationError("normalize_votes: unlabeled segment (vote sum is zero)");
  SoftLabel label;
  label.probs.resize(static_cast<Eigen::Index>(votes.size()));
  for (size_t i = 0; i < votes.size(); ++i)
    label.probs(static_cast<Eigen::Index>(i)) = static_cast<double>(votes[i]) / static_cast<double>(total);
  return label;
}

Dataset oversample_minority(const Dataset& dataset, uint64_t seed) {
  std::vector<std::vector<size_t>> by_class(dataset.class_names.size());
  for (size_t i = 0; i < dataset.segments.size(); ++i) {
    const Segment& s = dataset.segments[i];
    if (vote_sum(s.votes) <= 0)
      throw ValidationError("oversample_minority: segment " + s.id + " is unlabeled");
    by_class[static_cast<size_t>(hard_label(s.votes))].push_back(i);
  }
  size_t majority = 0;
  for (size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty())
      throw ValidationError("oversample_minority: class " + dataset.class_names[c] + " has no segments");
    majority = std::max(majority, by_class[c].size());
  }

  Dataset out = dataset;
  Rng rng(seed);
  for (size_t c = 0; c < by_class.size(); ++c) {
    Rng class_rng = rng.child("oversample", c);
    size_t dup = 0;
    for (size_t n = by_class[c].size(); n < majority; ++n) {
      const size_t pick =
          by_class[c][static_cast<size_t>(class_rng.uniform_int(0, static_cast<int64_t>(by_class[c].size()) - 1))];
      Segment copy = dataset.segments[pick];
      copy.id = copy.id + "_dup" + std::to_string(dup++);
      out.segments.push_back(std::move(copy));
    }
  }
  return out;
}

}  // namespace scfnet
