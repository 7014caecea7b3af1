#pragma once

#include <string>
#include <vector>

#include "scfnet/types.hpp"

namespace scfnet {

struct PreprocessConfig {
  double target_rate_hz = 200.0;
  double window_seconds = 50.0;
  std::vector<std::string> channel_selection;  // empty = keep all
  int min_expert_votes = 10;
  bool oversample = false;
};

// Linear interpolation onto the new uniform time grid. Output sample count
// is round(samples * target / source). Identity (bitwise) when rates match.
Recording resample(const Recording& recording, double target_rate_hz);

// Reorders/subsets channels to exactly `names`. Recordings lacking any
// requested name are rejected with a ValidationError listing the absences.
Recording select_channels(const Recording& recording, const std::vector<std::string>& names);

// Non-overlapping consecutive windows of round(window_seconds * rate)
// samples; the trailing remainder is dropped. Votes are left empty.
// Shorter-than-one-window recordings yield an empty list.
std::vector<Segment> segment(const Recording& recording, double window_seconds);

// Keeps segments whose vote sum is strictly greater than min_experts.
Dataset filter_by_votes(const Dataset& dataset, int min_experts);

// probs[i] = votes[i] / sum(votes). All-zero (or empty) votes are an error.
SoftLabel normalize_votes(const std::vector<int>& votes);

// Duplicates minority-class segments (seeded, with replacement) until every
// class count equals the majority count. Duplicates get fresh ids.
Dataset oversample_minority(const Dataset& dataset, uint64_t seed);

}  // namespace scfnet
