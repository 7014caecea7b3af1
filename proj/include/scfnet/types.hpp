#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scfnet {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// A window (or whole recording) is channels x samples.
template <typename Scalar>
using Window = MatrixX<Scalar>;

using Windowf = Window<float>;

// Raised when user-supplied data or configuration breaks a documented
// contract. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Continuous multi-channel signal. Units are uninterpreted (microvolt scale
// in clinical sources).
struct Recording {
  std::string patient_id;
  std::vector<std::string> channel_names;
  double sample_rate_hz = 0.0;
  Windowf data;  // channels x samples

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }
};

// Fixed-length labeled window. `votes` holds per-class expert vote counts;
// an empty vector marks an unlabeled segment (pre-label ingestion).
struct Segment {
  std::string id;
  std::string patient_id;
  Windowf data;  // channels x window_samples
  std::vector<int> votes;
  std::vector<std::string> channel_names;
};

struct Dataset {
  double sample_rate_hz = 0.0;
  int window_samples = 0;
  std::vector<std::string> channel_names;
  std::vector<std::string> class_names;
  std::vector<Segment> segments;

  int n_channels() const { return static_cast<int>(channel_names.size()); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
};

// Class distribution derived from expert votes; entries sum to 1.
struct SoftLabel {
  Eigen::VectorXd probs;
};

inline long vote_sum(const std::vector<int>& votes) {
  long s = 0;
  for (int v : votes) s += v;
  return s;
}

// Hard label = argmax of votes, ties broken toward the lowest class index.
inline int hard_label(const std::vector<int>& votes) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(votes.size()); ++i) {
    if (votes[i] > votes[best]) best = i;
  }
  return best;
}

}  // namespace scfnet
