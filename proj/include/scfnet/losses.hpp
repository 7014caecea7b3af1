#pragma once

#include <cmath>
#include <vector>

#include "scfnet/types.hpp"

namespace scfnet {

// Numerically stable log-softmax / softmax over each column of [n_classes x B].
template <typename Scalar>
MatrixX<Scalar> log_softmax_cols(const MatrixX<Scalar>& logits) {
  MatrixX<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const Scalar m = logits.col(c).maxCoeff();
    const Scalar lse = m + std::log((logits.col(c).array() - m).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

template <typename Scalar>
MatrixX<Scalar> softmax_cols(const MatrixX<Scalar>& logits) {
  return log_softmax_cols(logits).array().exp().matrix();
}

// Row-oriented variants for the public [B x n_classes] orientation.
template <typename Scalar>
MatrixX<Scalar> softmax_rows(const MatrixX<Scalar>& logits) {
  return softmax_cols(MatrixX<Scalar>(logits.transpose())).transpose();
}

// Mean over the batch of sum_i p_i * log(p_i / q_i) with Q = softmax(logits).
// Zero-probability target entries contribute zero. Always >= 0.
// Orientation: targets and logits are [B x n_classes] (samples as rows).
template <typename Scalar>
double kl_div_loss(const MatrixX<Scalar>& targets, const MatrixX<Scalar>& logits) {
  if (targets.rows() != logits.rows() || targets.cols() != logits.cols())
    throw ValidationError("kl_div_loss: target/logit shape mismatch");
  if (!logits.allFinite()) throw ValidationError("kl_div_loss: non-finite logits");
  const MatrixX<Scalar> logq = log_softmax_cols(MatrixX<Scalar>(logits.transpose()));
  double total = 0.0;
  for (Eigen::Index b = 0; b < targets.rows(); ++b) {
    for (Eigen::Index i = 0; i < targets.cols(); ++i) {
      const double p = static_cast<double>(targets(b, i));
      if (p <= 0.0) continue;
      total += p * (std::log(p) - static_cast<double>(logq(i, b)));
    }
  }
  return total / static_cast<double>(targets.rows());
}

// Mean over the batch of -log softmax(logits)[target].
template <typename Scalar>
double cross_entropy_loss(const std::vector<int>& targets, const MatrixX<Scalar>& logits) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
    throw ValidationError("cross_entropy_loss: target count does not match batch size");
  if (!logits.allFinite()) throw ValidationError("cross_entropy_loss: non-finite logits");
  const MatrixX<Scalar> logq = log_softmax_cols(MatrixX<Scalar>(logits.transpose()));
  double total = 0.0;
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    const int t = targets[static_cast<size_t>(b)];
    if (t < 0 || t >= logits.cols())
      throw ValidationError("cross_entropy_loss: class index out of range");
    total -= static_cast<double>(logq(t, b));
  }
  return total / static_cast<double>(logits.rows());
}

// --- gradient variants on the internal [n_classes x B] orientation ---

// d(mean KL)/d(logits) = (softmax(logits) - P) / B.
template <typename Scalar>
MatrixX<Scalar> kl_div_grad_cols(const MatrixX<Scalar>& target_cols,
                                 const MatrixX<Scalar>& logit_cols) {
  const auto B = static_cast<Scalar>(logit_cols.cols());
  return (softmax_cols(logit_cols) - target_cols) / B;
}

template <typename Scalar>
MatrixX<Scalar> cross_entropy_grad_cols(const std::vector<int>& targets,
                                        const MatrixX<Scalar>& logit_cols) {
  MatrixX<Scalar> g = softmax_cols(logit_cols);
  for (Eigen::Index b = 0; b < g.cols(); ++b) g(targets[static_cast<size_t>(b)], b) -= Scalar(1);
  return g / static_cast<Scalar>(g.cols());
}

// Shannon entropy of a batch of distributions [B x n_classes], mean over rows.
template <typename Scalar>
double mean_entropy(const MatrixX<Scalar>& probs) {
  double total = 0.0;
  for (Eigen::Index b = 0; b < probs.rows(); ++b)
    for (Eigen::Index i = 0; i < probs.cols(); ++i) {
      const double p = static_cast<double>(probs(b, i));
      if (p > 0.0) total -= p * std::log(p);
    }
  return total / static_cast<double>(probs.rows());
}

// Soft-target cross entropy -sum_i p_i log q_i, mean over the batch
// (KL(P||Q) = CE(P,Q) - H(P)).
template <typename Scalar>
double soft_cross_entropy(const MatrixX<Scalar>& targets, const MatrixX<Scalar>& logits) {
  const MatrixX<Scalar> logq = log_softmax_cols(MatrixX<Scalar>(logits.transpose()));
  double total = 0.0;
  for (Eigen::Index b = 0; b < targets.rows(); ++b)
    for (Eigen::Index i = 0; i < targets.cols(); ++i)
      total -= static_cast<double>(targets(b, i)) * static_cast<double>(logq(i, b));
  return total / static_cast<double>(targets.rows());
}

}  // namespace scfnet
