#pragma once

#include <vector>

#include "scfnet/model.hpp"

namespace scfnet {

// Adaptive-moment optimizer with bias correction (decay 0.9/0.999, eps 1e-8).
// Frozen extractors receive no updates, leaving their tensors bitwise intact.
template <typename Scalar>
class Adam {
 public:
  Adam(const ModelParams<Scalar>& params, double learning_rate)
      : lr_(learning_rate), m_(zero_like(params)), v_(zero_like(params)) {}

  void step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);

    std::vector<const MatrixX<Scalar>*> g;
    std::vector<bool> skip;
    visit_tensors(grads, [&](const TensorInfo& info, const MatrixX<Scalar>& t) {
      g.push_back(&t);
      skip.push_back(!info.trainable ||
                     (params.extractor_frozen && is_extractor_tensor(info.name)));
    });
    std::vector<MatrixX<Scalar>*> m, v;
    visit_tensors(m_, [&](const TensorInfo&, MatrixX<Scalar>& t) { m.push_back(&t); });
    visit_tensors(v_, [&](const TensorInfo&, MatrixX<Scalar>& t) { v.push_back(&t); });

    size_t i = 0;
    visit_tensors(params, [&](const TensorInfo&, MatrixX<Scalar>& p) {
      const size_t idx = i++;
      if (skip[idx]) return;
      auto& mi = *m[idx];
      auto& vi = *v[idx];
      const auto& gi = *g[idx];
      mi = static_cast<Scalar>(beta1_) * mi + static_cast<Scalar>(1.0 - beta1_) * gi;
      vi = (static_cast<Scalar>(beta2_) * vi.array() +
            static_cast<Scalar>(1.0 - beta2_) * gi.array().square())
               .matrix();
      p.array() -= static_cast<Scalar>(lr_) * (mi.array() / static_cast<Scalar>(bc1)) /
                   ((vi.array() / static_cast<Scalar>(bc2)).sqrt() + static_cast<Scalar>(eps_));
    });
  }

 private:
  static constexpr double beta1_ = 0.9;
  static constexpr double beta2_ = 0.999;
  static constexpr double eps_ = 1e-8;
  double lr_;
  long t_ = 0;
  ModelParams<Scalar> m_, v_;
};

}  // namespace scfnet
