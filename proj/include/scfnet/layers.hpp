#pragma once

#include <vector>

#include "scfnet/rng.hpp"
#include "scfnet/types.hpp"

// 1-D network building blocks with hand-written backward passes. Every
// parameter tensor is a dense Eigen matrix (rank-1 tensors are n x 1) so the
// same code paths serve float training and double-precision gradient checks.

namespace scfnet {

constexpr double kNormEps = 1e-5;
constexpr double kNormMomentum = 0.1;

enum class Mode { Train, Eval };

// A batch of equal-length sequences, stored feature-major: data is
// [features x (n_seq * len)] and column (n, t) lives at index n * len + t.
template <typename Scalar>
struct SeqBatch {
  int n_seq = 0;
  int len = 0;
  MatrixX<Scalar> data;
};

// ---------------------------------------------------------------------------
// Convolution (no bias; a norm layer always follows)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ConvLayer {
  MatrixX<Scalar> weight;  // [out_ch x (kernel * in_ch)], column = tap * in_ch + channel
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 1;
  int stride = 1;

  int pad() const { return (kernel - 1) / 2; }
  int out_len(int len) const { return (len + 2 * pad() - kernel) / stride + 1; }
};

template <typename Scalar>
MatrixX<Scalar> im2col(const ConvLayer<Scalar>& conv, const SeqBatch<Scalar>& x) {
  const int L_out = conv.out_len(x.len);
  MatrixX<Scalar> cols = MatrixX<Scalar>::Zero(static_cast<Eigen::Index>(conv.kernel) * conv.in_ch,
                                               static_cast<Eigen::Index>(x.n_seq) * L_out);
  for (int n = 0; n < x.n_seq; ++n) {
    for (int t = 0; t < L_out; ++t) {
      const Eigen::Index col = static_cast<Eigen::Index>(n) * L_out + t;
      const int base = t * conv.stride - conv.pad();
      for (int j = 0; j < conv.kernel; ++j) {
        const int src = base + j;
        if (src < 0 || src >= x.len) continue;
        cols.block(static_cast<Eigen::Index>(j) * conv.in_ch, col, conv.in_ch, 1) =
            x.data.col(static_cast<Eigen::Index>(n) * x.len + src);
      }
    }
  }
  return cols;
}

template <typename Scalar>
SeqBatch<Scalar> conv1d_forward(const ConvLayer<Scalar>& conv, const SeqBatch<Scalar>& x) {
  SeqBatch<Scalar> y;
  y.n_seq = x.n_seq;
  y.len = conv.out_len(x.len);
  y.data.noalias() = conv.weight * im2col(conv, x);
  return y;
}

// Accumulates the weight gradient; when dx is non-null also accumulates the
// input gradient (dx must be pre-sized and zeroed or hold a prior gradient).
template <typename Scalar>
void conv1d_backward(const ConvLayer<Scalar>& conv, const SeqBatch<Scalar>& x,
                     const SeqBatch<Scalar>& dy, MatrixX<Scalar>& dweight,
                     SeqBatch<Scalar>* dx) {
  const MatrixX<Scalar> cols = im2col(conv, x);
  dweight.noalias() += dy.data * cols.transpose();
  if (dx == nullptr) return;

  MatrixX<Scalar> dcols;
  dcols.noalias() = conv.weight.transpose() * dy.data;
  for (int n = 0; n < x.n_seq; ++n) {
    for (int t = 0; t < dy.len; ++t) {
      const Eigen::Index col = static_cast<Eigen::Index>(n) * dy.len + t;
      const int base = t * conv.stride - conv.pad();
      for (int j = 0; j < conv.kernel; ++j) {
        const int src = base + j;
        if (src < 0 || src >= x.len) continue;
        dx->data.col(static_cast<Eigen::Index>(n) * x.len + src) +=
            dcols.block(static_cast<Eigen::Index>(j) * conv.in_ch, col, conv.in_ch, 1);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Per-feature normalization over (sequence x time)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct NormLayer {
  MatrixX<Scalar> gamma, beta;                  // [k x 1]
  MatrixX<Scalar> running_mean, running_var;    // [k x 1]
};

template <typename Scalar>
struct NormCache {
  MatrixX<Scalar> xhat;
  VectorX<Scalar> inv_std;
  VectorX<Scalar> batch_mean, batch_var;  // biased variance, for running updates
};

template <typename Scalar>
SeqBatch<Scalar> norm_forward(const NormLayer<Scalar>& norm, const SeqBatch<Scalar>& x, Mode mode,
                              NormCache<Scalar>* cache) {
  SeqBatch<Scalar> y;
  y.n_seq = x.n_seq;
  y.len = x.len;

  VectorX<Scalar> mean, var;
  if (mode == Mode::Train) {
    mean = x.data.rowwise().mean();
    var = (x.data.colwise() - mean).array().square().rowwise().mean();
  } else {
    mean = norm.running_mean.col(0);
    var = norm.running_var.col(0);
  }
  VectorX<Scalar> inv_std = (var.array() + static_cast<Scalar>(kNormEps)).sqrt().inverse();

  MatrixX<Scalar> xhat =
      ((x.data.colwise() - mean).array().colwise() * inv_std.array()).matrix();
  y.data = ((xhat.array().colwise() * norm.gamma.col(0).array()).colwise() +
            norm.beta.col(0).array())
               .matrix();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->batch_mean = std::move(mean);
    cache->batch_var = std::move(var);
  }
  return y;
}

// Train-mode backward (statistics are part of the graph).
template <typename Scalar>
SeqBatch<Scalar> norm_backward(const NormLayer<Scalar>& norm, const NormCache<Scalar>& cache,
                               const SeqBatch<Scalar>& dy, MatrixX<Scalar>& dgamma,
                               MatrixX<Scalar>& dbeta) {
  dbeta.col(0) += dy.data.rowwise().sum();
  dgamma.col(0) += (dy.data.array() * cache.xhat.array()).rowwise().sum().matrix();

  const MatrixX<Scalar> dxhat = (dy.data.array().colwise() * norm.gamma.col(0).array()).matrix();
  const VectorX<Scalar> mean_dxhat = dxhat.rowwise().mean();
  const VectorX<Scalar> mean_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().mean();

  SeqBatch<Scalar> dx;
  dx.n_seq = dy.n_seq;
  dx.len = dy.len;
  dx.data = ((((dxhat.colwise() - mean_dxhat).array() -
               (cache.xhat.array().colwise() * mean_dxhat_xhat.array()))
                  .colwise() *
              cache.inv_std.array()))
                .matrix();
  return dx;
}

// Exponential moving average toward the latest batch statistics; variance is
// stored unbiased, matching the frozen-at-evaluation contract.
template <typename Scalar>
void norm_update_running(NormLayer<Scalar>& norm, const NormCache<Scalar>& cache, Eigen::Index n_cols) {
  const auto mom = static_cast<Scalar>(kNormMomentum);
  const Scalar unbias = n_cols > 1
                            ? static_cast<Scalar>(n_cols) / static_cast<Scalar>(n_cols - 1)
                            : Scalar(1);
  norm.running_mean.col(0) = (Scalar(1) - mom) * norm.running_mean.col(0) + mom * cache.batch_mean;
  norm.running_var.col(0) =
      (Scalar(1) - mom) * norm.running_var.col(0) + mom * unbias * cache.batch_var;
}

// ---------------------------------------------------------------------------
// Rectifier
// ---------------------------------------------------------------------------

template <typename Scalar>
SeqBatch<Scalar> relu_forward(const SeqBatch<Scalar>& x) {
  SeqBatch<Scalar> y;
  y.n_seq = x.n_seq;
  y.len = x.len;
  y.data = x.data.cwiseMax(Scalar(0));
  return y;
}

// Mask reconstructed from the forward output (y > 0 iff x > 0).
template <typename Scalar>
SeqBatch<Scalar> relu_backward(const SeqBatch<Scalar>& y, const SeqBatch<Scalar>& dy) {
  SeqBatch<Scalar> dx;
  dx.n_seq = dy.n_seq;
  dx.len = dy.len;
  dx.data = (y.data.array() > Scalar(0)).template cast<Scalar>() * dy.data.array();
  return dx;
}

// ---------------------------------------------------------------------------
// LSTM (one direction)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct LstmDir {
  MatrixX<Scalar> weight_ih;  // [4h x in]
  MatrixX<Scalar> weight_hh;  // [4h x h]
  MatrixX<Scalar> bias;       // [4h x 1]
};

template <typename Scalar>
struct LstmCache {
  // Indexed by processing order (reversed sequences store step 0 = last frame).
  std::vector<MatrixX<Scalar>> gate_i, gate_f, gate_g, gate_o, cell, tanh_cell, hidden;
};

namespace detail {

template <typename Scalar>
MatrixX<Scalar> sigmoid(const MatrixX<Scalar>& x) {
  return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
}

// Columns of step t across all sequences: [features x n_seq].
template <typename Scalar>
MatrixX<Scalar> gather_step(const SeqBatch<Scalar>& x, int t) {
  MatrixX<Scalar> out(x.data.rows(), x.n_seq);
  for (int n = 0; n < x.n_seq; ++n) out.col(n) = x.data.col(static_cast<Eigen::Index>(n) * x.len + t);
  return out;
}

template <typename Scalar>
void scatter_step_add(SeqBatch<Scalar>& x, int t, const MatrixX<Scalar>& grad) {
  for (int n = 0; n < x.n_seq; ++n) x.data.col(static_cast<Eigen::Index>(n) * x.len + t) += grad.col(n);
}

}  // namespace detail

// Runs the direction over all steps and returns the final hidden state
// [h x n_seq]. `reverse` consumes the sequence back to front.
template <typename Scalar>
MatrixX<Scalar> lstm_forward(const LstmDir<Scalar>& dir, const SeqBatch<Scalar>& x, bool reverse,
                             LstmCache<Scalar>* cache) {
  const auto h = static_cast<Eigen::Index>(dir.weight_hh.cols());
  MatrixX<Scalar> hidden = MatrixX<Scalar>::Zero(h, x.n_seq);
  MatrixX<Scalar> cell = MatrixX<Scalar>::Zero(h, x.n_seq);

  for (int step = 0; step < x.len; ++step) {
    const int t = reverse ? x.len - 1 - step : step;
    const MatrixX<Scalar> xt = detail::gather_step(x, t);
    MatrixX<Scalar> gates = dir.weight_ih * xt + dir.weight_hh * hidden;
    gates.colwise() += dir.bias.col(0);

    const MatrixX<Scalar> gi = detail::sigmoid<Scalar>(gates.topRows(h));
    const MatrixX<Scalar> gf = detail::sigmoid<Scalar>(gates.middleRows(h, h));
    const MatrixX<Scalar> gg = gates.middleRows(2 * h, h).array().tanh().matrix();
    const MatrixX<Scalar> go = detail::sigmoid<Scalar>(gates.bottomRows(h));

    cell = (gf.array() * cell.array() + gi.array() * gg.array()).matrix();
    const MatrixX<Scalar> tc = cell.array().tanh().matrix();
    hidden = (go.array() * tc.array()).matrix();

    if (cache != nullptr) {
      cache->gate_i.push_back(gi);
      cache->gate_f.push_back(gf);
      cache->gate_g.push_back(gg);
      cache->gate_o.push_back(go);
      cache->cell.push_back(cell);
      cache->tanh_cell.push_back(tc);
      cache->hidden.push_back(hidden);
    }
  }
  return hidden;
}

// Backpropagation through time from the gradient of the final hidden state.
// Accumulates parameter gradients and the input-sequence gradient.
template <typename Scalar>
void lstm_backward(const LstmDir<Scalar>& dir, const SeqBatch<Scalar>& x, bool reverse,
                   const LstmCache<Scalar>& cache, const MatrixX<Scalar>& dh_final,
                   MatrixX<Scalar>& dweight_ih, MatrixX<Scalar>& dweight_hh,
                   MatrixX<Scalar>& dbias, SeqBatch<Scalar>& dx) {
  const auto h = static_cast<Eigen::Index>(dir.weight_hh.cols());
  MatrixX<Scalar> dh = dh_final;
  MatrixX<Scalar> dc = MatrixX<Scalar>::Zero(h, x.n_seq);

  for (int step = x.len - 1; step >= 0; --step) {
    const int t = reverse ? x.len - 1 - step : step;
    const MatrixX<Scalar>& gi = cache.gate_i[step];
    const MatrixX<Scalar>& gf = cache.gate_f[step];
    const MatrixX<Scalar>& gg = cache.gate_g[step];
    const MatrixX<Scalar>& go = cache.gate_o[step];
    const MatrixX<Scalar>& tc = cache.tanh_cell[step];

    const MatrixX<Scalar> dgo = dh.array() * tc.array() * go.array() * (Scalar(1) - go.array());
    dc.array() += dh.array() * go.array() * (Scalar(1) - tc.array().square());

    MatrixX<Scalar> cell_prev = step > 0 ? cache.cell[step - 1] : MatrixX<Scalar>::Zero(h, x.n_seq);
    const MatrixX<Scalar> dgi = dc.array() * gg.array() * gi.array() * (Scalar(1) - gi.array());
    const MatrixX<Scalar> dgf = dc.array() * cell_prev.array() * gf.array() * (Scalar(1) - gf.array());
    const MatrixX<Scalar> dgg = dc.array() * gi.array() * (Scalar(1) - gg.array().square());

    MatrixX<Scalar> dgates(4 * h, x.n_seq);
    dgates.topRows(h) = dgi;
    dgates.middleRows(h, h) = dgf;
    dgates.middleRows(2 * h, h) = dgg;
    dgates.bottomRows(h) = dgo;

    const MatrixX<Scalar> xt = detail::gather_step(x, t);
    const MatrixX<Scalar> h_prev =
        step > 0 ? cache.hidden[step - 1] : MatrixX<Scalar>::Zero(h, x.n_seq);

    dweight_ih.noalias() += dgates * xt.transpose();
    dweight_hh.noalias() += dgates * h_prev.transpose();
    dbias.col(0) += dgates.rowwise().sum();

    detail::scatter_step_add(dx, t, MatrixX<Scalar>(dir.weight_ih.transpose() * dgates));
    dh.noalias() = dir.weight_hh.transpose() * dgates;
    dc = (dc.array() * gf.array()).matrix();
  }
}

// ---------------------------------------------------------------------------
// Affine
// ---------------------------------------------------------------------------

// y = W x + b, columns are samples.
template <typename Scalar>
MatrixX<Scalar> affine_forward(const MatrixX<Scalar>& weight, const MatrixX<Scalar>& bias,
                               const MatrixX<Scalar>& x) {
  MatrixX<Scalar> y = weight * x;
  y.colwise() += bias.col(0);
  return y;
}

template <typename Scalar>
MatrixX<Scalar> affine_backward(const MatrixX<Scalar>& weight, const MatrixX<Scalar>& x,
                                const MatrixX<Scalar>& dy, MatrixX<Scalar>& dweight,
                                MatrixX<Scalar>& dbias) {
  dweight.noalias() += dy * x.transpose();
  dbias.col(0) += dy.rowwise().sum();
  return weight.transpose() * dy;
}

}  // namespace scfnet
