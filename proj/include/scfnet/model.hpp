#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scfnet/layers.hpp"
#include "scfnet/model_config.hpp"
#include "scfnet/rng.hpp"
#include "scfnet/types.hpp"

// The SCFNet model: a weight-shared single-channel extractor
// (Inception1D -> 9x ResNet1D -> BiLSTM) whose per-channel feature blocks are
// concatenated and classified by a two-layer MLP, plus the traditional
// end-to-end variant that consumes all channels in one pass.

namespace scfnet {

template <typename Scalar>
struct ResBlock {
  ConvLayer<Scalar> conv1, conv2;
  NormLayer<Scalar> norm1, norm2;
  bool has_proj = false;
  ConvLayer<Scalar> proj;  // 1x1 strided projection on downsampling blocks
  NormLayer<Scalar> proj_norm;
};

template <typename Scalar>
struct ExtractorParams {
  int in_channels = 1;  // 1 for scfnet; the trained channel count for end2end
  std::vector<ConvLayer<Scalar>> inception;
  NormLayer<Scalar> inception_norm;
  std::vector<ResBlock<Scalar>> blocks;
  LstmDir<Scalar> lstm_fw, lstm_bw;
};

template <typename Scalar>
struct ClassifierParams {
  MatrixX<Scalar> w1, b1, w2, b2;
};

template <typename Scalar>
struct ModelParams {
  ModelConfig config;
  ExtractorParams<Scalar> extractor;
  ClassifierParams<Scalar> classifier;
  bool extractor_frozen = false;
};

using ModelParamsF = ModelParams<float>;

struct TensorInfo {
  std::string name;
  std::vector<int> dims;  // logical dims; payload order is row-major over these
  bool trainable = true;
};

// ---------------------------------------------------------------------------
// Named-tensor traversal (fixed order: extractor first, then classifier)
// ---------------------------------------------------------------------------

namespace detail {

template <typename Params, typename F>
void visit_tensors_impl(Params& p, F&& f) {
  const int k = p.config.feature_width;
  auto norm = [&](const std::string& prefix, auto& layer) {
    f(TensorInfo{prefix + ".gamma", {k}, true}, layer.gamma);
    f(TensorInfo{prefix + ".beta", {k}, true}, layer.beta);
    f(TensorInfo{prefix + ".running_mean", {k}, false}, layer.running_mean);
    f(TensorInfo{prefix + ".running_var", {k}, false}, layer.running_var);
  };
  auto conv = [&](const std::string& name, auto& layer) {
    f(TensorInfo{name + ".weight", {layer.out_ch, layer.kernel, layer.in_ch}, true}, layer.weight);
  };

  for (size_t b = 0; b < p.extractor.inception.size(); ++b)
    conv("extractor.inception.branch" + std::to_string(b), p.extractor.inception[b]);
  norm("extractor.inception.norm", p.extractor.inception_norm);

  for (size_t i = 0; i < p.extractor.blocks.size(); ++i) {
    const std::string prefix = "extractor.block" + std::to_string(i);
    auto& blk = p.extractor.blocks[i];
    conv(prefix + ".conv1", blk.conv1);
    norm(prefix + ".norm1", blk.norm1);
    conv(prefix + ".conv2", blk.conv2);
    norm(prefix + ".norm2", blk.norm2);
    if (blk.has_proj) {
      conv(prefix + ".proj", blk.proj);
      norm(prefix + ".proj_norm", blk.proj_norm);
    }
  }

  auto lstm = [&](const std::string& prefix, auto& dir) {
    f(TensorInfo{prefix + ".weight_ih", {4 * k, static_cast<int>(dir.weight_ih.cols())}, true},
      dir.weight_ih);
    f(TensorInfo{prefix + ".weight_hh", {4 * k, k}, true}, dir.weight_hh);
    f(TensorInfo{prefix + ".bias", {4 * k}, true}, dir.bias);
  };
  lstm("extractor.bilstm.fw", p.extractor.lstm_fw);
  lstm("extractor.bilstm.bw", p.extractor.lstm_bw);

  f(TensorInfo{"classifier.fc1.weight",
               {static_cast<int>(p.classifier.w1.rows()), static_cast<int>(p.classifier.w1.cols())},
               true},
    p.classifier.w1);
  f(TensorInfo{"classifier.fc1.bias", {static_cast<int>(p.classifier.b1.rows())}, true},
    p.classifier.b1);
  f(TensorInfo{"classifier.fc2.weight",
               {static_cast<int>(p.classifier.w2.rows()), static_cast<int>(p.classifier.w2.cols())},
               true},
    p.classifier.w2);
  f(TensorInfo{"classifier.fc2.bias", {static_cast<int>(p.classifier.b2.rows())}, true},
    p.classifier.b2);
}

}  // namespace detail

template <typename Scalar, typename F>
void visit_tensors(ModelParams<Scalar>& params, F&& f) {
  detail::visit_tensors_impl(params, std::forward<F>(f));
}

template <typename Scalar, typename F>
void visit_tensors(const ModelParams<Scalar>& params, F&& f) {
  detail::visit_tensors_impl(params, std::forward<F>(f));
}

inline bool is_extractor_tensor(const std::string& name) {
  return name.rfind("extractor.", 0) == 0;
}

// Trainable scalar count (running statistics excluded).
template <typename Scalar>
long param_count(const ModelParams<Scalar>& params, const std::string& name_prefix = "") {
  long total = 0;
  visit_tensors(params, [&](const TensorInfo& info, const MatrixX<Scalar>& t) {
    if (!info.trainable) return;
    if (!name_prefix.empty() && info.name.rfind(name_prefix, 0) != 0) return;
    total += static_cast<long>(t.size());
  });
  return total;
}

// ---------------------------------------------------------------------------
// Construction and initialization
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
ConvLayer<Scalar> make_conv(int in_ch, int out_ch, int kernel, int stride) {
  ConvLayer<Scalar> c;
  c.in_ch = in_ch;
  c.out_ch = out_ch;
  c.kernel = kernel;
  c.stride = stride;
  c.weight = MatrixX<Scalar>::Zero(out_ch, static_cast<Eigen::Index>(kernel) * in_ch);
  return c;
}

template <typename Scalar>
NormLayer<Scalar> make_norm(int k) {
  NormLayer<Scalar> n;
  n.gamma = MatrixX<Scalar>::Ones(k, 1);
  n.beta = MatrixX<Scalar>::Zero(k, 1);
  n.running_mean = MatrixX<Scalar>::Zero(k, 1);
  n.running_var = MatrixX<Scalar>::Ones(k, 1);
  return n;
}

template <typename Scalar>
LstmDir<Scalar> make_lstm(int in, int hidden) {
  LstmDir<Scalar> d;
  d.weight_ih = MatrixX<Scalar>::Zero(4 * hidden, in);
  d.weight_hh = MatrixX<Scalar>::Zero(4 * hidden, hidden);
  d.bias = MatrixX<Scalar>::Zero(4 * hidden, 1);
  return d;
}

}  // namespace detail

// All-zero parameter tensors of the right shapes (gradient accumulators use
// the same structure as the parameters themselves).
template <typename Scalar>
ModelParams<Scalar> build_params(const ModelConfig& config) {
  config.validate();
  const int k = config.feature_width;
  const int branch = k / 4;
  const int in_ch = config.arch == Arch::Scfnet ? 1 : config.n_channels;

  ModelParams<Scalar> p;
  p.config = config;
  p.extractor.in_channels = in_ch;
  for (int kernel : config.inception_kernels)
    p.extractor.inception.push_back(detail::make_conv<Scalar>(in_ch, branch, kernel, 2));
  p.extractor.inception_norm = detail::make_norm<Scalar>(k);

  for (int stride : config.resnet_stage_strides) {
    ResBlock<Scalar> blk;
    blk.conv1 = detail::make_conv<Scalar>(k, k, 3, stride);
    blk.norm1 = detail::make_norm<Scalar>(k);
    blk.conv2 = detail::make_conv<Scalar>(k, k, 3, 1);
    blk.norm2 = detail::make_norm<Scalar>(k);
    blk.has_proj = stride != 1;
    if (blk.has_proj) {
      blk.proj = detail::make_conv<Scalar>(k, k, 1, stride);
      blk.proj_norm = detail::make_norm<Scalar>(k);
    }
    p.extractor.blocks.push_back(std::move(blk));
  }

  p.extractor.lstm_fw = detail::make_lstm<Scalar>(k, k);
  p.extractor.lstm_bw = detail::make_lstm<Scalar>(k, k);

  const int clf_in = (config.arch == Arch::Scfnet ? config.n_channels : 1) * 2 * k;
  p.classifier.w1 = MatrixX<Scalar>::Zero(config.classifier_hidden, clf_in);
  p.classifier.b1 = MatrixX<Scalar>::Zero(config.classifier_hidden, 1);
  p.classifier.w2 = MatrixX<Scalar>::Zero(config.n_classes, config.classifier_hidden);
  p.classifier.b2 = MatrixX<Scalar>::Zero(config.n_classes, 1);
  return p;
}

// Deterministic seeded initialization. Extractor and classifier draw from
// independent derived streams, so extractor tensors do not depend on
// n_channels or n_classes.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& config, uint64_t seed) {
  ModelParams<Scalar> p = build_params<Scalar>(config);
  Rng root(seed);
  Rng ext_rng = root.child("extractor");
  Rng clf_rng = root.child("classifier");

  auto fill_uniform = [](MatrixX<Scalar>& m, double bound, Rng& rng) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        m(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
  };

  visit_tensors(p, [&](const TensorInfo& info, MatrixX<Scalar>& t) {
    if (!info.trainable) return;  // running stats keep their 0/1 defaults
    Rng& rng = is_extractor_tensor(info.name) ? ext_rng : clf_rng;
    const bool is_bias = info.name.ends_with(".bias");
    const bool is_norm = info.name.ends_with(".gamma") || info.name.ends_with(".beta");
    if (is_bias || is_norm) return;  // biases 0; gamma/beta already 1/0
    // Uniform fan-in scaling; fan-in is the tensor's column count for every
    // weight layout used here (kernel*in_ch, lstm input/hidden, fc input).
    fill_uniform(t, 1.0 / std::sqrt(static_cast<double>(t.cols())), rng);
  });
  return p;
}

template <typename Scalar>
ModelParams<Scalar> zero_like(const ModelParams<Scalar>& params) {
  ModelParams<Scalar> z = build_params<Scalar>(params.config);
  visit_tensors(z, [&](const TensorInfo&, MatrixX<Scalar>& t) { t.setZero(); });
  return z;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& params) {
  ModelParams<To> out = build_params<To>(params.config);
  out.extractor_frozen = params.extractor_frozen;
  std::vector<const MatrixX<From>*> src;
  visit_tensors(params, [&](const TensorInfo&, const MatrixX<From>& t) { src.push_back(&t); });
  size_t i = 0;
  visit_tensors(out, [&](const TensorInfo&, MatrixX<To>& t) {
    t = src[i++]->template cast<To>();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Forward + backward
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ForwardCache {
  SeqBatch<Scalar> x0;
  NormCache<Scalar> incep_norm;
  SeqBatch<Scalar> incep_act;
  struct BlockCache {
    NormCache<Scalar> n1;
    SeqBatch<Scalar> a1;
    NormCache<Scalar> n2;
    NormCache<Scalar> np;
    SeqBatch<Scalar> out;
  };
  std::vector<BlockCache> blocks;
  LstmCache<Scalar> lstm_fw, lstm_bw;
  MatrixX<Scalar> features;   // [2k x n_seq]
  MatrixX<Scalar> clf_input;  // [clf_in x batch]
  MatrixX<Scalar> a1;         // post-relu hidden, pre-dropout
  MatrixX<Scalar> a1_dropped;
  MatrixX<Scalar> dropout_mask;  // empty when inactive
};

// Runs the shared extractor over a batch of single- (or multi-) channel
// sequences; returns final-state features [2k x n_seq].
template <typename Scalar>
MatrixX<Scalar> extractor_forward(const ExtractorParams<Scalar>& e, const ModelConfig& cfg,
                                  SeqBatch<Scalar> x, Mode mode, ForwardCache<Scalar>* cache) {
  const int k = cfg.feature_width;
  const int branch = k / 4;

  SeqBatch<Scalar> cat;
  cat.n_seq = x.n_seq;
  cat.len = e.inception.front().out_len(x.len);
  cat.data.resize(k, static_cast<Eigen::Index>(cat.n_seq) * cat.len);
  for (size_t b = 0; b < e.inception.size(); ++b) {
    SeqBatch<Scalar> br = conv1d_forward(e.inception[b], x);
    cat.data.middleRows(static_cast<Eigen::Index>(b) * branch, branch) = br.data;
  }
  if (cache != nullptr) cache->x0 = std::move(x);

  SeqBatch<Scalar> cur =
      relu_forward(norm_forward(e.inception_norm, cat, mode, cache ? &cache->incep_norm : nullptr));
  if (cache != nullptr) {
    cache->incep_act = cur;
    cache->blocks.resize(e.blocks.size());
  }

  for (size_t i = 0; i < e.blocks.size(); ++i) {
    const ResBlock<Scalar>& blk = e.blocks[i];
    auto* bc = cache ? &cache->blocks[i] : nullptr;

    SeqBatch<Scalar> a1 = relu_forward(
        norm_forward(blk.norm1, conv1d_forward(blk.conv1, cur), mode, bc ? &bc->n1 : nullptr));
    SeqBatch<Scalar> main =
        norm_forward(blk.norm2, conv1d_forward(blk.conv2, a1), mode, bc ? &bc->n2 : nullptr);
    if (bc != nullptr) bc->a1 = std::move(a1);

    if (blk.has_proj) {
      SeqBatch<Scalar> skip =
          norm_forward(blk.proj_norm, conv1d_forward(blk.proj, cur), mode, bc ? &bc->np : nullptr);
      main.data += skip.data;
    } else {
      main.data += cur.data;
    }
    cur = relu_forward(main);
    if (bc != nullptr) bc->out = cur;
  }

  const MatrixX<Scalar> h_fw = lstm_forward(e.lstm_fw, cur, false, cache ? &cache->lstm_fw : nullptr);
  const MatrixX<Scalar> h_bw = lstm_forward(e.lstm_bw, cur, true, cache ? &cache->lstm_bw : nullptr);

  MatrixX<Scalar> features(2 * k, cur.n_seq);
  features.topRows(k) = h_fw;
  features.bottomRows(k) = h_bw;
  if (cache != nullptr) cache->features = features;
  return features;
}

// Gradient of everything the extractor touched, given d(features).
template <typename Scalar>
void extractor_backward(const ExtractorParams<Scalar>& e, const ModelConfig& cfg,
                        const ForwardCache<Scalar>& cache, const MatrixX<Scalar>& dfeatures,
                        ExtractorParams<Scalar>& g) {
  const int k = cfg.feature_width;
  const int branch = k / 4;
  const SeqBatch<Scalar>& lstm_in = cache.blocks.back().out;

  SeqBatch<Scalar> dcur;
  dcur.n_seq = lstm_in.n_seq;
  dcur.len = lstm_in.len;
  dcur.data = MatrixX<Scalar>::Zero(lstm_in.data.rows(), lstm_in.data.cols());

  lstm_backward(e.lstm_fw, lstm_in, false, cache.lstm_fw, MatrixX<Scalar>(dfeatures.topRows(k)),
                g.lstm_fw.weight_ih, g.lstm_fw.weight_hh, g.lstm_fw.bias, dcur);
  lstm_backward(e.lstm_bw, lstm_in, true, cache.lstm_bw, MatrixX<Scalar>(dfeatures.bottomRows(k)),
                g.lstm_bw.weight_ih, g.lstm_bw.weight_hh, g.lstm_bw.bias, dcur);

  for (int i = static_cast<int>(e.blocks.size()) - 1; i >= 0; --i) {
    const ResBlock<Scalar>& blk = e.blocks[i];
    const auto& bc = cache.blocks[i];
    const SeqBatch<Scalar>& input = i == 0 ? cache.incep_act : cache.blocks[i - 1].out;
    auto& gb = g.blocks[i];

    const SeqBatch<Scalar> dpre = relu_backward(bc.out, dcur);

    // main branch
    SeqBatch<Scalar> dc2 = norm_backward(blk.norm2, bc.n2, dpre, gb.norm2.gamma, gb.norm2.beta);
    SeqBatch<Scalar> da1;
    da1.n_seq = bc.a1.n_seq;
    da1.len = bc.a1.len;
    da1.data = MatrixX<Scalar>::Zero(bc.a1.data.rows(), bc.a1.data.cols());
    conv1d_backward(blk.conv2, bc.a1, dc2, gb.conv2.weight, &da1);
    SeqBatch<Scalar> dc1 =
        norm_backward(blk.norm1, bc.n1, relu_backward(bc.a1, da1), gb.norm1.gamma, gb.norm1.beta);

    SeqBatch<Scalar> dinput;
    dinput.n_seq = input.n_seq;
    dinput.len = input.len;
    dinput.data = MatrixX<Scalar>::Zero(input.data.rows(), input.data.cols());
    conv1d_backward(blk.conv1, input, dc1, gb.conv1.weight, &dinput);

    // skip branch shares the block-output gradient
    if (blk.has_proj) {
      SeqBatch<Scalar> dproj =
          norm_backward(blk.proj_norm, bc.np, dpre, gb.proj_norm.gamma, gb.proj_norm.beta);
      conv1d_backward(blk.proj, input, dproj, gb.proj.weight, &dinput);
    } else {
      dinput.data += dpre.data;
    }
    dcur = std::move(dinput);
  }

  SeqBatch<Scalar> dcat = norm_backward(e.inception_norm, cache.incep_norm,
                                        relu_backward(cache.incep_act, dcur),
                                        g.inception_norm.gamma, g.inception_norm.beta);
  for (size_t b = 0; b < e.inception.size(); ++b) {
    SeqBatch<Scalar> dbr;
    dbr.n_seq = dcat.n_seq;
    dbr.len = dcat.len;
    dbr.data = dcat.data.middleRows(static_cast<Eigen::Index>(b) * branch, branch);
    conv1d_backward(e.inception[b], cache.x0, dbr, g.inception[b].weight, nullptr);
  }
}

// ---------------------------------------------------------------------------
// Batch assembly
// ---------------------------------------------------------------------------

template <typename Scalar>
using Batch = std::vector<Window<Scalar>>;

namespace detail {

template <typename Scalar>
void check_batch(const Batch<Scalar>& batch, int expected_samples) {
  if (batch.empty()) throw ValidationError("model: empty batch");
  const Eigen::Index c = batch.front().rows();
  for (const auto& w : batch) {
    if (w.rows() != c || w.cols() != batch.front().cols())
      throw ValidationError("model: ragged batch shapes");
    if (!w.allFinite()) throw ValidationError("model: non-finite input");
  }
  if (expected_samples > 0 && batch.front().cols() != expected_samples)
    throw ValidationError("model: window length " + std::to_string(batch.front().cols()) +
                          " does not match configured window_samples " +
                          std::to_string(expected_samples));
}

// One single-channel sequence per (sample, channel), sample-major.
template <typename Scalar>
SeqBatch<Scalar> to_channel_sequences(const Batch<Scalar>& batch) {
  const auto B = static_cast<int>(batch.size());
  const auto C = static_cast<int>(batch.front().rows());
  const auto T = static_cast<int>(batch.front().cols());
  SeqBatch<Scalar> x;
  x.n_seq = B * C;
  x.len = T;
  x.data.resize(1, static_cast<Eigen::Index>(B) * C * T);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      x.data.block(0, (static_cast<Eigen::Index>(b) * C + c) * T, 1, T) = batch[b].row(c);
  return x;
}

// One multi-channel sequence per sample (end-to-end layout).
template <typename Scalar>
SeqBatch<Scalar> to_sample_sequences(const Batch<Scalar>& batch) {
  const auto B = static_cast<int>(batch.size());
  const auto C = static_cast<int>(batch.front().rows());
  const auto T = static_cast<int>(batch.front().cols());
  SeqBatch<Scalar> x;
  x.n_seq = B;
  x.len = T;
  x.data.resize(C, static_cast<Eigen::Index>(B) * T);
  for (int b = 0; b < B; ++b) x.data.middleCols(static_cast<Eigen::Index>(b) * T, T) = batch[b];
  return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full model forward/backward (internal orientation: samples are columns)
// ---------------------------------------------------------------------------

// Logits [n_classes x B]. `dropout_rng` may be null when dropout is 0 or in
// Eval mode. `extractor_mode` is forced to Eval when the extractor is frozen.
template <typename Scalar>
MatrixX<Scalar> model_forward(const ModelParams<Scalar>& p, const Batch<Scalar>& batch, Mode mode,
                              Rng* dropout_rng, ForwardCache<Scalar>* cache) {
  const ModelConfig& cfg = p.config;
  detail::check_batch(batch, cfg.window_samples);
  const auto B = static_cast<int>(batch.size());
  const auto C = static_cast<int>(batch.front().rows());

  if (C != cfg.n_channels)
    throw ValidationError("model: batch has " + std::to_string(C) + " channels but the " +
                          arch_name(cfg.arch) + " head expects " + std::to_string(cfg.n_channels));

  const Mode ext_mode = (mode == Mode::Train && !p.extractor_frozen) ? Mode::Train : Mode::Eval;
  MatrixX<Scalar> clf_input;
  if (cfg.arch == Arch::Scfnet) {
    MatrixX<Scalar> features = extractor_forward(p.extractor, cfg,
                                                 detail::to_channel_sequences(batch), ext_mode, cache);
    // Stack each sample's per-channel feature blocks in channel order.
    clf_input.resize(static_cast<Eigen::Index>(C) * 2 * cfg.feature_width, B);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        clf_input.block(static_cast<Eigen::Index>(c) * 2 * cfg.feature_width, b,
                        2 * cfg.feature_width, 1) =
            features.col(static_cast<Eigen::Index>(b) * C + c);
  } else {
    clf_input = extractor_forward(p.extractor, cfg, detail::to_sample_sequences(batch), ext_mode, cache);
  }

  MatrixX<Scalar> z1 = affine_forward(p.classifier.w1, p.classifier.b1, clf_input);
  MatrixX<Scalar> a1 = z1.cwiseMax(Scalar(0));
  MatrixX<Scalar> a1_dropped = a1;
  MatrixX<Scalar> mask;
  if (mode == Mode::Train && cfg.dropout > 0.0) {
    if (dropout_rng == nullptr) throw std::logic_error("model: dropout requires an rng in Train mode");
    const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - cfg.dropout));
    mask.resize(a1.rows(), a1.cols());
    for (Eigen::Index col = 0; col < mask.cols(); ++col)
      for (Eigen::Index row = 0; row < mask.rows(); ++row)
        mask(row, col) = dropout_rng->uniform() < cfg.dropout ? Scalar(0) : keep_scale;
    a1_dropped = a1.cwiseProduct(mask);
  }
  MatrixX<Scalar> logits = affine_forward(p.classifier.w2, p.classifier.b2, a1_dropped);

  if (cache != nullptr) {
    cache->clf_input = std::move(clf_input);
    cache->a1 = std::move(a1);
    cache->a1_dropped = std::move(a1_dropped);
    cache->dropout_mask = std::move(mask);
  }
  return logits;
}

// Accumulates into `grads` (same structure as the parameters). Skips the
// extractor entirely when it is frozen.
template <typename Scalar>
void model_backward(const ModelParams<Scalar>& p, const ForwardCache<Scalar>& cache,
                    const MatrixX<Scalar>& dlogits, ModelParams<Scalar>& grads) {
  const ModelConfig& cfg = p.config;
  MatrixX<Scalar> d_a1d = affine_backward(p.classifier.w2, cache.a1_dropped, dlogits,
                                          grads.classifier.w2, grads.classifier.b2);
  if (cache.dropout_mask.size() > 0) d_a1d = d_a1d.cwiseProduct(cache.dropout_mask);
  const MatrixX<Scalar> dz1 =
      ((cache.a1.array() > Scalar(0)).template cast<Scalar>() * d_a1d.array()).matrix();
  MatrixX<Scalar> dclf = affine_backward(p.classifier.w1, cache.clf_input, dz1,
                                         grads.classifier.w1, grads.classifier.b1);
  if (p.extractor_frozen) return;

  MatrixX<Scalar> dfeatures;
  if (cfg.arch == Arch::Scfnet) {
    const auto B = static_cast<int>(dclf.cols());
    const int C = cfg.n_channels;
    dfeatures.resize(2 * cfg.feature_width, static_cast<Eigen::Index>(B) * C);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        dfeatures.col(static_cast<Eigen::Index>(b) * C + c) =
            dclf.block(static_cast<Eigen::Index>(c) * 2 * cfg.feature_width, b,
                       2 * cfg.feature_width, 1);
  } else {
    dfeatures = std::move(dclf);
  }
  extractor_backward(p.extractor, cfg, cache, dfeatures, grads.extractor);
}

// Folds the batch statistics gathered during a Train-mode forward into the
// running estimates. No-op for frozen extractors (which run in Eval mode).
template <typename Scalar>
void update_running_stats(ModelParams<Scalar>& p, const ForwardCache<Scalar>& cache) {
  if (p.extractor_frozen) return;
  auto apply = [](NormLayer<Scalar>& layer, const NormCache<Scalar>& c) {
    if (c.batch_mean.size() == 0) return;
    norm_update_running(layer, c, c.xhat.cols());
  };
  apply(p.extractor.inception_norm, cache.incep_norm);
  for (size_t i = 0; i < p.extractor.blocks.size(); ++i) {
    apply(p.extractor.blocks[i].norm1, cache.blocks[i].n1);
    apply(p.extractor.blocks[i].norm2, cache.blocks[i].n2);
    if (p.extractor.blocks[i].has_proj) apply(p.extractor.blocks[i].proj_norm, cache.blocks[i].np);
  }
}

// ---------------------------------------------------------------------------
// Public operations (samples are rows, matching the documented interfaces)
// ---------------------------------------------------------------------------

// Per-sample [C x 2k] feature blocks; C may differ from the trained channel
// count. Inference mode (frozen statistics), no augmentation.
template <typename Scalar>
std::vector<MatrixX<Scalar>> extract_features(const Batch<Scalar>& batch,
                                              const ModelParams<Scalar>& params) {
  if (params.config.arch != Arch::Scfnet)
    throw ValidationError("extract_features: only the scfnet architecture extracts per-channel features");
  detail::check_batch(batch, params.config.window_samples);
  const auto B = static_cast<int>(batch.size());
  const auto C = static_cast<int>(batch.front().rows());
  const int width = params.config.feature_block_width();

  MatrixX<Scalar> features = extractor_forward(params.extractor, params.config,
                                               detail::to_channel_sequences(batch), Mode::Eval,
                                               static_cast<ForwardCache<Scalar>*>(nullptr));
  std::vector<MatrixX<Scalar>> out(B);
  for (int b = 0; b < B; ++b) {
    out[b].resize(C, width);
    for (int c = 0; c < C; ++c)
      out[b].row(c) = features.col(static_cast<Eigen::Index>(b) * C + c).transpose();
  }
  return out;
}

// Fuses per-channel feature blocks into logits [B x n_classes]. The head is
// channel-count-specific: features must have exactly n_channels rows.
template <typename Scalar>
MatrixX<Scalar> classify(const std::vector<MatrixX<Scalar>>& features,
                         const ModelParams<Scalar>& params) {
  const ModelConfig& cfg = params.config;
  if (features.empty()) throw ValidationError("classify: empty batch");
  const int width = cfg.feature_block_width();
  MatrixX<Scalar> clf_input(static_cast<Eigen::Index>(cfg.n_channels) * width, features.size());
  for (size_t b = 0; b < features.size(); ++b) {
    if (features[b].rows() != cfg.n_channels || features[b].cols() != width)
      throw ValidationError("classify: feature block shape [" + std::to_string(features[b].rows()) +
                            " x " + std::to_string(features[b].cols()) + "] does not match head [" +
                            std::to_string(cfg.n_channels) + " x " + std::to_string(width) + "]");
    for (int c = 0; c < cfg.n_channels; ++c)
      clf_input.block(static_cast<Eigen::Index>(c) * width, static_cast<Eigen::Index>(b), width, 1) =
          features[b].row(c).transpose();
  }
  const MatrixX<Scalar> a1 =
      affine_forward(params.classifier.w1, params.classifier.b1, clf_input).cwiseMax(Scalar(0));
  return affine_forward(params.classifier.w2, params.classifier.b2, a1).transpose();
}

// classify(extract_features(batch)); softmax of the result is the predictive
// distribution. Logits [B x n_classes].
template <typename Scalar>
MatrixX<Scalar> scfnet_forward(const Batch<Scalar>& batch, const ModelParams<Scalar>& params) {
  if (params.config.arch != Arch::Scfnet)
    throw ValidationError("scfnet_forward: parameters belong to the end2end architecture");
  return model_forward(params, batch, Mode::Eval, nullptr, nullptr).transpose();
}

// The fixed-channel end-to-end baseline. Any channel count other than the
// trained one is a hard error.
template <typename Scalar>
MatrixX<Scalar> end2end_forward(const Batch<Scalar>& batch, const ModelParams<Scalar>& params) {
  if (params.config.arch != Arch::End2End)
    throw ValidationError("end2end_forward: parameters belong to the scfnet architecture");
  return model_forward(params, batch, Mode::Eval, nullptr, nullptr).transpose();
}

}  // namespace scfnet
