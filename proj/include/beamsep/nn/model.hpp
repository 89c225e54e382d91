// Copyright 2026 The beamsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Two-branch TCN with compact-bilinear fusion.
//
//   B0 -> blocks (d = 1, 2, 4, 8) -+
//                                  +- fuse (CBP | concat) -> 1x1 conv + ReLU
//   B1 -> blocks (d = 1, 2, 4, 8) -+      -> block (linear) -> 1x1 conv -> S0
//
// The single-input ablations route one branch straight into the output
// branch. Everything is fully convolutional, so one parameter set serves
// any window length.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "beamsep/cbp.hpp"
#include "beamsep/common.hpp"
#include "beamsep/nn/layers.hpp"

namespace beamsep::nn {

enum class FusionMode { kCbp, kConcat };
enum class InputMode { kBoth, kB0Only, kB1Only };

inline const char* FusionName(FusionMode m) { return m == FusionMode::kCbp ? "cbp" : "concat"; }
inline FusionMode ParseFusion(const std::string& s) {
  if (s == "cbp") return FusionMode::kCbp;
  if (s == "concat") return FusionMode::kConcat;
  throw Error("unknown fusion mode '" + s + "'");
}
inline const char* InputModeName(InputMode m) {
  switch (m) {
    case InputMode::kBoth:
      return "both";
    case InputMode::kB0Only:
      return "b0_only";
    case InputMode::kB1Only:
      return "b1_only";
  }
  return "?";
}
inline InputMode ParseInputMode(const std::string& s) {
  if (s == "both") return InputMode::kBoth;
  if (s == "b0_only") return InputMode::kB0Only;
  if (s == "b1_only") return InputMode::kB1Only;
  throw Error("unknown input mode '" + s + "'");
}

struct Architecture {
  int channels = 257;
  std::vector<int> dilations = {1, 2, 4, 8};
  int sketch_dim = 257;
  int out_block_dilation = 1;
  FusionMode fusion = FusionMode::kCbp;
  InputMode input = InputMode::kBoth;
  bool log_features = false;  // log(1 + x) on inputs and target
  double bn_eps = 1e-3;

  bool uses_fusion() const { return input == InputMode::kBoth; }

  int fused_channels() const {
    if (!uses_fusion()) return channels;
    return fusion == FusionMode::kCbp ? sketch_dim : 2 * channels;
  }

  // Frames on either side of an output frame that can influence it.
  int ReceptiveHalfWidth() const {
    int r = 0;
    for (int d : dilations) r += 2 * d;
    return r + 2 * out_block_dilation;
  }

  bool operator==(const Architecture&) const = default;
};

template <typename T>
struct TcnModel {
  Architecture arch;
  std::vector<ConvBlockParams<T>> branch_b0, branch_b1;
  SketchParams sketch_u, sketch_w;
  ConvParams<T> out_conv1;  // 1x1, ReLU
  ConvBlockParams<T> out_block;  // linear activation
  ConvParams<T> out_conv2;  // 1x1, linear
};

template <typename T>
ConvBlockParams<T> ZeroBlock(int channels, int dilation) {
  return {ConvParams<T>::Zeros(channels, channels, 3, dilation),
          ConvParams<T>::Zeros(channels, channels, 3, dilation),
          BatchNormParams<T>::Identity(channels), BatchNormParams<T>::Identity(channels)};
}

// Same shapes as InitModel but all trainable tensors zero; used as a gradient
// accumulator.
template <typename T>
TcnModel<T> ZeroModel(const Architecture& a) {
  TcnModel<T> m;
  m.arch = a;
  for (int d : a.dilations) {
    m.branch_b0.push_back(ZeroBlock<T>(a.channels, d));
    m.branch_b1.push_back(ZeroBlock<T>(a.channels, d));
  }
  m.out_conv1 = ConvParams<T>::Zeros(a.channels, a.fused_channels(), 1, 1);
  m.out_block = ZeroBlock<T>(a.channels, a.out_block_dilation);
  m.out_conv2 = ConvParams<T>::Zeros(a.channels, a.channels, 1, 1);
  for (auto* blocks : {&m.branch_b0, &m.branch_b1}) {
    for (auto& b : *blocks) {
      for (auto* bn : {&b.bn1, &b.bn2}) {
        bn->gamma.setZero();
        bn->running_var.setZero();
      }
    }
  }
  for (auto* bn : {&m.out_block.bn1, &m.out_block.bn2}) {
    bn->gamma.setZero();
    bn->running_var.setZero();
  }
  return m;
}

// LeCun-uniform convolution weights (variance 1 / fan_in), zero biases,
// identity batch norm, fresh sketch parameters.
template <typename T>
TcnModel<T> InitModel(const Architecture& a, uint64_t seed) {
  if (a.channels < 1 || a.sketch_dim < 1 || a.dilations.empty()) {
    throw Error("invalid architecture");
  }
  TcnModel<T> m;
  m.arch = a;
  Rng rng(DeriveSeed(seed, "weights"));
  auto init_conv = [&](int out, int in, int kernel, int dilation) {
    ConvParams<T> p = ConvParams<T>::Zeros(out, in, kernel, dilation);
    const double bound = std::sqrt(3.0 / (static_cast<double>(in) * kernel));
    for (auto& w : p.taps) {
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(rng.Uniform(-bound, bound));
    }
    return p;
  };
  auto init_block = [&](int dilation) {
    return ConvBlockParams<T>{init_conv(a.channels, a.channels, 3, dilation),
                              init_conv(a.channels, a.channels, 3, dilation),
                              BatchNormParams<T>::Identity(a.channels),
                              BatchNormParams<T>::Identity(a.channels)};
  };
  for (int d : a.dilations) m.branch_b0.push_back(init_block(d));
  for (int d : a.dilations) m.branch_b1.push_back(init_block(d));
  m.sketch_u = MakeSketchParams(a.channels, a.sketch_dim, DeriveSeed(seed, "sketch_u"));
  m.sketch_w = MakeSketchParams(a.channels, a.sketch_dim, DeriveSeed(seed, "sketch_w"));
  m.out_conv1 = init_conv(a.channels, a.fused_channels(), 1, 1);
  m.out_block = init_block(a.out_block_dilation);
  m.out_conv2 = init_conv(a.channels, a.channels, 1, 1);
  return m;
}

template <typename T>
struct TensorRef {
  std::string name;
  T* data;
  Eigen::Index size;
};

namespace internal {

template <typename T, typename Fn>
void VisitConv(const std::string& prefix, ConvParams<T>& c, Fn&& fn) {
  for (size_t k = 0; k < c.taps.size(); ++k) {
    fn(prefix + ".w" + std::to_string(k), c.taps[k].data(), c.taps[k].size());
  }
  fn(prefix + ".b", c.bias.data(), c.bias.size());
}

template <typename T, typename Fn>
void VisitBlock(const std::string& prefix, ConvBlockParams<T>& b, Fn&& fn) {
  VisitConv(prefix + ".conv1", b.conv1, fn);
  fn(prefix + ".bn1.gamma", b.bn1.gamma.data(), b.bn1.gamma.size());
  fn(prefix + ".bn1.beta", b.bn1.beta.data(), b.bn1.beta.size());
  VisitConv(prefix + ".conv2", b.conv2, fn);
  fn(prefix + ".bn2.gamma", b.bn2.gamma.data(), b.bn2.gamma.size());
  fn(prefix + ".bn2.beta", b.bn2.beta.data(), b.bn2.beta.size());
}

template <typename T, typename Fn>
void VisitBlockBuffers(const std::string& prefix, ConvBlockParams<T>& b, Fn&& fn) {
  for (auto [name, bn] : {std::pair{".bn1", &b.bn1}, std::pair{".bn2", &b.bn2}}) {
    fn(prefix + name + ".running_mean", bn->running_mean.data(), bn->running_mean.size());
    fn(prefix + name + ".running_var", bn->running_var.data(), bn->running_var.size());
  }
}

}  // namespace internal

// Trainable tensors in a fixed declaration order. Two models with the same
// architecture yield aligned lists.
template <typename T>
std::vector<TensorRef<T>> Parameters(TcnModel<T>& m) {
  std::vector<TensorRef<T>> out;
  auto push = [&](std::string name, T* data, Eigen::Index size) {
    out.push_back({std::move(name), data, size});
  };
  for (size_t i = 0; i < m.branch_b0.size(); ++i) {
    internal::VisitBlock("branch_b0." + std::to_string(i), m.branch_b0[i], push);
  }
  for (size_t i = 0; i < m.branch_b1.size(); ++i) {
    internal::VisitBlock("branch_b1." + std::to_string(i), m.branch_b1[i], push);
  }
  internal::VisitConv("out_conv1", m.out_conv1, push);
  internal::VisitBlock("out_block", m.out_block, push);
  internal::VisitConv("out_conv2", m.out_conv2, push);
  return out;
}

// Batch-norm running statistics (not trained by gradient).
template <typename T>
std::vector<TensorRef<T>> Buffers(TcnModel<T>& m) {
  std::vector<TensorRef<T>> out;
  auto push = [&](std::string name, T* data, Eigen::Index size) {
    out.push_back({std::move(name), data, size});
  };
  for (size_t i = 0; i < m.branch_b0.size(); ++i) {
    internal::VisitBlockBuffers("branch_b0." + std::to_string(i), m.branch_b0[i], push);
  }
  for (size_t i = 0; i < m.branch_b1.size(); ++i) {
    internal::VisitBlockBuffers("branch_b1." + std::to_string(i), m.branch_b1[i], push);
  }
  internal::VisitBlockBuffers("out_block", m.out_block, push);
  return out;
}

template <typename T>
long long ParameterCount(TcnModel<T>& m) {
  long long n = 0;
  for (const auto& p : Parameters(m)) n += p.size;
  return n;
}

template <typename T>
struct ModelCache {
  std::vector<BlockCache<T>> branch_b0, branch_b1;
  Batch<T> feat_b0, feat_b1;  // branch outputs
  Batch<T> fused;
  Batch<T> pre_out1;  // out_conv1 before ReLU
  Batch<T> act_out1;
  BlockCache<T> out_block;
  Batch<T> block_out;
};

struct ForwardOptions {
  bool training = false;
  double bn_momentum = 0.9;
  bool update_running = true;
};

namespace internal {

template <typename T>
Batch<T> RunBranch(std::vector<ConvBlockParams<T>>& blocks, const Batch<T>& in,
                   const BatchNormOptions& opt, std::vector<BlockCache<T>>* caches) {
  Batch<T> x = in;
  if (caches) caches->assign(blocks.size(), {});
  for (size_t i = 0; i < blocks.size(); ++i) {
    x = BlockForward(blocks[i], x, Activation::kRelu, opt, caches ? &(*caches)[i] : nullptr);
  }
  return x;
}

template <typename T>
Batch<T> LogFeatures(const Batch<T>& in) {
  Batch<T> out;
  for (const auto& x : in) out.push_back(x.array().max(T(0)).log1p().matrix());
  return out;
}

// Fixed 1/C gain on the CBP output: each sketch bin sums on the order of C
// products of branch features, and the following 1x1 convolution is
// initialised for unit-scale inputs.
template <typename T>
T CbpScale(const Architecture& a) {
  return static_cast<T>(1.0 / a.channels);
}

}  // namespace internal

// Maps B0/B1 magnitude windows (channels x W each) to the estimate of the
// target magnitude (or log1p magnitude when arch.log_features is set).
// Training mode normalises with batch statistics and may update running
// statistics; `cache` (optional) keeps what Backward needs.
template <typename T>
Batch<T> Forward(TcnModel<T>& m, const Batch<T>& b0_in, const Batch<T>& b1_in,
                 const ForwardOptions& fo, ModelCache<T>* cache = nullptr) {
  const Architecture& a = m.arch;
  if (b0_in.size() != b1_in.size() || b0_in.empty()) throw Error("forward: batch mismatch");
  for (size_t i = 0; i < b0_in.size(); ++i) {
    CheckShape(b0_in[i].rows() == a.channels && b1_in[i].rows() == a.channels &&
                   b0_in[i].cols() == b1_in[i].cols() && b0_in[i].cols() >= 1,
               "forward");
  }
  const BatchNormOptions bn{fo.training, fo.bn_momentum, a.bn_eps, fo.update_running};
  const Batch<T> b0 = a.log_features ? internal::LogFeatures(b0_in) : b0_in;
  const Batch<T> b1 = a.log_features ? internal::LogFeatures(b1_in) : b1_in;

  Batch<T> feat0, feat1, fused;
  const bool need0 = a.input != InputMode::kB1Only;
  const bool need1 = a.input != InputMode::kB0Only;
  if (need0) feat0 = internal::RunBranch(m.branch_b0, b0, bn, cache ? &cache->branch_b0 : nullptr);
  if (need1) feat1 = internal::RunBranch(m.branch_b1, b1, bn, cache ? &cache->branch_b1 : nullptr);
  if (a.input == InputMode::kB0Only) {
    fused = feat0;
  } else if (a.input == InputMode::kB1Only) {
    fused = feat1;
  } else if (a.fusion == FusionMode::kCbp) {
    for (size_t i = 0; i < feat0.size(); ++i) {
      fused.push_back(internal::CbpScale<T>(a) *
                      CbpFramewise<T>(feat0[i], feat1[i], m.sketch_u, m.sketch_w));
    }
  } else {
    for (size_t i = 0; i < feat0.size(); ++i) {
      Matrix<T> cat(feat0[i].rows() + feat1[i].rows(), feat0[i].cols());
      cat << feat0[i], feat1[i];
      fused.push_back(std::move(cat));
    }
  }
  Batch<T> pre1, act1;
  for (const auto& x : fused) {
    pre1.push_back(ConvForward(m.out_conv1, x));
    act1.push_back(Activate(pre1.back(), Activation::kRelu));
  }
  Batch<T> block_out = BlockForward(m.out_block, act1, Activation::kLinear, bn,
                                    cache ? &cache->out_block : nullptr);
  Batch<T> out;
  for (const auto& x : block_out) out.push_back(ConvForward(m.out_conv2, x));
  if (cache) {
    cache->feat_b0 = std::move(feat0);
    cache->feat_b1 = std::move(feat1);
    cache->fused = std::move(fused);
    cache->pre_out1 = std::move(pre1);
    cache->act_out1 = std::move(act1);
    cache->block_out = std::move(block_out);
  }
  return out;
}

// Inference on a single window with running batch-norm statistics.
template <typename T>
Matrix<T> Infer(TcnModel<T>& m, const Matrix<T>& b0, const Matrix<T>& b1) {
  ForwardOptions fo;
  fo.training = false;
  return Forward(m, Batch<T>{b0}, Batch<T>{b1}, fo).front();
}

// Accumulates d(loss)/d(parameter) into `grad` (same architecture as `m`)
// given the gradient of the loss with respect to the forward output.
template <typename T>
void Backward(const TcnModel<T>& m, const ModelCache<T>& cache, const Batch<T>& dout,
              TcnModel<T>& grad) {
  const Architecture& a = m.arch;
  if (cache.block_out.size() != dout.size() || dout.empty()) throw Error("missing forward cache");
  Batch<T> d_block_out(dout.size());
  for (size_t i = 0; i < dout.size(); ++i) {
    ConvBackward(m.out_conv2, cache.block_out[i], dout[i], &d_block_out[i], grad.out_conv2);
  }
  const Batch<T> d_act1 =
      BlockBackward(m.out_block, cache.out_block, d_block_out, Activation::kLinear, grad.out_block);
  Batch<T> d_fused(dout.size());
  for (size_t i = 0; i < dout.size(); ++i) {
    const Matrix<T> d_pre1 = ActivateBackward(cache.pre_out1[i], d_act1[i], Activation::kRelu);
    ConvBackward(m.out_conv1, cache.fused[i], d_pre1, &d_fused[i], grad.out_conv1);
  }
  Batch<T> d_feat0, d_feat1;
  if (a.input == InputMode::kB0Only) {
    d_feat0 = std::move(d_fused);
  } else if (a.input == InputMode::kB1Only) {
    d_feat1 = std::move(d_fused);
  } else if (a.fusion == FusionMode::kCbp) {
    for (size_t i = 0; i < dout.size(); ++i) {
      auto [g0, g1] = CbpBackward<T>(Matrix<T>(internal::CbpScale<T>(a) * d_fused[i]),
                                     cache.feat_b0[i], cache.feat_b1[i], m.sketch_u, m.sketch_w);
      d_feat0.push_back(std::move(g0));
      d_feat1.push_back(std::move(g1));
    }
  } else {
    for (size_t i = 0; i < dout.size(); ++i) {
      d_feat0.push_back(d_fused[i].topRows(a.channels));
      d_feat1.push_back(d_fused[i].bottomRows(a.channels));
    }
  }
  auto branch_backward = [&](const std::vector<ConvBlockParams<T>>& blocks,
                             const std::vector<BlockCache<T>>& caches, Batch<T> d,
                             std::vector<ConvBlockParams<T>>& g) {
    for (size_t i = blocks.size(); i-- > 0;) {
      d = BlockBackward(blocks[i], caches[i], d, Activation::kRelu, g[i], i > 0);
    }
  };
  if (!d_feat0.empty()) branch_backward(m.branch_b0, cache.branch_b0, std::move(d_feat0), grad.branch_b0);
  if (!d_feat1.empty()) branch_backward(m.branch_b1, cache.branch_b1, std::move(d_feat1), grad.branch_b1);
}

// Mean squared error over every entry of every window.
template <typename T>
double MseLoss(const Batch<T>& pred, const Batch<T>& target) {
  if (pred.size() != target.size()) throw Error("mse: batch mismatch");
  double acc = 0, count = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    CheckShape(pred[i].rows() == target[i].rows() && pred[i].cols() == target[i].cols(), "mse");
    acc += (pred[i] - target[i]).template cast<double>().squaredNorm();
    count += static_cast<double>(pred[i].size());
  }
  return acc / count;
}

template <typename T>
Batch<T> MseGradient(const Batch<T>& pred, const Batch<T>& target) {
  double count = 0;
  for (const auto& p : pred) count += static_cast<double>(p.size());
  Batch<T> g;
  for (size_t i = 0; i < pred.size(); ++i) {
    g.push_back((pred[i] - target[i]) * static_cast<T>(2.0 / count));
  }
  return g;
}

template <typename U, typename T>
TcnModel<U> CastModel(const TcnModel<T>& m) {
  TcnModel<U> out;
  out.arch = m.arch;
  out.sketch_u = m.sketch_u;
  out.sketch_w = m.sketch_w;
  auto conv = [](const ConvParams<T>& c) {
    ConvParams<U> r;
    for (const auto& t : c.taps) r.taps.push_back(t.template cast<U>());
    r.bias = c.bias.template cast<U>();
    r.dilation = c.dilation;
    return r;
  };
  auto bn = [](const BatchNormParams<T>& b) {
    return BatchNormParams<U>{b.gamma.template cast<U>(), b.beta.template cast<U>(),
                              b.running_mean.template cast<U>(), b.running_var.template cast<U>()};
  };
  auto block = [&](const ConvBlockParams<T>& b) {
    return ConvBlockParams<U>{conv(b.conv1), conv(b.conv2), bn(b.bn1), bn(b.bn2)};
  };
  for (const auto& b : m.branch_b0) out.branch_b0.push_back(block(b));
  for (const auto& b : m.branch_b1) out.branch_b1.push_back(block(b));
  out.out_conv1 = conv(m.out_conv1);
  out.out_block = block(m.out_block);
  out.out_conv2 = conv(m.out_conv2);
  return out;
}

}  // namespace beamsep::nn
