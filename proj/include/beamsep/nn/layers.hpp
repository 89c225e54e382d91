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

// Building blocks of the TCN: dilated 1-D convolution over frames, batch
// normalisation across a batch of windows, and the two-layer residual block.
//
// Feature maps are channels x frames matrices (one column per frame); a
// batch is a vector of equally shaped maps.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "beamsep/common.hpp"

namespace beamsep::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Batch = std::vector<Matrix<T>>;

enum class Activation { kRelu, kLinear };

template <typename T>
struct ConvParams {
  std::vector<Matrix<T>> taps;  // out x in, taps.size() == 1 (1x1) or 3
  Vector<T> bias;
  int dilation = 1;

  int out_channels() const { return static_cast<int>(bias.size()); }
  int in_channels() const { return static_cast<int>(taps.front().cols()); }
  int kernel() const { return static_cast<int>(taps.size()); }
  // Frame offset read by tap k.
  int Offset(int k) const { return (k - (kernel() - 1) / 2) * dilation; }

  static ConvParams Zeros(int out, int in, int kernel, int dilation) {
    ConvParams p;
    p.taps.assign(kernel, Matrix<T>::Zero(out, in));
    p.bias = Vector<T>::Zero(out);
    p.dilation = dilation;
    return p;
  }
};

template <typename T>
struct BatchNormParams {
  Vector<T> gamma, beta;
  Vector<T> running_mean, running_var;

  static BatchNormParams Identity(int channels) {
    return {Vector<T>::Ones(channels), Vector<T>::Zero(channels), Vector<T>::Zero(channels),
            Vector<T>::Ones(channels)};
  }
};

template <typename T>
struct ConvBlockParams {
  ConvParams<T> conv1, conv2;
  BatchNormParams<T> bn1, bn2;
};

inline void CheckShape(bool ok, const char* what) {
  if (!ok) throw Error(std::string(what) + ": shape mismatch");
}

// out[:, f] = bias + sum_k W_k in[:, f + offset_k]; frames outside [0, F)
// read as zero, so the output keeps the input width.
template <typename T>
Matrix<T> ConvForward(const ConvParams<T>& p, const Matrix<T>& in) {
  CheckShape(in.rows() == p.in_channels(), "conv");
  const Eigen::Index frames = in.cols();
  Matrix<T> out = p.bias.replicate(1, frames);
  for (int k = 0; k < p.kernel(); ++k) {
    const Eigen::Index o = p.Offset(k);
    const Eigen::Index first = std::max<Eigen::Index>(0, -o);
    const Eigen::Index n = frames - std::abs(o);
    if (n <= 0) continue;
    out.middleCols(first, n).noalias() += p.taps[k] * in.middleCols(first + o, n);
  }
  return out;
}

// Accumulates parameter gradients into `grad`; writes the input gradient
// to `din` unless it is null.
template <typename T>
void ConvBackward(const ConvParams<T>& p, const Matrix<T>& in, const Matrix<T>& dout,
                  Matrix<T>* din, ConvParams<T>& grad) {
  CheckShape(dout.rows() == p.out_channels() && dout.cols() == in.cols(), "conv backward");
  const Eigen::Index frames = in.cols();
  grad.bias += dout.rowwise().sum();
  if (din) din->setZero(in.rows(), frames);
  for (int k = 0; k < p.kernel(); ++k) {
    const Eigen::Index o = p.Offset(k);
    const Eigen::Index first = std::max<Eigen::Index>(0, -o);
    const Eigen::Index n = frames - std::abs(o);
    if (n <= 0) continue;
    grad.taps[k].noalias() += dout.middleCols(first, n) * in.middleCols(first + o, n).transpose();
    if (din) {
      din->middleCols(first + o, n).noalias() += p.taps[k].transpose() * dout.middleCols(first, n);
    }
  }
}

template <typename T>
Matrix<T> Activate(const Matrix<T>& x, Activation act) {
  if (act == Activation::kLinear) return x;
  return x.cwiseMax(T(0));
}

// Gradient through the activation given its pre-activation input.
template <typename T>
Matrix<T> ActivateBackward(const Matrix<T>& pre, const Matrix<T>& dout, Activation act) {
  if (act == Activation::kLinear) return dout;
  return (pre.array() > T(0)).select(dout, T(0));
}

template <typename T>
struct BatchNormCache {
  Batch<T> xhat;
  Vector<T> inv_std;
  bool training = false;
};

struct BatchNormOptions {
  bool training = false;
  double momentum = 0.9;  // weight of the old running statistics
  double eps = 1e-3;
  bool update_running = true;
};

// Per-channel normalisation. Training mode uses the statistics of the whole
// batch (all windows, all frames); inference uses the running statistics.
template <typename T>
Batch<T> BatchNormForward(BatchNormParams<T>& p, const Batch<T>& in, const BatchNormOptions& opt,
                          BatchNormCache<T>* cache) {
  const Eigen::Index channels = p.gamma.size();
  Vector<T> mean, var;
  if (opt.training) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(channels);
    double count = 0;
    for (const auto& x : in) {
      CheckShape(x.rows() == channels, "batchnorm");
      sum += x.template cast<double>().rowwise().sum();
      count += static_cast<double>(x.cols());
    }
    const Eigen::VectorXd mu = sum / count;
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(channels);
    for (const auto& x : in) {
      sq += (x.template cast<double>().colwise() - mu).array().square().matrix().rowwise().sum();
    }
    mean = mu.cast<T>();
    var = (sq / count).cast<T>();
    if (opt.update_running) {
      const T m = static_cast<T>(opt.momentum);
      p.running_mean = m * p.running_mean + (T(1) - m) * mean;
      p.running_var = m * p.running_var + (T(1) - m) * var;
    }
  } else {
    mean = p.running_mean;
    var = p.running_var;
  }
  const Vector<T> inv_std = (var.array() + static_cast<T>(opt.eps)).rsqrt().matrix();
  Batch<T> out;
  out.reserve(in.size());
  if (cache) {
    cache->xhat.clear();
    cache->inv_std = inv_std;
    cache->training = opt.training;
  }
  for (const auto& x : in) {
    CheckShape(x.rows() == channels, "batchnorm");
    Matrix<T> xhat = ((x.colwise() - mean).array().colwise() * inv_std.array()).matrix();
    out.push_back(((xhat.array().colwise() * p.gamma.array()).colwise() + p.beta.array()).matrix());
    if (cache) cache->xhat.push_back(std::move(xhat));
  }
  return out;
}

template <typename T>
Batch<T> BatchNormBackward(const BatchNormParams<T>& p, const BatchNormCache<T>& cache,
                           const Batch<T>& dout, BatchNormParams<T>& grad) {
  const Eigen::Index channels = p.gamma.size();
  Vector<T> sum_dy = Vector<T>::Zero(channels);
  Vector<T> sum_dy_xhat = Vector<T>::Zero(channels);
  double count = 0;
  for (size_t b = 0; b < dout.size(); ++b) {
    sum_dy += dout[b].rowwise().sum();
    sum_dy_xhat += dout[b].cwiseProduct(cache.xhat[b]).rowwise().sum();
    count += static_cast<double>(dout[b].cols());
  }
  grad.beta += sum_dy;
  grad.gamma += sum_dy_xhat;
  Batch<T> din;
  din.reserve(dout.size());
  if (!cache.training) {
    const Vector<T> scale = p.gamma.cwiseProduct(cache.inv_std);
    for (const auto& d : dout) din.push_back((d.array().colwise() * scale.array()).matrix());
    return din;
  }
  // dxhat = dy * gamma; dx = inv_std / N (N dxhat - sum dxhat - xhat sum(dxhat xhat))
  const T n = static_cast<T>(count);
  const Vector<T> mean_dxhat = (p.gamma.cwiseProduct(sum_dy)) / n;
  const Vector<T> mean_dxhat_xhat = (p.gamma.cwiseProduct(sum_dy_xhat)) / n;
  for (size_t b = 0; b < dout.size(); ++b) {
    Matrix<T> dxhat = (dout[b].array().colwise() * p.gamma.array()).matrix();
    dxhat.colwise() -= mean_dxhat;
    dxhat -= (cache.xhat[b].array().colwise() * mean_dxhat_xhat.array()).matrix();
    din.push_back((dxhat.array().colwise() * cache.inv_std.array()).matrix());
  }
  return din;
}

template <typename T>
struct BlockCache {
  Batch<T> input;
  Batch<T> pre1, act1;  // conv1 output, after activation
  Batch<T> out1;        // after bn1
  Batch<T> pre2, act2;
  BatchNormCache<T> bn1, bn2;
};

// y = x + BN2(act(conv2(BN1(act(conv1(x)))))): each layer is convolution,
// activation, then batch normalisation; the skip path adds the block input.
template <typename T>
Batch<T> BlockForward(ConvBlockParams<T>& p, const Batch<T>& in, Activation act,
                      const BatchNormOptions& opt, BlockCache<T>* cache) {
  Batch<T> pre1, act1, pre2, act2;
  for (const auto& x : in) {
    pre1.push_back(ConvForward(p.conv1, x));
    act1.push_back(Activate(pre1.back(), act));
  }
  Batch<T> out1 = BatchNormForward(p.bn1, act1, opt, cache ? &cache->bn1 : nullptr);
  for (const auto& x : out1) {
    pre2.push_back(ConvForward(p.conv2, x));
    act2.push_back(Activate(pre2.back(), act));
  }
  Batch<T> out = BatchNormForward(p.bn2, act2, opt, cache ? &cache->bn2 : nullptr);
  for (size_t b = 0; b < out.size(); ++b) {
    CheckShape(out[b].rows() == in[b].rows() && out[b].cols() == in[b].cols(), "block skip");
    out[b] += in[b];
  }
  if (cache) {
    cache->input = in;
    cache->pre1 = std::move(pre1);
    cache->act1 = std::move(act1);
    cache->out1 = std::move(out1);
    cache->pre2 = std::move(pre2);
    cache->act2 = std::move(act2);
  }
  return out;
}

// Returns the input gradient (empty batch when `need_input_grad` is false).
template <typename T>
Batch<T> BlockBackward(const ConvBlockParams<T>& p, const BlockCache<T>& cache,
                       const Batch<T>& dout, Activation act, ConvBlockParams<T>& grad,
                       bool need_input_grad = true) {
  Batch<T> d_act2 = BatchNormBackward(p.bn2, cache.bn2, dout, grad.bn2);
  Batch<T> d_out1(dout.size());
  for (size_t b = 0; b < dout.size(); ++b) {
    const Matrix<T> d_pre2 = ActivateBackward(cache.pre2[b], d_act2[b], act);
    ConvBackward(p.conv2, cache.out1[b], d_pre2, &d_out1[b], grad.conv2);
  }
  Batch<T> d_act1 = BatchNormBackward(p.bn1, cache.bn1, d_out1, grad.bn1);
  Batch<T> din;
  for (size_t b = 0; b < dout.size(); ++b) {
    const Matrix<T> d_pre1 = ActivateBackward(cache.pre1[b], d_act1[b], act);
    if (need_input_grad) {
      Matrix<T> dx;
      ConvBackward(p.conv1, cache.input[b], d_pre1, &dx, grad.conv1);
      din.push_back(dx + dout[b]);
    } else {
      ConvBackward<T>(p.conv1, cache.input[b], d_pre1, nullptr, grad.conv1);
    }
  }
  return din;
}

}  // namespace beamsep::nn
