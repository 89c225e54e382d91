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

// Count sketch and compact bilinear pooling.
//
// The sketch of an outer product u (x) w under the hash
// h(i, j) = (hu[i] + hw[j]) mod D and sign su[i] sw[j] equals the circular
// convolution of the individual sketches, so the D-dimensional fused vector
// costs three length-D real DFTs instead of d^2 products.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "beamsep/common.hpp"
#include "beamsep/fft.hpp"

namespace beamsep {

struct SketchParams {
  std::vector<int> h;  // bucket per input coordinate, in [0, d_out)
  std::vector<int> s;  // sign per input coordinate, +1 or -1
  int d_out = 0;

  int d_in() const { return static_cast<int>(h.size()); }

  void Validate() const {
    if (d_out < 1 || h.empty() || h.size() != s.size()) throw Error("malformed sketch parameters");
    for (size_t i = 0; i < h.size(); ++i) {
      if (h[i] < 0 || h[i] >= d_out) throw Error("sketch hash out of range");
      if (s[i] != 1 && s[i] != -1) throw Error("sketch sign must be +1 or -1");
    }
  }

  bool operator==(const SketchParams&) const = default;
};

inline SketchParams MakeSketchParams(int d_in, int d_out, uint64_t seed) {
  if (d_in < 1 || d_out < 1) throw Error("sketch dimensions must be positive");
  Rng rng(seed);
  SketchParams p;
  p.d_out = d_out;
  p.h.resize(d_in);
  p.s.resize(d_in);
  for (int i = 0; i < d_in; ++i) p.h[i] = static_cast<int>(rng.UniformInt(d_out));
  for (int i = 0; i < d_in; ++i) p.s[i] = rng.Sign();
  return p;
}

// out[k] = sum over i with h[i] == k of s[i] v[i].
inline std::vector<double> CountSketch(std::span<const double> v, const SketchParams& p) {
  if (static_cast<int>(v.size()) != p.d_in()) throw Error("count sketch: dimension mismatch");
  std::vector<double> out(p.d_out, 0.0);
  for (size_t i = 0; i < v.size(); ++i) out[p.h[i]] += p.s[i] * v[i];
  return out;
}

inline std::vector<double> CompactBilinear(std::span<const double> u, std::span<const double> w,
                                           const SketchParams& pu, const SketchParams& pw) {
  if (pu.d_out != pw.d_out) throw Error("compact bilinear: sketch sizes differ");
  const RealFft fft(pu.d_out);
  std::vector<std::complex<double>> a = fft.Forward(CountSketch(u, pu));
  const std::vector<std::complex<double>> b = fft.Forward(CountSketch(w, pw));
  for (size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
  return fft.Inverse(a);
}

template <typename T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Column f of the result is CompactBilinear(a[:, f], b[:, f]).
template <typename T>
MatrixT<T> CbpFramewise(const MatrixT<T>& a, const MatrixT<T>& b, const SketchParams& pu,
                        const SketchParams& pw) {
  if (a.cols() != b.cols()) throw Error("cbp: frame counts differ");
  if (a.rows() != pu.d_in() || b.rows() != pw.d_in()) throw Error("cbp: channel mismatch");
  if (pu.d_out != pw.d_out) throw Error("cbp: sketch sizes differ");
  const int d = pu.d_out;
  const RealFft fft(d);
  MatrixT<T> out(d, a.cols());
  std::vector<double> sa(d), sb(d), y(d);
  std::vector<std::complex<double>> fa(fft.bins()), fb(fft.bins());
  for (Eigen::Index f = 0; f < a.cols(); ++f) {
    std::fill(sa.begin(), sa.end(), 0.0);
    std::fill(sb.begin(), sb.end(), 0.0);
    for (int i = 0; i < pu.d_in(); ++i) sa[pu.h[i]] += pu.s[i] * static_cast<double>(a(i, f));
    for (int i = 0; i < pw.d_in(); ++i) sb[pw.h[i]] += pw.s[i] * static_cast<double>(b(i, f));
    fft.Forward(sa, fa);
    fft.Forward(sb, fb);
    for (size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
    fft.Inverse(fa, y);
    for (int k = 0; k < d; ++k) out(k, f) = static_cast<T>(y[k]);
  }
  return out;
}

// Exact input gradients of CbpFramewise for upstream gradient `grad`
// (d_out x F). With y = p (*) q (circular), dL/dp is the circular
// cross-correlation of dL/dy with q, and symmetrically for q.
template <typename T>
std::pair<MatrixT<T>, MatrixT<T>> CbpBackward(const MatrixT<T>& grad, const MatrixT<T>& a,
                                              const MatrixT<T>& b, const SketchParams& pu,
                                              const SketchParams& pw) {
  if (grad.rows() != pu.d_out || grad.cols() != a.cols() || a.cols() != b.cols() ||
      a.rows() != pu.d_in() || b.rows() != pw.d_in()) {
    throw Error("cbp backward: shape mismatch");
  }
  const int d = pu.d_out;
  const RealFft fft(d);
  MatrixT<T> ga(a.rows(), a.cols()), gb(b.rows(), b.cols());
  std::vector<double> sa(d), sb(d), g(d), dp(d), dq(d);
  std::vector<std::complex<double>> fa(fft.bins()), fb(fft.bins()), fg(fft.bins()),
      tmp(fft.bins());
  for (Eigen::Index f = 0; f < a.cols(); ++f) {
    std::fill(sa.begin(), sa.end(), 0.0);
    std::fill(sb.begin(), sb.end(), 0.0);
    for (int i = 0; i < pu.d_in(); ++i) sa[pu.h[i]] += pu.s[i] * static_cast<double>(a(i, f));
    for (int i = 0; i < pw.d_in(); ++i) sb[pw.h[i]] += pw.s[i] * static_cast<double>(b(i, f));
    for (int k = 0; k < d; ++k) g[k] = static_cast<double>(grad(k, f));
    fft.Forward(sa, fa);
    fft.Forward(sb, fb);
    fft.Forward(g, fg);
    for (size_t k = 0; k < fg.size(); ++k) tmp[k] = fg[k] * std::conj(fb[k]);
    fft.Inverse(tmp, dp);
    for (size_t k = 0; k < fg.size(); ++k) tmp[k] = fg[k] * std::conj(fa[k]);
    fft.Inverse(tmp, dq);
    for (int i = 0; i < pu.d_in(); ++i) ga(i, f) = static_cast<T>(pu.s[i] * dp[pu.h[i]]);
    for (int i = 0; i < pw.d_in(); ++i) gb(i, f) = static_cast<T>(pw.s[i] * dq[pw.h[i]]);
  }
  return {std::move(ga), std::move(gb)};
}

}  // namespace beamsep
