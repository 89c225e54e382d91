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

#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "beamsep/common.hpp"

namespace beamsep {

// Real-input DFT of a fixed length backed by FFTW. Plans are created once per
// length and shared; execution uses the new-array interface, which FFTW
// guarantees to be thread safe.
class RealFft {
 public:
  explicit RealFft(int size) : size_(size) {
    if (size < 1) throw Error("fft size must be positive");
    const Plans& p = PlansFor(size);
    forward_ = p.forward;
    inverse_ = p.inverse;
  }

  int size() const { return size_; }
  int bins() const { return size_ / 2 + 1; }

  // out[k] = sum_n in[n] exp(-j 2 pi k n / N), k = 0..N/2.
  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out) const {
    std::vector<double> buf(in.begin(), in.end());
    buf.resize(size_, 0.0);
    fftw_execute_dft_r2c(forward_, buf.data(),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  // Inverse of Forward including the 1/N factor. The imaginary parts of the
  // DC and Nyquist bins are ignored, as for any Hermitian spectrum.
  void Inverse(std::span<const std::complex<double>> in,
               std::span<double> out) const {
    std::vector<std::complex<double>> buf(in.begin(), in.end());
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(buf.data()),
                         out.data());
    const double scale = 1.0 / size_;
    for (int i = 0; i < size_; ++i) out[i] *= scale;
  }

  std::vector<std::complex<double>> Forward(std::span<const double> in) const {
    std::vector<std::complex<double>> out(bins());
    Forward(in, out);
    return out;
  }

  std::vector<double> Inverse(std::span<const std::complex<double>> in) const {
    std::vector<double> out(size_);
    Inverse(in, out);
    return out;
  }

 private:
  struct Plans {
    fftw_plan forward;
    fftw_plan inverse;
  };

  static const Plans& PlansFor(int size) {
    static std::mutex mu;
    static std::map<int, Plans> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(size);
    if (it != cache.end()) return it->second;
    std::vector<double> re(size);
    std::vector<std::complex<double>> cx(size / 2 + 1);
    auto* c = reinterpret_cast<fftw_complex*>(cx.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p{fftw_plan_dft_r2c_1d(size, re.data(), c, flags),
            fftw_plan_dft_c2r_1d(size, c, re.data(), flags)};
    return cache.emplace(size, p).first->second;
  }

  int size_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

}  // namespace beamsep
