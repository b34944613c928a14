// pscaug/convolve.hpp

// Copyright 2026  The pscaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace pscaug {

/// First out_len samples of the full linear convolution, computed directly.
inline std::vector<double> convolve_direct(std::span<const double> x,
                                           std::span<const double> h,
                                           std::size_t out_len) {
  std::vector<double> y(out_len, 0.0);
  for (std::size_t n = 0; n < out_len; ++n) {
    double acc = 0.0;
    const std::size_t k_end = std::min(h.size(), n + 1);
    for (std::size_t k = 0; k < k_end; ++k) {
      const std::size_t i = n - k;
      if (i < x.size()) acc += h[k] * x[i];
    }
    y[n] = acc;
  }
  return y;
}

namespace fft_detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwFree>;
using ComplexBuf = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuf alloc_real(std::size_t n) {
  return RealBuf(fftw_alloc_real(n));
}
inline ComplexBuf alloc_complex(std::size_t n) {
  return ComplexBuf(fftw_alloc_complex(n));
}

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW's planner is not thread-safe; execution on fresh aligned buffers is.
// Plans are created once per size and live for the process lifetime.
inline PlanPair plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  RealBuf r = alloc_real(n);
  ComplexBuf c = alloc_complex(n / 2 + 1);
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), r.get(), c.get(), FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), c.get(), r.get(), FFTW_ESTIMATE);
  cache.emplace(n, p);
  return p;
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace fft_detail

/// Overlap-add FFT convolution; same contract as convolve_direct.
inline std::vector<double> convolve_fft(std::span<const double> x,
                                        std::span<const double> h,
                                        std::size_t out_len) {
  using namespace fft_detail;
  std::vector<double> y(out_len, 0.0);
  if (h.empty() || x.empty() || out_len == 0) return y;

  const std::size_t m = h.size();
  const std::size_t nfft = next_pow2(std::max<std::size_t>(2 * m, 256));
  const std::size_t block = nfft - m + 1;
  const std::size_t bins = nfft / 2 + 1;
  const PlanPair plans = plans_for(nfft);

  RealBuf time = alloc_real(nfft);
  ComplexBuf hspec = alloc_complex(bins);
  ComplexBuf xspec = alloc_complex(bins);

  std::fill(time.get(), time.get() + nfft, 0.0);
  std::copy(h.begin(), h.end(), time.get());
  fftw_execute_dft_r2c(plans.forward, time.get(), hspec.get());

  const std::size_t x_used = std::min(x.size(), out_len);
  const double scale = 1.0 / static_cast<double>(nfft);
  for (std::size_t start = 0; start < x_used; start += block) {
    const std::size_t len = std::min(block, x_used - start);
    std::fill(time.get(), time.get() + nfft, 0.0);
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(start),
              x.begin() + static_cast<std::ptrdiff_t>(start + len), time.get());
    fftw_execute_dft_r2c(plans.forward, time.get(), xspec.get());
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = xspec[k][0] * hspec[k][0] - xspec[k][1] * hspec[k][1];
      const double im = xspec[k][0] * hspec[k][1] + xspec[k][1] * hspec[k][0];
      xspec[k][0] = re;
      xspec[k][1] = im;
    }
    fftw_execute_dft_c2r(plans.inverse, xspec.get(), time.get());
    const std::size_t span = std::min(nfft, out_len - start);
    for (std::size_t i = 0; i < span; ++i) y[start + i] += time[i] * scale;
  }
  return y;
}

/// Picks direct convolution for short kernels and overlap-add otherwise.
inline std::vector<double> convolve(std::span<const double> x, std::span<const double> h,
                                    std::size_t out_len) {
  constexpr std::size_t kDirectMaxTaps = 64;
  return h.size() <= kDirectMaxTaps ? convolve_direct(x, h, out_len)
                                    : convolve_fft(x, h, out_len);
}

}  // namespace pscaug
