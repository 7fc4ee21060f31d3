#pragma once
// FFTW behind a process-lifetime plan cache.  Plans are created once per
// (size, direction) under a mutex with FFTW_ESTIMATE|FFTW_UNALIGNED and then
// executed on caller buffers via the thread-safe new-array interface; all
// transforms here are in-place complex-to-complex.  Inverse transforms are
// normalized by 1/N so forward-then-inverse is the identity.

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "narf/grid.hpp"

namespace narf {
namespace fft {

namespace detail {

inline std::mutex& plan_mutex() {
  static std::mutex mu;
  return mu;
}

inline fftw_plan plan_1d(int n, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  static std::map<std::pair<int, int>, fftw_plan> cache;
  const auto key = std::make_pair(n, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<cplx> tmp(n);
  auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
  fftw_plan plan = fftw_plan_dft_1d(n, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, plan);
  return plan;
}

inline fftw_plan plan_2d(int ny, int nx, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  const auto key = std::make_tuple(ny, nx, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<cplx> tmp(static_cast<std::size_t>(ny) * nx);
  auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
  fftw_plan plan = fftw_plan_dft_2d(ny, nx, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, plan);
  return plan;
}

inline void run(fftw_plan plan, cplx* data) {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, p, p);
}

}  // namespace detail

inline void forward(cplx* data, int n) { detail::run(detail::plan_1d(n, FFTW_FORWARD), data); }

inline void inverse(cplx* data, int n) {
  detail::run(detail::plan_1d(n, FFTW_BACKWARD), data);
  const double s = 1.0 / n;
  for (int i = 0; i < n; ++i) data[i] *= s;
}

inline void forward_2d(cplx* data, int ny, int nx) {
  detail::run(detail::plan_2d(ny, nx, FFTW_FORWARD), data);
}

inline void inverse_2d(cplx* data, int ny, int nx) {
  detail::run(detail::plan_2d(ny, nx, FFTW_BACKWARD), data);
  const double s = 1.0 / (static_cast<double>(ny) * nx);
  const std::size_t total = static_cast<std::size_t>(ny) * nx;
  for (std::size_t i = 0; i < total; ++i) data[i] *= s;
}

// Signed frequency index of bin k in an n-point transform (Nyquist positive).
inline int freq_index(int k, int n) { return k <= n / 2 ? k : k - n; }

// Angular wavenumber of bin k when the n samples span a period of length.
inline double wavenumber(int k, int n, double period) {
  return 2.0 * kPi * freq_index(k, n) / period;
}

}  // namespace fft
}  // namespace narf
