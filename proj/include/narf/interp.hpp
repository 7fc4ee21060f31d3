#pragma once
// Interpolating cubic B-splines.  The prefilter solves the tridiagonal
// (1/6, 4/6, 1/6) interpolation system with the standard recursive filter
// (pole sqrt(3)-2), giving a C2 piecewise-cubic interpolant that reproduces
// cubics; evaluation is the 4-tap tensor-product B-spline sum with zero
// extension outside the grid.  C2 continuity matters: the transport integrator
// differentiates the interpolant implicitly, and a kinked second derivative
// would cap its observed order below four.

#include <algorithm>
#include <cmath>
#include <vector>

#include "narf/geometry.hpp"
#include "narf/grid.hpp"

namespace narf {

namespace bspline {

inline constexpr double kPole = -0.26794919243112270647;  // sqrt(3) - 2

// In-place prefilter of one line, stride between consecutive samples.
inline void prefilter_line(cplx* s, int n, std::ptrdiff_t stride) {
  const double z = kPole;
  // Causal init: truncated power series; our fields vanish near the ends so
  // the horizon choice is far below rounding.
  const int horizon = std::min(n, 42);
  cplx sum = s[0];
  double zk = z;
  for (int k = 1; k < horizon; ++k, zk *= z) sum += zk * s[static_cast<std::ptrdiff_t>(k) * stride];
  cplx prev = sum;
  s[0] = prev;
  for (int i = 1; i < n; ++i) {
    prev = s[static_cast<std::ptrdiff_t>(i) * stride] + z * prev;
    s[static_cast<std::ptrdiff_t>(i) * stride] = prev;
  }
  // Anticausal pass with the mirror end condition.
  cplx next = (z / (z * z - 1.0)) *
              (s[static_cast<std::ptrdiff_t>(n - 1) * stride] +
               z * s[static_cast<std::ptrdiff_t>(n - 2) * stride]);
  s[static_cast<std::ptrdiff_t>(n - 1) * stride] = 6.0 * next;
  for (int i = n - 2; i >= 0; --i) {
    next = z * (next - s[static_cast<std::ptrdiff_t>(i) * stride]);
    s[static_cast<std::ptrdiff_t>(i) * stride] = 6.0 * next;
  }
}

inline void weights(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
  w[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
  w[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
  w[3] = t3 / 6.0;
}

}  // namespace bspline

// Prefiltered sampler for a whole MatrixField; build once, sample anywhere.
// Taps outside the grid read as zero, so the intended inputs are fields that
// vanish near the grid boundary (every compactly supported field does).
class BicubicSampler {
 public:
  explicit BicubicSampler(const MatrixField& f)
      : grid_(f.grid()), rows_(f.rows()), cols_(f.cols()), blk_(f.block()),
        coef_(f.data(), f.data() + f.size()) {
    const int n = grid_.n;
    // Prefilter along x1 (contiguous nodes are one block apart), then x2.
    for (int e = 0; e < blk_; ++e) {
      for (int iy = 0; iy < n; ++iy)
        bspline::prefilter_line(coef_.data() + (static_cast<std::size_t>(iy) * n) * blk_ + e, n,
                                blk_);
      for (int ix = 0; ix < n; ++ix)
        bspline::prefilter_line(coef_.data() + static_cast<std::size_t>(ix) * blk_ + e, n,
                                static_cast<std::ptrdiff_t>(n) * blk_);
    }
    // Floor the exponential prefilter halo so rays that miss the support see
    // exact zeros a few cells out.
    double cmax = 0.0;
    for (const cplx& z : coef_) cmax = std::max(cmax, std::abs(z));
    const double floor = 1e-13 * cmax;
    for (cplx& z : coef_)
      if (std::abs(z) < floor) z = 0.0;
  }

  const GridSpec& grid() const { return grid_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int block() const { return blk_; }

  // Writes all rows*cols interpolated entries at the plane point (x1, x2).
  void sample(double x1, double x2, cplx* out) const {
    const int n = grid_.n;
    const double h = grid_.h();
    const double u = (x1 + grid_.half_extent) / h;
    const double v = (x2 + grid_.half_extent) / h;
    // Outside the coefficient halo everything is zero.
    if (u < -2.0 || u > n + 1.0 || v < -2.0 || v > n + 1.0) {
      for (int e = 0; e < blk_; ++e) out[e] = 0.0;
      return;
    }
    const int i = static_cast<int>(std::floor(u));
    const int j = static_cast<int>(std::floor(v));
    double wx[4], wy[4];
    bspline::weights(u - i, wx);
    bspline::weights(v - j, wy);
    for (int e = 0; e < blk_; ++e) out[e] = 0.0;
    for (int a = 0; a < 4; ++a) {
      const int jy = j - 1 + a;
      if (jy < 0 || jy >= n) continue;
      const double wya = wy[a];
      for (int b = 0; b < 4; ++b) {
        const int jx = i - 1 + b;
        if (jx < 0 || jx >= n) continue;
        const double w = wya * wx[b];
        const cplx* p = coef_.data() + (static_cast<std::size_t>(jy) * n + jx) * blk_;
        for (int e = 0; e < blk_; ++e) out[e] += w * p[e];
      }
    }
  }

 private:
  GridSpec grid_;
  int rows_, cols_, blk_;
  std::vector<cplx> coef_;
};

// One prefiltered line of matrix samples; used to evaluate trace tables and
// sinogram rows at off-node offsets.  Unlike the field sampler, end data need
// not vanish (traces tend to a constant), so evaluation mirrors tap indices
// to stay consistent with the prefilter's mirror end condition; queries are
// expected inside [-half_extent, half_extent].
class CubicLine {
 public:
  CubicLine() = default;
  // n samples at coord(i) spacing h of a length-blk block each.
  CubicLine(const GridSpec& g, const cplx* samples, int blk) : grid_(g), blk_(blk),
      coef_(samples, samples + static_cast<std::size_t>(g.n) * blk) {
    for (int e = 0; e < blk_; ++e) bspline::prefilter_line(coef_.data() + e, g.n, blk_);
  }

  void sample(double y, cplx* out) const {
    const int n = grid_.n;
    double u = (y + grid_.half_extent) / grid_.h();
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    const int i = std::min(static_cast<int>(std::floor(u)), n - 2);
    double w[4];
    bspline::weights(u - i, w);
    for (int e = 0; e < blk_; ++e) out[e] = 0.0;
    for (int b = 0; b < 4; ++b) {
      int j = i - 1 + b;
      if (j < 0) j = -j;
      if (j >= n) j = 2 * (n - 1) - j;
      const cplx* p = coef_.data() + static_cast<std::size_t>(j) * blk_;
      for (int e = 0; e < blk_; ++e) out[e] += w[b] * p[e];
    }
  }

 private:
  GridSpec grid_{};
  int blk_ = 0;
  std::vector<cplx> coef_;
};

// Samples of a field in the rotated ray frame of angle phi: entry (i1, i2)
// holds the field at y1*theta + y2*nu with y1 = coord(i1), y2 = coord(i2).
// The result reuses MatrixField storage with the first index running over y1.
inline MatrixField resample_to_ray_frame(const BicubicSampler& s, double phi) {
  const GridSpec& g = s.grid();
  MatrixField out(g, s.rows(), s.cols());
  const RayGeometry geom(phi);
  for (int i1 = 0; i1 < g.n; ++i1) {
    const double y1 = g.coord(i1);
    for (int i2 = 0; i2 < g.n; ++i2) {
      double x1, x2;
      geom.to_plane(y1, g.coord(i2), x1, x2);
      s.sample(x1, x2, out.node(i1, i2));
    }
  }
  return out;
}

}  // namespace narf
