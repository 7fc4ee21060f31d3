#pragma once
// Singular integral operators on the plane and on offset lines.
//
// Conventions, fixed once and shared by every consumer:
//   z = x1 + i x2,  dbar = (d/dx1 + i d/dx2)/2,  d_z = (d/dx1 - i d/dx2)/2.
//   Fourier transform fhat(xi) = integral f(y) e^{-i xi.y} dy.
//   zeta(t) = ((t + 1/t)/2, (i/2)(t - 1/t)), so zeta(e^{i phi}) = theta(phi)
//   and zeta(t).grad = t dbar + (1/t) d_z.
//
// The solid Cauchy transform S and the family Pi(t) are discretized as exact
// linear convolutions on a 2x zero-padded grid against kernel tables whose
// singular cell integrates to zero by parity and whose near-field cells carry
// Gauss-Legendre cell averages; the quadrature error is O(h^2).
//
// The line projections Pi^+ / Pi^- are complementary frequency half-space
// multipliers on a 4x zero-padded line.  The DC and Nyquist bins carry weight
// 1/2 in each projection: that choice is forced by the r -> 1 limit of Pi(t)
// (the limit symbol at xi_2 = 0 is the principal value, midway between the
// one-sided limits) and by agreement with principal-value quadrature.  The
// complementary sum Pi^+ + Pi^- = Id is exact by construction; the projection
// algebra is exact on every bin except the shared DC/Nyquist pair.

#include <functional>
#include <vector>

#include "narf/fft.hpp"
#include "narf/geometry.hpp"
#include "narf/grid.hpp"
#include "narf/interp.hpp"

namespace narf {

inline constexpr int kLinePad = 4;  // zero-padding factor for line operators

//==========================================================================
// Spectral parameter
//==========================================================================

enum class Regime { interior, boundary, exterior };

struct SpectralParam {
  cplx t;

  explicit SpectralParam(cplx t_) : t(t_) {
    if (std::abs(t_) == 0.0) throw std::invalid_argument("SpectralParam: t must be nonzero");
  }

  cplx zeta1() const { return 0.5 * (t + 1.0 / t); }
  cplx zeta2() const { return cplx(0.0, 0.5) * (t - 1.0 / t); }

  Regime regime(double eps = 1e-12) const {
    const double a = std::abs(t);
    if (a < 1.0 - eps) return Regime::interior;
    if (a > 1.0 + eps) return Regime::exterior;
    return Regime::boundary;
  }
};

//==========================================================================
// Derivatives
//==========================================================================

namespace detail {

// Complex directional derivative c1 d/dx1 + c2 d/dx2 with 4th-order centered
// stencils, one-sided at the grid edges.  Local, so fields with slow 1/z
// tails are differentiated without periodization artifacts.
inline void fd_derivative_axis(const MatrixField& f, int axis, MatrixField& out) {
  const int n = f.n();
  const int blk = f.block();
  const double inv12h = 1.0 / (12.0 * f.grid().h());
  auto val = [&](int iy, int ix, int e) -> cplx {
    return axis == 0 ? f.node(iy, ix)[e] : f.node(ix, iy)[e];
  };
  auto put = [&](int iy, int ix, int e, cplx v) {
    if (axis == 0)
      out.node(iy, ix)[e] += v;
    else
      out.node(ix, iy)[e] += v;
  };
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      for (int e = 0; e < blk; ++e) {
        cplx d;
        if (ix >= 2 && ix <= n - 3) {
          d = (-val(iy, ix + 2, e) + 8.0 * val(iy, ix + 1, e) - 8.0 * val(iy, ix - 1, e) +
               val(iy, ix - 2, e)) *
              inv12h;
        } else if (ix == 0) {
          d = (-25.0 * val(iy, 0, e) + 48.0 * val(iy, 1, e) - 36.0 * val(iy, 2, e) +
               16.0 * val(iy, 3, e) - 3.0 * val(iy, 4, e)) *
              inv12h;
        } else if (ix == 1) {
          d = (-3.0 * val(iy, 0, e) - 10.0 * val(iy, 1, e) + 18.0 * val(iy, 2, e) -
               6.0 * val(iy, 3, e) + val(iy, 4, e)) *
              inv12h;
        } else if (ix == n - 2) {
          d = (3.0 * val(iy, n - 1, e) + 10.0 * val(iy, n - 2, e) - 18.0 * val(iy, n - 3, e) +
               6.0 * val(iy, n - 4, e) - val(iy, n - 5, e)) *
              inv12h;
        } else {  // ix == n - 1
          d = (25.0 * val(iy, n - 1, e) - 48.0 * val(iy, n - 2, e) + 36.0 * val(iy, n - 3, e) -
               16.0 * val(iy, n - 4, e) + 3.0 * val(iy, n - 5, e)) *
              inv12h;
        }
        put(iy, ix, e, d);
      }
}

}  // namespace detail

// c1 df/dx1 + c2 df/dx2, 4th-order finite differences.
inline MatrixField directional_derivative_fd(const MatrixField& f, cplx c1, cplx c2) {
  MatrixField out(f.grid(), f.rows(), f.cols());
  if (c1 != cplx(0.0)) {
    MatrixField d1(f.grid(), f.rows(), f.cols());
    detail::fd_derivative_axis(f, 0, d1);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += c1 * d1.data()[i];
  }
  if (c2 != cplx(0.0)) {
    MatrixField d2(f.grid(), f.rows(), f.cols());
    detail::fd_derivative_axis(f, 1, d2);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += c2 * d2.data()[i];
  }
  return out;
}

inline MatrixField dbar_fd(const MatrixField& f) {
  return directional_derivative_fd(f, cplx(0.5, 0.0), cplx(0.0, 0.5));
}
inline MatrixField d_z_fd(const MatrixField& f) {
  return directional_derivative_fd(f, cplx(0.5, 0.0), cplx(0.0, -0.5));
}

namespace detail {

// Spectral c1 d1 + c2 d2; valid for fields that vanish near the grid
// boundary (the implicit periodization must be smooth).
inline MatrixField spectral_derivative(const MatrixField& f, cplx c1, cplx c2) {
  const int n = f.n();
  const double period = n * f.grid().h();
  MatrixField out(f.grid(), f.rows(), f.cols());
  std::vector<cplx> plane(static_cast<std::size_t>(n) * n);
  for (int e = 0; e < f.block(); ++e) {
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        plane[static_cast<std::size_t>(iy) * n + ix] = f.node(iy, ix)[e];
    fft::forward_2d(plane.data(), n, n);
    for (int ky = 0; ky < n; ++ky) {
      // Odd-derivative multipliers zero the unpaired Nyquist bins.
      const double xi2 = (ky == n / 2) ? 0.0 : fft::wavenumber(ky, n, period);
      for (int kx = 0; kx < n; ++kx) {
        const double xi1 = (kx == n / 2) ? 0.0 : fft::wavenumber(kx, n, period);
        plane[static_cast<std::size_t>(ky) * n + kx] *= cplx(0.0, 1.0) * (c1 * xi1 + c2 * xi2);
      }
    }
    fft::inverse_2d(plane.data(), n, n);
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        out.node(iy, ix)[e] = plane[static_cast<std::size_t>(iy) * n + ix];
  }
  return out;
}

}  // namespace detail

// Spectral dbar / d_z.  Precondition: f smooth and vanishing near the grid
// boundary; use the _fd variants for fields with slowly decaying tails.
inline MatrixField dbar(const MatrixField& f) {
  return detail::spectral_derivative(f, cplx(0.5, 0.0), cplx(0.0, 0.5));
}
inline MatrixField d_z(const MatrixField& f) {
  return detail::spectral_derivative(f, cplx(0.5, 0.0), cplx(0.0, -0.5));
}

//==========================================================================
// Singular plane convolutions
//==========================================================================

// Exact linear convolution of an n x n field against a translation-invariant
// kernel on the doubled grid.  The kernel callback returns K(dx1, dx2) for a
// displacement; cells within the near-field ring are replaced by high-order
// cell averages and the singular central cell by its exact parity value zero.
class SingularConvolution {
 public:
  using Kernel = std::function<cplx(double, double)>;

  SingularConvolution(const GridSpec& g, const Kernel& kernel) : grid_(g), np_(2 * g.n) {
    const double h = g.h();
    spectrum_.assign(static_cast<std::size_t>(np_) * np_, cplx(0.0));
    // 12-point Gauss-Legendre nodes/weights on [-1/2, 1/2].
    static const double gx[12] = {-0.4907803171233596, -0.4520586281852374, -0.3849513370971523,
                                  -0.2936589771433087, -0.1839157494990901, -0.0626167042557345,
                                  0.0626167042557345,  0.1839157494990901,  0.2936589771433087,
                                  0.3849513370971523,  0.4520586281852374,  0.4907803171233596};
    static const double gw[12] = {0.0235876681932560, 0.0534696629976594, 0.0800391642716731,
                                  0.1015837133615328, 0.1167462682691773, 0.1245735229067013,
                                  0.1245735229067013, 0.1167462682691773, 0.1015837133615328,
                                  0.0800391642716731, 0.0534696629976594, 0.0235876681932560};
    for (int dy = -(g.n - 1); dy <= g.n - 1; ++dy)
      for (int dx = -(g.n - 1); dx <= g.n - 1; ++dx) {
        cplx v;
        if (dx == 0 && dy == 0) {
          v = 0.0;  // odd kernels integrate to zero over the centered cell
        } else if (std::abs(dx) <= 2 && std::abs(dy) <= 2) {
          cplx acc = 0.0;
          for (int a = 0; a < 12; ++a)
            for (int b = 0; b < 12; ++b)
              acc += gw[a] * gw[b] * kernel((dx + gx[b]) * h, (dy + gx[a]) * h);
          v = acc;  // cell average (weights sum to one)
        } else {
          v = kernel(dx * h, dy * h);
        }
        const int iy = (dy + np_) % np_;
        const int ix = (dx + np_) % np_;
        spectrum_[static_cast<std::size_t>(iy) * np_ + ix] = v;
      }
    fft::forward_2d(spectrum_.data(), np_, np_);
  }

  const GridSpec& grid() const { return grid_; }

  MatrixField apply(const MatrixField& f) const {
    if (!(f.grid() == grid_))
      throw std::invalid_argument("SingularConvolution: field grid mismatch");
    const int n = grid_.n;
    const double w = grid_.h() * grid_.h();  // quadrature cell weight
    MatrixField out(grid_, f.rows(), f.cols());
    std::vector<cplx> plane(static_cast<std::size_t>(np_) * np_);
    for (int e = 0; e < f.block(); ++e) {
      std::fill(plane.begin(), plane.end(), cplx(0.0));
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          plane[static_cast<std::size_t>(iy) * np_ + ix] = f.node(iy, ix)[e];
      fft::forward_2d(plane.data(), np_, np_);
      for (std::size_t i = 0; i < plane.size(); ++i) plane[i] *= spectrum_[i] * w;
      fft::inverse_2d(plane.data(), np_, np_);
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          out.node(iy, ix)[e] = plane[static_cast<std::size_t>(iy) * np_ + ix];
    }
    return out;
  }

 private:
  GridSpec grid_;
  int np_;
  std::vector<cplx> spectrum_;
};

// Solid Cauchy transform (S h)(z) = (1/pi) integral h(z') / (z - z') dA',
// the right inverse of dbar on compactly supported data.
inline SingularConvolution make_cauchy_solid(const GridSpec& g) {
  return SingularConvolution(g, [](double dx, double dy) {
    return 1.0 / (kPi * cplx(dx, dy));
  });
}

inline MatrixField cauchy_solid(const MatrixField& f) {
  return make_cauchy_solid(f.grid()).apply(f);
}

// Pi(t) for |t| != 1: convolution against sign(|t|-1) / (pi (t z - zbar/t)),
// the fundamental solution of zeta(t).grad = t dbar + (1/t) d_z that decays
// at infinity.  Fourier symbol 1 / (i zeta(t).xi).
inline SingularConvolution make_pi_t(const GridSpec& g, cplx t) {
  const double a = std::abs(t);
  if (std::abs(a - 1.0) < 1e-10)
    throw std::invalid_argument("pi_t: |t| = 1 is the boundary regime, use pi_boundary");
  const double sgn = a > 1.0 ? 1.0 : -1.0;
  return SingularConvolution(g, [t, sgn](double dx, double dy) {
    const cplx z(dx, dy);
    return sgn / (kPi * (t * z - std::conj(z) / t));
  });
}

inline MatrixField pi_t(const MatrixField& f, cplx t) {
  return make_pi_t(f.grid(), t).apply(f);
}

//==========================================================================
// Line operators
//==========================================================================

namespace detail {

struct LineWorkspace {
  std::vector<cplx> a, b;
  void ensure(std::size_t n) {
    if (a.size() < n) a.resize(n);
    if (b.size() < n) b.resize(n);
  }
};

}  // namespace detail

// Frequency half-space split of one line: in = n contiguous blocks of blk
// entries; plus/minus receive the Pi^+ / Pi^- parts.  Pi^+ keeps negative
// frequencies, Pi^- positive ones, DC and Nyquist split evenly; the two
// outputs sum to the input exactly.
//
// The split of a mean-carrying window has 1/y tails whose periodic images
// contribute an O(mean * y / L^2) error, L = pad * n * h.  The default pad
// suits compactly supported use; callers feeding mean-carrying profiles and
// needing absolute accuracy (trace recovery) should raise it.
inline void riesz_split_line(const cplx* in, int n, int blk, cplx* plus, cplx* minus,
                             detail::LineWorkspace& ws, int pad = kLinePad) {
  const int N = pad * n;
  ws.ensure(static_cast<std::size_t>(N));
  for (int e = 0; e < blk; ++e) {
    cplx* buf = ws.a.data();
    for (int i = 0; i < N; ++i) buf[i] = 0.0;
    for (int i = 0; i < n; ++i) buf[i] = in[static_cast<std::size_t>(i) * blk + e];
    fft::forward(buf, N);
    buf[0] *= 0.5;
    buf[N / 2] *= 0.5;
    for (int k = 1; k < N / 2; ++k) buf[k] = 0.0;  // drop positive frequencies
    fft::inverse(buf, N);
    for (int i = 0; i < n; ++i) {
      const cplx p = buf[i];
      plus[static_cast<std::size_t>(i) * blk + e] = p;
      minus[static_cast<std::size_t>(i) * blk + e] = in[static_cast<std::size_t>(i) * blk + e] - p;
    }
  }
}

// Antiderivative from the left window edge of a compactly supported line:
// out[i] = integral of the trigonometric interpolant from sample 0 to i.
// The DC ramp is handled analytically; everything else is spectral.
// Writes the running integral and returns the total over the line.
inline void causal_integral_line(const cplx* in, int n, int blk, cplx* out, cplx* total,
                                 double h, detail::LineWorkspace& ws, int pad = kLinePad) {
  const int N = pad * n;
  const double period = N * h;
  ws.ensure(static_cast<std::size_t>(N));
  for (int e = 0; e < blk; ++e) {
    cplx* buf = ws.a.data();
    cplx sum = 0.0;
    for (int i = 0; i < N; ++i) buf[i] = 0.0;
    for (int i = 0; i < n; ++i) {
      buf[i] = in[static_cast<std::size_t>(i) * blk + e];
      sum += buf[i];
    }
    const cplx tot = sum * h;
    const cplx dc = sum / static_cast<double>(N);
    for (int i = 0; i < N; ++i) buf[i] -= dc;
    fft::forward(buf, N);
    buf[0] = 0.0;
    for (int k = 1; k < N; ++k) {
      const double xi = fft::wavenumber(k, N, period);
      buf[k] /= cplx(0.0, xi);
    }
    fft::inverse(buf, N);
    const cplx base = buf[0];
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i) * blk + e] = (buf[i] - base) + dc * h * static_cast<double>(i);
    if (total) total[e] = tot;
  }
}

enum class BoundarySign { plus, minus };

// Pi_{+-}(e^{i phi}) on data already in the rotated ray frame (first index
// y1, second y2): Riesz-split the offset direction, then integrate the ray
// direction causally (Pi^+ part) and anticausally (Pi^- part); the
// plus/minus variants swap the split roles.  This resampling-free core is
// what the boundary fixed-point solvers iterate.
inline MatrixField pi_boundary_frame(const MatrixField& rot, BoundarySign sign,
                                     int pad = kLinePad) {
  const GridSpec& g = rot.grid();
  const int n = g.n;
  const int blk = rot.block();
  MatrixField part_p(g, rot.rows(), rot.cols()), part_m(g, rot.rows(), rot.cols());
  detail::LineWorkspace ws;
  // Offset-direction split along each y1 row (contiguous blocks).
  for (int i1 = 0; i1 < n; ++i1)
    riesz_split_line(rot.node(i1, 0), n, blk, part_p.node(i1, 0), part_m.node(i1, 0), ws, pad);
  if (sign == BoundarySign::minus) std::swap(part_p, part_m);
  // Ray-direction antiderivatives along y1 for each fixed y2: gather the
  // strided column, integrate, combine causal minus anticausal.
  MatrixField out(g, rot.rows(), rot.cols());
  std::vector<cplx> colp(static_cast<std::size_t>(n)), colm(n), intp(n), intm(n);
  std::vector<cplx> totp(1), totm(1);
  for (int i2 = 0; i2 < n; ++i2)
    for (int e = 0; e < blk; ++e) {
      for (int i1 = 0; i1 < n; ++i1) {
        colp[i1] = part_p.node(i1, i2)[e];
        colm[i1] = part_m.node(i1, i2)[e];
      }
      causal_integral_line(colp.data(), n, 1, intp.data(), totp.data(), g.h(), ws, pad);
      causal_integral_line(colm.data(), n, 1, intm.data(), totm.data(), g.h(), ws, pad);
      // anticausal integral = total - causal
      for (int i1 = 0; i1 < n; ++i1)
        out.node(i1, i2)[e] = intp[i1] - (totm[0] - intm[i1]);
    }
  return out;
}

inline MatrixField pi_boundary_ray(const BicubicSampler& h, double phi, BoundarySign sign) {
  return pi_boundary_frame(resample_to_ray_frame(h, phi), sign);
}

// Resample a rotated-frame field back onto the plane grid.  Valid where the
// query point lies inside the rotated square, which covers the inscribed
// disk |x| <= half_extent; outside it the halo taps read zero.
inline MatrixField ray_frame_to_grid(const MatrixField& rot, double phi) {
  const GridSpec& g = rot.grid();
  MatrixField out(g, rot.rows(), rot.cols());
  const BicubicSampler s(rot);
  const RayGeometry geom(phi);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      double y1, y2;
      geom.to_ray(g.coord(ix), g.coord(iy), y1, y2);
      // rotated storage: row coordinate is y1, column coordinate is y2
      s.sample(y2, y1, out.node(iy, ix));
    }
  return out;
}

}  // namespace narf
