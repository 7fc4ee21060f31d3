#pragma once
// Connection triples (a1, a2, a0) of matrix fields on a common grid, the
// directional evaluation A(x, zeta) = coupling (a1 z1 + a2 z2 + a0), and the
// gauge-group action A |-> g A g^{-1} + (dg) g^{-1}.
//
// The coupling scalar lets one code path serve both conventions in use: 1
// for the transport and inversion layers, -i for the scattering layer.

#include <stdexcept>

#include "narf/cauchy_ops.hpp"
#include "narf/grid.hpp"
#include "narf/matrix.hpp"

namespace narf {

inline constexpr double kSupportTol = 1e-12;  // relative compact-support certificate

struct GaugeField {
  MatrixField a1, a2, a0;
  cplx coupling{1.0, 0.0};

  GaugeField(const GridSpec& g, int m)
      : a1(g, m, m), a2(g, m, m), a0(g, m, m) {}
  GaugeField(MatrixField a1_, MatrixField a2_, MatrixField a0_, cplx coupling_ = cplx(1.0))
      : a1(std::move(a1_)), a2(std::move(a2_)), a0(std::move(a0_)), coupling(coupling_) {
    a1.check_same_shape(a2, "GaugeField");
    a1.check_same_shape(a0, "GaugeField");
    if (a1.rows() != a1.cols()) throw std::invalid_argument("GaugeField: components must be square");
  }

  int m() const { return a1.rows(); }
  const GridSpec& grid() const { return a1.grid(); }

  // Largest component magnitude outside |x| >= radius, for support checks.
  double max_abs_outside(double radius) const {
    return std::max({a1.max_abs_outside(radius), a2.max_abs_outside(radius),
                     a0.max_abs_outside(radius)});
  }
  double max_abs() const { return std::max({a1.max_abs(), a2.max_abs(), a0.max_abs()}); }

  bool compactly_supported(double tol = kSupportTol) const {
    const double scale = max_abs();
    return max_abs_outside(grid().R) <= tol * (scale > 0.0 ? scale : 1.0);
  }
};

// Pointwise coupling (a1 z1 + a2 z2 + a0).  The direction must satisfy the
// complexified normalization z1^2 + z2^2 = 1, which every zeta(t) does.
inline MatrixField eval_direction(const GaugeField& A, cplx z1, cplx z2) {
  if (std::abs(z1 * z1 + z2 * z2 - cplx(1.0)) > 1e-8)
    throw std::invalid_argument("eval_direction: direction is not normalized");
  MatrixField out(A.grid(), A.m(), A.m());
  const cplx c = A.coupling;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = c * (z1 * A.a1.data()[i] + z2 * A.a2.data()[i] + A.a0.data()[i]);
  return out;
}

// Gauge action A' = (g a1 g^{-1} + (d1 g) g^{-1}, g a2 g^{-1} + (d2 g) g^{-1},
// g a0 g^{-1}).  Derivatives of g are spectral on g - I, which is compactly
// supported because admissible gauges equal the identity outside B_R.
inline GaugeField apply_gauge(const GaugeField& A, const MatrixField& g) {
  A.a1.check_same_shape(g, "apply_gauge");
  const GridSpec& gs = A.grid();
  const int m = A.m();
  const int n = gs.n;

  MatrixField dev = g;  // g - I
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      for (int r = 0; r < m; ++r) dev.at(iy, ix, r, r) -= 1.0;
  const double scale = std::max(1.0, g.max_abs());
  if (dev.max_abs_outside(gs.R) > kSupportTol * scale)
    throw std::invalid_argument("apply_gauge: g must equal the identity outside the support disk");
  if (min_abs_det(g) < 1e-12)
    throw std::invalid_argument("apply_gauge: g is singular at a grid node");

  MatrixField d1 = detail::spectral_derivative(dev, cplx(1.0), cplx(0.0));
  MatrixField d2 = detail::spectral_derivative(dev, cplx(0.0), cplx(1.0));
  MatrixField ginv = field_inverse(g);

  GaugeField out(gs, m);
  out.coupling = A.coupling;
  MatC tmp(m, m);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const auto gm = g.mat(iy, ix);
      const auto gi = ginv.mat(iy, ix);
      tmp.noalias() = gm * A.a1.mat(iy, ix) * gi;
      tmp.noalias() += d1.mat(iy, ix) * gi;
      out.a1.mat(iy, ix) = tmp;
      tmp.noalias() = gm * A.a2.mat(iy, ix) * gi;
      tmp.noalias() += d2.mat(iy, ix) * gi;
      out.a2.mat(iy, ix) = tmp;
      out.a0.mat(iy, ix).noalias() = gm * A.a0.mat(iy, ix) * gi;
    }
  return out;
}

}  // namespace narf
