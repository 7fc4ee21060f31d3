#include <gtest/gtest.h>

#include <cmath>

#include "narf/inversion.hpp"
#include "narf/phantom.hpp"
#include "narf/ray_transport.hpp"

using namespace narf;

namespace {

// relative L2 error against a reference, restricted to |x| <= rad_mult * R.
// The frame resample is only defined on the inscribed disk |x| <= 2R and its
// outermost ring carries the interpolation halo of the frame edge, so
// quality metrics stay inside 1.5R unless the rim itself is under test.
double rel_inside(const MatrixField& a, const MatrixField& b, double rad_mult) {
  const GridSpec& g = a.grid();
  const double r2 = (rad_mult * g.R) * (rad_mult * g.R);
  double num = 0.0, den = 0.0;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double x1 = g.coord(ix), x2 = g.coord(iy);
      if (x1 * x1 + x2 * x2 > r2) continue;
      for (int k = 0; k < a.block(); ++k) {
        num += std::norm(a.node(iy, ix)[k] - b.node(iy, ix)[k]);
        den += std::norm(b.node(iy, ix)[k]);
      }
    }
  return std::sqrt(num / den);
}

double max_on_annulus(const MatrixField& f, double lo_mult, double hi_mult) {
  const GridSpec& g = f.grid();
  const double lo = lo_mult * g.R, hi = hi_mult * g.R;
  double m = 0.0;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double x1 = g.coord(ix), x2 = g.coord(iy);
      const double r = std::sqrt(x1 * x1 + x2 * x2);
      if (r < lo || r > hi) continue;
      for (int k = 0; k < f.block(); ++k) m = std::max(m, std::abs(f.node(iy, ix)[k]));
    }
  return m;
}

// contour integral of the data-driven pipeline up to (but excluding) the
// final dbar peel, for tests that target I(x) itself
MatrixField pipeline_I(const GaugeField& A, const MatrixField& f, int na) {
  Sinogram data = attenuated_radon(A, f, na);
  auto [lo_p, lo_m] = solve_minus_traces(A, na);
  auto [up, um] = u_traces_from_data(data, lo_p, lo_m, 16);
  const Sinogram du = trace_difference(up, um);
  return contour_integral(A.grid(), A.m(), f.cols(), na,
                          [&](int ia) { return u_difference_field(du, A, ia); });
}

Sinogram identity_traces(const GridSpec& g, int na, int m) {
  Sinogram s(g, na, m, m, "trace_minus_infinity");
  for (int ia = 0; ia < na; ++ia)
    for (int io = 0; io < g.n; ++io) s.mat(ia, io).setIdentity();
  return s;
}

}  // namespace

//============================================================
// boundary data from traces
//============================================================

TEST(UTraces, ZeroDataGivesZeroBoundaryValues) {
  const GridSpec g = default_grid(32, 1.0);
  const int na = 6, m = 2;
  Sinogram data(g, na, m, m, "attenuated");
  Sinogram tr = identity_traces(g, na, m);
  auto [up, um] = u_traces_from_data(data, tr, tr, 16);
  EXPECT_EQ(up.max_abs(), 0.0);
  EXPECT_EQ(um.max_abs(), 0.0);
}

// with identity traces the two boundary values are the complementary
// frequency halves of the data, so their sum returns the (negated) data
TEST(UTraces, IdentityTracesSplitDataExactly) {
  const GridSpec g = default_grid(64, 1.0);
  GaugeField A0(g, 1);
  const MatrixField f = make_source(g, 1, 1, 7);
  const int na = 16;
  const Sinogram data = attenuated_radon(A0, f, na);
  auto [lo_p, lo_m] = solve_minus_traces(A0, na);
  auto [up, um] = u_traces_from_data(data, lo_p, lo_m, 16);
  double worst = 0.0;
  for (std::size_t i = 0; i < up.size(); ++i)
    worst = std::max(worst, std::abs(up.data()[i] + um.data()[i] + data.data()[i]));
  EXPECT_LT(worst, 1e-14);  // measured 2.8e-17
}

TEST(UTraces, FamilyOverloadMatchesTraceOverload) {
  const GridSpec g = default_grid(32, 1.0);
  const GaugeField A = make_phantom(PhantomKind::gaussian_bump, g, 2, 5, 0.5);
  const MatrixField f = make_source(g, 2, 2, 9);
  const Sinogram data = attenuated_radon(A, f, 4);
  const SpectralFamily fam = solve_family(A, 4, {}, false);
  auto [u1p, u1m] = u_traces_from_data(data, fam);
  auto [lo_p, lo_m] = solve_minus_traces(A, 4);
  auto [u2p, u2m] = u_traces_from_data(data, lo_p, lo_m, 16);
  EXPECT_EQ(max_abs_diff(u1p, u2p), 0.0);
  EXPECT_EQ(max_abs_diff(u1m, u2m), 0.0);
}

TEST(UTraces, RejectsMismatchedShapes) {
  const GridSpec g = default_grid(32, 1.0);
  Sinogram data(g, 4, 2, 2, "attenuated");
  Sinogram tr3 = identity_traces(g, 4, 3);
  Sinogram tr_angles = identity_traces(g, 8, 2);
  Sinogram tr = identity_traces(g, 4, 2);
  EXPECT_THROW(u_traces_from_data(data, tr3, tr3, 16), std::invalid_argument);
  EXPECT_THROW(u_traces_from_data(data, tr_angles, tr_angles, 16), std::invalid_argument);
  EXPECT_NO_THROW(u_traces_from_data(data, tr, tr, 16));
}

//============================================================
// contour integral over the unit circle
//============================================================

// with F(x,t) = t^{-1} g(x) the residue integral returns g on any uniform
// angle grid; t^{+1} and t^0 modes integrate to zero
TEST(Contour, SingleModesAreExact) {
  const GridSpec g = default_grid(32, 1.0);
  const MatrixField G = make_source(g, 2, 2, 3);
  const int na = 12;
  auto mode = [&](int k) {
    return [&, k](int ia) {
      MatrixField u = G;
      const cplx w = std::exp(cplx(0.0, -k * 2.0 * kPi * ia / na));
      for (std::size_t i = 0; i < u.size(); ++i) u.data()[i] *= w;
      return u;
    };
  };
  MatrixField half(g, 2, 2);
  const MatrixField I1 = contour_integral(g, 2, 2, na, mode(1), &half);
  double worst = 0.0, worst_half = 0.0;
  for (std::size_t i = 0; i < I1.size(); ++i) {
    worst = std::max(worst, std::abs(I1.data()[i] - G.data()[i]));
    worst_half = std::max(worst_half, std::abs(half.data()[i] - G.data()[i]));
  }
  EXPECT_LT(worst, 1e-14);
  EXPECT_LT(worst_half, 1e-14);
  EXPECT_LT(contour_integral(g, 2, 2, na, mode(0)).max_abs(), 1e-14);
  EXPECT_LT(contour_integral(g, 2, 2, na, mode(-1)).max_abs(), 1e-14);
}

TEST(Contour, AngleDoublingIsConverged) {
  const GridSpec g = default_grid(64, 1.0);
  const GaugeField A = make_phantom(PhantomKind::gaussian_bump, g, 1, 3, 0.8);
  const MatrixField f = make_source(g, 1, 1, 7);
  const MatrixField I2 = pipeline_I(A, f, 128);
  const MatrixField I3 = pipeline_I(A, f, 256);
  EXPECT_LT(rel_inside(I2, I3, 1.0), 1e-6);  // measured 2.5e-7
}

// decaying solution of dbar I = f is the solid Cauchy transform, which gives
// an independent check of the contour stage in the unattenuated case
TEST(Contour, MatchesSolidCauchyWithoutAttenuation) {
  double errs[2];
  int k = 0;
  for (int n : {64, 128}) {
    const GridSpec g = default_grid(n, 1.0);
    GaugeField A0(g, 1);
    const MatrixField f = make_source(g, 1, 1, 7);
    const MatrixField S = cauchy_solid(f);
    errs[k++] = rel_inside(pipeline_I(A0, f, n), S, 1.0);
  }
  EXPECT_LT(errs[0], 1e-2);    // measured 5.0e-3
  EXPECT_LT(errs[1], 2.5e-3);  // measured 1.2e-3
  EXPECT_LT(errs[1], 0.5 * errs[0]);
}

//============================================================
// full inversion
//============================================================

TEST(Inversion, ClassicalRoundTripRefines) {
  double errs[2];
  int k = 0;
  for (int n : {64, 128}) {
    const GridSpec g = default_grid(n, 1.0);
    GaugeField A0(g, 1);
    const MatrixField f = make_source(g, 1, 1, 7);
    const Sinogram data = attenuated_radon(A0, f, n);
    InversionDiagnostics diag;
    const MatrixField rec = invert_attenuated(A0, data, {}, &diag);
    errs[k++] = rel_inside(rec, f, 1.5);
    // traces are exactly the identity here
    EXPECT_NEAR(diag.min_trace_det, 1.0, 1e-9);
    EXPECT_NEAR(diag.max_trace_cond, 1.0, 1e-9);
    EXPECT_GE(diag.contour_refinement, 0.0);
  }
  EXPECT_LT(errs[0], 2e-3);  // measured 9.7e-4
  EXPECT_LT(errs[1], 6e-4);  // measured 2.5e-4
  EXPECT_LT(errs[1], 0.5 * errs[0]);
}

TEST(Inversion, AbelianAttenuatedRoundTrip) {
  const GridSpec g = default_grid(64, 1.0);
  const GaugeField A = make_phantom(PhantomKind::gaussian_bump, g, 1, 3, 0.8);
  const MatrixField f = make_source(g, 1, 1, 7);
  const Sinogram data = attenuated_radon(A, f, 128);
  const MatrixField rec = invert_attenuated(A, data);
  EXPECT_LT(rel_inside(rec, f, 1.5), 3e-3);  // measured 1.0e-3
}

TEST(Inversion, NonabelianRoundTripRefines) {
  double errs[3];
  int k = 0;
  for (int n : {32, 64, 128}) {
    const GridSpec g = default_grid(n, 1.0);
    const GaugeField A = make_phantom(PhantomKind::gaussian_bump, g, 2, 5, 0.5);
    const MatrixField f = make_source(g, 2, 2, 9);
    const int na = n >= 128 ? 256 : 2 * n;
    const Sinogram data = attenuated_radon(A, f, na);
    const MatrixField rec = invert_attenuated(A, data);
    errs[k++] = rel_inside(rec, f, 1.5);
  }
  EXPECT_LT(errs[0], 4e-2);  // measured 1.9e-2
  EXPECT_LT(errs[1], 3e-3);  // measured 1.3e-3
  EXPECT_LT(errs[2], 6e-4);  // measured 2.6e-4
  EXPECT_LT(errs[1], errs[0]);
  EXPECT_LT(errs[2], errs[1]);
}

TEST(Inversion, LinearInTheData) {
  const GridSpec g = default_grid(64, 1.0);
  const GaugeField A = make_phantom(PhantomKind::gaussian_bump, g, 2, 5, 0.5);
  const MatrixField f1 = make_source(g, 2, 2, 9), f2 = make_source(g, 2, 2, 21);
  const Sinogram d1 = attenuated_radon(A, f1, 64), d2 = attenuated_radon(A, f2, 64);
  Sinogram d3 = d1;
  const cplx al(0.7, 0.2), be(-1.1, 0.4);
  for (std::size_t i = 0; i < d3.size(); ++i)
    d3.data()[i] = al * d1.data()[i] + be * d2.data()[i];
  const MatrixField r1 = invert_attenuated(A, d1);
  const MatrixField r2 = invert_attenuated(A, d2);
  const MatrixField r3 = invert_attenuated(A, d3);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r3.size(); ++i) {
    num += std::norm(r3.data()[i] - (al * r1.data()[i] + be * r2.data()[i]));
    den += std::norm(r3.data()[i]);
  }
  EXPECT_LT(std::sqrt(num / den), 1e-12);  // measured 3.4e-15
}

// conjugating field, source, and data by a constant rotation conjugates the
// reconstruction; every stage commutes with it
TEST(Inversion, ConstantConjugationCovariance) {
  const GridSpec g = default_grid(32, 1.0);
  const GaugeField A = make_phantom(PhantomKind::gaussian_bump, g, 2, 5, 0.5);
  const MatrixField f = make_source(g, 2, 2, 9);
  const double th = 0.7;
  MatC gm(2, 2);
  gm << cplx(std::cos(th)), cplx(-std::sin(th)), cplx(std::sin(th)), cplx(std::cos(th));
  const MatC gi = gm.inverse();
  GaugeField Ac(g, 2);
  Ac.coupling = A.coupling;
  MatrixField fc(g, 2, 2);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      Ac.a1.mat(iy, ix) = gm * A.a1.mat(iy, ix) * gi;
      Ac.a2.mat(iy, ix) = gm * A.a2.mat(iy, ix) * gi;
      Ac.a0.mat(iy, ix) = gm * A.a0.mat(iy, ix) * gi;
      fc.mat(iy, ix) = gm * f.mat(iy, ix) * gi;
    }
  const MatrixField r1 = invert_attenuated(A, attenuated_radon(A, f, 32));
  const MatrixField r2 = invert_attenuated(Ac, attenuated_radon(Ac, fc, 32));
  MatrixField r1c(g, 2, 2);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) r1c.mat(iy, ix) = gm * r1.mat(iy, ix) * gi;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r2.size(); ++i) {
    num += std::norm(r2.data()[i] - r1c.data()[i]);
    den += std::norm(r2.data()[i]);
  }
  EXPECT_LT(std::sqrt(num / den), 1e-10);  // measured 1.1e-13
}

// the reconstruction must stay quiet between the support disk and the rim
// of the covered region; the rim ring itself and the four corners beyond
// |x| = 2R carry resample halo and are excluded (and merely bounded)
TEST(Inversion, PreservesSupport) {
  double lvls[2];
  int k = 0;
  for (int n : {64, 128}) {
    const GridSpec g = default_grid(n, 1.0);
    GaugeField A0(g, 1);
    const MatrixField f = make_source(g, 1, 1, 7);
    const Sinogram data = attenuated_radon(A0, f, n);
    const MatrixField rec = invert_attenuated(A0, data);
    lvls[k++] = max_on_annulus(rec, 1.2, 1.9);
    EXPECT_LT(rec.max_abs(), 1.0);  // corner halo stays bounded
  }
  EXPECT_LT(lvls[0], 1e-2);  // measured 2.0e-3
  EXPECT_LT(lvls[1], 1e-3);  // measured 2.5e-5
  EXPECT_LT(lvls[1], lvls[0]);
}

TEST(Inversion, RejectsMismatchedData) {
  const GridSpec g = default_grid(32, 1.0);
  const GaugeField A = make_phantom(PhantomKind::gaussian_bump, g, 2, 5, 0.5);
  Sinogram wrong_rows(g, 4, 3, 3, "attenuated");
  EXPECT_THROW(invert_attenuated(A, wrong_rows), std::invalid_argument);
  const GridSpec g2 = default_grid(64, 1.0);
  Sinogram wrong_grid(g2, 4, 2, 2, "attenuated");
  EXPECT_THROW(invert_attenuated(A, wrong_grid), std::invalid_argument);
}
