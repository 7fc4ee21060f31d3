#pragma once
// Spectral families: solutions of zeta(t).grad c = A(x,zeta(t)) c (coupling
// folded into A's evaluation) normalized so the analytic piece is the
// identity, constructed as Fredholm fixed points c = I + Op[A c] where Op is
// the decaying right inverse of the directional derivative: the solid Cauchy
// transform at t = infinity, Pi(t) off the unit circle, and the boundary
// operators Pi_{+-} on it.  Boundary solutions live on the rotated ray frame
// (first index y1 along theta, second y2 across), their end-of-line traces
// factor the scattering data, and family-level diagnostics plus a directory
// serialization round out the module.

#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "narf/anderson.hpp"
#include "narf/cauchy_ops.hpp"
#include "narf/gauge_field.hpp"
#include "narf/io.hpp"
#include "narf/sinogram.hpp"

namespace narf {

namespace detail {

// Non-convergence is left in the report (the diagnostics need truncated
// families), but a determinant below the floor poisons every downstream
// inverse, so that is a hard error.
inline void require_det_floor(const SolveReport& rep, double floor, const char* who) {
  if (rep.min_abs_det < floor)
    throw std::runtime_error(std::string(who) + ": |det c| " +
                             std::to_string(rep.min_abs_det) + " fell below the floor");
}

// out = a * b per node; shapes (p x q)(q x r).
inline void field_matmul(const MatrixField& a, const MatrixField& b, MatrixField& out) {
  const int n = a.n();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) out.mat(iy, ix).noalias() = a.mat(iy, ix) * b.mat(iy, ix);
}

inline void add_identity(MatrixField& f) {
  const int m = f.rows();
  for (int iy = 0; iy < f.n(); ++iy)
    for (int ix = 0; ix < f.n(); ++ix) {
      auto mm = f.mat(iy, ix);
      for (int d = 0; d < m; ++d) mm(d, d) += 1.0;
    }
}

inline double rel_l2(const MatrixField& num, const MatrixField& den) {
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) a += std::norm(num.data()[i]);
  for (std::size_t i = 0; i < den.size(); ++i) b += std::norm(den.data()[i]);
  return b > 0.0 ? std::sqrt(a / b) : std::sqrt(a);
}

}  // namespace detail

struct SpectralSolveResult {
  MatrixField c;
  SolveReport report;
};

// dbar generator at t = infinity: k(x) = (coupling/2)(a1 + i a2).
inline MatrixField dbar_generator(const GaugeField& A) {
  MatrixField k(A.grid(), A.m(), A.m());
  const cplx half = 0.5 * A.coupling;
  for (std::size_t i = 0; i < k.size(); ++i)
    k.data()[i] = half * (A.a1.data()[i] + cplx(0.0, 1.0) * A.a2.data()[i]);
  return k;
}

// c(x, infinity): dbar c = (coupling/2)(A1 + i A2) c, c -> I at infinity,
// as the fixed point of c = I + S[k c].
inline SpectralSolveResult solve_c_infinity(const GaugeField& A, const SolverOptions& opt = {}) {
  const GridSpec& g = A.grid();
  const int m = A.m();
  const MatrixField k = dbar_generator(A);
  const SingularConvolution cauchy = make_cauchy_solid(g);
  SpectralSolveResult r{MatrixField(g, m, m), {}};
  r.c.set_identity();
  MatrixField q(g, m, m);
  r.report = solve_fixed_point(
      r.c,
      [&](const MatrixField& c, MatrixField& gc) {
        detail::field_matmul(k, c, q);
        gc = cauchy.apply(q);
        detail::add_identity(gc);
      },
      opt);
  detail::require_det_floor(r.report, opt.det_floor, "solve_c_infinity");
  return r;
}

// c(x, t) for |t| != 1, as the fixed point of c = I + Pi(t)[A(.,zeta(t)) c].
// Used for off-circle diagnostics (analyticity in t).
inline SpectralSolveResult solve_c_at(const GaugeField& A, cplx t, const SolverOptions& opt = {}) {
  const GridSpec& g = A.grid();
  const int m = A.m();
  const SpectralParam p(t);
  const MatrixField M = eval_direction(A, p.zeta1(), p.zeta2());
  const SingularConvolution op = make_pi_t(g, t);
  SpectralSolveResult r{MatrixField(g, m, m), {}};
  r.c.set_identity();
  MatrixField q(g, m, m);
  r.report = solve_fixed_point(
      r.c,
      [&](const MatrixField& c, MatrixField& gc) {
        detail::field_matmul(M, c, q);
        gc = op.apply(q);
        detail::add_identity(gc);
      },
      opt);
  detail::require_det_floor(r.report, opt.det_floor, "solve_c_at");
  return r;
}

// c_{+-}(x, e^{i phi}) on the rotated ray frame, as the fixed point of
// c = I + Pi_{+-}(e^{i phi})[A(.,theta(phi)) c].
inline SpectralSolveResult solve_c_boundary(const GaugeField& A, double phi, BoundarySign sign,
                                            const SolverOptions& opt = {}) {
  const GridSpec& g = A.grid();
  const int m = A.m();
  const MatrixField M = eval_direction(A, std::cos(phi), -std::sin(phi));
  const MatrixField rot = resample_to_ray_frame(BicubicSampler(M), phi);
  SpectralSolveResult r{MatrixField(g, m, m), {}};
  r.c.set_identity();
  MatrixField q(g, m, m);
  r.report = solve_fixed_point(
      r.c,
      [&](const MatrixField& c, MatrixField& gc) {
        detail::field_matmul(rot, c, q);
        gc = pi_boundary_frame(q, sign, opt.pad);
        detail::add_identity(gc);
      },
      opt);
  detail::require_det_floor(r.report, opt.det_floor, "solve_c_boundary");
  return r;
}

//==========================================================================
// Families over the angle grid
//==========================================================================

struct SpectralFamily {
  GaugeField A;
  int n_angles = 0;
  MatrixField c_infinity;  // empty unless solved with with_infinity
  SolveReport c_infinity_report;
  std::vector<MatrixField> boundary_plus, boundary_minus;  // ray frame, per angle
  std::vector<SolveReport> reports_plus, reports_minus;

  explicit SpectralFamily(GaugeField a) : A(std::move(a)) {}
  int m() const { return A.m(); }
  const GridSpec& grid() const { return A.grid(); }
  double angle(int ia) const { return 2.0 * kPi * ia / n_angles; }

  const MatrixField& boundary(int ia, BoundarySign s) const {
    return s == BoundarySign::plus ? boundary_plus[ia] : boundary_minus[ia];
  }
  const SolveReport& report(int ia, BoundarySign s) const {
    return s == BoundarySign::plus ? reports_plus[ia] : reports_minus[ia];
  }

  bool all_converged() const {
    bool ok = c_infinity.size() == 0 || c_infinity_report.converged;
    for (const auto& r : reports_plus) ok = ok && r.converged;
    for (const auto& r : reports_minus) ok = ok && r.converged;
    return ok;
  }
};

inline SpectralFamily solve_family(const GaugeField& A, int n_angles,
                                   const SolverOptions& opt = {}, bool with_infinity = true) {
  if (n_angles <= 0) throw std::invalid_argument("solve_family: need at least one angle");
  SpectralFamily fam(A);
  fam.n_angles = n_angles;
  if (with_infinity) {
    auto r = solve_c_infinity(A, opt);
    fam.c_infinity = std::move(r.c);
    fam.c_infinity_report = std::move(r.report);
  }
  fam.boundary_plus.resize(n_angles);
  fam.boundary_minus.resize(n_angles);
  fam.reports_plus.resize(n_angles);
  fam.reports_minus.resize(n_angles);
  std::exception_ptr err;  // exceptions must not escape the parallel region
#pragma omp parallel for schedule(dynamic)
  for (int ia = 0; ia < n_angles; ++ia) {
    try {
      const double phi = fam.angle(ia);
      auto rp = solve_c_boundary(A, phi, BoundarySign::plus, opt);
      fam.boundary_plus[ia] = std::move(rp.c);
      fam.reports_plus[ia] = std::move(rp.report);
      auto rm = solve_c_boundary(A, phi, BoundarySign::minus, opt);
      fam.boundary_minus[ia] = std::move(rm.c);
      fam.reports_minus[ia] = std::move(rm.report);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return fam;
}

//==========================================================================
// Traces and factorization
//==========================================================================

// End-of-line values of a ray-frame solution.  The field is constant in y1
// outside the support disk, so the frame edges y1 = -+2R are the limits at
// y1 = -+infinity exactly (up to line-operator padding error).
inline void read_traces(const MatrixField& c_frame, int i2, MapC minus_inf, MapC plus_inf) {
  minus_inf = ConstMapC(c_frame.node(0, i2), c_frame.rows(), c_frame.cols());
  plus_inf = ConstMapC(c_frame.node(c_frame.n() - 1, i2), c_frame.rows(), c_frame.cols());
}

inline double trace_quadrature_residual(const SpectralFamily& fam, BoundarySign sign, int pad);

// Family traces as (angle, offset)-indexed sinograms.  A positive check_tol
// cross-validates the edge read-off against the quadrature form and throws
// when they disagree beyond it (a solver failure, not a data error).
inline std::pair<Sinogram, Sinogram> family_traces(const SpectralFamily& fam, BoundarySign sign,
                                                   double check_tol = 0.0) {
  if (check_tol > 0.0) {
    const double resid = trace_quadrature_residual(fam, sign, kLinePad);
    if (resid > check_tol)
      throw std::runtime_error("family_traces: edge and quadrature traces disagree by " +
                               std::to_string(resid));
  }
  const int m = fam.m();
  Sinogram lo(fam.grid(), fam.n_angles, m, m, "trace_minus_infinity");
  Sinogram hi(fam.grid(), fam.n_angles, m, m, "trace_plus_infinity");
  for (int ia = 0; ia < fam.n_angles; ++ia) {
    const MatrixField& c = fam.boundary(ia, sign);
    for (int i2 = 0; i2 < fam.grid().n; ++i2)
      read_traces(c, i2, lo.mat(ia, i2), hi.mat(ia, i2));
  }
  return {std::move(lo), std::move(hi)};
}

// Scattering data through the factorization S(A) = c(+inf) c(-inf)^{-1}.
inline Sinogram scattering_from_traces(const SpectralFamily& fam, BoundarySign sign) {
  const int m = fam.m();
  Sinogram s(fam.grid(), fam.n_angles, m, m, "scattering_data");
  MatC inv(m, m);
  for (int ia = 0; ia < fam.n_angles; ++ia) {
    const MatrixField& c = fam.boundary(ia, sign);
    for (int i2 = 0; i2 < fam.grid().n; ++i2) {
      ConstMapC lo(c.node(0, i2), m, m);
      ConstMapC hi(c.node(c.n() - 1, i2), m, m);
      invert(lo, MapC(inv.data(), m, m));
      s.mat(ia, i2).noalias() = hi * inv;
    }
  }
  return s;
}

// Quadrature cross-check of the edge read-off: with the identity
// normalization the traces satisfy
//   c(+inf) = I + int Pi^{s} (A c) dy1,   c(-inf) = I - int Pi^{-s} (A c) dy1,
// where s is the family sign.  Returns the max abs deviation over both ends,
// all offsets and angles.  The integrand is compactly supported in y1, so a
// plain node sum converges spectrally.
inline double trace_quadrature_residual(const SpectralFamily& fam, BoundarySign sign,
                                        int pad = kLinePad) {
  const GridSpec& g = fam.grid();
  const int n = g.n, m = fam.m(), blk = m * m;
  double worst = 0.0;
  MatrixField q(g, m, m), part_p(g, m, m), part_m(g, m, m);
  detail::LineWorkspace ws;
  std::vector<cplx> acc_hi(static_cast<std::size_t>(n) * blk);
  std::vector<cplx> acc_lo(static_cast<std::size_t>(n) * blk);
  for (int ia = 0; ia < fam.n_angles; ++ia) {
    const double phi = fam.angle(ia);
    const MatrixField M = eval_direction(fam.A, std::cos(phi), -std::sin(phi));
    const MatrixField rot = resample_to_ray_frame(BicubicSampler(M), phi);
    const MatrixField& c = fam.boundary(ia, sign);
    detail::field_matmul(rot, c, q);
    std::fill(acc_hi.begin(), acc_hi.end(), cplx(0.0));
    std::fill(acc_lo.begin(), acc_lo.end(), cplx(0.0));
    for (int i1 = 0; i1 < n; ++i1) {
      riesz_split_line(q.node(i1, 0), n, blk, part_p.node(i1, 0), part_m.node(i1, 0), ws, pad);
      const cplx* rp = part_p.node(i1, 0);
      const cplx* rm = part_m.node(i1, 0);
      if (sign == BoundarySign::minus) std::swap(rp, rm);
      for (std::size_t j = 0; j < acc_hi.size(); ++j) {
        acc_hi[j] += rp[j];
        acc_lo[j] += rm[j];
      }
    }
    const double h = g.h();
    for (int i2 = 0; i2 < n; ++i2) {
      ConstMapC lo(c.node(0, i2), m, m);
      ConstMapC hi(c.node(n - 1, i2), m, m);
      for (int r = 0; r < m; ++r)
        for (int col = 0; col < m; ++col) {
          const cplx eye = (r == col) ? cplx(1.0) : cplx(0.0);
          const cplx want_hi = eye + h * acc_hi[static_cast<std::size_t>(i2) * blk + r * m + col];
          const cplx want_lo = eye - h * acc_lo[static_cast<std::size_t>(i2) * blk + r * m + col];
          worst = std::max(worst, std::abs(hi(r, col) - want_hi));
          worst = std::max(worst, std::abs(lo(r, col) - want_lo));
        }
    }
  }
  return worst;
}

//==========================================================================
// Diagnostics
//==========================================================================

struct LemmaReport {
  double min_abs_det = std::numeric_limits<double>::infinity();
  double max_transport_residual = 0.0;  // relative L2 of the defining PDE
  double margin_deviation = 0.0;        // max |c_infinity - I| on the outer ring
  double max_solver_residual = 0.0;
  double analyticity_residual = -1.0;  // set only when requested
};

// Transport residual of one ray-frame member: |d/dy1 c - A c| / |A c|.
inline double boundary_transport_residual(const GaugeField& A, double phi,
                                          const MatrixField& c_frame) {
  const MatrixField M = eval_direction(A, std::cos(phi), -std::sin(phi));
  const MatrixField rot = resample_to_ray_frame(BicubicSampler(M), phi);
  MatrixField q(c_frame.grid(), c_frame.rows(), c_frame.cols());
  detail::field_matmul(rot, c_frame, q);
  MatrixField d1(c_frame.grid(), c_frame.rows(), c_frame.cols());
  detail::fd_derivative_axis(c_frame, 1, d1);  // axis 1: first node index, y1
  for (std::size_t i = 0; i < d1.size(); ++i) d1.data()[i] -= q.data()[i];
  return detail::rel_l2(d1, q);
}

// dbar residual of the t = infinity member: |dbar c - k c| / |k c|.
inline double infinity_transport_residual(const GaugeField& A, const MatrixField& c) {
  const MatrixField k = dbar_generator(A);
  MatrixField q(c.grid(), c.rows(), c.cols());
  detail::field_matmul(k, c, q);
  MatrixField db = dbar_fd(c);
  for (std::size_t i = 0; i < db.size(); ++i) db.data()[i] -= q.data()[i];
  return detail::rel_l2(db, q);
}

// Cauchy-Riemann residual in t at an off-circle sample: central differences
// of four extra solves around t0; analytic dependence drives the dbar_t
// derivative to zero relative to the d_t one.
inline double analyticity_residual_at(const GaugeField& A, cplx t0, double delta,
                                      const SolverOptions& opt = {}) {
  const MatrixField cr = solve_c_at(A, t0 + delta, opt).c;
  const MatrixField cl = solve_c_at(A, t0 - delta, opt).c;
  const MatrixField cu = solve_c_at(A, t0 + cplx(0.0, delta), opt).c;
  const MatrixField cd = solve_c_at(A, t0 - cplx(0.0, delta), opt).c;
  double num = 0.0, den = 0.0;
  const cplx I(0.0, 1.0);
  for (std::size_t i = 0; i < cr.size(); ++i) {
    const cplx du = (cr.data()[i] - cl.data()[i]) / (2.0 * delta);
    const cplx dv = (cu.data()[i] - cd.data()[i]) / (2.0 * delta);
    num += std::norm(0.5 * (du + I * dv));  // dbar_t
    den += std::norm(0.5 * (du - I * dv));  // d_t
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline LemmaReport verify_lemma_properties(const SpectralFamily& fam,
                                           bool with_analyticity = false,
                                           const SolverOptions& opt = {}) {
  LemmaReport rep;
  auto fold_report = [&](const SolveReport& r) {
    rep.min_abs_det = std::min(rep.min_abs_det, r.min_abs_det);
    rep.max_solver_residual = std::max(rep.max_solver_residual, r.final_residual());
  };
  if (fam.c_infinity.size() > 0) {
    fold_report(fam.c_infinity_report);
    rep.max_transport_residual = infinity_transport_residual(fam.A, fam.c_infinity);
    const int n = fam.grid().n, m = fam.m();
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (iy != 0 && iy != n - 1 && ix != 0 && ix != n - 1) continue;
        ConstMapC v(fam.c_infinity.node(iy, ix), m, m);
        rep.margin_deviation =
            std::max(rep.margin_deviation, (v - MatC::Identity(m, m)).cwiseAbs().maxCoeff());
      }
  }
  for (int ia = 0; ia < fam.n_angles; ++ia) {
    fold_report(fam.reports_plus[ia]);
    fold_report(fam.reports_minus[ia]);
    rep.max_transport_residual = std::max(
        rep.max_transport_residual,
        boundary_transport_residual(fam.A, fam.angle(ia), fam.boundary_plus[ia]));
    rep.max_transport_residual = std::max(
        rep.max_transport_residual,
        boundary_transport_residual(fam.A, fam.angle(ia), fam.boundary_minus[ia]));
  }
  if (with_analyticity)
    rep.analyticity_residual = analyticity_residual_at(fam.A, cplx(1.55, 0.45), 0.02, opt);
  return rep;
}

//==========================================================================
// Serialization: directory of narf files plus a json manifest
//==========================================================================

namespace detail {

inline nlohmann::json report_to_json(const SolveReport& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"final_residual", r.final_residual()},
          {"min_abs_det", r.min_abs_det}};
}

inline SolveReport report_from_json(const nlohmann::json& j) {
  SolveReport r;
  r.converged = j.at("converged").get<bool>();
  r.iterations = j.at("iterations").get<int>();
  r.residuals = {j.at("final_residual").get<double>()};
  r.min_abs_det = j.at("min_abs_det").get<double>();
  return r;
}

inline std::string member_name(const char* stem, int ia) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03d.narf", stem, ia);
  return buf;
}

}  // namespace detail

inline void write_family(const std::string& dir, const SpectralFamily& fam) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  write_field((base / "a1.narf").string(), fam.A.a1, "gauge_a1");
  write_field((base / "a2.narf").string(), fam.A.a2, "gauge_a2");
  write_field((base / "a0.narf").string(), fam.A.a0, "gauge_a0");
  nlohmann::json man{{"n_angles", fam.n_angles},
                     {"m", fam.m()},
                     {"coupling", {fam.A.coupling.real(), fam.A.coupling.imag()}},
                     {"has_infinity", fam.c_infinity.size() > 0}};
  if (fam.c_infinity.size() > 0) {
    write_field((base / "c_infinity.narf").string(), fam.c_infinity, "spectral_infinity");
    man["c_infinity_report"] = detail::report_to_json(fam.c_infinity_report);
  }
  nlohmann::json members = nlohmann::json::array();
  for (int ia = 0; ia < fam.n_angles; ++ia) {
    const std::string fp = detail::member_name("plus", ia);
    const std::string fm = detail::member_name("minus", ia);
    write_field((base / fp).string(), fam.boundary_plus[ia], "spectral_boundary");
    write_field((base / fm).string(), fam.boundary_minus[ia], "spectral_boundary");
    members.push_back({{"angle_index", ia},
                       {"plus", fp},
                       {"minus", fm},
                       {"plus_report", detail::report_to_json(fam.reports_plus[ia])},
                       {"minus_report", detail::report_to_json(fam.reports_minus[ia])}});
  }
  man["members"] = std::move(members);
  write_json_file((base / "manifest.json").string(), man);
}

inline SpectralFamily read_family(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  const nlohmann::json man = read_json_file((base / "manifest.json").string());
  GaugeField A(read_field((base / "a1.narf").string()), read_field((base / "a2.narf").string()),
               read_field((base / "a0.narf").string()));
  A.coupling = cplx(man.at("coupling")[0].get<double>(), man.at("coupling")[1].get<double>());
  SpectralFamily fam(std::move(A));
  fam.n_angles = man.at("n_angles").get<int>();
  if (man.at("has_infinity").get<bool>()) {
    fam.c_infinity = read_field((base / "c_infinity.narf").string());
    fam.c_infinity_report = detail::report_from_json(man.at("c_infinity_report"));
  }
  for (const auto& mem : man.at("members")) {
    fam.boundary_plus.push_back(read_field((base / mem.at("plus").get<std::string>()).string()));
    fam.boundary_minus.push_back(read_field((base / mem.at("minus").get<std::string>()).string()));
    fam.reports_plus.push_back(detail::report_from_json(mem.at("plus_report")));
    fam.reports_minus.push_back(detail::report_from_json(mem.at("minus_report")));
  }
  if (static_cast<int>(fam.boundary_plus.size()) != fam.n_angles)
    throw std::runtime_error("spectral family manifest inconsistent: " + dir);
  return fam;
}

}  // namespace narf
