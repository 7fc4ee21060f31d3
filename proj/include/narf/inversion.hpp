#pragma once
// Inversion of the attenuated transform.  The data R_A f fixes the boundary
// values u_{+-}(-inf, y2, phi) through the spectral traces; their difference
// rides the homogeneous transport solution back into the plane; the circle
// average of u_+ - u_- isolates the residue at t = infinity, and one dbar
// against c(x, infinity) peels out f.  Everything is linear in the data.
//
// The backprojection covers the inscribed disk |x| <= 2R; at the four grid
// corners outside it the rotated frames run out of data and the zero
// extension of the resample clips the 1/z tail of the contour integral, so
// the reconstruction is only meaningful on the inscribed disk (f itself
// lives in B_R, far inside).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "narf/ray_transport.hpp"
#include "narf/spectral.hpp"

namespace narf {

struct InversionOptions {
  SolverOptions solver{};
  TransportMethod method = TransportMethod::rk4;
  int trace_pad = 16;  // the y2 trace lines carry mean, split with a wide pad
};

struct InversionDiagnostics {
  double min_trace_det = std::numeric_limits<double>::infinity();
  double max_trace_cond = 0.0;      // infinity-norm condition of the -inf traces
  double contour_refinement = -1.0; // relative change of I under angle halving
};

// u_{+-}(-inf, y2, phi) = -c_{+-}(-inf) Pi^{-+} [c_{+-}(-inf)^{-1} (R_A f)],
// the frequency projector acting along y2 separately per angle.  The minus
// traces of both families come in as sinograms over the same angle grid.
inline std::pair<Sinogram, Sinogram> u_traces_from_data(const Sinogram& data,
                                                        const Sinogram& trace_lo_plus,
                                                        const Sinogram& trace_lo_minus,
                                                        int pad = 16,
                                                        InversionDiagnostics* diag = nullptr) {
  const GridSpec& g = data.grid();
  const int n = g.n, m = trace_lo_plus.rows(), p = data.cols(), blk = m * p;
  if (data.rows() != m || trace_lo_minus.rows() != m || trace_lo_plus.cols() != m ||
      trace_lo_minus.cols() != m)
    throw std::invalid_argument("u_traces_from_data: trace/data shape mismatch");
  if (data.n_angles() != trace_lo_plus.n_angles() || data.n_angles() != trace_lo_minus.n_angles())
    throw std::invalid_argument("u_traces_from_data: angle grids disagree");
  Sinogram up(g, data.n_angles(), m, p, "u_plus_minus_infinity");
  Sinogram um(g, data.n_angles(), m, p, "u_minus_minus_infinity");
  double min_det = std::numeric_limits<double>::infinity();
  double max_cond = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(min : min_det) reduction(max : max_cond)
  for (int ia = 0; ia < data.n_angles(); ++ia) {
    std::vector<cplx> line(static_cast<std::size_t>(n) * blk);
    std::vector<cplx> part_p(line.size()), part_m(line.size());
    detail::LineWorkspace ws;
    MatC inv(m, m);
    // one pass per family: sign +1 keeps the Pi^- part, -1 the Pi^+ part
    auto run = [&](const Sinogram& lo, Sinogram& out, bool keep_minus) {
      for (int i2 = 0; i2 < n; ++i2) {
        ConstMapC tr(lo.sample(ia, i2), m, m);
        invert(tr, MapC(inv.data(), m, m));
        min_det = std::min(min_det, std::abs(tr.determinant()));
        max_cond = std::max(max_cond, tr.cwiseAbs().rowwise().sum().maxCoeff() *
                                          inv.cwiseAbs().rowwise().sum().maxCoeff());
        MapC(line.data() + static_cast<std::size_t>(i2) * blk, m, p).noalias() =
            inv * ConstMapC(data.sample(ia, i2), m, p);
      }
      riesz_split_line(line.data(), n, blk, part_p.data(), part_m.data(), ws, pad);
      const cplx* keep = keep_minus ? part_m.data() : part_p.data();
      for (int i2 = 0; i2 < n; ++i2) {
        ConstMapC tr(lo.sample(ia, i2), m, m);
        MapC(out.sample(ia, i2), m, p).noalias() =
            -tr * ConstMapC(keep + static_cast<std::size_t>(i2) * blk, m, p);
      }
    };
    run(trace_lo_plus, up, true);    // Eq for the + family uses Pi^-
    run(trace_lo_minus, um, false);  // the - family uses Pi^+
  }
  if (diag) {
    diag->min_trace_det = std::min(diag->min_trace_det, min_det);
    diag->max_trace_cond = std::max(diag->max_trace_cond, max_cond);
  }
  return {std::move(up), std::move(um)};
}

// Convenience overload on a stored family.
inline std::pair<Sinogram, Sinogram> u_traces_from_data(const Sinogram& data,
                                                        const SpectralFamily& fam,
                                                        int pad = 16) {
  auto lo_p = family_traces(fam, BoundarySign::plus).first;
  auto lo_m = family_traces(fam, BoundarySign::minus).first;
  return u_traces_from_data(data, lo_p, lo_m, pad);
}

inline Sinogram trace_difference(const Sinogram& up, const Sinogram& um) {
  up.check_same_shape(um, "trace_difference");
  Sinogram du = up;
  for (std::size_t i = 0; i < du.size(); ++i) du.data()[i] -= um.data()[i];
  return du;
}

// (u_+ - u_-)(x, e^{i phi}) for one angle: the trace difference rides c0
// along the rays (both solve the same homogeneous transport equation), then
// the frame resamples back to the plane, bicubic in both ray coordinates.
inline MatrixField u_difference_field(const Sinogram& du, const GaugeField& A, int ia,
                                      TransportMethod method = TransportMethod::rk4) {
  const GridSpec& g = A.grid();
  const int m = A.m(), p = du.cols();
  if (du.rows() != m) throw std::invalid_argument("u_difference_field: shape mismatch");
  const double phi = du.angle(ia);
  const MatrixField c0 = transport_plane(A, phi, method);
  MatrixField U(g, m, p);
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 < g.n; ++i2)
      U.mat(i1, i2).noalias() = c0.mat(i1, i2) * ConstMapC(du.sample(ia, i2), m, p);
  return ray_frame_to_grid(U, phi);
}

// I(x) = (1/2 pi i) oint F(x, t) dt on the uniform angle grid: with
// t = e^{i phi} this is the trapezoid sum (1/n) sum_phi F e^{i phi},
// spectrally accurate for smooth periodic integrands.  half_estimate, when
// given, receives the same sum over the even-indexed half grid.
template <class AngleField>
MatrixField contour_integral(const GridSpec& g, int rows, int cols, int n_angles,
                             AngleField&& uf, MatrixField* half_estimate = nullptr) {
  if (n_angles <= 0) throw std::invalid_argument("contour_integral: need angles");
  MatrixField acc(g, rows, cols);
  MatrixField acc_half(g, rows, cols);
  std::exception_ptr err;
#pragma omp parallel
  {
    MatrixField local(g, rows, cols), local_half(g, rows, cols);
#pragma omp for schedule(dynamic) nowait
    for (int ia = 0; ia < n_angles; ++ia) {
      try {
        const double phi = 2.0 * kPi * ia / n_angles;
        const MatrixField u = uf(ia);
        const cplx w = std::exp(cplx(0.0, phi)) / static_cast<double>(n_angles);
        for (std::size_t i = 0; i < local.size(); ++i) local.data()[i] += w * u.data()[i];
        if (ia % 2 == 0)
          for (std::size_t i = 0; i < local.size(); ++i)
            local_half.data()[i] += 2.0 * w * u.data()[i];
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
#pragma omp critical
    {
      for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += local.data()[i];
      for (std::size_t i = 0; i < acc.size(); ++i)
        acc_half.data()[i] += local_half.data()[i];
    }
  }
  if (err) std::rethrow_exception(err);
  if (half_estimate) *half_estimate = std::move(acc_half);
  return acc;
}

// f = c(x,inf) dbar[ c(x,inf)^{-1} I(x) ].  The finite-difference dbar is the
// right tool here: I carries a 1/z tail, which a periodic spectral
// derivative would smear across the grid.
inline MatrixField reconstruct_source(const MatrixField& I_field, const MatrixField& c_inf) {
  const MatrixField ci = field_inverse(c_inf);
  MatrixField G(I_field.grid(), I_field.rows(), I_field.cols());
  detail::field_matmul(ci, I_field, G);
  const MatrixField D = dbar_fd(G);
  MatrixField out(I_field.grid(), I_field.rows(), I_field.cols());
  detail::field_matmul(c_inf, D, out);
  return out;
}

// Minus-infinity traces of both boundary families, solved angle by angle
// without retaining the interior fields (a full family at 256 angles would
// hold gigabytes; the inversion only ever consumes the traces).
inline std::pair<Sinogram, Sinogram> solve_minus_traces(const GaugeField& A, int n_angles,
                                                        const SolverOptions& opt = {}) {
  const GridSpec& g = A.grid();
  const int m = A.m();
  Sinogram lo_p(g, n_angles, m, m, "trace_minus_infinity");
  Sinogram lo_m(g, n_angles, m, m, "trace_minus_infinity");
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (int ia = 0; ia < n_angles; ++ia) {
    try {
      const double phi = lo_p.angle(ia);
      for (BoundarySign s : {BoundarySign::plus, BoundarySign::minus}) {
        auto r = solve_c_boundary(A, phi, s, opt);
        if (!r.report.converged)
          throw std::runtime_error("solve_minus_traces: no convergence at angle " +
                                   std::to_string(phi));
        Sinogram& lo = (s == BoundarySign::plus) ? lo_p : lo_m;
        for (int i2 = 0; i2 < g.n; ++i2)
          MapC(lo.sample(ia, i2), m, m) = ConstMapC(r.c.node(0, i2), m, m);
      }
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return {std::move(lo_p), std::move(lo_m)};
}

// Full pipeline: traces -> boundary data -> transported difference ->
// contour integral -> dbar peel.
inline MatrixField invert_attenuated(const GaugeField& A, const Sinogram& data,
                                     const InversionOptions& opt = {},
                                     InversionDiagnostics* diag = nullptr) {
  const GridSpec& g = A.grid();
  if (!(data.grid() == g) || data.rows() != A.m())
    throw std::invalid_argument("invert_attenuated: data does not match the field");
  auto [lo_p, lo_m] = solve_minus_traces(A, data.n_angles(), opt.solver);
  auto [up, um] = u_traces_from_data(data, lo_p, lo_m, opt.trace_pad, diag);
  const Sinogram du = trace_difference(up, um);
  MatrixField half(g, A.m(), data.cols());
  MatrixField I_field = contour_integral(
      g, A.m(), data.cols(), data.n_angles(),
      [&](int ia) { return u_difference_field(du, A, ia, opt.method); }, &half);
  if (diag) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < I_field.size(); ++i) {
      num += std::norm(I_field.data()[i] - half.data()[i]);
      den += std::norm(I_field.data()[i]);
    }
    diag->contour_refinement = den > 0.0 ? std::sqrt(num / den) : 0.0;
  }
  const auto cinf = solve_c_infinity(A, opt.solver);
  return reconstruct_source(I_field, cinf.c);
}

}  // namespace narf
