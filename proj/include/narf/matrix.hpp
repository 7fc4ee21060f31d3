#pragma once
// Small dense complex-matrix helpers used per grid node (m is 1..4 in practice).

#include <Eigen/Dense>

#include "narf/grid.hpp"

namespace narf {

inline cplx det(ConstMapC a) {
  const int m = static_cast<int>(a.rows());
  if (m == 1) return a(0, 0);
  if (m == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return Eigen::PartialPivLU<MatC>(a).determinant();
}

inline void invert(ConstMapC a, MapC out) {
  const int m = static_cast<int>(a.rows());
  if (m == 1) {
    out(0, 0) = 1.0 / a(0, 0);
    return;
  }
  if (m == 2) {
    const cplx d = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    out(0, 0) = a(1, 1) / d;
    out(0, 1) = -a(0, 1) / d;
    out(1, 0) = -a(1, 0) / d;
    out(1, 1) = a(0, 0) / d;
    return;
  }
  MatC inv = Eigen::PartialPivLU<MatC>(a).inverse();
  out = inv;
}

// Per-node inverse of a square-matrix field.
inline MatrixField field_inverse(const MatrixField& f) {
  if (f.rows() != f.cols()) throw std::invalid_argument("field_inverse: field not square");
  MatrixField out(f.grid(), f.rows(), f.cols());
  for (int iy = 0; iy < f.n(); ++iy)
    for (int ix = 0; ix < f.n(); ++ix) invert(f.mat(iy, ix), out.mat(iy, ix));
  return out;
}

inline double min_abs_det(const MatrixField& f) {
  double m = std::numeric_limits<double>::infinity();
  for (int iy = 0; iy < f.n(); ++iy)
    for (int ix = 0; ix < f.n(); ++ix) m = std::min(m, std::abs(det(f.mat(iy, ix))));
  return m;
}

// exp(A) by scaling-and-squaring over a Taylor series; the arguments here are
// step-sized generators with modest norms, so the series is short and safe.
inline MatC expm(const MatC& a) {
  const int m = static_cast<int>(a.rows());
  int squarings = 0;
  MatC x = a;
  while (x.cwiseAbs().sum() > 0.5 && squarings < 40) {
    x *= 0.5;
    ++squarings;
  }
  MatC result = MatC::Identity(m, m);
  MatC term = MatC::Identity(m, m);
  for (int k = 1; k <= 18; ++k) {
    term = (term * x / static_cast<double>(k)).eval();
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

}  // namespace narf
