#pragma once
// Anderson-accelerated Picard iteration for linear fixed points c = b + K c.
// The accelerator keeps a short window of iterate and residual increments and
// extrapolates through the least-squares combination that minimizes the
// residual; depth 3 is enough for the contractive integral equations here
// while keeping the QR solve negligible next to one operator application.

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "narf/cauchy_ops.hpp"
#include "narf/matrix.hpp"

namespace narf {

struct SolverOptions {
  double tol = 1e-8;       // relative fixed-point residual
  int max_iters = 200;
  int anderson_depth = 3;  // 0 disables mixing (plain Picard)
  double det_floor = 1e-6;
  int pad = kLinePad;      // line-operator padding for boundary solves
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> residuals;  // relative residual per iteration
  double min_abs_det = 0.0;

  double final_residual() const { return residuals.empty() ? 0.0 : residuals.back(); }
};

class AndersonAccelerator {
 public:
  AndersonAccelerator(std::size_t dim, int depth) : dim_(dim), depth_(depth) {}

  void reset() {
    have_prev_ = false;
    dx_.clear();
    df_.clear();
  }

  // Next iterate from the current one and its map image, written over x.
  void next(Eigen::VectorXcd& x, const Eigen::VectorXcd& gx) {
    Eigen::VectorXcd f = gx - x;
    if (have_prev_ && depth_ > 0) {
      dx_.push_back(x - xp_);
      df_.push_back(f - fp_);
      if (static_cast<int>(dx_.size()) > depth_) {
        dx_.erase(dx_.begin());
        df_.erase(df_.begin());
      }
    }
    xp_ = x;
    fp_ = f;
    have_prev_ = true;
    if (df_.empty()) {
      x = gx;
      return;
    }
    const int k = static_cast<int>(df_.size());
    Eigen::MatrixXcd F(dim_, k);
    for (int j = 0; j < k; ++j) F.col(j) = df_[j];
    Eigen::VectorXcd gamma = F.colPivHouseholderQr().solve(f);
    if (!gamma.allFinite()) {
      x = gx;  // degenerate window, fall back to Picard
      return;
    }
    x += f;
    for (int j = 0; j < k; ++j) x -= gamma(j) * (dx_[j] + df_[j]);
  }

 private:
  std::size_t dim_;
  int depth_;
  bool have_prev_ = false;
  Eigen::VectorXcd xp_, fp_;
  std::vector<Eigen::VectorXcd> dx_, df_;
};

// Drives c to the fixed point of gmap, where gmap(c, out) evaluates the full
// map image (constant term included).  The residual is the relative L2
// distance between c and its image; on convergence c holds the image (one
// extra contraction for free).  min_abs_det is filled for square fields.
template <class GMap>
SolveReport solve_fixed_point(MatrixField& c, GMap&& gmap, const SolverOptions& opt) {
  SolveReport rep;
  MatrixField gc(c.grid(), c.rows(), c.cols());
  AndersonAccelerator mixer(c.size(), opt.anderson_depth);
  Eigen::Map<Eigen::VectorXcd> x(c.data(), static_cast<Eigen::Index>(c.size()));
  Eigen::VectorXcd xv(x.size());
  for (int it = 0; it < opt.max_iters; ++it) {
    gmap(static_cast<const MatrixField&>(c), gc);
    // gmap may replace gc's storage wholesale, so map its buffer afresh
    Eigen::Map<const Eigen::VectorXcd> gx(gc.data(), static_cast<Eigen::Index>(gc.size()));
    const double num = (gx - x).norm();
    const double den = std::max(gx.norm(), 1e-300);
    const double res = num / den;
    rep.residuals.push_back(res);
    rep.iterations = it + 1;
    if (res <= opt.tol) {
      x = gx;
      rep.converged = true;
      break;
    }
    xv = x;
    mixer.next(xv, gx);
    x = xv;
  }
  if (c.rows() == c.cols()) rep.min_abs_det = min_abs_det(c);
  return rep;
}

}  // namespace narf
