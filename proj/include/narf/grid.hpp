#pragma once
// Square grids and matrix-valued fields on [-half_extent, half_extent]^2.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace narf {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Row-major complex matrices; per-node blocks of a MatrixField alias directly.
using MatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<MatC>;
using ConstMapC = Eigen::Map<const MatC>;

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Node-centered grid: n x n points, both endpoints included, spacing
// h = 2*half_extent/(n-1).  Fields of interest are supported in the closed
// disk |x| <= R with R strictly inside the square.
struct GridSpec {
  int n = 0;
  double half_extent = 0.0;
  double R = 0.0;

  double h() const { return 2.0 * half_extent / (n - 1); }
  double coord(int i) const { return -half_extent + i * h(); }

  void validate() const {
    if (!is_pow2(n) || n < 16)
      throw std::invalid_argument("GridSpec: n must be a power of two, n >= 16");
    if (!(half_extent > 0.0))
      throw std::invalid_argument("GridSpec: half_extent must be positive");
    if (!(R > 0.0) || !(R < half_extent))
      throw std::invalid_argument("GridSpec: need 0 < R < half_extent");
  }

  bool operator==(const GridSpec& o) const {
    return n == o.n && half_extent == o.half_extent && R == o.R;
  }
};

// Default geometry: the square circumscribes the doubled support disk, which
// leaves room for every rotated ray frame used downstream.
inline GridSpec default_grid(int n, double R) { return GridSpec{n, 2.0 * R, R}; }

// rows x cols complex matrix attached to every node.  Storage order matches
// the serialized layout: grid row (x2 index), grid column (x1 index), matrix
// row, matrix column, fastest last.
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(const GridSpec& g, int rows, int cols)
      : grid_(g), rows_(rows), cols_(cols),
        v_(static_cast<std::size_t>(g.n) * g.n * rows * cols, cplx(0.0)) {
    if (rows <= 0 || cols <= 0)
      throw std::invalid_argument("MatrixField: matrix dims must be positive");
  }

  const GridSpec& grid() const { return grid_; }
  int n() const { return grid_.n; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int block() const { return rows_ * cols_; }
  std::size_t size() const { return v_.size(); }

  cplx* data() { return v_.data(); }
  const cplx* data() const { return v_.data(); }

  std::size_t node_index(int iy, int ix) const {
    return (static_cast<std::size_t>(iy) * grid_.n + ix) * block();
  }
  cplx* node(int iy, int ix) { return v_.data() + node_index(iy, ix); }
  const cplx* node(int iy, int ix) const { return v_.data() + node_index(iy, ix); }

  cplx& at(int iy, int ix, int r, int c) { return node(iy, ix)[r * cols_ + c]; }
  const cplx& at(int iy, int ix, int r, int c) const { return node(iy, ix)[r * cols_ + c]; }

  MapC mat(int iy, int ix) { return MapC(node(iy, ix), rows_, cols_); }
  ConstMapC mat(int iy, int ix) const { return ConstMapC(node(iy, ix), rows_, cols_); }

  void set_identity() {
    if (rows_ != cols_)
      throw std::invalid_argument("set_identity: field is not square-matrix valued");
    std::fill(v_.begin(), v_.end(), cplx(0.0));
    for (int iy = 0; iy < grid_.n; ++iy)
      for (int ix = 0; ix < grid_.n; ++ix)
        for (int r = 0; r < rows_; ++r) at(iy, ix, r, r) = 1.0;
  }

  double max_abs() const {
    double m = 0.0;
    for (const cplx& z : v_) m = std::max(m, std::abs(z));
    return m;
  }

  // Discrete L2 norm with the cell weight, sqrt(h^2 sum |.|^2).
  double l2() const {
    double s = 0.0;
    for (const cplx& z : v_) s += std::norm(z);
    return grid_.h() * std::sqrt(s);
  }

  // Largest entry magnitude over nodes with |x| >= radius; support audits.
  double max_abs_outside(double radius) const {
    double m = 0.0;
    const double r2 = radius * radius;
    for (int iy = 0; iy < grid_.n; ++iy) {
      const double x2 = grid_.coord(iy);
      for (int ix = 0; ix < grid_.n; ++ix) {
        const double x1 = grid_.coord(ix);
        if (x1 * x1 + x2 * x2 < r2) continue;
        const cplx* p = node(iy, ix);
        for (int k = 0; k < block(); ++k) m = std::max(m, std::abs(p[k]));
      }
    }
    return m;
  }

  void check_same_shape(const MatrixField& o, const char* who) const {
    if (!(grid_ == o.grid_) || rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument(std::string(who) + ": field shapes differ");
  }

 private:
  GridSpec grid_{};
  int rows_ = 0, cols_ = 0;
  std::vector<cplx> v_;
};

inline double max_abs_diff(const MatrixField& a, const MatrixField& b) {
  a.check_same_shape(b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double rel_l2_diff(const MatrixField& a, const MatrixField& b) {
  a.check_same_shape(b, "rel_l2_diff");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.data()[i] - b.data()[i]);
    den += std::norm(b.data()[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace narf
