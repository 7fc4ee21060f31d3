#pragma once
// Ray-indexed data: one rows x cols complex matrix per (angle, offset) sample.
// Angles are uniform on [0, 2*pi); offsets reuse the grid coordinate line.

#include <string>
#include <vector>

#include "narf/grid.hpp"

namespace narf {

class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(const GridSpec& g, int n_angles, int rows, int cols, std::string kind)
      : grid_(g), n_angles_(n_angles), rows_(rows), cols_(cols), kind_(std::move(kind)),
        v_(static_cast<std::size_t>(n_angles) * g.n * rows * cols, cplx(0.0)) {
    if (n_angles <= 0) throw std::invalid_argument("Sinogram: need at least one angle");
  }

  const GridSpec& grid() const { return grid_; }
  int n_angles() const { return n_angles_; }
  int n_offsets() const { return grid_.n; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int block() const { return rows_ * cols_; }
  const std::string& kind() const { return kind_; }
  void set_kind(std::string k) { kind_ = std::move(k); }

  double angle(int ia) const { return 2.0 * kPi * ia / n_angles_; }
  double offset(int io) const { return grid_.coord(io); }

  cplx* data() { return v_.data(); }
  const cplx* data() const { return v_.data(); }
  std::size_t size() const { return v_.size(); }

  std::size_t index(int ia, int io) const {
    return (static_cast<std::size_t>(ia) * grid_.n + io) * block();
  }
  cplx* sample(int ia, int io) { return v_.data() + index(ia, io); }
  const cplx* sample(int ia, int io) const { return v_.data() + index(ia, io); }

  cplx& at(int ia, int io, int r, int c) { return sample(ia, io)[r * cols_ + c]; }
  const cplx& at(int ia, int io, int r, int c) const { return sample(ia, io)[r * cols_ + c]; }

  MapC mat(int ia, int io) { return MapC(sample(ia, io), rows_, cols_); }
  ConstMapC mat(int ia, int io) const { return ConstMapC(sample(ia, io), rows_, cols_); }

  double max_abs() const {
    double m = 0.0;
    for (const cplx& z : v_) m = std::max(m, std::abs(z));
    return m;
  }

  void check_same_shape(const Sinogram& o, const char* who) const {
    if (!(grid_ == o.grid_) || n_angles_ != o.n_angles_ || rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument(std::string(who) + ": sinogram shapes differ");
  }

 private:
  GridSpec grid_{};
  int n_angles_ = 0;
  int rows_ = 0, cols_ = 0;
  std::string kind_;
  std::vector<cplx> v_;
};

inline double max_abs_diff(const Sinogram& a, const Sinogram& b) {
  a.check_same_shape(b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double rel_l2_diff(const Sinogram& a, const Sinogram& b) {
  a.check_same_shape(b, "rel_l2_diff");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.data()[i] - b.data()[i]);
    den += std::norm(b.data()[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace narf
