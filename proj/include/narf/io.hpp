#pragma once
// File formats.  The native field container is a one-line JSON header followed
// by raw little-endian float64 (re, im) pairs in storage order:
//   {"narf":1,"n":...,"m":...,"rows":...,"cols":...,"R":...,"half_extent":...,"kind":"..."}
// Grid fields run over grid rows, grid columns, matrix row, matrix column.
// Sinograms add an "angles" count and run over angles, offsets, matrix row,
// matrix column.  CSV and 16-bit PGM exports are one-way conveniences.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "narf/grid.hpp"
#include "narf/sinogram.hpp"

namespace narf {

namespace detail {

inline void write_raw_complex(std::ofstream& os, const cplx* p, std::size_t count,
                              const std::string& path) {
  static_assert(sizeof(cplx) == 2 * sizeof(double), "unexpected std::complex layout");
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(cplx)));
  if (!os) throw std::runtime_error("narf write failed: " + path);
}

inline void read_raw_complex(std::ifstream& is, cplx* p, std::size_t count,
                             const std::string& path) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(cplx)));
  if (!is || is.gcount() != static_cast<std::streamsize>(count * sizeof(cplx)))
    throw std::runtime_error("narf read failed (truncated data): " + path);
}

inline nlohmann::json read_header(std::ifstream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("narf read failed (no header): " + path);
  nlohmann::json h = nlohmann::json::parse(line, nullptr, false);
  if (h.is_discarded() || !h.is_object() || h.value("narf", 0) != 1)
    throw std::runtime_error("not a narf file: " + path);
  return h;
}

}  // namespace detail

inline void write_field(const std::string& path, const MatrixField& f,
                        const std::string& kind = "field") {
  nlohmann::json h{{"narf", 1},         {"n", f.n()},
                   {"m", f.rows()},     {"rows", f.rows()},
                   {"cols", f.cols()},  {"R", f.grid().R},
                   {"half_extent", f.grid().half_extent}, {"kind", kind}};
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << h.dump() << '\n';
  detail::write_raw_complex(os, f.data(), f.size(), path);
}

inline MatrixField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  nlohmann::json h = detail::read_header(is, path);
  if (h.contains("angles")) throw std::runtime_error("file holds a sinogram, not a field: " + path);
  GridSpec g{h.at("n").get<int>(), h.at("half_extent").get<double>(), h.at("R").get<double>()};
  MatrixField f(g, h.at("rows").get<int>(), h.at("cols").get<int>());
  detail::read_raw_complex(is, f.data(), f.size(), path);
  return f;
}

inline void write_sinogram(const std::string& path, const Sinogram& s) {
  nlohmann::json h{{"narf", 1},         {"n", s.n_offsets()},
                   {"m", s.rows()},     {"rows", s.rows()},
                   {"cols", s.cols()},  {"R", s.grid().R},
                   {"half_extent", s.grid().half_extent}, {"kind", s.kind()},
                   {"angles", s.n_angles()}};
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << h.dump() << '\n';
  detail::write_raw_complex(os, s.data(), s.size(), path);
}

inline Sinogram read_sinogram(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  nlohmann::json h = detail::read_header(is, path);
  if (!h.contains("angles"))
    throw std::runtime_error("file holds a grid field, not a sinogram: " + path);
  GridSpec g{h.at("n").get<int>(), h.at("half_extent").get<double>(), h.at("R").get<double>()};
  Sinogram s(g, h.at("angles").get<int>(), h.at("rows").get<int>(), h.at("cols").get<int>(),
             h.value("kind", std::string("unknown")));
  detail::read_raw_complex(is, s.data(), s.size(), path);
  return s;
}

// CSV with one row per sample, real and imaginary parts of every matrix
// entry spelled out.  Full precision so the export is lossless.
inline void write_field_csv(const std::string& path, const MatrixField& f) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "x1,x2";
  for (int r = 0; r < f.rows(); ++r)
    for (int c = 0; c < f.cols(); ++c) os << ",re_" << r << "_" << c << ",im_" << r << "_" << c;
  os << '\n';
  os << std::setprecision(17);
  for (int iy = 0; iy < f.n(); ++iy)
    for (int ix = 0; ix < f.n(); ++ix) {
      os << f.grid().coord(ix) << ',' << f.grid().coord(iy);
      const cplx* p = f.node(iy, ix);
      for (int k = 0; k < f.block(); ++k) os << ',' << p[k].real() << ',' << p[k].imag();
      os << '\n';
    }
  if (!os) throw std::runtime_error("csv write failed: " + path);
}

inline void write_sinogram_csv(const std::string& path, const Sinogram& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "phi,y2";
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < s.cols(); ++c) os << ",re_" << r << "_" << c << ",im_" << r << "_" << c;
  os << '\n';
  os << std::setprecision(17);
  for (int ia = 0; ia < s.n_angles(); ++ia)
    for (int io = 0; io < s.n_offsets(); ++io) {
      os << s.angle(ia) << ',' << s.offset(io);
      const cplx* p = s.sample(ia, io);
      for (int k = 0; k < s.block(); ++k) os << ',' << p[k].real() << ',' << p[k].imag();
      os << '\n';
    }
  if (!os) throw std::runtime_error("csv write failed: " + path);
}

// 16-bit binary PGM heatmap of the per-node Frobenius magnitude, linearly
// scaled to the data maximum.  Sample values are big-endian per the format.
// Row 0 of the image is the top, i.e. the largest x2 coordinate.
inline void write_field_pgm(const std::string& path, const MatrixField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  const int n = f.n();
  double vmax = 0.0;
  std::vector<double> mag(static_cast<std::size_t>(n) * n, 0.0);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      double s = 0.0;
      const cplx* p = f.node(iy, ix);
      for (int k = 0; k < f.block(); ++k) s += std::norm(p[k]);
      const double v = std::sqrt(s);
      mag[static_cast<std::size_t>(iy) * n + ix] = v;
      vmax = std::max(vmax, v);
    }
  os << "P5\n" << n << " " << n << "\n65535\n";
  const double scale = vmax > 0.0 ? 65535.0 / vmax : 0.0;
  for (int row = 0; row < n; ++row) {
    const int iy = n - 1 - row;
    for (int ix = 0; ix < n; ++ix) {
      const auto q = static_cast<std::uint16_t>(
          std::lround(mag[static_cast<std::size_t>(iy) * n + ix] * scale));
      const unsigned char be[2] = {static_cast<unsigned char>(q >> 8),
                                   static_cast<unsigned char>(q & 0xff)};
      os.write(reinterpret_cast<const char*>(be), 2);
    }
  }
  if (!os) throw std::runtime_error("pgm write failed: " + path);
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("json write failed: " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  nlohmann::json j;
  is >> j;
  return j;
}

}  // namespace narf
