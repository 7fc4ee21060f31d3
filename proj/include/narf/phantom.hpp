#pragma once
// Deterministic test-object generators: connection phantoms, matrix sources,
// and admissible random gauges.  Everything is C-infinity with exact compact
// support on B_R (a clamped mollifier rolloff), and bit-reproducible for a
// given seed: the RNG maps mt19937_64 output to doubles explicitly, so no
// standard-library distribution variability can creep in.

#include <random>

#include "narf/gauge_field.hpp"
#include "narf/matrix.hpp"

namespace narf {

enum class PhantomKind { gaussian_bump, disk, nilpotent_upper, smooth_random, scalar_source };

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

// exp(1 - 1/(1 - (r/R)^2)) inside, identically zero outside: value 1 at the
// center, C-infinity at the support edge.
inline double mollifier(double r2, double R) {
  const double s = r2 / (R * R);
  if (s >= 1.0 - 1e-14) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s));
}

// Two-sided smoothstep: 0 for s <= 0, 1 for s >= 1, C-infinity throughout.
// Used for plateau phantoms; gluing a rescaled mollifier to a plateau would
// only be C^1 at the junction.
inline double smoothstep(double s) {
  auto f = [](double u) { return u <= 0.0 ? 0.0 : std::exp(-1.0 / u); };
  const double a = f(s), b = f(1.0 - s);
  return a / (a + b);
}

// Mollified sum of a few random plane waves; smooth, deterministic, O(amp).
inline void fill_smooth_random(MatrixField& f, Rng& rng, double amp) {
  const GridSpec& g = f.grid();
  const int waves = 5;
  struct Wave {
    double k1, k2, phase;
    cplx c;
  };
  std::vector<Wave> w(static_cast<std::size_t>(waves) * f.block());
  for (auto& ww : w) {
    const double kmax = 3.0 / g.R;
    ww.k1 = rng.uniform(-kmax, kmax);
    ww.k2 = rng.uniform(-kmax, kmax);
    ww.phase = rng.uniform(0.0, 2.0 * kPi);
    ww.c = amp * cplx(rng.uniform(-1.0, 1.0), 0.6 * rng.uniform(-1.0, 1.0)) / std::sqrt(1.0 * waves);
  }
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double x1 = g.coord(ix), x2 = g.coord(iy);
      const double r2 = x1 * x1 + x2 * x2;
      const double moll = mollifier(r2, g.R);
      if (moll == 0.0) continue;
      // The bare mollifier's derivatives blow up near the support edge and
      // dominate every spectral error budget; a Gaussian damp there keeps
      // the field numerically benign without losing exact compact support.
      const double window = moll * std::exp(-3.0 * r2 / (g.R * g.R));
      cplx* p = f.node(iy, ix);
      for (int e = 0; e < f.block(); ++e) {
        cplx acc = 0.0;
        for (int j = 0; j < waves; ++j) {
          const Wave& ww = w[static_cast<std::size_t>(e) * waves + j];
          acc += ww.c * std::cos(ww.k1 * x1 + ww.k2 * x2 + ww.phase);
        }
        p[e] = window * acc;
      }
    }
}

// One mollified Gaussian bump with randomized center, width, and amplitude.
inline void fill_bump(MatrixField& f, int r, int c, Rng& rng, double amp_scale) {
  const GridSpec& g = f.grid();
  const double cx = rng.uniform(-0.3, 0.3) * g.R;
  const double cy = rng.uniform(-0.3, 0.3) * g.R;
  const double alpha = rng.uniform(8.0, 14.0) / (g.R * g.R);
  const cplx amp = amp_scale * cplx(rng.uniform(0.5, 1.0), rng.uniform(-0.3, 0.3));
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double x1 = g.coord(ix), x2 = g.coord(iy);
      const double moll = mollifier(x1 * x1 + x2 * x2, g.R);
      if (moll == 0.0) continue;
      const double d2 = (x1 - cx) * (x1 - cx) + (x2 - cy) * (x2 - cy);
      f.at(iy, ix, r, c) = amp * (std::exp(-alpha * d2) * moll);
    }
}

}  // namespace detail

// Matrix source with independent mollified Gaussian-bump entries.
inline MatrixField make_source(const GridSpec& g, int rows, int cols, int seed) {
  g.validate();
  if (rows < 1 || cols < 1) throw std::invalid_argument("make_source: bad shape");
  MatrixField f(g, rows, cols);
  detail::Rng rng(0x5eed0000u + static_cast<std::uint64_t>(seed));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) detail::fill_bump(f, r, c, rng, 1.0);
  return f;
}

inline GaugeField make_phantom(PhantomKind kind, const GridSpec& g, int m, int seed,
                               double amplitude = 1.0) {
  g.validate();
  if (m < 1) throw std::invalid_argument("make_phantom: m must be positive");
  GaugeField A(g, m);
  detail::Rng rng(0xba5e0000u + static_cast<std::uint64_t>(seed));
  switch (kind) {
    case PhantomKind::gaussian_bump:
      // Bumps in all three components so the direction dependence is real.
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
          detail::fill_bump(A.a1, r, c, rng, 0.7 * amplitude);
          detail::fill_bump(A.a2, r, c, rng, 0.5 * amplitude);
          detail::fill_bump(A.a0, r, c, rng, amplitude);
        }
      break;
    case PhantomKind::disk:
      // Plateau of height `amplitude` inside 0.8R, smooth roll to zero at R.
      for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) {
          const double x1 = g.coord(ix), x2 = g.coord(iy);
          const double r = std::sqrt(x1 * x1 + x2 * x2);
          const double v = amplitude * detail::smoothstep((g.R - r) / (0.2 * g.R));
          for (int d = 0; d < m; ++d) A.a0.at(iy, ix, d, d) = v;
        }
      break;
    case PhantomKind::nilpotent_upper: {
      // Strictly upper triangular in the (0,1) slot; transport exponentials
      // truncate after the linear term.
      if (m < 2) throw std::invalid_argument("make_phantom: nilpotent_upper needs m >= 2");
      detail::fill_bump(A.a0, 0, 1, rng, amplitude);
      break;
    }
    case PhantomKind::smooth_random:
      detail::fill_smooth_random(A.a1, rng, 0.6 * amplitude);
      detail::fill_smooth_random(A.a2, rng, 0.6 * amplitude);
      detail::fill_smooth_random(A.a0, rng, 0.8 * amplitude);
      break;
    case PhantomKind::scalar_source:
      // Source packaged in the a0 slot; pipelines that want a bare matrix
      // source use make_source directly.
      A.a0 = make_source(g, m, m, seed);
      break;
    default:
      throw std::invalid_argument("make_phantom: unknown kind");
  }
  return A;
}

// Admissible gauge g = exp(W) with W smooth, compactly supported, O(amp):
// det g = exp(tr W) never vanishes and g = I outside B_R exactly.
inline MatrixField make_random_gauge(const GridSpec& g, int m, int seed, double amp = 0.6) {
  g.validate();
  MatrixField w(g, m, m);
  detail::Rng rng(0x6a76e000u + static_cast<std::uint64_t>(seed));
  detail::fill_smooth_random(w, rng, amp);
  MatrixField out(g, m, m);
  MatC wm(m, m);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      wm = w.mat(iy, ix);
      out.mat(iy, ix) = expm(wm);
    }
  return out;
}

}  // namespace narf
