#pragma once
// Shared test utilities: a deterministic RNG with explicit bit-to-double
// mapping (so expected values frozen in tests cannot drift with the standard
// library), and small quadrature oracles used to pin transform values
// independently of the production code paths.

#include <cmath>
#include <complex>
#include <functional>
#include <random>

namespace narf_test {

using cplx = std::complex<double>;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double gaussian() {  // Box-Muller, deterministic
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  }

  cplx complex_in_disk(double radius) {
    while (true) {
      const double x = uniform(-1.0, 1.0), y = uniform(-1.0, 1.0);
      if (x * x + y * y <= 1.0) return radius * cplx(x, y);
    }
  }

 private:
  std::mt19937_64 eng_;
};

// Composite Simpson on [a, b]; panels must be even.
inline cplx simpson(const std::function<cplx(double)>& f, double a, double b, int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  cplx s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * (h / 3.0);
}

// Simpson refined until two successive doublings agree to rtol.
inline cplx adaptive_simpson(const std::function<cplx(double)>& f, double a, double b,
                             double rtol = 1e-12) {
  int panels = 64;
  cplx prev = simpson(f, a, b, panels);
  for (int it = 0; it < 12; ++it) {
    panels *= 2;
    const cplx cur = simpson(f, a, b, panels);
    if (std::abs(cur - prev) <= rtol * (1.0 + std::abs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace narf_test
