#pragma once
// Ray-frame geometry shared by the transforms: a direction angle phi gives the
// unit pair theta = (cos phi, -sin phi), nu = (sin phi, cos phi), and rays are
// parametrized as x = y1*theta + y2*nu (y1 along the ray, y2 the offset).

#include <cmath>

namespace narf {

struct RayGeometry {
  double phi;
  double th1, th2;  // theta(phi)
  double nu1, nu2;  // nu(phi), theta rotated by +pi/2

  explicit RayGeometry(double phi_)
      : phi(phi_),
        th1(std::cos(phi_)), th2(-std::sin(phi_)),
        nu1(std::sin(phi_)), nu2(std::cos(phi_)) {}

  void to_plane(double y1, double y2, double& x1, double& x2) const {
    x1 = y1 * th1 + y2 * nu1;
    x2 = y1 * th2 + y2 * nu2;
  }
  void to_ray(double x1, double x2, double& y1, double& y2) const {
    y1 = x1 * th1 + x2 * th2;
    y2 = x1 * nu1 + x2 * nu2;
  }
};

}  // namespace narf
