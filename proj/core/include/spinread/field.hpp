#pragma once

#include <cmath>
#include <Eigen/Dense>

namespace spinread {

// Magnetic field direction and strength. Angles follow the usual spherical
// convention: phi is the azimuth from x in the x-y plane, theta the polar
// angle from z. Stored normalized to phi in [0,360), theta in [0,180].
struct FieldOrientation {
  double phi_deg = 0.0;
  double theta_deg = 90.0;
  double magnitude_gauss = 0.0;

  FieldOrientation() = default;
  FieldOrientation(double phi, double theta, double magnitude = 0.0)
      : phi_deg(phi), theta_deg(theta), magnitude_gauss(magnitude) {
    normalize_angles();
  }

  void normalize_angles() {
    theta_deg = std::fmod(theta_deg, 360.0);
    if (theta_deg < 0.0) theta_deg += 360.0;
    if (theta_deg > 180.0) {
      theta_deg = 360.0 - theta_deg;
      phi_deg += 180.0;
    }
    phi_deg = std::fmod(phi_deg, 360.0);
    if (phi_deg < 0.0) phi_deg += 360.0;
  }

  Eigen::Vector3d unit_vector() const {
    const double p = phi_deg * M_PI / 180.0;
    const double t = theta_deg * M_PI / 180.0;
    return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
  }

  Eigen::Vector3d field_vector_gauss() const {
    return magnitude_gauss * unit_vector();
  }
};

}  // namespace spinread
