#include "spinread/g_tensor.hpp"

#include <stdexcept>

namespace spinread {

Eigen::Matrix3d GTensor::euler_zyz(double alpha, double beta, double gamma) {
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  return (AngleAxisd(alpha, Vector3d::UnitZ()) *
          AngleAxisd(beta, Vector3d::UnitY()) *
          AngleAxisd(gamma, Vector3d::UnitZ()))
      .toRotationMatrix();
}

GTensor GTensor::from_principal(const Eigen::Vector3d& principal_values,
                                const Eigen::Vector3d& euler_rad) {
  if ((principal_values.array() <= 0.0).any()) {
    throw std::invalid_argument("GTensor: principal values must be positive");
  }
  const Eigen::Matrix3d r =
      euler_zyz(euler_rad[0], euler_rad[1], euler_rad[2]);
  Eigen::Matrix3d m = r * principal_values.asDiagonal() * r.transpose();
  // enforce exact symmetry against rounding
  m = 0.5 * (m + m.transpose()).eval();
  return GTensor(m);
}

GTensor GTensor::from_matrix(const Eigen::Matrix3d& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("GTensor: matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  if ((es.eigenvalues().array() <= 0.0).any()) {
    throw std::invalid_argument("GTensor: eigenvalues must be positive");
  }
  return GTensor(0.5 * (m + m.transpose()));
}

Eigen::Vector3d GTensor::principal_values() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(matrix_);
  return es.eigenvalues().reverse();
}

}  // namespace spinread
