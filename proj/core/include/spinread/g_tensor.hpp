#pragma once

#include <Eigen/Dense>

namespace spinread {

// Symmetric 3x3 Zeeman response tensor of a Kramers doublet. Built from
// principal g-values and a ZYZ Euler rotation of the principal frame.
class GTensor {
 public:
  GTensor() : matrix_(Eigen::Matrix3d::Identity()) {}

  // principal_values must be positive; euler_rad = (alpha, beta, gamma),
  // R = Rz(alpha) Ry(beta) Rz(gamma), tensor = R diag(pv) R^T.
  static GTensor from_principal(const Eigen::Vector3d& principal_values,
                                const Eigen::Vector3d& euler_rad);

  // Validates symmetry and positive eigenvalues.
  static GTensor from_matrix(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return matrix_; }

  // Eigenvalues, descending.
  Eigen::Vector3d principal_values() const;

  // |g . n| for a unit direction n: the effective g-value along n.
  double effective_g(const Eigen::Vector3d& n_hat) const {
    return (matrix_ * n_hat).norm();
  }

  bool operator==(const GTensor& other) const {
    return matrix_ == other.matrix_;
  }

  static Eigen::Matrix3d euler_zyz(double alpha, double beta, double gamma);

 private:
  explicit GTensor(const Eigen::Matrix3d& m) : matrix_(m) {}
  Eigen::Matrix3d matrix_;
};

}  // namespace spinread
