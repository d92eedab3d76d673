#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinread/field.hpp"
#include "spinread/g_tensor.hpp"
#include "spinread/spin_model.hpp"

namespace spinread {

struct DataSeries {
  std::vector<Eigen::VectorXd> x;  // abscissae: 1d (detuning, t_rep) or 2d (phi, theta)
  std::vector<double> y;
  std::vector<double> sigma;  // optional; empty or same length as y
  std::string abscissa_kind;  // "orientation" | "detuning_hz" | "t_rep_s" | "field_gauss"

  void validate() const;
  std::size_t size() const { return y.size(); }
};

struct FitReport {
  Eigen::VectorXd parameters;
  Eigen::VectorXd uncertainties;  // 1-sigma, from Jacobian covariance
  std::vector<std::string> parameter_names;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
  double initial_step = 0.1;
  int max_iter = 4000;
  double f_tol = 1e-14;
  double x_tol = 1e-10;
};

// Derivative-free simplex minimization of a scalar function.
Eigen::VectorXd nelder_mead(const ScalarFn& f, const Eigen::VectorXd& x0,
                            const NelderMeadOptions& opts = {},
                            int* iterations = nullptr);

struct LeastSquaresOptions {
  NelderMeadOptions simplex;
  int max_gn_iter = 200;
  double rel_f_tol = 1e-10;
  double step_tol = 1e-12;
};

// Simplex refinement followed by Gauss-Newton polish with a numerically
// differenced Jacobian. Throws std::runtime_error (with the offending
// parameter vector in the message) if the model returns non-finite values
// at the initial point.
FitReport least_squares(const ResidualFn& model, const Eigen::VectorXd& params0,
                        const LeastSquaresOptions& opts = {});

// Two-parameter angular coupling fit: recovers (|g_perp|, arg g_par,
// arg g_perp) with |g_par| = 1 from a series of ((phi, theta), C) points.
// Residuals are taken in log space.
FitReport fit_angle_model(const DataSeries& data, const GTensor& g_ground,
                          const GTensor& g_excited, double purcell,
                          double c0,
                          const FieldOrientation& reference = {100.0, 90.0});

CouplingMatrix coupling_from_angle_fit(const FitReport& report,
                                       const FieldOrientation& reference = {100.0, 90.0});

// Bare cyclicity from a cavity-detuning (or field-amplitude) series of
// cyclicity measurements. Parameters: c0 (and optionally p_max).
FitReport fit_c0(const DataSeries& data, const IonCavityParams& params,
                 const CouplingMatrix& coupling, const GTensor& g_ground,
                 const GTensor& g_excited, const FieldOrientation& orientation,
                 bool fit_pmax = false);

// Relaxation decomposition 1/T_SR = 1/T_1,dark + p_ex/(t_rep C): exact
// weighted linear regression in rate space. Parameters: (t1_dark_s, C).
FitReport fit_spin_relaxation(const DataSeries& data, double p_ex);

}  // namespace spinread
