#include "spinread/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace spinread {

void DataSeries::validate() const {
  if (x.size() != y.size()) {
    throw std::invalid_argument("DataSeries: x/y length mismatch");
  }
  if (!sigma.empty() && sigma.size() != y.size()) {
    throw std::invalid_argument("DataSeries: sigma length mismatch");
  }
  for (double v : y) {
    if (!(v > 0.0)) throw std::invalid_argument("DataSeries: y must be > 0");
  }
}

Eigen::VectorXd nelder_mead(const ScalarFn& f, const Eigen::VectorXd& x0,
                            const NelderMeadOptions& opts, int* iterations) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (int i = 0; i < n; ++i) simplex[i + 1][i] += opts.initial_step;
  for (int i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

  const auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return fv[a] < fv[b]; });
    std::vector<Eigen::VectorXd> s2;
    std::vector<double> f2;
    for (int i : idx) {
      s2.push_back(simplex[i]);
      f2.push_back(fv[i]);
    }
    simplex.swap(s2);
    fv.swap(f2);
  };

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    order();
    double diam = 0.0;
    for (int i = 1; i <= n; ++i) {
      diam = std::max(diam, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
    }
    if (diam < opts.x_tol || std::abs(fv[n] - fv[0]) < opts.f_tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += simplex[i];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - simplex[n]);
    const double fr = f(xr);
    if (fr < fv[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[n]);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[n] = xe;
        fv[n] = fe;
      } else {
        simplex[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      simplex[n] = xr;
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      const Eigen::VectorXd xc =
          centroid + 0.5 * ((outside ? xr : simplex[n]) - centroid);
      const double fc = f(xc);
      if (fc < (outside ? fr : fv[n])) {
        simplex[n] = xc;
        fv[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  order();
  if (iterations) *iterations = iter;
  return simplex[0];
}

namespace {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& model,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r0) {
  const int n = static_cast<int>(r0.size());
  const int p = static_cast<int>(x.size());
  Eigen::MatrixXd j(n, p);
  for (int k = 0; k < p; ++k) {
    const double h = 1e-7 * std::max(1.0, std::abs(x[k]));
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (model(xp) - model(xm)) / (2.0 * h);
  }
  return j;
}

std::string param_string(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "]";
  return os.str();
}

}  // namespace

FitReport least_squares(const ResidualFn& model, const Eigen::VectorXd& params0,
                        const LeastSquaresOptions& opts) {
  const auto cost = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = model(x);
    if (!r.allFinite()) return std::numeric_limits<double>::infinity();
    return 0.5 * r.squaredNorm();
  };

  {
    const Eigen::VectorXd r0 = model(params0);
    if (!r0.allFinite()) {
      throw std::runtime_error("least_squares: model returned non-finite "
                               "residuals at initial parameters " +
                               param_string(params0));
    }
  }

  FitReport report;
  int nm_iters = 0;
  Eigen::VectorXd x = nelder_mead(cost, params0, opts.simplex, &nm_iters);
  // iterations counts the Gauss-Newton polish; the simplex stage is a
  // warm-start whose effort is bounded by opts.simplex.max_iter
  report.iterations = 0;

  Eigen::VectorXd r = model(x);
  double c = 0.5 * r.squaredNorm();
  bool converged = false;
  double lambda = 0.0;
  for (int it = 0; it < opts.max_gn_iter; ++it) {
    ++report.iterations;
    const Eigen::MatrixXd j = numeric_jacobian(model, x, r);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    Eigen::VectorXd step;
    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd a = jtj;
      if (lambda > 0.0) a.diagonal().array() += lambda * jtj.diagonal().maxCoeff();
      step = a.ldlt().solve(-g);
      const Eigen::VectorXd xn = x + step;
      const double cn = cost(xn);
      if (cn <= c) {
        const double rel = (c - cn) / std::max(c, 1e-300);
        x = xn;
        r = model(x);
        c = cn;
        improved = true;
        lambda = lambda > 0.0 ? lambda * 0.25 : 0.0;
        if (rel < opts.rel_f_tol || step.cwiseAbs().maxCoeff() < opts.step_tol) {
          converged = true;
        }
        break;
      }
      lambda = lambda > 0.0 ? lambda * 8.0 : 1e-6;
    }
    if (converged || !improved) {
      converged = converged || !improved;  // stationary point
      break;
    }
  }

  report.parameters = x;
  report.residual_norm = r.norm();
  report.converged = converged;

  // 1-sigma uncertainties from the Jacobian-based covariance
  const Eigen::MatrixXd j = numeric_jacobian(model, x, r);
  const int dof =
      std::max<int>(1, static_cast<int>(r.size()) - static_cast<int>(x.size()));
  const double s2 = r.squaredNorm() / dof;
  const Eigen::MatrixXd cov =
      s2 * (j.transpose() * j)
               .completeOrthogonalDecomposition()
               .pseudoInverse();
  report.uncertainties = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return report;
}

FitReport fit_angle_model(const DataSeries& data, const GTensor& g_ground,
                          const GTensor& g_excited, double purcell, double c0,
                          const FieldOrientation& reference) {
  data.validate();
  if (data.size() < 4) {
    throw std::invalid_argument("fit_angle_model: need at least 4 points");
  }
  double phi_min = 1e300, phi_max = -1e300;
  for (const auto& xi : data.x) {
    if (xi.size() < 2) {
      throw std::invalid_argument("fit_angle_model: orientation abscissae "
                                  "must be (phi, theta) pairs");
    }
    phi_min = std::min(phi_min, xi[0]);
    phi_max = std::max(phi_max, xi[0]);
  }
  if (phi_max - phi_min < 30.0) {
    throw std::invalid_argument("fit_angle_model: degenerate design "
                                "(phi span < 30 degrees)");
  }

  // params: (log|g_perp|, arg g_par, arg g_perp, log_scale), |g_par| = 1.
  // The free overall scale absorbs constant multiples of y so the coupling
  // estimate is invariant under rescaled data.
  const auto model = [&](const Eigen::VectorXd& p) {
    CouplingMatrix m;
    m.g_par = std::polar(1.0, p[1]);
    m.g_perp = std::polar(std::exp(p[0]), p[2]);
    m.reference = reference;
    Eigen::VectorXd r(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      FieldOrientation o(data.x[i][0], data.x[i][1], 1.0);
      auto [gp, gt] = coupling_at(m, g_ground, g_excited, o);
      const double s = std::norm(gp) + std::norm(gt);
      const double c = corrected_cyclicity(purcell * std::norm(gp) / s,
                                           purcell * std::norm(gt) / s, c0);
      r[i] = p[3] + std::log(c) - std::log(data.y[i]);
    }
    return r;
  };

  const double c_max = *std::max_element(data.y.begin(), data.y.end());
  const double gperp0 = 1.0 / std::sqrt(std::max(c_max - 1.0, 1.0));

  // coarse phase grid to dodge phase-degenerate local minima
  double best_cost = 1e300, best_a = 0.0, best_b = 0.0;
  for (int ia = 0; ia < 16; ++ia) {
    for (int ib = 0; ib < 16; ++ib) {
      Eigen::VectorXd p(4);
      p << std::log(gperp0), -M_PI + ia * (2.0 * M_PI / 16.0),
          -M_PI + ib * (2.0 * M_PI / 16.0), 0.0;
      const double c = model(p).squaredNorm();
      if (c < best_cost) {
        best_cost = c;
        best_a = p[1];
        best_b = p[2];
      }
    }
  }

  Eigen::VectorXd p0(4);
  p0 << std::log(gperp0), best_a, best_b, 0.0;
  LeastSquaresOptions opts;
  opts.simplex.initial_step = 0.3;
  opts.simplex.max_iter = 400;
  FitReport report = least_squares(model, p0, opts);

  // report |g_perp| rather than its log
  const double gperp = std::exp(report.parameters[0]);
  report.parameters[0] = gperp;
  report.uncertainties[0] *= gperp;
  report.parameter_names = {"g_perp_abs", "g_par_arg", "g_perp_arg",
                            "log_scale"};
  if (std::abs(report.parameters[3]) > 0.1) {
    report.warnings.push_back("overall scale offset absorbed by log_scale");
  }
  return report;
}

CouplingMatrix coupling_from_angle_fit(const FitReport& report,
                                       const FieldOrientation& reference) {
  CouplingMatrix m;
  m.g_par = std::polar(1.0, report.parameters[1]);
  m.g_perp = std::polar(report.parameters[0], report.parameters[2]);
  m.reference = reference;
  return m;
}

FitReport fit_c0(const DataSeries& data, const IonCavityParams& params,
                 const CouplingMatrix& coupling, const GTensor& g_ground,
                 const GTensor& g_excited, const FieldOrientation& orientation,
                 bool fit_pmax) {
  data.validate();
  if (data.size() < 3) {
    throw std::invalid_argument("fit_c0: need at least 3 points");
  }
  const bool field_series = data.abscissa_kind == "field_gauss";

  const auto model = [&](const Eigen::VectorXd& p) {
    IonCavityParams trial = params;
    trial.c0 = 1.0 + std::exp(p[0]);
    if (fit_pmax) trial.purcell_max = std::abs(p[1]);
    Eigen::VectorXd r(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      FieldOrientation o = orientation;
      double delta = trial.cavity_detuning_hz;
      if (field_series) {
        o.magnitude_gauss = data.x[i][0];
      } else {
        delta = data.x[i][0];
      }
      const double c = cyclicity_at_detuning(trial, coupling, g_ground,
                                             g_excited, o, delta);
      r[i] = std::log(c) - std::log(data.y[i]);
    }
    return r;
  };

  Eigen::VectorXd p0(fit_pmax ? 2 : 1);
  p0[0] = std::log(std::max(params.c0 - 1.0, 0.5));
  if (fit_pmax) p0[1] = params.purcell_max;
  LeastSquaresOptions opts;
  opts.simplex.initial_step = 0.5;
  opts.simplex.max_iter = 400;
  FitReport report = least_squares(model, p0, opts);

  const double c0_hat = 1.0 + std::exp(report.parameters[0]);
  report.uncertainties[0] *= std::exp(report.parameters[0]);
  report.parameters[0] = c0_hat;
  report.parameter_names = {"c0"};
  if (fit_pmax) {
    report.parameters[1] = std::abs(report.parameters[1]);
    report.parameter_names.push_back("purcell_max");
  }

  if (!field_series) {
    double max_delta = 0.0;
    for (const auto& xi : data.x) max_delta = std::max(max_delta, std::abs(xi[0]));
    if (max_delta / params.kappa_hz < 1.0) {
      report.warnings.push_back("insufficient detuning lever arm");
    }
  }
  return report;
}

FitReport fit_spin_relaxation(const DataSeries& data, double p_ex) {
  data.validate();
  if (data.size() < 3) {
    throw std::invalid_argument("fit_spin_relaxation: need at least 3 points");
  }
  const int n = static_cast<int>(data.size());

  // affine model in rate space: 1/T_SR = a + b / t_rep
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rates(n);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    const double t_rep = data.x[i][0];
    const double t_sr = data.y[i];
    design(i, 0) = 1.0;
    design(i, 1) = 1.0 / t_rep;
    rates[i] = 1.0 / t_sr;
    if (!data.sigma.empty()) {
      const double sigma_rate = data.sigma[i] / (t_sr * t_sr);
      w[i] = 1.0 / (sigma_rate * sigma_rate);
    }
  }

  const Eigen::MatrixXd xtw = design.transpose() * w.asDiagonal();
  const Eigen::Matrix2d normal = xtw * design;
  const Eigen::Vector2d ab = normal.ldlt().solve(xtw * rates);
  const Eigen::VectorXd resid = rates - design * ab;

  Eigen::Matrix2d cov = normal.inverse();
  if (data.sigma.empty()) {
    cov *= resid.squaredNorm() / std::max(1, n - 2);
  } else {
    // chi^2 scaling keeps reported errors honest when sigma is misstated
    const double chi2 =
        (w.array() * resid.array().square()).sum() / std::max(1, n - 2);
    cov *= std::max(chi2, 1.0);
  }

  const double a = ab[0], b = ab[1];
  FitReport report;
  report.parameters.resize(2);
  report.uncertainties.resize(2);
  report.parameter_names = {"t1_dark_s", "cyclicity"};
  report.parameters[0] = 1.0 / a;
  report.parameters[1] = p_ex / b;
  report.uncertainties[0] = std::sqrt(cov(0, 0)) / (a * a);
  report.uncertainties[1] = p_ex * std::sqrt(cov(1, 1)) / (b * b);
  report.residual_norm = resid.norm();
  report.converged = true;
  report.iterations = 1;
  if (a < 0.0) report.warnings.push_back("dark relaxation unresolved");
  return report;
}

}  // namespace spinread
