#include <doctest.h>

#include <cmath>
#include <random>

#include <spinread/fitting.hpp>
#include <spinread/presets.hpp>

using namespace spinread;

namespace {

DataSeries angle_series(const CouplingMatrix& truth, const GTensor& gg,
                        const GTensor& ge, double purcell, double c0,
                        double scale = 1.0) {
  const std::vector<double> phis = {0,  25, 50,  70,  85,  95,
                                    100, 105, 115, 140, 170, 210};
  DataSeries d;
  d.abscissa_kind = "orientation";
  for (double phi : phis) {
    const FieldOrientation o(phi, 90.0, 1.0);
    const auto [gp, gt] = coupling_at(truth, gg, ge, o);
    const double s = std::norm(gp) + std::norm(gt);
    const double c = corrected_cyclicity(purcell * std::norm(gp) / s,
                                         purcell * std::norm(gt) / s, c0);
    d.x.push_back(Eigen::Vector2d(phi, 90.0));
    d.y.push_back(scale * c);
  }
  return d;
}

}  // namespace

TEST_CASE("data series validation") {
  DataSeries d;
  d.x = {Eigen::VectorXd::Constant(1, 1.0)};
  d.y = {1.0, 2.0};
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d.y = {1.0};
  CHECK_NOTHROW(d.validate());
  d.sigma = {0.1, 0.2};
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d.sigma = {0.1};
  d.y = {-1.0};
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("simplex minimizes the Rosenbrock function") {
  const ScalarFn rosen = [](const Eigen::VectorXd& p) {
    const double a = 1.0 - p[0];
    const double b = p[1] - p[0] * p[0];
    return a * a + 100.0 * b * b;
  };
  NelderMeadOptions opts;
  opts.max_iter = 20000;
  opts.x_tol = 1e-12;
  const Eigen::VectorXd x =
      nelder_mead(rosen, Eigen::Vector2d(-1.2, 1.0), opts);
  CHECK(std::abs(x[0] - 1.0) < 1e-6);
  CHECK(std::abs(x[1] - 1.0) < 1e-6);
}

TEST_CASE("least squares solves a quadratic problem in a few iterations") {
  // linear residuals => exactly quadratic cost
  Eigen::VectorXd xs(6), ys(6);
  xs << 0, 1, 2, 3, 4, 5;
  ys << 1.0, 3.1, 4.9, 7.2, 8.8, 11.1;
  const ResidualFn line = [&](const Eigen::VectorXd& p) {
    return (p[0] * xs.array() + p[1] - ys.array()).matrix().eval();
  };
  const FitReport r = least_squares(line, Eigen::Vector2d(0.0, 0.0));
  CHECK(r.converged);
  CHECK(r.iterations < 50);
  CHECK(r.parameters[0] == doctest::Approx(2.0).epsilon(0.02));
  CHECK(r.parameters[1] == doctest::Approx(1.0).epsilon(0.1));
  CHECK(r.uncertainties.minCoeff() > 0.0);
  CHECK(r.uncertainties.allFinite());
}

TEST_CASE("least squares reports the offending parameters on non-finite "
          "residuals") {
  const ResidualFn bad = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(2);
    r << std::sqrt(p[0] - 10.0), 0.0;  // NaN at the initial point
    return r;
  };
  try {
    least_squares(bad, Eigen::Vector2d(1.0, 2.0));
    FAIL("expected runtime_error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-finite") != std::string::npos);
    CHECK(msg.find("[1, 2]") != std::string::npos);
  }
}

TEST_CASE("angle fit recovers a planted coupling from a noiseless sweep") {
  const GTensor gg = default_ground_tensor();
  const GTensor ge = default_excited_tensor();
  const CouplingMatrix truth = fitted_coupling();
  const DataSeries d = angle_series(truth, gg, ge, 703.0, 2.0);

  const FitReport r = fit_angle_model(d, gg, ge, 703.0, 2.0);
  REQUIRE(r.converged);
  REQUIRE(r.parameter_names[0] == "g_perp_abs");
  CHECK(r.parameters[0] == doctest::Approx(0.024).epsilon(0.01));
  CHECK(r.warnings.empty());

  // the fitted coupling reproduces the observed cyclicities
  const CouplingMatrix m = coupling_from_angle_fit(r);
  CHECK(std::abs(m.g_perp) == doctest::Approx(0.024).epsilon(0.01));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const FieldOrientation o(d.x[i][0], d.x[i][1], 1.0);
    const auto [gp, gt] = coupling_at(m, gg, ge, o);
    const double s = std::norm(gp) + std::norm(gt);
    const double c = corrected_cyclicity(703.0 * std::norm(gp) / s,
                                         703.0 * std::norm(gt) / s, 2.0);
    CHECK(c == doctest::Approx(d.y[i]).epsilon(0.02));
  }
}

TEST_CASE("angle fit is invariant under rescaled observations") {
  const GTensor gg = default_ground_tensor();
  const GTensor ge = default_excited_tensor();
  const CouplingMatrix truth = fitted_coupling();
  const DataSeries d1 = angle_series(truth, gg, ge, 703.0, 2.0, 1.0);
  const DataSeries d3 = angle_series(truth, gg, ge, 703.0, 2.0, 3.0);

  const FitReport r1 = fit_angle_model(d1, gg, ge, 703.0, 2.0);
  const FitReport r3 = fit_angle_model(d3, gg, ge, 703.0, 2.0);
  REQUIRE(r1.converged);
  REQUIRE(r3.converged);
  CHECK(r3.parameters[0] ==
        doctest::Approx(r1.parameters[0]).epsilon(1e-6));
  // the absorbed factor shows up in log_scale and is flagged
  CHECK(r3.parameters[3] == doctest::Approx(std::log(3.0)).epsilon(1e-3));
  REQUIRE_FALSE(r3.warnings.empty());
  CHECK(r3.warnings[0].find("log_scale") != std::string::npos);
}

TEST_CASE("angle fit input validation") {
  const GTensor gg = default_ground_tensor();
  const GTensor ge = default_excited_tensor();
  DataSeries d;
  d.abscissa_kind = "orientation";
  for (double phi : {0.0, 10.0, 20.0}) {
    d.x.push_back(Eigen::Vector2d(phi, 90.0));
    d.y.push_back(100.0);
  }
  CHECK_THROWS_AS(fit_angle_model(d, gg, ge, 703.0, 2.0),
                  std::invalid_argument);  // < 4 points
  d.x.push_back(Eigen::Vector2d(25.0, 90.0));
  d.y.push_back(100.0);
  CHECK_THROWS_AS(fit_angle_model(d, gg, ge, 703.0, 2.0),
                  std::invalid_argument);  // phi span < 30 degrees
  d.x[3] = Eigen::VectorXd::Constant(1, 200.0);
  CHECK_THROWS_AS(fit_angle_model(d, gg, ge, 703.0, 2.0),
                  std::invalid_argument);  // not (phi, theta)
}

TEST_CASE("c0 fit recovers the bare cyclicity from a detuning series") {
  const GTensor gg = default_ground_tensor();
  const GTensor ge = default_excited_tensor();
  const CouplingMatrix m = fitted_coupling();
  IonCavityParams p = preset("ion2").cavity;
  p.c0 = 5.0;
  const FieldOrientation o{100.0, 90.0, 112.0};

  DataSeries d;
  d.abscissa_kind = "detuning_hz";
  for (double k : {0.0, 1.0, 2.0, 4.0}) {
    const double delta = k * p.kappa_hz;
    d.x.push_back(Eigen::VectorXd::Constant(1, delta));
    d.y.push_back(cyclicity_at_detuning(p, m, gg, ge, o, delta));
  }

  IonCavityParams guess = p;
  guess.c0 = 2.0;  // start away from the truth
  const FitReport r = fit_c0(d, guess, m, gg, ge, o);
  REQUIRE(r.converged);
  REQUIRE(r.parameter_names[0] == "c0");
  CHECK(r.parameters[0] == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(r.warnings.empty());
}

TEST_CASE("c0 fit warns when the detunings do not reach a linewidth") {
  const GTensor gg = default_ground_tensor();
  const GTensor ge = default_excited_tensor();
  const CouplingMatrix m = fitted_coupling();
  IonCavityParams p = preset("ion2").cavity;
  p.c0 = 5.0;
  const FieldOrientation o{100.0, 90.0, 112.0};
  DataSeries d;
  d.abscissa_kind = "detuning_hz";
  for (double k : {0.0, 0.1, 0.2, 0.3}) {
    const double delta = k * p.kappa_hz;
    d.x.push_back(Eigen::VectorXd::Constant(1, delta));
    d.y.push_back(cyclicity_at_detuning(p, m, gg, ge, o, delta));
  }
  const FitReport r = fit_c0(d, p, m, gg, ge, o);
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings[0].find("lever arm") != std::string::npos);
}

TEST_CASE("c0 fit from a field-amplitude series") {
  const GTensor gg = default_ground_tensor();
  const GTensor ge = default_excited_tensor();
  const CouplingMatrix m = fitted_coupling();
  IonCavityParams p = preset("ion2").cavity;
  p.c0 = 5.0;
  FieldOrientation o{100.0, 90.0, 112.0};

  DataSeries d;
  d.abscissa_kind = "field_gauss";
  for (double b : {50.0, 100.0, 200.0, 400.0, 800.0}) {
    FieldOrientation ob = o;
    ob.magnitude_gauss = b;
    d.x.push_back(Eigen::VectorXd::Constant(1, b));
    d.y.push_back(cyclicity_at_detuning(p, m, gg, ge, ob, 0.0));
  }
  IonCavityParams guess = p;
  guess.c0 = 2.0;
  const FitReport r = fit_c0(d, guess, m, gg, ge, o);
  REQUIRE(r.converged);
  // the Zeeman lever arm is weak, so only a loose recovery is expected
  CHECK(std::abs(r.parameters[0] - 5.0) < 2.0);
}

TEST_CASE("spin relaxation decomposition is exact on noiseless data") {
  const double t1 = 12.2, c = 390.0, p_ex = 0.5;
  DataSeries d;
  d.abscissa_kind = "t_rep_s";
  for (double t_rep : {1e-3, 3e-3, 10e-3, 30e-3, 100e-3}) {
    d.x.push_back(Eigen::VectorXd::Constant(1, t_rep));
    d.y.push_back(1.0 / (1.0 / t1 + p_ex / (t_rep * c)));
  }
  const FitReport r = fit_spin_relaxation(d, p_ex);
  REQUIRE(r.converged);
  CHECK(r.parameter_names[0] == "t1_dark_s");
  CHECK(r.parameters[0] == doctest::Approx(t1).epsilon(1e-9));
  CHECK(r.parameters[1] == doctest::Approx(c).epsilon(1e-9));
  CHECK(r.residual_norm < 1e-12);
}

TEST_CASE("spin relaxation residuals are orthogonal to the design") {
  const double t1 = 2.5, c = 620.0, p_ex = 0.5;
  std::mt19937_64 rng(41);
  std::normal_distribution<double> noise(0.0, 0.05);
  DataSeries d;
  d.abscissa_kind = "t_rep_s";
  const std::vector<double> t_reps = {1e-3, 3e-3, 10e-3, 30e-3, 100e-3, 300e-3};
  for (double t_rep : t_reps) {
    const double y = 1.0 / (1.0 / t1 + p_ex / (t_rep * c));
    d.x.push_back(Eigen::VectorXd::Constant(1, t_rep));
    d.y.push_back(y * (1.0 + noise(rng)));
  }
  const FitReport r = fit_spin_relaxation(d, p_ex);
  REQUIRE(r.converged);

  // unweighted normal equations: residual rates sum to zero against both
  // regressors (constant and 1/t_rep)
  const double a = 1.0 / r.parameters[0];
  const double b = p_ex / r.parameters[1];
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double resid = 1.0 / d.y[i] - (a + b / d.x[i][0]);
    s0 += resid;
    s1 += resid / d.x[i][0];
  }
  CHECK(std::abs(s0) < 1e-10);
  CHECK(std::abs(s1) < 1e-8);
}

TEST_CASE("spin relaxation fit recovers planted values within 3 sigma") {
  const double t1 = 12.2, c = 390.0, p_ex = 0.5;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> noise(0.0, 0.1);
  DataSeries d;
  d.abscissa_kind = "t_rep_s";
  for (double t_rep : {1e-3, 3e-3, 10e-3, 30e-3, 100e-3}) {
    const double y = 1.0 / (1.0 / t1 + p_ex / (t_rep * c));
    d.x.push_back(Eigen::VectorXd::Constant(1, t_rep));
    d.y.push_back(y * (1.0 + noise(rng)));
    d.sigma.push_back(0.1 * y);
  }
  const FitReport r = fit_spin_relaxation(d, p_ex);
  CHECK(std::abs(r.parameters[0] - t1) < 3.0 * r.uncertainties[0]);
  CHECK(std::abs(r.parameters[1] - c) < 3.0 * r.uncertainties[1]);
}

TEST_CASE("spin relaxation fit flags a negative dark rate") {
  // rates consistent with a + b/t_rep, a < 0
  const double a = -0.01, b = 2e-5;
  DataSeries d;
  d.abscissa_kind = "t_rep_s";
  for (double t_rep : {0.5e-3, 0.8e-3, 1.2e-3, 1.5e-3}) {
    d.x.push_back(Eigen::VectorXd::Constant(1, t_rep));
    d.y.push_back(1.0 / (a + b / t_rep));
  }
  const FitReport r = fit_spin_relaxation(d, 0.5);
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings[0] == "dark relaxation unresolved");

  DataSeries tiny;
  tiny.abscissa_kind = "t_rep_s";
  tiny.x = {Eigen::VectorXd::Constant(1, 1e-3),
            Eigen::VectorXd::Constant(1, 2e-3)};
  tiny.y = {1.0, 2.0};
  CHECK_THROWS_AS(fit_spin_relaxation(tiny, 0.5), std::invalid_argument);
}
