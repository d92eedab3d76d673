#include "spinread/spin_model.hpp"

#include <cmath>
#include <stdexcept>

#include "spinread/fitting.hpp"

namespace spinread {

namespace {

Eigen::Matrix2cd pauli_dot(const Eigen::Vector3d& b) {
  Eigen::Matrix2cd h;
  h << Complex(b.z(), 0.0), Complex(b.x(), -b.y()),
       Complex(b.x(), b.y()), Complex(-b.z(), 0.0);
  return h;
}

Spinor fix_phase(Spinor v) {
  const int lead = std::abs(v(0)) > 1e-14 ? 0 : 1;
  v *= std::polar(1.0, -std::arg(v(lead)));
  // scrub residual imaginary dust on the leading amplitude
  v(lead) = Complex(std::abs(v(lead)), 0.0);
  return v;
}

}  // namespace

double zeeman_splitting_hz(const GTensor& g, const FieldOrientation& field) {
  if (field.magnitude_gauss == 0.0) return 0.0;
  return kBohrMagnetonHzPerGauss * field.magnitude_gauss *
         g.effective_g(field.unit_vector());
}

namespace detail {

std::pair<Spinor, Spinor> kramers_pair(const GTensor& g,
                                       const FieldOrientation& field) {
  if (field.magnitude_gauss <= 0.0) {
    throw std::invalid_argument(
        "zeeman_eigensystem: degenerate doublet (zero field)");
  }
  const Eigen::Vector3d b = g.matrix() * field.unit_vector();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * pauli_dot(b));
  Spinor down = fix_phase(es.eigenvectors().col(0));  // lower energy
  Spinor up;
  up << std::conj(down(1)), -std::conj(down(0));
  return {down, up};
}

}  // namespace detail

ZeemanEigensystem zeeman_eigensystem(const GTensor& g,
                                     const FieldOrientation& field) {
  auto [down, up] = detail::kramers_pair(g, field);
  return {zeeman_splitting_hz(g, field), up, down};
}

TransitionFrequencies transition_frequencies(const GTensor& g_ground,
                                             const GTensor& g_excited,
                                             const FieldOrientation& field,
                                             double f0_hz) {
  if (field.magnitude_gauss < 0.0) {
    throw std::invalid_argument("transition_frequencies: negative field");
  }
  const double dg = zeeman_splitting_hz(g_ground, field);
  const double de = zeeman_splitting_hz(g_excited, field);
  return {f0_hz + 0.5 * (de - dg), f0_hz - 0.5 * (de - dg),
          f0_hz + 0.5 * (de + dg), f0_hz - 0.5 * (de + dg)};
}

std::pair<Complex, Complex> overlap_coefficients(const GTensor& g,
                                                 const FieldOrientation& from,
                                                 const FieldOrientation& to) {
  auto [down_f, up_f] = detail::kramers_pair(g, from);
  auto [down_t, up_t] = detail::kramers_pair(g, to);
  return {up_f.dot(up_t), down_f.dot(up_t)};
}

Eigen::Matrix2cd transformed_coupling(const CouplingMatrix& m,
                                      const GTensor& g_ground,
                                      const GTensor& g_excited,
                                      const FieldOrientation& orientation) {
  FieldOrientation ref = m.reference;
  if (ref.magnitude_gauss <= 0.0) ref.magnitude_gauss = 1.0;
  FieldOrientation target = orientation;
  if (target.magnitude_gauss <= 0.0) target.magnitude_gauss = 1.0;

  auto [dg0, ug0] = detail::kramers_pair(g_ground, ref);
  auto [de0, ue0] = detail::kramers_pair(g_excited, ref);
  auto [dg1, ug1] = detail::kramers_pair(g_ground, target);
  auto [de1, ue1] = detail::kramers_pair(g_excited, target);

  Eigen::Matrix2cd u_g, u_e;
  u_g << dg0.dot(dg1), dg0.dot(ug1), ug0.dot(dg1), ug0.dot(ug1);
  u_e << de0.dot(de1), de0.dot(ue1), ue0.dot(de1), ue0.dot(ue1);
  return u_g.adjoint() * m.block() * u_e;
}

std::pair<Complex, Complex> coupling_at(const CouplingMatrix& m,
                                        const GTensor& g_ground,
                                        const GTensor& g_excited,
                                        const FieldOrientation& orientation) {
  const Eigen::Matrix2cd t =
      transformed_coupling(m, g_ground, g_excited, orientation);
  return {t(0, 0), t(0, 1)};
}

double ideal_cyclicity(Complex g_par, Complex g_perp) {
  const double par2 = std::norm(g_par);
  const double perp2 = std::norm(g_perp);
  if (par2 == 0.0 && perp2 == 0.0) {
    throw std::invalid_argument("ideal_cyclicity: zero coupling");
  }
  if (perp2 == 0.0) return kCyclicitySaturation;
  return std::min(1.0 + par2 / perp2, kCyclicitySaturation);
}

double corrected_cyclicity(double p_par, double p_perp, double c0) {
  if (c0 < 1.0) {
    throw std::invalid_argument("corrected_cyclicity: c0 must be >= 1");
  }
  if (p_par < 0.0 || p_perp < 0.0) {
    throw std::invalid_argument("corrected_cyclicity: negative Purcell");
  }
  // scaled by c0 so the zero-Purcell limit returns c0 exactly
  return 1.0 + (c0 - 1.0 + c0 * p_par) / (1.0 + c0 * p_perp);
}

double detuned_purcell(double p_max, double delta_hz, double kappa_hz) {
  if (kappa_hz <= 0.0) {
    throw std::invalid_argument("detuned_purcell: kappa must be positive");
  }
  const double x = 2.0 * delta_hz / kappa_hz;
  return p_max / (1.0 + x * x);
}

void IonCavityParams::validate() const {
  if (purcell_max < 0.0 || kappa_hz < 0.0 || eta < 0.0 || eta_cav < 0.0 ||
      snr < 0.0 || gamma0_hz < 0.0) {
    throw std::invalid_argument("IonCavityParams: negative parameter");
  }
  if (eta > 1.0 || eta_cav > 1.0) {
    throw std::invalid_argument("IonCavityParams: efficiency > 1");
  }
  if (c0 < 1.0) {
    throw std::invalid_argument("IonCavityParams: c0 must be >= 1");
  }
}

double cyclicity_at_detuning(const IonCavityParams& params,
                             const CouplingMatrix& m, const GTensor& g_ground,
                             const GTensor& g_excited,
                             const FieldOrientation& orientation,
                             double delta_cav_hz, ExcitedStateAverage avg) {
  params.validate();
  auto [gp, gt] = coupling_at(m, g_ground, g_excited, orientation);
  const double s = std::norm(gp) + std::norm(gt);
  const double p_par = params.purcell_max * std::norm(gp) / s;
  const double p_perp = params.purcell_max * std::norm(gt) / s;

  const double dg = zeeman_splitting_hz(g_ground, orientation);
  const double de = zeeman_splitting_hz(g_excited, orientation);
  // line offsets from the zero-field frequency; cavity sits at delta_cav
  const double d_a = 0.5 * (de - dg) - delta_cav_hz;
  const double d_b = -0.5 * (de - dg) - delta_cav_hz;
  const double d_c = 0.5 * (de + dg) - delta_cav_hz;
  const double d_d = -0.5 * (de + dg) - delta_cav_hz;

  const auto roll = [&](double d) {
    return detuned_purcell(1.0, d, params.kappa_hz);
  };

  if (avg == ExcitedStateAverage::kCyclicities) {
    // upper excited state decays on A (conserving) and C (flipping),
    // lower on B and D
    const double c_up =
        corrected_cyclicity(p_par * roll(d_a), p_perp * roll(d_c), params.c0);
    const double c_down =
        corrected_cyclicity(p_par * roll(d_b), p_perp * roll(d_d), params.c0);
    return 0.5 * (c_up + c_down);
  }
  // rate averaging: total AB rate over total CD rate
  return 1.0 + (2.0 * (1.0 - 1.0 / params.c0) +
                p_par * (roll(d_a) + roll(d_b))) /
                   (2.0 / params.c0 + p_perp * (roll(d_c) + roll(d_d)));
}

CyclicitySearchResult max_cyclicity_search(const CouplingMatrix& m,
                                           const GTensor& g_ground,
                                           const GTensor& g_excited,
                                           double grid_deg) {
  const auto objective = [&](double phi, double theta) {
    FieldOrientation o(phi, theta, 1.0);
    auto [gp, gt] = coupling_at(m, g_ground, g_excited, o);
    return std::norm(gt);
  };

  double best_phi = 0.0, best_theta = 90.0;
  double best = std::numeric_limits<double>::infinity();
  for (double phi = 0.0; phi < 360.0; phi += grid_deg) {
    for (double theta = 0.5 * grid_deg; theta < 180.0; theta += grid_deg) {
      const double v = objective(phi, theta);
      if (v < best) {
        best = v;
        best_phi = phi;
        best_theta = theta;
      }
    }
  }

  NelderMeadOptions opts;
  opts.initial_step = grid_deg;
  opts.max_iter = 6000;
  opts.f_tol = 0.0;      // drive purely on simplex size
  opts.x_tol = 1e-6;     // refines orientation to ~1e-4 degrees
  Eigen::VectorXd x0(2);
  x0 << best_phi, best_theta;
  const Eigen::VectorXd x = nelder_mead(
      [&](const Eigen::VectorXd& p) { return objective(p[0], p[1]); }, x0,
      opts);

  FieldOrientation o(x[0], x[1], 1.0);
  auto [gp, gt] = coupling_at(m, g_ground, g_excited, o);
  return {o, std::abs(gt), ideal_cyclicity(gp, gt)};
}

}  // namespace spinread
