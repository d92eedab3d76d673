#pragma once

#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "spinread/field.hpp"
#include "spinread/g_tensor.hpp"

namespace spinread {

using Complex = std::complex<double>;
using Spinor = Eigen::Vector2cd;

// Bohr magneton expressed as a Zeeman frequency slope: 13.996 GHz/T.
inline constexpr double kBohrMagnetonHzPerGauss = 1.3996244936e6;

// Returned by ideal_cyclicity when the spin-flip channel vanishes.
inline constexpr double kCyclicitySaturation = 1e12;

struct ZeemanEigensystem {
  double splitting_hz = 0.0;  // E_up - E_down, >= 0
  Spinor up;                  // time-reversal partner of down
  Spinor down;                // phase-fixed: first nonzero amplitude real positive
};

// Zeeman splitting mu_B * B * |g n| with S = sigma/2. Well-defined at B = 0.
double zeeman_splitting_hz(const GTensor& g, const FieldOrientation& field);

// Eigenpairs of H_Z = mu_B B.g.S. Throws on zero field (degenerate doublet).
ZeemanEigensystem zeeman_eigensystem(const GTensor& g,
                                     const FieldOrientation& field);

struct TransitionFrequencies {
  double a, b, c, d;  // spin-conserving A/B, spin-flipping C/D
};

// The four optical lines about the zero-field frequency f0.
TransitionFrequencies transition_frequencies(const GTensor& g_ground,
                                             const GTensor& g_excited,
                                             const FieldOrientation& field,
                                             double f0_hz);

// (alpha, beta) with |up(to)> = alpha |up(from)> + beta |down(from)>.
std::pair<Complex, Complex> overlap_coefficients(const GTensor& g,
                                                 const FieldOrientation& from,
                                                 const FieldOrientation& to);

// Cavity coupling pair at a reference field orientation. The upper-right
// block of the coupling Hamiltonian is [[g_par, g_perp], [-g_perp*, g_par*]].
struct CouplingMatrix {
  Complex g_par{1.0, 0.0};
  Complex g_perp{0.0, 0.0};
  FieldOrientation reference{100.0, 90.0};

  Eigen::Matrix2cd block() const {
    Eigen::Matrix2cd m;
    m << g_par, g_perp, -std::conj(g_perp), std::conj(g_par);
    return m;
  }
};

// Full transformed 2x2 coupling block at another orientation: rows indexed
// by (down_g, up_g), columns by (down_e, up_e) at the new orientation.
Eigen::Matrix2cd transformed_coupling(const CouplingMatrix& m,
                                      const GTensor& g_ground,
                                      const GTensor& g_excited,
                                      const FieldOrientation& orientation);

// (g_par', g_perp') at the new orientation.
std::pair<Complex, Complex> coupling_at(const CouplingMatrix& m,
                                        const GTensor& g_ground,
                                        const GTensor& g_excited,
                                        const FieldOrientation& orientation);

// C = 1 + |g_par|^2 / |g_perp|^2, saturating at kCyclicitySaturation.
double ideal_cyclicity(Complex g_par, Complex g_perp);

// C = 1 + (1 - 1/c0 + p_par) / (1/c0 + p_perp).
double corrected_cyclicity(double p_par, double p_perp, double c0);

// Lorentzian detuning rolloff P(delta) = p_max / (1 + (2 delta/kappa)^2).
double detuned_purcell(double p_max, double delta_hz, double kappa_hz);

struct IonCavityParams {
  double purcell_max = 0.0;       // P at zero cavity detuning
  double kappa_hz = 0.0;          // cavity linewidth
  double cavity_detuning_hz = 0.0;
  double c0 = 1.0;                // bare (cavity-off) cyclicity
  double eta = 0.0;               // total collection efficiency
  double eta_cav = 0.0;
  double snr = 0.0;               // bright-window signal over background
  double gamma0_hz = 0.0;         // free-space decay rate

  void validate() const;
};

enum class ExcitedStateAverage { kCyclicities, kRates };

// Cyclicity with the Purcell factor rolled off at each transition's
// detuning from the cavity, averaged over the two excited states.
double cyclicity_at_detuning(
    const IonCavityParams& params, const CouplingMatrix& m,
    const GTensor& g_ground, const GTensor& g_excited,
    const FieldOrientation& orientation, double delta_cav_hz,
    ExcitedStateAverage avg = ExcitedStateAverage::kCyclicities);

struct CyclicitySearchResult {
  FieldOrientation orientation;
  double min_g_perp = 0.0;
  double cyclicity = 0.0;
};

// Global search for the orientation minimizing |g_perp|: grid scan plus
// derivative-free refinement.
CyclicitySearchResult max_cyclicity_search(const CouplingMatrix& m,
                                           const GTensor& g_ground,
                                           const GTensor& g_excited,
                                           double grid_deg = 2.0);

namespace detail {
// (down, up) eigenpair with up the exact time-reversal partner of down;
// used wherever the Kramers block structure must be preserved.
std::pair<Spinor, Spinor> kramers_pair(const GTensor& g,
                                       const FieldOrientation& field);
}  // namespace detail

}  // namespace spinread
