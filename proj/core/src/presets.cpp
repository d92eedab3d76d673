#include "spinread/presets.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

namespace spinread {

namespace {

constexpr double kDeg = M_PI / 180.0;
// 1536.48 nm transition
constexpr double kOpticalFrequencyHz = 2.99792458e8 / 1536.48e-9;
constexpr double kGamma0Hz = 1.0 / 11.4e-3;

IonCavityParams make_cavity(double purcell, double q, double c0, double eta,
                            double eta_cav, double snr) {
  IonCavityParams p;
  p.purcell_max = purcell;
  p.kappa_hz = kOpticalFrequencyHz / q;
  p.cavity_detuning_hz = 0.0;
  p.c0 = c0;
  p.eta = eta;
  p.eta_cav = eta_cav;
  p.snr = snr;
  p.gamma0_hz = kGamma0Hz;
  return p;
}

IonPreset make_preset(std::string name, double purcell, double q, double c,
                      double eta, double eta_cav, double snr, double p_ex,
                      double t_rep_s, double t1_dark_s, std::string notes) {
  IonPreset p;
  p.name = std::move(name);
  p.cavity = make_cavity(purcell, q, 2.0, eta, eta_cav, snr);
  p.quality_factor = q;
  p.cyclicity = c;
  p.p_ex = p_ex;
  p.t_rep_s = t_rep_s;
  p.t1_dark_s = t1_dark_s;
  p.notes = std::move(notes);
  return p;
}

const std::vector<IonPreset>& all_presets() {
  static const std::vector<IonPreset> presets = {
      make_preset("ion1_fig3", 703, 6.6e4, 1500, 0.028, 0.063, 14, 0.5,
                  60e-6, 0.5,
                  "single-shot readout working point; SNR limited by a "
                  "timing error; the unmeasured dark spin lifetime is set "
                  "to 0.5 s, which reproduces the observed fixed-window "
                  "readout fidelity"),
      make_preset("ion1_fig2", 463, 4.3e4, 1260, 0.020, 0.045, 10, 0.5,
                  60e-6, 0.5, "angle-sweep characterization point"),
      make_preset("ion2", 189, 7.3e4, 390, 0.037, 0.088, 20, 0.5, 60e-6,
                  12.2, "second cavity; used for detuning and field sweeps"),
      make_preset("ion3", 536, 4.8e4, 620, 0.038, 0.159, 20, 0.5, 60e-6,
                  2.5, ""),
      make_preset("improved", 5300, 5e5, 1500, 0.201, 0.5, 20, 1.0, 10e-6,
                  12.2,
                  "projection: internal Q = 1e6 critically coupled "
                  "(eta_cav = 0.5), same fiber-waveguide coupling (0.6) and "
                  "detector quantum efficiency (0.67) giving eta = 0.201; "
                  "pi-pulse excitation (p_ex = 1); repetition shortened to "
                  "10 us to follow the faster Purcell-enhanced decay"),
  };
  return presets;
}

}  // namespace

SimConfig IonPreset::sim_config(std::size_t n_pulses,
                                std::uint64_t seed) const {
  SimConfig cfg;
  cfg.n_pulses = n_pulses;
  cfg.t_rep_s = t_rep_s;
  cfg.p_ex = p_ex;
  cfg.cyclicity = cyclicity;
  cfg.eta = cavity.eta;
  cfg.t1_dark_s = t1_dark_s;
  cfg.dark_counts_per_window = p_ex * cavity.eta / cavity.snr;
  cfg.seed = seed;
  return cfg;
}

const IonPreset& preset(const std::string& name) {
  for (const auto& p : all_presets()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : all_presets()) names.push_back(p.name);
  return names;
}

GTensor default_ground_tensor() {
  return GTensor::from_principal(
      Eigen::Vector3d(14.65, 1.80, 0.56),
      Eigen::Vector3d(287.3 * kDeg, 38.0 * kDeg, 98.4 * kDeg));
}

GTensor default_excited_tensor() {
  // same frame rotated 15 degrees about the shared third principal axis
  return GTensor::from_principal(
      Eigen::Vector3d(12.97, 0.85, 0.25),
      Eigen::Vector3d(287.3 * kDeg, 38.0 * kDeg, (98.4 + 15.0) * kDeg));
}

CouplingMatrix fitted_coupling() {
  CouplingMatrix m;
  m.g_par = std::polar(1.0, -1.15);
  m.g_perp = std::polar(0.024, -1.476);
  m.reference = FieldOrientation{100.0, 90.0};
  return m;
}

}  // namespace spinread
