#pragma once

#include <string>
#include <vector>

#include "spinread/g_tensor.hpp"
#include "spinread/photon_sim.hpp"
#include "spinread/spin_model.hpp"

namespace spinread {

// A named measurement configuration: cavity/ion parameters plus the pulsed
// acquisition settings they were characterized with.
struct IonPreset {
  std::string name;
  IonCavityParams cavity;
  double quality_factor = 0.0;
  double cyclicity = 0.0;   // measured maximum at the working orientation
  double p_ex = 0.5;
  double t_rep_s = 60e-6;
  double t1_dark_s = 2.5;
  std::string notes;

  // Acquisition settings with dark counts inferred from the quoted SNR.
  SimConfig sim_config(std::size_t n_pulses, std::uint64_t seed) const;
};

// Known preset names: ion1_fig3, ion1_fig2, ion2, ion3, improved.
const IonPreset& preset(const std::string& name);
std::vector<std::string> preset_names();

// Principal g-values (14.65, 1.80, 0.56) ground / (12.97, 0.85, 0.25)
// excited, with orientations chosen to reproduce the measured Zeeman
// slopes of 13.1 MHz/G (C-D) and 2.5 MHz/G (A-B) at (phi, theta) =
// (100, 90) degrees. The excited frame is the ground frame rotated by
// 15 degrees about their shared third principal axis.
GTensor default_ground_tensor();
GTensor default_excited_tensor();

// Cavity-polarization coupling fitted to the measured angle dependence,
// referenced to (100, 90) degrees.
CouplingMatrix fitted_coupling();

}  // namespace spinread
