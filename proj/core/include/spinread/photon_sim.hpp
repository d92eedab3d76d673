#pragma once

#include <cstdint>
#include <vector>

namespace spinread {

// Pulsed-fluorescence measurement settings. Pulses alternate between the
// two spin-conserving lines: even pulse indices drive A, odd drive B.
struct SimConfig {
  std::size_t n_pulses = 0;  // must be even
  double t_rep_s = 60e-6;
  double p_ex = 0.5;
  double cyclicity = 1.0;
  double eta = 1.0;       // per-emitted-photon detection probability
  double t1_dark_s = 1e9;
  double dark_counts_per_window = 0.0;
  std::uint64_t seed = 0;
  bool record_truth = true;

  void validate() const;
};

struct PhotonRecord {
  std::vector<std::uint16_t> counts_a;  // windows after A pulses (even indices)
  std::vector<std::uint16_t> counts_b;  // windows after B pulses (odd indices)
  std::vector<std::uint8_t> truth_spin; // per pulse, 1 = up; empty if not kept
  SimConfig config;

  std::size_t n_pulses() const { return counts_a.size() + counts_b.size(); }
  bool has_truth() const { return !truth_spin.empty(); }

  // integrated count of the window following pulse k
  std::uint16_t window_count(std::size_t k) const {
    return (k % 2 == 0) ? counts_a[k / 2] : counts_b[k / 2];
  }
};

// Monte-Carlo pulsed photon record: hidden two-state spin with optical
// pumping (flip probability 1/C per excitation), symmetric intrinsic
// relaxation, finite collection efficiency and Poisson dark counts.
// Bit-identical for identical config + seed.
PhotonRecord simulate_record(const SimConfig& cfg);

// Bright-window signal over background, p_ex * eta / dark.
double effective_snr(const SimConfig& cfg);

struct RabiConfig {
  std::vector<double> pulse_durations_s;
  double rabi_frequency_hz = 0.0;
  double t2_star_s = 1e9;
  double readout_fidelity = 1.0;  // in [0.5, 1]
  std::size_t shots_per_point = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RabiPoint {
  double duration_s;
  double p_up;       // empirical mean
  double std_error;  // binomial
};

// Phenomenological Rabi contrast: true P(up) = 0.5 - 0.5 cos(2 pi f t)
// exp(-(t/T2*)^2); initial and final readout each misreport independently
// with probability 1 - readout_fidelity.
std::vector<RabiPoint> simulate_rabi(const RabiConfig& cfg);

}  // namespace spinread
