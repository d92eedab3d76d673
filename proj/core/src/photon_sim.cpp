#include "spinread/photon_sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace spinread {

void SimConfig::validate() const {
  if (n_pulses == 0 || n_pulses % 2 != 0) {
    throw std::invalid_argument("SimConfig: n_pulses must be even and > 0");
  }
  if (p_ex < 0.0 || p_ex > 1.0) {
    throw std::invalid_argument("SimConfig: p_ex must be in [0,1]");
  }
  if (cyclicity < 1.0) {
    throw std::invalid_argument("SimConfig: cyclicity must be >= 1");
  }
  if (eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("SimConfig: eta must be in [0,1]");
  }
  if (t1_dark_s <= 0.0) {
    throw std::invalid_argument("SimConfig: t1_dark must be > 0");
  }
  if (t_rep_s <= 0.0) {
    throw std::invalid_argument("SimConfig: t_rep must be > 0");
  }
  if (dark_counts_per_window < 0.0) {
    throw std::invalid_argument("SimConfig: negative dark counts");
  }
}

PhotonRecord simulate_record(const SimConfig& cfg) {
  cfg.validate();
  PhotonRecord rec;
  rec.config = cfg;
  rec.counts_a.resize(cfg.n_pulses / 2, 0);
  rec.counts_b.resize(cfg.n_pulses / 2, 0);
  if (cfg.record_truth) rec.truth_spin.resize(cfg.n_pulses, 0);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::poisson_distribution<int> dark(cfg.dark_counts_per_window);

  const double flip_prob = 1.0 / cfg.cyclicity;
  const double relax_prob =
      0.5 * (1.0 - std::exp(-cfg.t_rep_s / cfg.t1_dark_s));

  // start unpolarized
  bool up = uni(rng) < 0.5;

  for (std::size_t k = 0; k < cfg.n_pulses; ++k) {
    const bool drive_a = (k % 2 == 0);
    if (cfg.record_truth) rec.truth_spin[k] = up ? 1 : 0;

    int count = 0;
    if (drive_a == up && uni(rng) < cfg.p_ex) {
      // excited; the scattered photon either conserves the spin (and can
      // be collected) or flips it via the C/D channel
      if (uni(rng) < flip_prob) {
        up = !up;
      } else if (uni(rng) < cfg.eta) {
        ++count;
      }
    }
    if (relax_prob > 0.0 && uni(rng) < relax_prob) up = !up;
    if (cfg.dark_counts_per_window > 0.0) count += dark(rng);

    if (drive_a) {
      rec.counts_a[k / 2] = static_cast<std::uint16_t>(count);
    } else {
      rec.counts_b[k / 2] = static_cast<std::uint16_t>(count);
    }
  }
  return rec;
}

double effective_snr(const SimConfig& cfg) {
  if (cfg.dark_counts_per_window <= 0.0) return 1e12;
  return cfg.p_ex * cfg.eta / cfg.dark_counts_per_window;
}

void RabiConfig::validate() const {
  for (double t : pulse_durations_s) {
    if (t < 0.0) throw std::invalid_argument("RabiConfig: negative duration");
  }
  if (readout_fidelity < 0.5 || readout_fidelity > 1.0) {
    throw std::invalid_argument("RabiConfig: readout_fidelity in [0.5,1]");
  }
  if (shots_per_point == 0) {
    throw std::invalid_argument("RabiConfig: shots_per_point must be > 0");
  }
  if (t2_star_s <= 0.0) {
    throw std::invalid_argument("RabiConfig: t2_star must be > 0");
  }
}

std::vector<RabiPoint> simulate_rabi(const RabiConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double err = 1.0 - cfg.readout_fidelity;

  std::vector<RabiPoint> out;
  out.reserve(cfg.pulse_durations_s.size());
  for (double t : cfg.pulse_durations_s) {
    const double envelope = std::exp(-(t / cfg.t2_star_s) * (t / cfg.t2_star_s));
    const double p_true =
        0.5 - 0.5 * std::cos(2.0 * M_PI * cfg.rabi_frequency_hz * t) * envelope;
    std::size_t ups = 0;
    for (std::size_t s = 0; s < cfg.shots_per_point; ++s) {
      bool outcome = uni(rng) < p_true;
      if (uni(rng) < err) outcome = !outcome;  // initialization misreport
      if (uni(rng) < err) outcome = !outcome;  // final readout misreport
      if (outcome) ++ups;
    }
    const double m = static_cast<double>(ups) / cfg.shots_per_point;
    out.push_back(
        {t, m, std::sqrt(m * (1.0 - m) / cfg.shots_per_point)});
  }
  return out;
}

}  // namespace spinread
