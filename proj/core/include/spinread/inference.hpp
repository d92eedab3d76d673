#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spinread/photon_sim.hpp"

namespace spinread {

// Normalized intensity autocorrelation of the integrated per-pulse counts,
// defined only at integer pulse offsets.
struct G2Curve {
  std::vector<int> offsets;    // 1..max_offset
  std::vector<double> values;

  std::vector<std::pair<int, double>> even() const;
  std::vector<std::pair<int, double>> odd() const;
};

// g2(n) = <I_k I_{k+n}> / (<I_k> <I_{k+n}>), means taken per offset.
// Estimator bias is O(1/N).
G2Curve g2_discrete(const PhotonRecord& record, int max_offset);

enum class N0FitMode { kEven, kOdd, kDifference };

struct N0Fit {
  double n0 = 0.0;
  double amplitude = 0.0;
  double n0_uncertainty = 0.0;
  bool ok = false;
  std::string message;
};

// Exponential decay constant of the g2 deviation from 1. Difference mode
// fits g2_even - g2_odd, cancelling additive drift common to both parities.
N0Fit fit_n0(const G2Curve& curve, N0FitMode mode);

// C = p_ex / (1 - exp(-1/n0)); reduces to p_ex * n0 for large n0.
double cyclicity_from_n0(double n0, double p_ex);

struct HmmParams {
  double flip_prob_per_pulse = 0.0;  // per direction
  double bright_mean = 0.0;          // expected counts, matched window
  double dark_mean = 0.0;            // expected counts, unmatched window
  double prior_up = 0.5;

  void validate() const;
  bool degenerate() const { return bright_mean <= dark_mean; }
};

// Exact two-state forward-backward smoothing with Poisson window emissions.
// Returns the marginal posterior P(up) at every pulse given the full record.
// Degenerate params (bright == dark) reproduce the prior everywhere.
std::vector<double> bayes_smoother(const PhotonRecord& record,
                                   const HmmParams& params);

enum class ReadoutTermination { kThreshold, kTimeout };

struct ReadoutResult {
  bool state_up = false;
  double confidence = 0.5;   // posterior probability of the chosen state
  std::size_t duration_pulses = 0;
  std::size_t start_pulse = 0;
  ReadoutTermination terminated_by = ReadoutTermination::kTimeout;
};

enum class MlEstimator {
  kStartState,    // posterior of the state at the start pulse given t' > t
  kCurrentState,  // plain forward filter tracking the current state
};

// Successive adaptive single-shot measurements tiling the record: each
// accumulates evidence forward until the posterior reaches f_target or
// max_pulses elapse, then the next measurement begins.
std::vector<ReadoutResult> adaptive_ml_readout(
    const PhotonRecord& record, const HmmParams& params, double f_target,
    std::size_t max_pulses, MlEstimator estimator = MlEstimator::kStartState);

enum class TieBreak { kPreviousState, kRandom };

struct FixedWindowResult {
  std::map<int, std::size_t> histogram;  // N_A - N_B per window
  int threshold = 0;
  double fidelity_vs_truth = -1.0;       // -1 when the record has no truth
  std::vector<bool> classifications;     // per window, true = up
};

// Classifies each consecutive window of `window` pulses by the sign of
// N_A - N_B; ties fall back to the previous window's state.
FixedWindowResult fixed_window_readout(const PhotonRecord& record,
                                       std::size_t window,
                                       TieBreak tie_break = TieBreak::kPreviousState,
                                       std::uint64_t tie_seed = 0);

struct ReadoutMetrics {
  int m_photons = 0;          // photons needed to reach f_target given snr
  double f_avg = 0.0;         // 1 - 1/(eta C)
  double t_meas_pulses = 0.0; // mean pulses per detected bright-line photon
};

ReadoutMetrics readout_metrics(double eta, double cyclicity, double p_ex,
                               double snr, double f_target);

}  // namespace spinread
