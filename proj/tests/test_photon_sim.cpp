#include <doctest.h>

#include <cmath>
#include <numeric>

#include <spinread/photon_sim.hpp>
#include <spinread/presets.hpp>

using namespace spinread;

namespace {

SimConfig basic_config(std::size_t n, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n_pulses = n;
  cfg.p_ex = 0.5;
  cfg.cyclicity = 660.0;
  cfg.eta = 0.03;
  cfg.t1_dark_s = 1e9;
  cfg.dark_counts_per_window = 0.001;
  cfg.seed = seed;
  return cfg;
}

double mean_counts(const PhotonRecord& r) {
  double sum = 0.0;
  for (auto c : r.counts_a) sum += c;
  for (auto c : r.counts_b) sum += c;
  return sum / static_cast<double>(r.n_pulses());
}

}  // namespace

TEST_CASE("config validation") {
  SimConfig cfg = basic_config(1000, 1);
  CHECK_NOTHROW(cfg.validate());
  cfg.n_pulses = 999;  // must be even
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = basic_config(1000, 1);
  cfg.p_ex = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = basic_config(1000, 1);
  cfg.cyclicity = 0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = basic_config(1000, 1);
  cfg.eta = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = basic_config(1000, 1);
  cfg.dark_counts_per_window = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("records are bit-identical for identical config and seed") {
  const SimConfig cfg = basic_config(20000, 42);
  const PhotonRecord a = simulate_record(cfg);
  const PhotonRecord b = simulate_record(cfg);
  CHECK(a.counts_a == b.counts_a);
  CHECK(a.counts_b == b.counts_b);
  CHECK(a.truth_spin == b.truth_spin);

  SimConfig other = cfg;
  other.seed = 43;
  const PhotonRecord c = simulate_record(other);
  CHECK(a.counts_a != c.counts_a);
}

TEST_CASE("record shape and truth bookkeeping") {
  SimConfig cfg = basic_config(1000, 7);
  PhotonRecord r = simulate_record(cfg);
  CHECK(r.counts_a.size() == 500);
  CHECK(r.counts_b.size() == 500);
  CHECK(r.n_pulses() == 1000);
  CHECK(r.has_truth());
  CHECK(r.truth_spin.size() == 1000);
  CHECK(r.window_count(0) == r.counts_a[0]);
  CHECK(r.window_count(1) == r.counts_b[0]);

  cfg.record_truth = false;
  r = simulate_record(cfg);
  CHECK_FALSE(r.has_truth());
}

TEST_CASE("mean detected photons per pulse is p_ex * eta / 2") {
  // both spin states spend half the time addressed; with eta = 1 and no
  // dark counts the per-pulse average is p_ex / 2 = 0.25
  SimConfig cfg;
  cfg.n_pulses = 200000;
  cfg.p_ex = 0.5;
  cfg.cyclicity = 660.0;
  cfg.eta = 1.0;
  cfg.t1_dark_s = 1e9;
  cfg.dark_counts_per_window = 0.0;
  cfg.seed = 9;
  const PhotonRecord r = simulate_record(cfg);
  CHECK(mean_counts(r) == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("with eta = 1 and no dark counts, a frozen spin yields one photon "
          "per matched excitation") {
  SimConfig cfg;
  cfg.n_pulses = 50000;
  cfg.p_ex = 0.7;
  cfg.cyclicity = 1e12;  // effectively no optical pumping
  cfg.eta = 1.0;
  cfg.t1_dark_s = 1e18;
  cfg.dark_counts_per_window = 0.0;
  cfg.seed = 13;
  const PhotonRecord r = simulate_record(cfg);
  REQUIRE(r.has_truth());
  // spin never flips
  for (std::size_t k = 1; k < r.truth_spin.size(); ++k) {
    REQUIRE(r.truth_spin[k] == r.truth_spin[0]);
  }
  // unmatched windows are strictly empty; matched windows fire at p_ex
  std::size_t matched_sum = 0, matched_n = 0;
  for (std::size_t k = 0; k < r.n_pulses(); ++k) {
    const bool matched = (r.truth_spin[k] == 1) == (k % 2 == 0);
    if (matched) {
      CHECK(r.window_count(k) <= 1);
      matched_sum += r.window_count(k);
      ++matched_n;
    } else {
      CHECK(r.window_count(k) == 0);
    }
  }
  const double rate =
      static_cast<double>(matched_sum) / static_cast<double>(matched_n);
  CHECK(rate == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("mean dwell time matches the per-pulse flip rate") {
  SimConfig cfg;
  cfg.n_pulses = 400000;
  cfg.p_ex = 0.5;
  cfg.cyclicity = 100.0;
  cfg.eta = 0.05;
  cfg.t_rep_s = 60e-6;
  cfg.t1_dark_s = 5.0;
  cfg.dark_counts_per_window = 0.0;
  cfg.seed = 21;
  const PhotonRecord r = simulate_record(cfg);
  std::size_t flips = 0;
  for (std::size_t k = 1; k < r.truth_spin.size(); ++k) {
    if (r.truth_spin[k] != r.truth_spin[k - 1]) ++flips;
  }
  const double mean_dwell =
      static_cast<double>(r.n_pulses()) / static_cast<double>(flips);
  const double rate = cfg.p_ex / (2.0 * cfg.cyclicity) +
                      (1.0 - std::exp(-cfg.t_rep_s / cfg.t1_dark_s)) / 2.0;
  CHECK(mean_dwell == doctest::Approx(1.0 / rate).epsilon(0.10));
}

TEST_CASE("dwell time shortens when intrinsic relaxation dominates") {
  SimConfig slow = basic_config(200000, 3);
  SimConfig fast = slow;
  fast.t1_dark_s = 50e-3;
  auto flips = [](const PhotonRecord& r) {
    std::size_t n = 0;
    for (std::size_t k = 1; k < r.truth_spin.size(); ++k) {
      if (r.truth_spin[k] != r.truth_spin[k - 1]) ++n;
    }
    return n;
  };
  CHECK(flips(simulate_record(fast)) > 2 * flips(simulate_record(slow)));
}

TEST_CASE("dark counts raise the background to the configured level") {
  SimConfig cfg = basic_config(200000, 30);
  cfg.eta = 0.0;  // background only
  cfg.dark_counts_per_window = 0.01;
  const PhotonRecord r = simulate_record(cfg);
  CHECK(mean_counts(r) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("effective SNR") {
  SimConfig cfg;
  cfg.p_ex = 0.5;
  cfg.eta = 0.028;
  cfg.dark_counts_per_window = 0.001;
  CHECK(effective_snr(cfg) == doctest::Approx(14.0).epsilon(1e-12));
  cfg.dark_counts_per_window = 0.0;
  CHECK(effective_snr(cfg) == kCyclicitySaturation);
}

TEST_CASE("Rabi contrast is reduced by readout infidelity as (2F-1)^2") {
  RabiConfig cfg;
  cfg.rabi_frequency_hz = 1e6;
  cfg.t2_star_s = 1e9;
  cfg.readout_fidelity = 0.95;
  cfg.shots_per_point = 200000;
  cfg.seed = 17;
  // half period: true P(up) = 1
  cfg.pulse_durations_s = {0.0, 0.5e-6};
  const auto pts = simulate_rabi(cfg);
  REQUIRE(pts.size() == 2);
  const double contrast = pts[1].p_up - pts[0].p_up;
  CHECK(contrast == doctest::Approx(0.81).epsilon(0.02));
  CHECK(pts[0].std_error > 0.0);
  CHECK(pts[0].std_error < 0.01);
}

TEST_CASE("Rabi envelope decays with T2*") {
  RabiConfig cfg;
  cfg.rabi_frequency_hz = 1e6;
  cfg.t2_star_s = 2e-6;
  cfg.readout_fidelity = 1.0;
  cfg.shots_per_point = 100000;
  cfg.seed = 8;
  cfg.pulse_durations_s = {0.5e-6, 4.5e-6};  // both at oscillation maxima
  const auto pts = simulate_rabi(cfg);
  CHECK(pts[0].p_up > 0.9);
  CHECK(pts[1].p_up < 0.6);
  CHECK(pts[1].p_up > 0.4);

  cfg.readout_fidelity = 0.4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
