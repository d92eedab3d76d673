#include "spinread/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "spinread/fitting.hpp"

namespace spinread {

std::vector<std::pair<int, double>> G2Curve::even() const {
  std::vector<std::pair<int, double>> out;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (offsets[i] % 2 == 0) out.emplace_back(offsets[i], values[i]);
  }
  return out;
}

std::vector<std::pair<int, double>> G2Curve::odd() const {
  std::vector<std::pair<int, double>> out;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (offsets[i] % 2 != 0) out.emplace_back(offsets[i], values[i]);
  }
  return out;
}

G2Curve g2_discrete(const PhotonRecord& record, int max_offset) {
  const std::size_t n = record.n_pulses();
  if (n == 0) throw std::invalid_argument("g2_discrete: empty record");
  if (max_offset < 1 || static_cast<std::size_t>(max_offset) >= n / 2) {
    throw std::invalid_argument("g2_discrete: max_offset must be in [1, n/2)");
  }

  std::vector<double> counts(n);
  std::vector<std::size_t> nonzero;
  for (std::size_t k = 0; k < n; ++k) {
    counts[k] = record.window_count(k);
    if (counts[k] > 0) nonzero.push_back(k);
  }
  if (nonzero.empty()) throw std::invalid_argument("g2_discrete: all-zero record");

  // per-parity prefix sums; normalizing each channel against its own
  // per-offset means cancels the spurious floor a finite record's A/B
  // brightness asymmetry would otherwise leave at all offsets
  std::vector<double> prefix_even(n + 1, 0.0), prefix_odd(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    prefix_even[k + 1] = prefix_even[k] + (k % 2 == 0 ? counts[k] : 0.0);
    prefix_odd[k + 1] = prefix_odd[k] + (k % 2 != 0 ? counts[k] : 0.0);
  }
  const auto parity_mean = [&](std::size_t begin, std::size_t end,
                               bool even_parity) {
    const auto& pre = even_parity ? prefix_even : prefix_odd;
    std::size_t m = end / 2 - begin / 2;
    if (even_parity) {
      m = (end + 1) / 2 - (begin + 1) / 2;
    }
    return m > 0 ? (pre[end] - pre[begin]) / m : 0.0;
  };

  G2Curve curve;
  curve.offsets.reserve(max_offset);
  curve.values.reserve(max_offset);
  for (int off = 1; off <= max_offset; ++off) {
    const std::size_t pairs = n - off;
    // split the correlation sum by the parity of the leading index
    double cross_from_even = 0.0, cross_from_odd = 0.0;
    for (std::size_t k : nonzero) {
      if (k >= pairs) break;
      if (k % 2 == 0) {
        cross_from_even += counts[k] * counts[k + off];
      } else {
        cross_from_odd += counts[k] * counts[k + off];
      }
    }
    const std::size_t pairs_even = (pairs + 1) / 2;
    const std::size_t pairs_odd = pairs / 2;
    const double head_even = parity_mean(0, pairs, true);
    const double head_odd = parity_mean(0, pairs, false);
    const bool shifted_even = (off % 2 == 0);
    const double tail_of_even =
        parity_mean(off, n, shifted_even);       // partners of even k
    const double tail_of_odd =
        parity_mean(off, n, !shifted_even);      // partners of odd k
    double value = 0.0;
    int terms = 0;
    if (pairs_even > 0 && head_even > 0.0 && tail_of_even > 0.0) {
      value += cross_from_even / pairs_even / (head_even * tail_of_even);
      ++terms;
    }
    if (pairs_odd > 0 && head_odd > 0.0 && tail_of_odd > 0.0) {
      value += cross_from_odd / pairs_odd / (head_odd * tail_of_odd);
      ++terms;
    }
    curve.offsets.push_back(off);
    curve.values.push_back(terms > 0 ? value / terms
                                     : std::numeric_limits<double>::quiet_NaN());
  }
  return curve;
}

N0Fit fit_n0(const G2Curve& curve, N0FitMode mode) {
  std::vector<double> ns, ys;
  if (mode == N0FitMode::kDifference) {
    const auto ev = curve.even();
    const auto od = curve.odd();
    const std::size_t m = std::min(ev.size(), od.size());
    for (std::size_t i = 0; i < m; ++i) {
      // adjacent parity pair (2k+1, 2k+2) -> midpoint offset
      ns.push_back(0.5 * (ev[i].first + od[i].first));
      ys.push_back(ev[i].second - od[i].second);
    }
  } else {
    const auto pts = (mode == N0FitMode::kEven) ? curve.even() : curve.odd();
    for (const auto& [n, v] : pts) {
      ns.push_back(n);
      ys.push_back(std::abs(v - 1.0));
    }
  }
  if (ns.size() < 5) {
    throw std::invalid_argument("fit_n0: fewer than 5 usable offsets");
  }

  N0Fit result;

  // decay sanity check: first half must sit above the second half
  const std::size_t half = ns.size() / 2;
  double m1 = 0.0, m2 = 0.0, v2 = 0.0;
  for (std::size_t i = 0; i < half; ++i) m1 += ys[i];
  m1 /= half;
  for (std::size_t i = half; i < ns.size(); ++i) m2 += ys[i];
  m2 /= (ns.size() - half);
  for (std::size_t i = half; i < ns.size(); ++i) v2 += (ys[i] - m2) * (ys[i] - m2);
  v2 /= std::max<std::size_t>(1, ns.size() - half - 1);
  const double sem = std::sqrt(v2 / (ns.size() - half));
  if (!(m1 > m2 + 2.0 * sem)) {
    result.message = "no decaying signal";
    return result;
  }

  // Restrict the fit to the contiguous leading range where the (binned)
  // curve stays above twice the tail noise level. A pointwise cut would
  // keep only upward fluctuations at large offsets and bias n0 high.
  const std::size_t tail_start = ns.size() - std::max<std::size_t>(2, ns.size() / 4);
  double tm = 0.0, tv = 0.0;
  for (std::size_t i = tail_start; i < ns.size(); ++i) tm += ys[i];
  tm /= (ns.size() - tail_start);
  for (std::size_t i = tail_start; i < ns.size(); ++i) tv += (ys[i] - tm) * (ys[i] - tm);
  const double noise = std::sqrt(tv / std::max<std::size_t>(1, ns.size() - tail_start - 1));

  const std::size_t bin = std::max<std::size_t>(5, ns.size() / 40);
  std::vector<double> bn, by;  // bin centers and means
  std::size_t cut = ns.size();
  for (std::size_t b = 0; b + bin <= ns.size(); b += bin) {
    double mn = 0.0, my = 0.0;
    for (std::size_t i = b; i < b + bin; ++i) {
      mn += ns[i];
      my += ys[i];
    }
    mn /= bin;
    my /= bin;
    if (cut == ns.size() && noise > 0.0 && my < 2.0 * noise / std::sqrt(double(bin))) {
      cut = b;
    }
    if (cut == ns.size()) {
      bn.push_back(mn);
      by.push_back(my);
    }
  }
  if (cut < 5) {
    result.message = "insufficient signal above noise";
    return result;
  }
  const std::vector<double> fn(ns.begin(), ns.begin() + cut);
  const std::vector<double> fy(ys.begin(), ys.begin() + cut);

  // log-linear initialization on the binned means
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t np = 0;
  for (std::size_t i = 0; i < bn.size(); ++i) {
    if (by[i] <= 0.0) continue;
    const double ly = std::log(by[i]);
    sx += bn[i];
    sy += ly;
    sxx += bn[i] * bn[i];
    sxy += bn[i] * ly;
    ++np;
  }
  if (np < 3) {
    result.message = "insufficient positive signal";
    return result;
  }
  const double slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
  if (!(slope < 0.0)) {
    result.message = "no decaying signal";
    return result;
  }
  const double n0_init = -1.0 / slope;
  const double amp_init = std::exp((sy - slope * sx) / np);

  const auto model = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(fn.size());
    for (std::size_t i = 0; i < fn.size(); ++i) {
      r[i] = p[0] * std::exp(-fn[i] / p[1]) - fy[i];
    }
    return r;
  };
  Eigen::VectorXd p0(2);
  p0 << amp_init, n0_init;
  LeastSquaresOptions opts;
  opts.simplex.initial_step = 0.1 * n0_init;
  const FitReport fit = least_squares(model, p0, opts);

  if (!(fit.parameters[1] > 0.0)) {
    result.message = "fit converged to non-decaying solution";
    return result;
  }
  result.amplitude = fit.parameters[0];
  result.n0 = fit.parameters[1];
  result.n0_uncertainty = fit.uncertainties[1];
  result.ok = fit.converged;
  if (!fit.converged) result.message = "max iterations exhausted";
  return result;
}

double cyclicity_from_n0(double n0, double p_ex) {
  if (n0 <= 0.0) throw std::invalid_argument("cyclicity_from_n0: n0 must be > 0");
  return p_ex / (1.0 - std::exp(-1.0 / n0));
}

void HmmParams::validate() const {
  if (flip_prob_per_pulse < 0.0 || flip_prob_per_pulse > 1.0 ||
      prior_up < 0.0 || prior_up > 1.0) {
    throw std::invalid_argument("HmmParams: probability out of range");
  }
  if (dark_mean < 0.0 || bright_mean < dark_mean) {
    throw std::invalid_argument("HmmParams: need bright_mean >= dark_mean >= 0");
  }
}

namespace {

double poisson_pmf(int k, double mean) {
  if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
  double p = std::exp(-mean);
  for (int i = 1; i <= k; ++i) p *= mean / i;
  return p;
}

// emission likelihoods (down, up) for pulse k
std::pair<double, double> emission(const PhotonRecord& rec,
                                   const HmmParams& par, std::size_t k) {
  const bool drive_a = (k % 2 == 0);  // A drives the up manifold
  const int c = rec.window_count(k);
  const double matched = poisson_pmf(c, par.bright_mean);
  const double unmatched = poisson_pmf(c, par.dark_mean);
  return drive_a ? std::make_pair(unmatched, matched)
                 : std::make_pair(matched, unmatched);
}

}  // namespace

std::vector<double> bayes_smoother(const PhotonRecord& record,
                                   const HmmParams& params) {
  params.validate();
  const std::size_t n = record.n_pulses();
  if (params.degenerate()) {
    return std::vector<double>(n, params.prior_up);
  }
  const double q = params.flip_prob_per_pulse;

  std::vector<double> fwd_down(n), fwd_up(n);
  {
    auto [ed, eu] = emission(record, params, 0);
    double d = (1.0 - params.prior_up) * ed;
    double u = params.prior_up * eu;
    const double s = d + u;
    fwd_down[0] = s > 0.0 ? d / s : 0.5;
    fwd_up[0] = s > 0.0 ? u / s : 0.5;
  }
  for (std::size_t k = 1; k < n; ++k) {
    auto [ed, eu] = emission(record, params, k);
    double d = (fwd_down[k - 1] * (1.0 - q) + fwd_up[k - 1] * q) * ed;
    double u = (fwd_up[k - 1] * (1.0 - q) + fwd_down[k - 1] * q) * eu;
    const double s = d + u;
    fwd_down[k] = s > 0.0 ? d / s : 0.5;
    fwd_up[k] = s > 0.0 ? u / s : 0.5;
  }

  std::vector<double> post(n);
  double back_down = 1.0, back_up = 1.0;
  post[n - 1] = fwd_up[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    auto [ed, eu] = emission(record, params, k + 1);
    const double bd = (1.0 - q) * ed * back_down + q * eu * back_up;
    const double bu = (1.0 - q) * eu * back_up + q * ed * back_down;
    const double s = bd + bu;
    back_down = s > 0.0 ? bd / s : 0.5;
    back_up = s > 0.0 ? bu / s : 0.5;
    const double pd = fwd_down[k] * back_down;
    const double pu = fwd_up[k] * back_up;
    post[k] = (pd + pu) > 0.0 ? pu / (pd + pu) : 0.5;
  }
  return post;
}

std::vector<ReadoutResult> adaptive_ml_readout(const PhotonRecord& record,
                                               const HmmParams& params,
                                               double f_target,
                                               std::size_t max_pulses,
                                               MlEstimator estimator) {
  params.validate();
  if (f_target <= 0.5 || f_target >= 1.0) {
    throw std::invalid_argument("adaptive_ml_readout: f_target in (0.5, 1)");
  }
  if (max_pulses == 0) {
    throw std::invalid_argument("adaptive_ml_readout: max_pulses must be > 0");
  }
  const std::size_t n = record.n_pulses();
  const double q = params.flip_prob_per_pulse;

  std::vector<ReadoutResult> results;
  std::size_t start = 0;
  while (start < n) {
    // likelihood vectors over the current state, one per start-state
    // hypothesis; their sums give P(observations | start state)
    Eigen::Vector2d v_down(1.0, 0.0), v_up(0.0, 1.0);
    double post_up = params.prior_up;
    std::size_t t = start;
    ReadoutTermination term = ReadoutTermination::kTimeout;
    for (; t < n && t - start < max_pulses; ++t) {
      auto [ed, eu] = emission(record, params, t);
      const auto step = [&](Eigen::Vector2d& v) {
        if (t > start) {
          const Eigen::Vector2d w((1.0 - q) * v[0] + q * v[1],
                                  (1.0 - q) * v[1] + q * v[0]);
          v = w;
        }
        v[0] *= ed;
        v[1] *= eu;
      };
      step(v_down);
      step(v_up);
      const double scale = v_down.sum() + v_up.sum();
      if (scale > 0.0) {
        v_down /= scale;
        v_up /= scale;
      }
      double lu, ld;
      if (estimator == MlEstimator::kStartState) {
        lu = params.prior_up * v_up.sum();
        ld = (1.0 - params.prior_up) * v_down.sum();
      } else {
        lu = params.prior_up * v_up[1] + (1.0 - params.prior_up) * v_down[1];
        ld = params.prior_up * v_up[0] + (1.0 - params.prior_up) * v_down[0];
      }
      post_up = (lu + ld) > 0.0 ? lu / (lu + ld) : params.prior_up;
      if (std::max(post_up, 1.0 - post_up) >= f_target) {
        ++t;
        term = ReadoutTermination::kThreshold;
        break;
      }
    }
    ReadoutResult r;
    r.state_up = post_up >= 0.5;
    r.confidence = std::max(post_up, 1.0 - post_up);
    r.start_pulse = start;
    r.duration_pulses = std::max<std::size_t>(1, t - start);
    r.terminated_by = term;
    results.push_back(r);
    start += r.duration_pulses;
  }
  return results;
}

FixedWindowResult fixed_window_readout(const PhotonRecord& record,
                                       std::size_t window, TieBreak tie_break,
                                       std::uint64_t tie_seed) {
  if (window < 1) {
    throw std::invalid_argument("fixed_window_readout: window must be >= 1");
  }
  const std::size_t n = record.n_pulses();
  const std::size_t n_windows = n / window;
  FixedWindowResult out;
  std::mt19937_64 rng(tie_seed);
  std::bernoulli_distribution coin(0.5);

  bool previous = true;
  std::size_t correct = 0, judged = 0;
  for (std::size_t w = 0; w < n_windows; ++w) {
    long diff = 0;
    for (std::size_t k = w * window; k < (w + 1) * window; ++k) {
      const int c = record.window_count(k);
      diff += (k % 2 == 0) ? c : -c;
    }
    bool up;
    if (diff > 0) {
      up = true;
    } else if (diff < 0) {
      up = false;
    } else {
      up = (tie_break == TieBreak::kPreviousState) ? previous : coin(rng);
    }
    out.histogram[static_cast<int>(diff)]++;
    out.classifications.push_back(up);
    previous = up;
    if (record.has_truth()) {
      ++judged;
      if (up == (record.truth_spin[w * window] != 0)) ++correct;
    }
  }
  if (judged > 0) {
    out.fidelity_vs_truth = static_cast<double>(correct) / judged;
  }
  return out;
}

ReadoutMetrics readout_metrics(double eta, double cyclicity, double p_ex,
                               double snr, double f_target) {
  if (eta <= 0.0 || cyclicity <= 0.0 || p_ex <= 0.0 || snr <= 1.0 ||
      f_target <= 0.5 || f_target >= 1.0) {
    throw std::invalid_argument("readout_metrics: arguments must be positive "
                                "(snr > 1, f_target in (0.5,1))");
  }
  if (eta * cyclicity <= 1.0) {
    throw std::runtime_error("readout_metrics: cyclicity-limited regime "
                             "invalid (eta * C <= 1)");
  }
  ReadoutMetrics m;
  m.m_photons = static_cast<int>(
      std::ceil(std::log(f_target / (1.0 - f_target)) / std::log(snr)));
  m.f_avg = 1.0 - 1.0 / (eta * cyclicity);
  m.t_meas_pulses = 1.0 / (p_ex * eta);
  return m;
}

}  // namespace spinread
