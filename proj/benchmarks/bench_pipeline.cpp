#include <benchmark/benchmark.h>

#include <cmath>

#include <spinread/inference.hpp>
#include <spinread/photon_sim.hpp>
#include <spinread/presets.hpp>
#include <spinread/spin_model.hpp>

using namespace spinread;

namespace {

SimConfig bench_config(std::size_t n_pulses) {
  SimConfig cfg = preset("ion1_fig3").sim_config(n_pulses, 1);
  return cfg;
}

void bm_simulate_record(benchmark::State& state) {
  const SimConfig cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_record(cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_simulate_record)->Arg(100000)->Arg(1000000);

void bm_g2_discrete(benchmark::State& state) {
  const PhotonRecord rec = simulate_record(bench_config(1000000));
  const int max_offset = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(g2_discrete(rec, max_offset));
  }
  state.SetItemsProcessed(state.iterations() * max_offset);
}
BENCHMARK(bm_g2_discrete)->Arg(1000)->Arg(6000);

void bm_bayes_smoother(benchmark::State& state) {
  const SimConfig cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  const PhotonRecord rec = simulate_record(cfg);
  HmmParams par;
  par.flip_prob_per_pulse =
      0.5 * cfg.p_ex / cfg.cyclicity +
      0.5 * (1.0 - std::exp(-cfg.t_rep_s / cfg.t1_dark_s));
  par.bright_mean = cfg.p_ex * cfg.eta * (1.0 - 1.0 / cfg.cyclicity) +
                    cfg.dark_counts_per_window;
  par.dark_mean = cfg.dark_counts_per_window;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bayes_smoother(rec, par));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_bayes_smoother)->Arg(100000)->Arg(1000000);

void bm_cyclicity_at_detuning(benchmark::State& state) {
  const GTensor gg = default_ground_tensor();
  const GTensor ge = default_excited_tensor();
  const CouplingMatrix m = fitted_coupling();
  const IonCavityParams cav = preset("ion2").cavity;
  double phi = 0.0;
  for (auto _ : state) {
    phi = phi < 359.0 ? phi + 1.0 : 0.0;
    benchmark::DoNotOptimize(
        cyclicity_at_detuning(cav, m, gg, ge, {phi, 90.0, 112.0}, 0.0));
  }
}
BENCHMARK(bm_cyclicity_at_detuning);

}  // namespace

BENCHMARK_MAIN();
