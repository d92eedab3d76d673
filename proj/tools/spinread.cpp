// Command-line front end: reproducible simulation, analysis, parameter
// sweeps, fits and device projections driven by a single JSON config.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <spinread/fitting.hpp>
#include <spinread/inference.hpp>
#include <spinread/io.hpp>
#include <spinread/photon_sim.hpp>
#include <spinread/presets.hpp>
#include <spinread/spin_model.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spinread;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAnalysis = 1;
constexpr int kExitUsage = 2;

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitUsage, "cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw CliError(kExitUsage, std::string("config parse error: ") + e.what());
  }
  return j;
}

// Primary outputs must be byte-identical across reruns; wall-clock metadata
// lives in this sidecar instead.
void write_run_meta(const fs::path& dir, const std::string& command) {
  std::time_t now = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&now));
  json meta = {{"schema_version", io::kSchemaVersion},
               {"command", command},
               {"timestamp_utc", buf}};
  io::write_text_file((dir / "run_meta.json").string(), meta.dump(2) + "\n");
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw CliError(kExitUsage, "output directory not writable: " + dir.string());
  }
  return dir;
}

struct Scenario {
  std::string name = "run";
  std::optional<IonPreset> ion;
  SimConfig sim;
};

Scenario scenario_from_config(const json& j,
                              std::optional<std::uint64_t> seed_override) {
  io::reject_unknown_keys(j, {"name", "preset", "cavity", "sim"}, "scenario");
  Scenario sc;
  sc.name = j.value("name", "run");
  if (j.contains("preset")) {
    try {
      sc.ion = preset(j.at("preset").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw CliError(kExitUsage, e.what());
    }
    sc.sim = sc.ion->sim_config(0, 0);
  } else if (j.contains("cavity")) {
    IonPreset inline_ion;
    inline_ion.name = sc.name;
    inline_ion.cavity = io::cavity_from_json(j.at("cavity"));
    sc.ion = inline_ion;
  }
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    io::reject_unknown_keys(s,
                            {"n_pulses", "t_rep_s", "p_ex", "cyclicity", "eta",
                             "t1_dark_s", "dark_counts_per_window", "seed",
                             "record_truth"},
                            "sim");
    sc.sim.n_pulses = s.value("n_pulses", sc.sim.n_pulses);
    sc.sim.t_rep_s = s.value("t_rep_s", sc.sim.t_rep_s);
    sc.sim.p_ex = s.value("p_ex", sc.sim.p_ex);
    sc.sim.cyclicity = s.value("cyclicity", sc.sim.cyclicity);
    sc.sim.eta = s.value("eta", sc.sim.eta);
    sc.sim.t1_dark_s = s.value("t1_dark_s", sc.sim.t1_dark_s);
    sc.sim.dark_counts_per_window =
        s.value("dark_counts_per_window", sc.sim.dark_counts_per_window);
    sc.sim.seed = s.value("seed", sc.sim.seed);
    sc.sim.record_truth = s.value("record_truth", sc.sim.record_truth);
  }
  if (seed_override) sc.sim.seed = *seed_override;
  return sc;
}

int cmd_simulate(const json& cfg, std::optional<std::uint64_t> seed,
                 const std::string& out, const std::string& format) {
  const Scenario sc = scenario_from_config(cfg, seed);
  PhotonRecord rec;
  try {
    rec = simulate_record(sc.sim);
  } catch (const std::invalid_argument& e) {
    throw CliError(kExitUsage, e.what());
  }
  const fs::path dir = prepare_out_dir(out);
  if (format == "json") {
    io::write_text_file((dir / (sc.name + "_record.json")).string(),
                        io::to_json(rec).dump(2) + "\n");
  } else {
    io::write_record_csv((dir / (sc.name + "_record.csv")).string(), rec);
  }
  json echo = {{"schema_version", io::kSchemaVersion},
               {"name", sc.name},
               {"sim", io::to_json(sc.sim)}};
  if (sc.ion) echo["cavity"] = io::to_json(sc.ion->cavity);
  io::write_text_file((dir / (sc.name + "_config.json")).string(),
                      echo.dump(2) + "\n");
  write_run_meta(dir, "simulate");
  return kExitOk;
}

HmmParams hmm_from_config(const json& j, const PhotonRecord& rec) {
  HmmParams p;
  // defaults derived from the record's own configuration
  p.bright_mean = rec.config.p_ex * rec.config.eta *
                      (1.0 - 1.0 / rec.config.cyclicity) +
                  rec.config.dark_counts_per_window;
  p.dark_mean = rec.config.dark_counts_per_window;
  p.flip_prob_per_pulse =
      0.5 * rec.config.p_ex / rec.config.cyclicity +
      0.5 * (1.0 - std::exp(-rec.config.t_rep_s / rec.config.t1_dark_s));
  if (j.contains("hmm")) {
    const json& h = j.at("hmm");
    io::reject_unknown_keys(
        h, {"flip_prob_per_pulse", "bright_mean", "dark_mean", "prior_up"},
        "hmm");
    p.flip_prob_per_pulse = h.value("flip_prob_per_pulse", p.flip_prob_per_pulse);
    p.bright_mean = h.value("bright_mean", p.bright_mean);
    p.dark_mean = h.value("dark_mean", p.dark_mean);
    p.prior_up = h.value("prior_up", p.prior_up);
  }
  return p;
}

int cmd_analyze(const json& cfg, const std::string& out,
                const std::string& format) {
  io::reject_unknown_keys(cfg,
                          {"record", "chain", "max_offset", "n0_mode", "hmm",
                           "f_target", "max_pulses", "window", "p_ex"},
                          "analyze");
  const std::string path = cfg.value("record", "");
  if (path.empty() || !fs::exists(path)) {
    throw CliError(kExitUsage, "record file not found: " + path);
  }
  PhotonRecord rec;
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    rec = io::record_from_json(json::parse(io::read_text_file(path)));
  } else {
    rec = io::read_record_csv(path);
  }
  const std::string chain = cfg.value("chain", "g2");
  const fs::path dir = prepare_out_dir(out);

  if (chain == "g2") {
    const int max_offset =
        cfg.value("max_offset", int(std::min<std::size_t>(
                                    rec.n_pulses() / 2 - 1, 9000)));
    const G2Curve curve = g2_discrete(rec, max_offset);
    const std::string mode_name = cfg.value("n0_mode", "difference");
    N0FitMode mode = N0FitMode::kDifference;
    if (mode_name == "even") mode = N0FitMode::kEven;
    else if (mode_name == "odd") mode = N0FitMode::kOdd;
    else if (mode_name != "difference")
      throw CliError(kExitUsage, "bad n0_mode: " + mode_name);
    const N0Fit fit = fit_n0(curve, mode);
    const double p_ex = cfg.value("p_ex", rec.config.p_ex);
    json result = {{"schema_version", io::kSchemaVersion},
                   {"n0", fit.n0},
                   {"amplitude", fit.amplitude},
                   {"n0_uncertainty", fit.n0_uncertainty},
                   {"ok", fit.ok},
                   {"message", fit.message}};
    if (fit.ok) result["cyclicity"] = cyclicity_from_n0(fit.n0, p_ex);
    io::write_text_file((dir / "g2_fit.json").string(), result.dump(2) + "\n");
    std::ostringstream curve_csv;
    curve_csv.precision(17);
    curve_csv << "offset,g2\n";
    for (std::size_t i = 0; i < curve.offsets.size(); ++i) {
      curve_csv << curve.offsets[i] << ',' << curve.values[i] << '\n';
    }
    io::write_text_file((dir / "g2_curve.csv").string(), curve_csv.str());
    write_run_meta(dir, "analyze");
    return fit.ok ? kExitOk : kExitAnalysis;
  }
  if (chain == "bayes") {
    const auto posterior = bayes_smoother(rec, hmm_from_config(cfg, rec));
    std::ostringstream csv;
    csv.precision(17);
    csv << "pulse_index,p_up\n";
    for (std::size_t k = 0; k < posterior.size(); ++k) {
      csv << k << ',' << posterior[k] << '\n';
    }
    io::write_text_file((dir / "posterior.csv").string(), csv.str());
    write_run_meta(dir, "analyze");
    return kExitOk;
  }
  if (chain == "ml") {
    const double f_target = cfg.value("f_target", 0.946);
    const std::size_t max_pulses = cfg.value("max_pulses", std::size_t{5000});
    const auto results = adaptive_ml_readout(rec, hmm_from_config(cfg, rec),
                                             f_target, max_pulses);
    std::ostringstream csv;
    csv.precision(17);
    csv << "start_pulse,duration_pulses,state_up,confidence,terminated_by\n";
    for (const auto& r : results) {
      csv << r.start_pulse << ',' << r.duration_pulses << ',' << int(r.state_up)
          << ',' << r.confidence << ','
          << (r.terminated_by == ReadoutTermination::kThreshold ? "threshold"
                                                                : "timeout")
          << '\n';
    }
    io::write_text_file((dir / "ml_readout.csv").string(), csv.str());
    write_run_meta(dir, "analyze");
    return kExitOk;
  }
  if (chain == "window") {
    const std::size_t window = cfg.value("window", std::size_t{850});
    const auto result = fixed_window_readout(rec, window);
    json summary = {{"schema_version", io::kSchemaVersion},
                    {"window", window},
                    {"fidelity_vs_truth", result.fidelity_vs_truth}};
    io::write_text_file((dir / "window_summary.json").string(),
                        summary.dump(2) + "\n");
    std::ostringstream csv;
    csv << "count_difference,windows\n";
    for (const auto& [d, c] : result.histogram) csv << d << ',' << c << '\n';
    io::write_text_file((dir / "window_histogram.csv").string(), csv.str());
    write_run_meta(dir, "analyze");
    return kExitOk;
  }
  throw CliError(kExitUsage, "unknown chain: " + chain);
  (void)format;
}

struct ModelInputs {
  GTensor ground = default_ground_tensor();
  GTensor excited = default_excited_tensor();
  CouplingMatrix coupling = fitted_coupling();
  IonCavityParams cavity;
  FieldOrientation orientation{100.0, 90.0, 100.0};
};

ModelInputs model_inputs(const json& cfg) {
  ModelInputs mi;
  if (cfg.contains("preset")) {
    try {
      mi.cavity = preset(cfg.at("preset").get<std::string>()).cavity;
    } catch (const std::invalid_argument& e) {
      throw CliError(kExitUsage, e.what());
    }
  } else if (cfg.contains("cavity")) {
    mi.cavity = io::cavity_from_json(cfg.at("cavity"));
  } else {
    mi.cavity = preset("ion1_fig2").cavity;
  }
  if (cfg.contains("ground_tensor"))
    mi.ground = io::tensor_from_json(cfg.at("ground_tensor"));
  if (cfg.contains("excited_tensor"))
    mi.excited = io::tensor_from_json(cfg.at("excited_tensor"));
  if (cfg.contains("coupling"))
    mi.coupling = io::coupling_from_json(cfg.at("coupling"));
  if (cfg.contains("orientation"))
    mi.orientation = io::field_from_json(cfg.at("orientation"));
  return mi;
}

int cmd_sweep(const json& cfg, const std::string& out,
              const std::string& format) {
  io::reject_unknown_keys(cfg,
                          {"axis", "start", "stop", "points", "preset",
                           "cavity", "ground_tensor", "excited_tensor",
                           "coupling", "orientation", "p_ex", "cyclicity",
                           "t1_dark_s"},
                          "sweep");
  const std::string axis = cfg.value("axis", "");
  if (axis != "phi" && axis != "theta" && axis != "detuning" &&
      axis != "field" && axis != "t_rep") {
    throw CliError(kExitUsage, "bad sweep axis: " + axis);
  }
  if (!cfg.contains("start") || !cfg.contains("stop")) {
    throw CliError(kExitUsage, "sweep requires start and stop");
  }
  const double start = cfg.at("start").get<double>();
  const double stop = cfg.at("stop").get<double>();
  const int points = cfg.value("points", 0);
  if (points < 1) throw CliError(kExitUsage, "empty sweep range");

  const ModelInputs mi = model_inputs(cfg);
  const double p_ex = cfg.value("p_ex", 0.5);

  std::vector<double> xs(points), ys(points);
  for (int i = 0; i < points; ++i) {
    xs[i] = points == 1 ? start : start + (stop - start) * i / (points - 1);
  }
  std::string y_name = "cyclicity";
  for (int i = 0; i < points; ++i) {
    FieldOrientation o = mi.orientation;
    double delta = mi.cavity.cavity_detuning_hz;
    if (axis == "phi") o.phi_deg = xs[i];
    else if (axis == "theta") o.theta_deg = xs[i];
    else if (axis == "detuning") delta = xs[i];
    else if (axis == "field") o.magnitude_gauss = xs[i];
    if (axis == "t_rep") {
      const double c = cfg.value("cyclicity", 1500.0);
      const double t1_dark = cfg.value("t1_dark_s", 12.2);
      ys[i] = 1.0 / (1.0 / t1_dark + p_ex / (xs[i] * c));
      y_name = "t_sr_s";
    } else {
      ys[i] = cyclicity_at_detuning(mi.cavity, mi.coupling, mi.ground,
                                    mi.excited, o, delta);
    }
  }

  const fs::path dir = prepare_out_dir(out);
  if (format == "json") {
    json rows = json::array();
    for (int i = 0; i < points; ++i) rows.push_back({{axis, xs[i]}, {y_name, ys[i]}});
    json table = {{"schema_version", io::kSchemaVersion}, {"rows", rows}};
    io::write_text_file((dir / "sweep.json").string(), table.dump(2) + "\n");
  } else {
    std::ostringstream csv;
    csv.precision(17);
    csv << axis << ',' << y_name << '\n';
    for (int i = 0; i < points; ++i) csv << xs[i] << ',' << ys[i] << '\n';
    io::write_text_file((dir / "sweep.csv").string(), csv.str());
  }
  write_run_meta(dir, "sweep");
  return kExitOk;
}

int cmd_fit(const json& cfg, const std::string& out) {
  io::reject_unknown_keys(cfg,
                          {"model", "data", "preset", "cavity",
                           "ground_tensor", "excited_tensor", "coupling",
                           "orientation", "p_ex", "c0", "purcell",
                           "fit_pmax"},
                          "fit");
  const std::string model = cfg.value("model", "");
  const std::string data_path = cfg.value("data", "");
  if (data_path.empty() || !fs::exists(data_path)) {
    throw CliError(kExitUsage, "data file not found: " + data_path);
  }
  DataSeries data;
  try {
    data = io::read_data_series_csv(data_path);
  } catch (const std::exception& e) {
    throw CliError(kExitUsage, e.what());
  }

  FitReport report;
  try {
    if (model == "angle") {
      const ModelInputs mi = model_inputs(cfg);
      const double purcell = cfg.value("purcell", mi.cavity.purcell_max);
      const double c0 = cfg.value("c0", mi.cavity.c0);
      report = fit_angle_model(data, mi.ground, mi.excited, purcell, c0,
                               mi.orientation);
    } else if (model == "c0") {
      const ModelInputs mi = model_inputs(cfg);
      report = fit_c0(data, mi.cavity, mi.coupling, mi.ground, mi.excited,
                      mi.orientation, cfg.value("fit_pmax", false));
    } else if (model == "spin_relaxation") {
      report = fit_spin_relaxation(data, cfg.value("p_ex", 0.5));
    } else {
      throw CliError(kExitUsage, "unknown fit model: " + model);
    }
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError(kExitAnalysis, std::string("fit failed: ") + e.what());
  }
  const fs::path dir = prepare_out_dir(out);
  io::write_text_file((dir / "fit_report.json").string(),
                      io::to_json(report).dump(2) + "\n");
  write_run_meta(dir, "fit");
  return report.converged ? kExitOk : kExitAnalysis;
}

int cmd_project(const json& cfg, const std::string& out) {
  io::reject_unknown_keys(cfg,
                          {"preset", "eta", "efficiency_stack", "cyclicity",
                           "p_ex", "snr", "f_target", "t_rep_s"},
                          "project");
  double eta = 0.0, cyclicity = 0.0, p_ex = 1.0, snr = 20.0, t_rep_s = 10e-6;
  if (cfg.contains("preset")) {
    const IonPreset* p;
    try {
      p = &preset(cfg.at("preset").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw CliError(kExitUsage, e.what());
    }
    eta = p->cavity.eta;
    cyclicity = p->cyclicity;
    p_ex = p->p_ex;
    snr = p->cavity.snr;
    t_rep_s = p->t_rep_s;
  }
  if (cfg.contains("efficiency_stack")) {
    eta = 1.0;
    for (double f : cfg.at("efficiency_stack").get<std::vector<double>>())
      eta *= f;
  }
  eta = cfg.value("eta", eta);
  cyclicity = cfg.value("cyclicity", cyclicity);
  p_ex = cfg.value("p_ex", p_ex);
  snr = cfg.value("snr", snr);
  t_rep_s = cfg.value("t_rep_s", t_rep_s);
  const double f_target = cfg.value("f_target", 0.996);

  ReadoutMetrics metrics;
  try {
    metrics = readout_metrics(eta, cyclicity, p_ex, snr, f_target);
  } catch (const std::exception& e) {
    throw CliError(kExitAnalysis, e.what());
  }
  json result = {{"schema_version", io::kSchemaVersion},
                 {"eta", eta},
                 {"cyclicity", cyclicity},
                 {"p_ex", p_ex},
                 {"snr", snr},
                 {"f_target", f_target},
                 {"m_photons", metrics.m_photons},
                 {"f_avg", metrics.f_avg},
                 {"t_meas_pulses", metrics.t_meas_pulses},
                 {"t_meas_s", metrics.t_meas_pulses * t_rep_s}};
  if (metrics.f_avg < f_target) {
    result["warnings"] = {"f_target exceeds the cyclicity-limited average "
                          "fidelity 1 - 1/(eta C)"};
  }
  const fs::path dir = prepare_out_dir(out);
  io::write_text_file((dir / "projection.json").string(),
                      result.dump(2) + "\n");
  write_run_meta(dir, "project");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cavity-enhanced spin readout simulator and analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format = "csv";
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* sim = app.add_subcommand("simulate", "generate a photon record");
  auto* ana = app.add_subcommand("analyze", "run an analysis chain on a record");
  auto* swp = app.add_subcommand("sweep", "model parameter sweep");
  auto* fit = app.add_subcommand("fit", "fit a model to a data series");
  auto* prj = app.add_subcommand("project", "readout metrics projection");
  for (auto* sub : {sim, ana, swp, fit, prj}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << (e.get_exit_code() == 0 ? "" : "usage error: ");
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    const json cfg = load_config(config_path);
    if (sim->parsed()) return cmd_simulate(cfg, seed, out_dir, format);
    if (ana->parsed()) return cmd_analyze(cfg, out_dir, format);
    if (swp->parsed()) return cmd_sweep(cfg, out_dir, format);
    if (fit->parsed()) return cmd_fit(cfg, out_dir);
    if (prj->parsed()) return cmd_project(cfg, out_dir);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAnalysis;
  }
  return kExitUsage;
}
