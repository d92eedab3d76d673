#include "spinread/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spinread::io {

using nlohmann::json;

void reject_unknown_keys(const json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& context) {
  if (!j.is_object()) {
    throw std::invalid_argument(context + ": expected a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::invalid_argument(context + ": unknown key '" + key + "'");
    }
  }
}

json to_json(const FieldOrientation& f) {
  return {{"phi_deg", f.phi_deg},
          {"theta_deg", f.theta_deg},
          {"magnitude_gauss", f.magnitude_gauss}};
}

FieldOrientation field_from_json(const json& j) {
  reject_unknown_keys(j, {"phi_deg", "theta_deg", "magnitude_gauss"},
                      "field");
  FieldOrientation f;
  f.phi_deg = j.at("phi_deg").get<double>();
  f.theta_deg = j.at("theta_deg").get<double>();
  f.magnitude_gauss = j.value("magnitude_gauss", 0.0);
  return f;
}

json to_json(const GTensor& g) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back({g.matrix()(r, 0), g.matrix()(r, 1), g.matrix()(r, 2)});
  }
  return {{"matrix", rows}};
}

GTensor tensor_from_json(const json& j) {
  if (j.contains("matrix")) {
    reject_unknown_keys(j, {"matrix"}, "g_tensor");
    Eigen::Matrix3d m;
    const auto& rows = j.at("matrix");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = rows.at(r).at(c).get<double>();
    }
    return GTensor::from_matrix(m);
  }
  reject_unknown_keys(j, {"principal_values", "euler_deg"}, "g_tensor");
  Eigen::Vector3d pv, euler;
  for (int i = 0; i < 3; ++i) {
    pv[i] = j.at("principal_values").at(i).get<double>();
    euler[i] = j.at("euler_deg").at(i).get<double>() * M_PI / 180.0;
  }
  return GTensor::from_principal(pv, euler);
}

json to_json(const CouplingMatrix& m) {
  return {{"g_par", {m.g_par.real(), m.g_par.imag()}},
          {"g_perp", {m.g_perp.real(), m.g_perp.imag()}},
          {"reference", to_json(m.reference)}};
}

CouplingMatrix coupling_from_json(const json& j) {
  reject_unknown_keys(j, {"g_par", "g_perp", "reference"}, "coupling");
  CouplingMatrix m;
  m.g_par = {j.at("g_par").at(0).get<double>(),
             j.at("g_par").at(1).get<double>()};
  m.g_perp = {j.at("g_perp").at(0).get<double>(),
              j.at("g_perp").at(1).get<double>()};
  if (j.contains("reference")) m.reference = field_from_json(j.at("reference"));
  return m;
}

json to_json(const IonCavityParams& p) {
  return {{"purcell_max", p.purcell_max},
          {"kappa_hz", p.kappa_hz},
          {"cavity_detuning_hz", p.cavity_detuning_hz},
          {"c0", p.c0},
          {"eta", p.eta},
          {"eta_cav", p.eta_cav},
          {"snr", p.snr},
          {"gamma0_hz", p.gamma0_hz}};
}

IonCavityParams cavity_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"purcell_max", "kappa_hz", "cavity_detuning_hz", "c0",
                       "eta", "eta_cav", "snr", "gamma0_hz"},
                      "ion_cavity_params");
  IonCavityParams p;
  p.purcell_max = j.at("purcell_max").get<double>();
  p.kappa_hz = j.at("kappa_hz").get<double>();
  p.cavity_detuning_hz = j.value("cavity_detuning_hz", 0.0);
  p.c0 = j.value("c0", 1.0);
  p.eta = j.value("eta", 0.0);
  p.eta_cav = j.value("eta_cav", 0.0);
  p.snr = j.value("snr", 0.0);
  p.gamma0_hz = j.value("gamma0_hz", 0.0);
  p.validate();
  return p;
}

json to_json(const SimConfig& c) {
  return {{"n_pulses", c.n_pulses},
          {"t_rep_s", c.t_rep_s},
          {"p_ex", c.p_ex},
          {"cyclicity", c.cyclicity},
          {"eta", c.eta},
          {"t1_dark_s", c.t1_dark_s},
          {"dark_counts_per_window", c.dark_counts_per_window},
          {"seed", c.seed},
          {"record_truth", c.record_truth}};
}

SimConfig sim_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"n_pulses", "t_rep_s", "p_ex", "cyclicity", "eta",
                       "t1_dark_s", "dark_counts_per_window", "seed",
                       "record_truth"},
                      "sim_config");
  SimConfig c;
  c.n_pulses = j.at("n_pulses").get<std::size_t>();
  c.t_rep_s = j.value("t_rep_s", 60e-6);
  c.p_ex = j.value("p_ex", 0.5);
  c.cyclicity = j.value("cyclicity", 1.0);
  c.eta = j.value("eta", 1.0);
  c.t1_dark_s = j.value("t1_dark_s", 1e9);
  c.dark_counts_per_window = j.value("dark_counts_per_window", 0.0);
  c.seed = j.value("seed", std::uint64_t{0});
  c.record_truth = j.value("record_truth", true);
  c.validate();
  return c;
}

json to_json(const FitReport& r) {
  json params = json::array(), uncert = json::array();
  for (int i = 0; i < r.parameters.size(); ++i) {
    params.push_back(r.parameters[i]);
    uncert.push_back(r.uncertainties[i]);
  }
  return {{"schema_version", kSchemaVersion},
          {"parameters", params},
          {"uncertainties", uncert},
          {"parameter_names", r.parameter_names},
          {"residual_norm", r.residual_norm},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"warnings", r.warnings}};
}

void write_record_csv(const std::string& path, const PhotonRecord& rec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const bool truth = rec.has_truth();
  out << (truth ? "pulse_index,channel,counts,truth\n"
                : "pulse_index,channel,counts\n");
  for (std::size_t k = 0; k < rec.n_pulses(); ++k) {
    out << k << ',' << (k % 2 == 0 ? 'A' : 'B') << ',' << rec.window_count(k);
    if (truth) out << ',' << int(rec.truth_spin[k]);
    out << '\n';
  }
}

PhotonRecord read_record_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  const bool truth = line.find("truth") != std::string::npos;

  PhotonRecord rec;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string idx, chan, counts, t;
    std::getline(ss, idx, ',');
    std::getline(ss, chan, ',');
    std::getline(ss, counts, ',');
    const auto c = static_cast<std::uint16_t>(std::stoul(counts));
    if (chan == "A") {
      rec.counts_a.push_back(c);
    } else if (chan == "B") {
      rec.counts_b.push_back(c);
    } else {
      throw std::runtime_error("bad channel '" + chan + "' in " + path);
    }
    if (truth && std::getline(ss, t, ',')) {
      rec.truth_spin.push_back(static_cast<std::uint8_t>(std::stoul(t)));
    }
  }
  rec.config.n_pulses = rec.n_pulses();
  return rec;
}

json to_json(const PhotonRecord& rec) {
  return {{"schema_version", kSchemaVersion},
          {"config", to_json(rec.config)},
          {"counts_a", rec.counts_a},
          {"counts_b", rec.counts_b},
          {"truth_spin", rec.truth_spin}};
}

PhotonRecord record_from_json(const json& j) {
  reject_unknown_keys(
      j, {"schema_version", "config", "counts_a", "counts_b", "truth_spin"},
      "photon_record");
  PhotonRecord rec;
  rec.config = sim_config_from_json(j.at("config"));
  rec.counts_a = j.at("counts_a").get<std::vector<std::uint16_t>>();
  rec.counts_b = j.at("counts_b").get<std::vector<std::uint16_t>>();
  rec.truth_spin = j.value("truth_spin", std::vector<std::uint8_t>{});
  return rec;
}

namespace {

std::vector<std::string> abscissa_columns(const std::string& kind) {
  if (kind == "orientation") return {"phi_deg", "theta_deg"};
  if (kind == "detuning_hz") return {"detuning_hz"};
  if (kind == "t_rep_s") return {"t_rep_s"};
  if (kind == "field_gauss") return {"field_gauss"};
  throw std::invalid_argument("unknown abscissa kind: " + kind);
}

}  // namespace

void write_data_series_csv(const std::string& path, const DataSeries& d) {
  d.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  const auto cols = abscissa_columns(d.abscissa_kind);
  for (const auto& c : cols) out << c << ',';
  out << "y,sigma\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int k = 0; k < d.x[i].size(); ++k) out << d.x[i][k] << ',';
    out << d.y[i] << ',' << (d.sigma.empty() ? 0.0 : d.sigma[i]) << '\n';
  }
}

DataSeries read_data_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);

  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(col);
  }
  if (header.size() < 3 || header[header.size() - 2] != "y" ||
      header.back() != "sigma") {
    throw std::runtime_error("expected ...,y,sigma header in " + path);
  }
  DataSeries d;
  const std::size_t nx = header.size() - 2;
  if (nx == 2 && header[0] == "phi_deg" && header[1] == "theta_deg") {
    d.abscissa_kind = "orientation";
  } else if (nx == 1) {
    d.abscissa_kind = header[0];
    abscissa_columns(d.abscissa_kind);  // validates
  } else {
    throw std::runtime_error("unrecognized abscissa header in " + path);
  }

  bool any_sigma = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    Eigen::VectorXd x(nx);
    for (std::size_t k = 0; k < nx; ++k) {
      std::getline(ss, cell, ',');
      x[k] = std::stod(cell);
    }
    d.x.push_back(x);
    std::getline(ss, cell, ',');
    d.y.push_back(std::stod(cell));
    std::getline(ss, cell, ',');
    const double s = std::stod(cell);
    if (s > 0.0) any_sigma = true;
    d.sigma.push_back(s);
  }
  if (!any_sigma) d.sigma.clear();
  d.validate();
  return d;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

}  // namespace spinread::io
