#pragma once

#include <string>

#include <json.hpp>

#include "spinread/fitting.hpp"
#include "spinread/g_tensor.hpp"
#include "spinread/photon_sim.hpp"
#include "spinread/presets.hpp"
#include "spinread/spin_model.hpp"

namespace spinread::io {

inline constexpr int kSchemaVersion = 1;

// Throws std::invalid_argument naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& context);

nlohmann::json to_json(const FieldOrientation& f);
FieldOrientation field_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GTensor& g);
GTensor tensor_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CouplingMatrix& m);
CouplingMatrix coupling_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IonCavityParams& p);
IonCavityParams cavity_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitReport& r);

// pulse_index,channel,counts,truth rows; truth column present only when
// the record carries it.
void write_record_csv(const std::string& path, const PhotonRecord& rec);
PhotonRecord read_record_csv(const std::string& path);

nlohmann::json to_json(const PhotonRecord& rec);
PhotonRecord record_from_json(const nlohmann::json& j);

// Header names the abscissa columns, e.g. "phi_deg,theta_deg,y,sigma" or
// "detuning_hz,y,sigma"; the kind is recovered from the header on read.
void write_data_series_csv(const std::string& path, const DataSeries& d);
DataSeries read_data_series_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace spinread::io
