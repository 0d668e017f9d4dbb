#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfreq/control.hpp"
#include "gridfreq/grid_model.hpp"
#include "gridfreq/sim.hpp"

namespace gridfreq {

inline constexpr const char* kSchemaVersion = "1.0";

struct InverterEntry {
  int bus = 0;
  InverterConfig config;
};

struct NoiseEntry {
  int bus = 0;
  NoiseGains gains;
};

/// On-disk description of a study: the transmission graph (generator and
/// load buses), per-generator inverter and noise settings, and scheduled
/// disturbances. Bus ids are document ids throughout.
struct NetworkDocument {
  std::string schema_version = kSchemaVersion;
  std::string comment;
  PowerNetwork network;
  std::vector<InverterEntry> inverters;
  std::vector<NoiseEntry> noise;
  std::vector<Disturbance> disturbances;
};

/// Throws ValidationError with the offending path on schema violations.
NetworkDocument parse_network_document(const nlohmann::json& doc);
NetworkDocument read_network_document(const std::string& path);
nlohmann::json to_json(const NetworkDocument& doc);

/// Document resolved onto the Kron-reduced generator network.
struct Study {
  KronResult kron;
  std::vector<InverterConfig> configs;  // per reduced bus
  std::vector<NoiseGains> noise;        // per reduced bus
  std::vector<Disturbance> disturbances;  // reduced bus indices
  std::vector<int> bus_ids;             // document id of each reduced bus

  const PowerNetwork& network() const { return kron.reduced; }
};

/// Kron-reduces the network and maps every per-bus entry onto it. A
/// disturbance at a load bus is spread over generators through the
/// injection map. `mode_override` switches every inverter to one mode,
/// keeping its other parameters.
Study resolve_study(const NetworkDocument& doc,
                    std::optional<InverterMode> mode_override = std::nullopt);

/// Document describing the reduced network of `study` (ids 0..r-1).
NetworkDocument reduced_document(const Study& study, const NetworkDocument& source);

}  // namespace gridfreq
