#include "gridfreq/document.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "gridfreq/errors.hpp"

namespace gridfreq {

using nlohmann::json;

namespace {

const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ValidationError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_number())
    throw ValidationError(where + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback,
                 const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return number(obj, key, where);
}

int integer(const json& obj, const char* key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_number_integer())
    throw ValidationError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

const json& array(const json& obj, const char* key, const std::string& where,
                  bool required) {
  static const json empty = json::array();
  if (!obj.contains(key)) {
    if (required) throw ValidationError(where + ": missing array '" + key + "'");
    return empty;
  }
  const json& v = obj.at(key);
  if (!v.is_array()) throw ValidationError(where + "." + key + ": expected an array");
  return v;
}

std::string at(const char* list, std::size_t k) {
  return std::string(list) + "[" + std::to_string(k) + "]";
}

}  // namespace

NetworkDocument parse_network_document(const json& doc) {
  if (!doc.is_object()) throw ValidationError("document: expected a JSON object");
  NetworkDocument out;
  const json& version = member(doc, "schema_version", "document");
  if (!version.is_string() || version.get<std::string>() != kSchemaVersion)
    throw ValidationError("document: unsupported schema_version (expected \"" +
                          std::string(kSchemaVersion) + "\")");
  out.schema_version = version.get<std::string>();
  if (doc.contains("comment") && doc.at("comment").is_string())
    out.comment = doc.at("comment").get<std::string>();

  const json& buses = array(doc, "buses", "document", true);
  for (std::size_t k = 0; k < buses.size(); ++k) {
    const std::string where = at("buses", k);
    const json& b = buses[k];
    Bus bus;
    bus.id = integer(b, "id", where);
    const std::string kind = member(b, "kind", where).get<std::string>();
    if (kind == "generator")
      bus.kind = BusKind::Generator;
    else if (kind == "load")
      bus.kind = BusKind::Load;
    else
      throw ValidationError(where + ".kind: expected \"generator\" or \"load\"");
    if (bus.kind == BusKind::Generator) {
      bus.inertia = number(b, "inertia", where);
      bus.damping = number(b, "damping", where);
      bus.governor_droop = number(b, "governor_droop", where);
    }
    bus.injection = number_or(b, "injection", 0.0, where);
    if (b.contains("name") && b.at("name").is_string())
      bus.name = b.at("name").get<std::string>();
    out.network.buses.push_back(bus);
  }
  std::sort(out.network.buses.begin(), out.network.buses.end(),
            [](const Bus& a, const Bus& b) { return a.id < b.id; });

  const json& lines = array(doc, "lines", "document", true);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::string where = at("lines", k);
    out.network.lines.push_back({integer(lines[k], "from", where),
                                 integer(lines[k], "to", where),
                                 number(lines[k], "susceptance", where)});
  }

  const json& inverters = array(doc, "inverters", "document", false);
  for (std::size_t k = 0; k < inverters.size(); ++k) {
    const std::string where = at("inverters", k);
    const json& e = inverters[k];
    InverterEntry entry;
    entry.bus = integer(e, "bus", where);
    InverterConfig& c = entry.config;
    c.mode = parse_inverter_mode(member(e, "mode", where).get<std::string>());
    c.q0 = number_or(e, "q0", 0.0, where);
    const bool droop = c.mode != InverterMode::ConstantPower;
    c.droop = droop ? number(e, "r_r", where) : number_or(e, "r_r", 0.0, where);
    c.virtual_inertia = c.mode == InverterMode::VirtualInertia
                            ? number(e, "m_v", where)
                            : number_or(e, "m_v", 0.0, where);
    const bool idroop = c.mode == InverterMode::IDroop;
    c.delta = idroop ? number(e, "delta", where) : number_or(e, "delta", 0.0, where);
    c.nu = idroop ? number(e, "nu", where) : number_or(e, "nu", 0.0, where);
    auto issues = validate_inverter(c);
    if (!issues.empty()) throw ValidationError(where + ": " + issues.front());
    out.inverters.push_back(entry);
  }

  const json& noise = array(doc, "noise", "document", false);
  for (std::size_t k = 0; k < noise.size(); ++k) {
    const std::string where = at("noise", k);
    NoiseEntry entry;
    entry.bus = integer(noise[k], "bus", where);
    entry.gains = {number_or(noise[k], "k1", 0.0, where),
                   number_or(noise[k], "k2", 0.0, where),
                   number_or(noise[k], "k3", 0.0, where)};
    if (entry.gains.k1 < 0.0 || entry.gains.k2 < 0.0 || entry.gains.k3 < 0.0)
      throw ValidationError(where + ": noise gains must be >= 0");
    out.noise.push_back(entry);
  }

  const json& events = array(doc, "disturbances", "document", false);
  for (std::size_t k = 0; k < events.size(); ++k) {
    const std::string where = at("disturbances", k);
    out.disturbances.push_back({number(events[k], "time", where),
                                integer(events[k], "bus", where),
                                number(events[k], "delta_p", where)});
  }
  return out;
}

NetworkDocument read_network_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open network file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return parse_network_document(doc);
}

json to_json(const NetworkDocument& doc) {
  json out;
  out["schema_version"] = doc.schema_version;
  if (!doc.comment.empty()) out["comment"] = doc.comment;
  out["buses"] = json::array();
  for (const auto& bus : doc.network.buses) {
    json b;
    b["id"] = bus.id;
    b["kind"] = bus.kind == BusKind::Generator ? "generator" : "load";
    if (bus.kind == BusKind::Generator) {
      b["inertia"] = bus.inertia;
      b["damping"] = bus.damping;
      b["governor_droop"] = bus.governor_droop;
    }
    b["injection"] = bus.injection;
    if (!bus.name.empty()) b["name"] = bus.name;
    out["buses"].push_back(b);
  }
  out["lines"] = json::array();
  for (const auto& line : doc.network.lines)
    out["lines"].push_back(
        {{"from", line.from}, {"to", line.to}, {"susceptance", line.susceptance}});
  out["inverters"] = json::array();
  for (const auto& e : doc.inverters)
    out["inverters"].push_back({{"bus", e.bus},
                                {"mode", to_string(e.config.mode)},
                                {"q0", e.config.q0},
                                {"r_r", e.config.droop},
                                {"m_v", e.config.virtual_inertia},
                                {"delta", e.config.delta},
                                {"nu", e.config.nu}});
  out["noise"] = json::array();
  for (const auto& e : doc.noise)
    out["noise"].push_back(
        {{"bus", e.bus}, {"k1", e.gains.k1}, {"k2", e.gains.k2}, {"k3", e.gains.k3}});
  out["disturbances"] = json::array();
  for (const auto& d : doc.disturbances)
    out["disturbances"].push_back(
        {{"time", d.time}, {"bus", d.bus}, {"delta_p", d.delta_p}});
  return out;
}

Study resolve_study(const NetworkDocument& doc, std::optional<InverterMode> mode_override) {
  Study study;
  study.kron = reduce_to_generators(doc.network);
  const int r = study.kron.reduced.size();
  study.bus_ids = study.kron.retained;
  std::map<int, int> slot;
  for (int k = 0; k < r; ++k) slot[study.bus_ids[k]] = k;
  const int n_doc = doc.network.size();

  auto reduced_index = [&](int bus, const std::string& what) {
    if (bus < 0 || bus >= n_doc)
      throw ValidationError(what + ": unknown bus " + std::to_string(bus));
    auto it = slot.find(bus);
    if (it == slot.end())
      throw ValidationError(what + ": bus " + std::to_string(bus) +
                            " is a load bus; entries belong on generator buses");
    return it->second;
  };

  study.configs.assign(r, InverterConfig::constant_power());
  std::set<int> seen;
  for (const auto& e : doc.inverters) {
    const int k = reduced_index(e.bus, "inverter");
    if (!seen.insert(k).second)
      throw ValidationError("inverter: bus " + std::to_string(e.bus) +
                            " has more than one entry");
    study.configs[k] = e.config;
  }
  if (mode_override) {
    for (std::size_t k = 0; k < study.configs.size(); ++k) {
      study.configs[k].mode = *mode_override;
      auto issues = validate_inverter(study.configs[k]);
      if (!issues.empty())
        throw ValidationError("mode override at bus " + std::to_string(study.bus_ids[k]) +
                              ": " + issues.front());
    }
  }

  study.noise.assign(r, NoiseGains{});
  seen.clear();
  for (const auto& e : doc.noise) {
    const int k = reduced_index(e.bus, "noise");
    if (!seen.insert(k).second)
      throw ValidationError("noise: bus " + std::to_string(e.bus) +
                            " has more than one entry");
    study.noise[k] = e.gains;
  }

  for (const auto& d : doc.disturbances) {
    if (d.bus < 0 || d.bus >= n_doc)
      throw ValidationError("disturbance: unknown bus " + std::to_string(d.bus));
    for (int k = 0; k < r; ++k) {
      const double share = study.kron.injection_map(k, d.bus);
      if (share != 0.0) study.disturbances.push_back({d.time, k, share * d.delta_p});
    }
  }
  return study;
}

NetworkDocument reduced_document(const Study& study, const NetworkDocument& source) {
  NetworkDocument out;
  out.schema_version = source.schema_version;
  out.comment = source.comment;
  out.network = study.kron.reduced;
  for (int k = 0; k < out.network.size(); ++k) {
    out.inverters.push_back({k, study.configs[k]});
    out.noise.push_back({k, study.noise[k]});
  }
  for (const auto& d : study.disturbances) out.disturbances.push_back(d);
  return out;
}

}  // namespace gridfreq
