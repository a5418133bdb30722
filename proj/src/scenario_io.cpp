// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/scenario_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "upsim/errors.hpp"

namespace upsim::cli {

namespace {

using nlohmann::json;

const char* type_name(const json& node) {
  switch (node.type()) {
    case json::value_t::object: return "object";
    case json::value_t::array: return "array";
    case json::value_t::string: return "string";
    case json::value_t::boolean: return "boolean";
    case json::value_t::null: return "null";
    default: return node.is_number() ? "number" : "value";
  }
}

const json& expect(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ValidationError(path + "." + key, "missing required field");
  return obj.at(key);
}

void expect_object(const json& node, const std::string& path) {
  if (!node.is_object()) {
    throw ValidationError(path, std::string("expected an object, got ") + type_name(node));
  }
}

/// Unknown fields are rejected so that typos (e.g. a mis-spelled unit
/// suffix) cannot silently change a scenario's meaning.
void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) throw ValidationError(path + "." + key, "unknown field");
  }
}

double number_at(const json& obj, const std::string& path, const char* key) {
  const json& node = expect(obj, path, key);
  if (!node.is_number()) {
    throw ValidationError(path + "." + key,
                          std::string("expected a number, got ") + type_name(node));
  }
  return node.get<double>();
}

double number_or(const json& obj, const std::string& path, const char* key,
                 double fallback) {
  return obj.contains(key) ? number_at(obj, path, key) : fallback;
}

std::string string_at(const json& obj, const std::string& path, const char* key) {
  const json& node = expect(obj, path, key);
  if (!node.is_string()) {
    throw ValidationError(path + "." + key,
                          std::string("expected a string, got ") + type_name(node));
  }
  return node.get<std::string>();
}

geom::Vec vec_at(const json& obj, const std::string& path, const char* key, int dims) {
  const json& node = expect(obj, path, key);
  const std::string full = path + "." + key;
  if (!node.is_array() || static_cast<int>(node.size()) != dims) {
    throw ValidationError(full, "expected an array of " + std::to_string(dims) +
                                    " coordinates in meters");
  }
  geom::Vec v(dims);
  for (int i = 0; i < dims; ++i) {
    if (!node[static_cast<std::size_t>(i)].is_number()) {
      throw ValidationError(full + "[" + std::to_string(i) + "]", "expected a number");
    }
    v[i] = node[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

timebase::Instant instant_at(const json& obj, const std::string& path, const char* key,
                             double fallback_s) {
  return timebase::instant_from_seconds(number_or(obj, path, key, fallback_s));
}

std::size_t station_index_for(const airsim::Scenario& scenario, const std::string& label,
                              const std::string& path) {
  for (std::size_t i = 0; i < scenario.stations.size(); ++i) {
    if (scenario.stations[i].label == label) return i;
  }
  throw ValidationError(path, "unknown station \"" + label + "\"");
}

airsim::AttackSpec parse_attack(const json& node, const std::string& path,
                                const airsim::Scenario& scenario) {
  expect_object(node, path);
  const std::string kind = string_at(node, path, "kind");

  if (kind == "delay") {
    reject_unknown_keys(node, path, {"kind", "delays_s", "target_m"});
    airsim::DelayAttack attack;
    if (node.contains("delays_s")) {
      const json& delays = node.at("delays_s");
      expect_object(delays, path + ".delays_s");
      for (const auto& [label, value] : delays.items()) {
        const std::string entry_path = path + ".delays_s." + label;
        const std::size_t idx = station_index_for(scenario, label, entry_path);
        if (!value.is_number()) throw ValidationError(entry_path, "expected seconds");
        attack.delays_s[idx] = value.get<double>();
      }
    }
    if (node.contains("target_m")) {
      attack.target = vec_at(node, path, "target_m", scenario.dims);
    }
    return attack;
  }
  if (kind == "forge") {
    reject_unknown_keys(node, path,
                        {"kind", "station_id", "t_s_s", "x_s_m", "signature", "emit_at_s",
                         "from_pos_m"});
    airsim::ForgeAttack attack;
    attack.claimed_label = string_at(node, path, "station_id");
    attack.t_s = instant_at(node, path, "t_s_s", 0.0);
    attack.x_s = vec_at(node, path, "x_s_m", scenario.dims);
    attack.emit_at = instant_at(node, path, "emit_at_s", 0.0);
    attack.from_pos = vec_at(node, path, "from_pos_m", scenario.dims);
    const std::string source =
        node.contains("signature") ? string_at(node, path, "signature") : "random";
    if (source == "random") {
      attack.source = airsim::ForgeAttack::SigSource::RandomBytes;
    } else if (source == "self") {
      attack.source = airsim::ForgeAttack::SigSource::SelfSigned;
    } else {
      throw ValidationError(path + ".signature", "expected \"random\" or \"self\"");
    }
    return attack;
  }
  if (kind == "replay") {
    reject_unknown_keys(node, path, {"kind", "station", "slot", "deliver_at_s", "relay_pos_m"});
    airsim::ReplayAttack attack;
    attack.station_index =
        station_index_for(scenario, string_at(node, path, "station"), path + ".station");
    const double slot = number_or(node, path, "slot", 0.0);
    if (slot < 0 || slot != std::floor(slot)) {
      throw ValidationError(path + ".slot", "expected a nonnegative integer");
    }
    attack.slot = static_cast<std::size_t>(slot);
    attack.deliver_at = timebase::instant_from_seconds(number_at(node, path, "deliver_at_s"));
    if (node.contains("relay_pos_m")) {
      attack.relay_pos = vec_at(node, path, "relay_pos_m", scenario.dims);
    }
    return attack;
  }
  if (kind == "collude_relay") {
    reject_unknown_keys(node, path, {"kind", "nodes_m", "routes", "hold_s", "target_m"});
    airsim::ColludeRelayAttack attack;
    const json& nodes = expect(node, path, "nodes_m");
    if (!nodes.is_array() || nodes.empty()) {
      throw ValidationError(path + ".nodes_m", "expected a non-empty array of positions");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      json wrapper = json::object();
      wrapper["node"] = nodes[i];
      attack.nodes.push_back(
          vec_at(wrapper, path + ".nodes_m[" + std::to_string(i) + "]", "node", scenario.dims));
    }
    const json& routes = expect(node, path, "routes");
    expect_object(routes, path + ".routes");
    for (const auto& [label, value] : routes.items()) {
      const std::string entry_path = path + ".routes." + label;
      const std::size_t idx = station_index_for(scenario, label, entry_path);
      if (!value.is_number_unsigned() || value.get<std::size_t>() >= attack.nodes.size()) {
        throw ValidationError(entry_path, "expected a node index");
      }
      attack.routes[idx] = value.get<std::size_t>();
    }
    if (node.contains("hold_s")) {
      const json& holds = node.at("hold_s");
      expect_object(holds, path + ".hold_s");
      for (const auto& [label, value] : holds.items()) {
        const std::string entry_path = path + ".hold_s." + label;
        const std::size_t idx = station_index_for(scenario, label, entry_path);
        if (!value.is_number()) throw ValidationError(entry_path, "expected seconds");
        attack.hold_s[idx] = value.get<double>();
      }
    }
    if (node.contains("target_m")) {
      attack.target = vec_at(node, path, "target_m", scenario.dims);
    }
    return attack;
  }
  throw ValidationError(path + ".kind", "unknown attack kind \"" + kind + "\"");
}

}  // namespace

const char* to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::Unidirectional: return "unidirectional";
    case Protocol::Bidirectional: return "bidirectional";
    case Protocol::Compare: return "compare";
  }
  return "unknown";
}

LoadedScenario parse_scenario(const std::string& text, const std::string& source_path) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", source_path + ": not valid JSON: " + e.what());
  }
  expect_object(doc, "scenario");
  reject_unknown_keys(doc, "scenario",
                      {"meta", "stations", "terminal", "attacks", "protocol", "bidir"});

  LoadedScenario loaded;
  loaded.source_path = source_path;
  airsim::Scenario& s = loaded.scenario;

  const json& meta = expect(doc, "scenario", "meta");
  expect_object(meta, "meta");
  reject_unknown_keys(meta, "meta",
                      {"schema_version", "name", "seed", "dims", "c_m_per_s", "scheme"});
  const double version = number_at(meta, "meta", "schema_version");
  if (version != 1) throw ValidationError("meta.schema_version", "this build reads version 1");
  s.name = string_at(meta, "meta", "name");
  const double seed = number_or(meta, "meta", "seed", 0.0);
  if (seed < 0 || seed != std::floor(seed)) {
    throw ValidationError("meta.seed", "expected a nonnegative integer");
  }
  s.seed = static_cast<std::uint64_t>(seed);
  const double dims = number_at(meta, "meta", "dims");
  if (dims != 2 && dims != 3) throw ValidationError("meta.dims", "must be 2 or 3");
  s.dims = static_cast<int>(dims);
  s.c_m_per_s = number_or(meta, "meta", "c_m_per_s", 3e8);
  if (meta.contains("scheme")) {
    const std::string scheme = string_at(meta, "meta", "scheme");
    if (scheme == "ed25519") {
      s.scheme = airsim::SchemeKind::Ed25519;
    } else if (scheme == "hmac") {
      s.scheme = airsim::SchemeKind::Hmac;
    } else {
      throw ValidationError("meta.scheme", "expected \"ed25519\" or \"hmac\"");
    }
  }

  const json& stations = expect(doc, "scenario", "stations");
  if (!stations.is_array()) throw ValidationError("stations", "expected an array");
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const std::string path = "stations[" + std::to_string(i) + "]";
    const json& node = stations[i];
    expect_object(node, path);
    reject_unknown_keys(node, path, {"id", "pos_m", "schedule_s"});
    airsim::StationSpec station;
    station.label = string_at(node, path, "id");
    station.pos = vec_at(node, path, "pos_m", s.dims);
    const json& schedule = expect(node, path, "schedule_s");
    if (!schedule.is_array()) throw ValidationError(path + ".schedule_s", "expected an array");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      if (!schedule[k].is_number()) {
        throw ValidationError(path + ".schedule_s[" + std::to_string(k) + "]",
                              "expected seconds");
      }
      station.schedule.push_back(timebase::instant_from_seconds(schedule[k].get<double>()));
    }
    s.stations.push_back(std::move(station));
  }

  const json& terminal = expect(doc, "scenario", "terminal");
  expect_object(terminal, "terminal");
  reject_unknown_keys(terminal, "terminal",
                      {"true_pos_m", "clock", "verifier", "session_start_s"});
  s.terminal.true_pos = vec_at(terminal, "terminal", "true_pos_m", s.dims);
  s.terminal.session_start = instant_at(terminal, "terminal", "session_start_s", 0.0);

  if (terminal.contains("clock")) {
    const json& clock = terminal.at("clock");
    expect_object(clock, "terminal.clock");
    reject_unknown_keys(clock, "terminal.clock",
                        {"initial_offset_s", "drift_s_per_day", "drift_sign", "last_sync_s",
                         "validity_days"});
    s.terminal.clock.initial_offset_s =
        number_or(clock, "terminal.clock", "initial_offset_s", 0.0);
    s.terminal.clock.drift_s_per_day =
        number_or(clock, "terminal.clock", "drift_s_per_day", 0.0);
    s.terminal.clock.last_sync = instant_at(clock, "terminal.clock", "last_sync_s", 0.0);
    s.terminal.clock.validity_days =
        number_or(clock, "terminal.clock", "validity_days", 30.0);
    const double sign = number_or(clock, "terminal.clock", "drift_sign", 1.0);
    if (sign != 1 && sign != -1) {
      throw ValidationError("terminal.clock.drift_sign", "must be 1 or -1");
    }
    s.terminal.drift_sign = static_cast<int>(sign);
  }

  const json& verifier_cfg = expect(terminal, "terminal", "verifier");
  expect_object(verifier_cfg, "terminal.verifier");
  reject_unknown_keys(verifier_cfg, "terminal.verifier",
                      {"error_limit_m", "listen_window_ms"});
  s.terminal.error_limit_m = number_at(verifier_cfg, "terminal.verifier", "error_limit_m");
  const double window_ms =
      number_or(verifier_cfg, "terminal.verifier", "listen_window_ms", 10.0);
  if (!(window_ms > 0)) {
    throw ValidationError("terminal.verifier.listen_window_ms", "must be positive");
  }
  s.terminal.listen_window_ticks =
      std::llround(window_ms * 1e-3 * static_cast<double>(timebase::kTicksPerSecond));

  if (doc.contains("attacks")) {
    const json& attacks = doc.at("attacks");
    if (!attacks.is_array()) throw ValidationError("attacks", "expected an array");
    for (std::size_t i = 0; i < attacks.size(); ++i) {
      s.attacks.push_back(
          parse_attack(attacks[i], "attacks[" + std::to_string(i) + "]", s));
    }
  }

  const std::string protocol = string_at(doc, "scenario", "protocol");
  if (protocol == "unidirectional") {
    loaded.protocol = Protocol::Unidirectional;
  } else if (protocol == "bidirectional") {
    loaded.protocol = Protocol::Bidirectional;
  } else if (protocol == "compare") {
    loaded.protocol = Protocol::Compare;
  } else {
    throw ValidationError("protocol",
                          "expected \"unidirectional\", \"bidirectional\" or \"compare\"");
  }

  if (doc.contains("bidir")) {
    const json& b = doc.at("bidir");
    expect_object(b, "bidir");
    reject_unknown_keys(b, "bidir",
                        {"verifier_station", "rounds", "bits_per_round", "processing_s",
                         "declared_processing_s", "adversary_pos_m", "nonce_leak"});
    bidir::BidirSpec spec;
    spec.verifier_station_label = string_at(b, "bidir", "verifier_station");
    station_index_for(s, spec.verifier_station_label, "bidir.verifier_station");
    const double rounds = number_or(b, "bidir", "rounds", 32.0);
    const double bits = number_or(b, "bidir", "bits_per_round", 1.0);
    if (rounds < 1 || rounds != std::floor(rounds)) {
      throw ValidationError("bidir.rounds", "expected a positive integer");
    }
    if (bits < 1 || bits > 64 || bits != std::floor(bits)) {
      throw ValidationError("bidir.bits_per_round", "expected an integer in 1..64");
    }
    spec.config.rounds = static_cast<int>(rounds);
    spec.config.bits_per_round = static_cast<int>(bits);
    spec.config.processing_s = number_or(b, "bidir", "processing_s", 0.0);
    spec.config.declared_processing_s =
        number_or(b, "bidir", "declared_processing_s", spec.config.processing_s);
    if (spec.config.declared_processing_s > spec.config.processing_s) {
      throw ValidationError("bidir.declared_processing_s",
                            "cannot exceed the real processing time");
    }
    if (b.contains("adversary_pos_m")) {
      spec.adversary_pos = vec_at(b, "bidir", "adversary_pos_m", s.dims);
    }
    if (b.contains("nonce_leak")) {
      if (!b.at("nonce_leak").is_boolean()) {
        throw ValidationError("bidir.nonce_leak", "expected a boolean");
      }
      spec.nonce_leak = b.at("nonce_leak").get<bool>();
    }
    loaded.bidir = std::move(spec);
  }

  if (loaded.protocol != Protocol::Unidirectional && !loaded.bidir) {
    throw ValidationError("bidir", "required for bidirectional/compare protocols");
  }

  airsim::validate(s);
  return loaded;
}

LoadedScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("", path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

}  // namespace upsim::cli
