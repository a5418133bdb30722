// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/airsim.hpp"

#include <algorithm>
#include <cmath>

#include "upsim/errors.hpp"
#include "upsim/ranging.hpp"
#include "upsim/rng.hpp"

namespace upsim::airsim {

namespace {

using timebase::Instant;
using timebase::kTicksPerSecond;

std::int64_t seconds_to_ticks(double seconds) {
  const double ticks = seconds * static_cast<double>(kTicksPerSecond);
  if (!(ticks >= -9.2e18 && ticks <= 9.2e18)) {
    throw Error("time interval outside the representable tick range");
  }
  return std::llround(ticks);
}

std::int64_t propagation_ticks(double distance_m, double c) {
  return seconds_to_ticks(distance_m / c);
}

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ValidationError(path, message);
}

// Internal pairing of a delivery with the broadcast bytes it carries.
struct PendingDelivery {
  DeliveryEvent event;
  authsig::Broadcast broadcast;
};

}  // namespace

const authsig::SignatureScheme& scheme_of(SchemeKind kind) {
  return kind == SchemeKind::Ed25519 ? authsig::ed25519_scheme() : authsig::hmac_scheme();
}

const char* to_string(DeliveryKind kind) {
  switch (kind) {
    case DeliveryKind::Honest: return "honest";
    case DeliveryKind::Relayed: return "relayed";
    case DeliveryKind::Replayed: return "replayed";
    case DeliveryKind::Forged: return "forged";
  }
  return "unknown";
}

std::uint64_t station_key_seed(std::uint64_t scenario_seed, std::size_t station_index) {
  return derive_seed(scenario_seed, 0x100 + station_index);
}

double collude_relay_delay(const geom::Vec& station_pos, const geom::Vec& node_pos,
                           const geom::Vec& terminal_pos, double c_m_per_s) {
  const double via_node = (station_pos - node_pos).norm() + (node_pos - terminal_pos).norm();
  const double direct = (station_pos - terminal_pos).norm();
  return std::max(0.0, (via_node - direct) / c_m_per_s);
}

std::map<std::size_t, double> delays_targeting(const Scenario& scenario,
                                               const geom::Vec& fake) {
  std::map<std::size_t, double> delays;
  for (std::size_t i = 0; i < scenario.stations.size(); ++i) {
    const auto& pos = scenario.stations[i].pos;
    const double fake_range = (fake - pos).norm();
    const double true_range = (scenario.terminal.true_pos - pos).norm();
    delays[i] = std::max(0.0, (fake_range - true_range) / scenario.c_m_per_s);
  }
  return delays;
}

void validate(const Scenario& s) {
  require(s.dims == 2 || s.dims == 3, "meta.dims", "must be 2 or 3");
  require(s.c_m_per_s > 0 && std::isfinite(s.c_m_per_s), "meta.c_m_per_s",
          "must be positive and finite");

  for (std::size_t i = 0; i < s.stations.size(); ++i) {
    const std::string base = "stations[" + std::to_string(i) + "]";
    const auto& st = s.stations[i];
    require(!st.label.empty() && st.label.size() <= 16, base + ".id",
            "label must be 1..16 bytes");
    for (std::size_t j = 0; j < i; ++j) {
      require(s.stations[j].label != st.label, base + ".id", "duplicate station id");
    }
    require(static_cast<int>(st.pos.size()) == s.dims, base + ".pos_m",
            "dimension mismatch");
    require(st.pos.allFinite(), base + ".pos_m", "coordinates must be finite");
  }

  const auto& t = s.terminal;
  require(static_cast<int>(t.true_pos.size()) == s.dims, "terminal.true_pos_m",
          "dimension mismatch");
  require(t.true_pos.allFinite(), "terminal.true_pos_m", "coordinates must be finite");
  require(t.error_limit_m > 0, "terminal.verifier.error_limit_m", "must be positive");
  require(t.listen_window_ticks > 0, "terminal.verifier.listen_window_ms",
          "must be positive");
  require(t.clock.drift_s_per_day >= 0, "terminal.clock.drift_s_per_day",
          "worst-case drift magnitude cannot be negative");
  require(t.clock.validity_days > 0, "terminal.clock.validity_days", "must be positive");
  require(t.drift_sign == 1 || t.drift_sign == -1, "terminal.clock.drift_sign",
          "must be +1 or -1");
  require(t.session_start >= t.clock.last_sync, "terminal.session_start_s",
          "session cannot open before the clock's last synchronization");

  for (std::size_t a = 0; a < s.attacks.size(); ++a) {
    const std::string base = "attacks[" + std::to_string(a) + "]";
    const auto& attack = s.attacks[a];
    if (const auto* delay = std::get_if<DelayAttack>(&attack)) {
      require(delay->target.has_value() || !delay->delays_s.empty(), base,
              "delay attack needs delays_s or target_m");
      require(!(delay->target.has_value() && !delay->delays_s.empty()), base,
              "delays_s and target_m are mutually exclusive");
      for (const auto& [idx, value] : delay->delays_s) {
        const std::string path = base + ".delays_s." +
                                 (idx < s.stations.size() ? s.stations[idx].label
                                                          : std::to_string(idx));
        require(idx < s.stations.size(), path, "unknown station");
        require(std::isfinite(value) && value >= 0, path,
                "negative delay is unrepresentable: signals cannot be accelerated");
      }
      if (delay->target) {
        require(static_cast<int>(delay->target->size()) == s.dims, base + ".target_m",
                "dimension mismatch");
      }
    } else if (const auto* forge = std::get_if<ForgeAttack>(&attack)) {
      require(!forge->claimed_label.empty() && forge->claimed_label.size() <= 16,
              base + ".station_id", "label must be 1..16 bytes");
      require(static_cast<int>(forge->x_s.size()) == s.dims, base + ".x_s_m",
              "dimension mismatch");
      require(static_cast<int>(forge->from_pos.size()) == s.dims, base + ".from_pos_m",
              "dimension mismatch");
    } else if (const auto* replay = std::get_if<ReplayAttack>(&attack)) {
      require(replay->station_index < s.stations.size(), base + ".station",
              "unknown station");
      const auto& station = s.stations[replay->station_index];
      require(replay->slot < station.schedule.size(), base + ".slot",
              "station has no such schedule slot");
      if (replay->relay_pos) {
        require(static_cast<int>(replay->relay_pos->size()) == s.dims,
                base + ".relay_pos_m", "dimension mismatch");
      }
      const geom::Vec relay = replay->relay_pos.value_or(t.true_pos);
      const double path =
          (station.pos - relay).norm() + (relay - t.true_pos).norm();
      const Instant earliest = timebase::advanced(
          station.schedule[replay->slot], propagation_ticks(path, s.c_m_per_s));
      require(replay->deliver_at >= earliest, base + ".deliver_at_s",
              "replay cannot be delivered before the signal physically reaches the relay "
              "and then the terminal");
    } else if (const auto* collude = std::get_if<ColludeRelayAttack>(&attack)) {
      require(!collude->nodes.empty(), base + ".nodes_m", "need at least one node");
      for (std::size_t n = 0; n < collude->nodes.size(); ++n) {
        require(static_cast<int>(collude->nodes[n].size()) == s.dims,
                base + ".nodes_m[" + std::to_string(n) + "]", "dimension mismatch");
      }
      for (const auto& [st, node] : collude->routes) {
        require(st < s.stations.size(), base + ".routes", "unknown station");
        require(node < collude->nodes.size(), base + ".routes", "unknown node index");
      }
      for (const auto& [st, hold] : collude->hold_s) {
        const std::string path = base + ".hold_s." +
                                 (st < s.stations.size() ? s.stations[st].label
                                                         : std::to_string(st));
        require(st < s.stations.size(), path, "unknown station");
        require(std::isfinite(hold) && hold >= 0, path,
                "negative hold is unrepresentable: signals cannot be accelerated");
      }
      require(!(collude->target.has_value() && !collude->hold_s.empty()), base,
              "hold_s and target_m are mutually exclusive");
      if (collude->target) {
        require(static_cast<int>(collude->target->size()) == s.dims, base + ".target_m",
                "dimension mismatch");
      }
    }
  }
}

TraceReport run_scenario(const Scenario& scenario) {
  validate(scenario);

  const auto& scheme = scheme_of(scenario.scheme);
  const auto& terminal = scenario.terminal;
  const double c = scenario.c_m_per_s;

  // Station keys and the registry of authentic public keys.
  authsig::KeyRegistry registry;
  std::vector<authsig::KeyPair> keys(scenario.stations.size());
  std::vector<authsig::StationId> ids(scenario.stations.size());
  for (std::size_t i = 0; i < scenario.stations.size(); ++i) {
    keys[i] = scheme.keypair_from_seed(station_key_seed(scenario.seed, i));
    ids[i] = authsig::station_id_from_label(scenario.stations[i].label);
    registry.add(ids[i], keys[i].public_key);
  }

  // Every scheduled beacon, signed once; replays reuse these bytes.
  std::vector<std::vector<authsig::Broadcast>> beacons(scenario.stations.size());
  for (std::size_t i = 0; i < scenario.stations.size(); ++i) {
    for (const Instant t_s : scenario.stations[i].schedule) {
      beacons[i].push_back(verifier::make_broadcast(scheme, keys[i].secret_key, ids[i],
                                                    t_s, scenario.stations[i].pos));
    }
  }

  // Resolve adversary delay/relay profiles.
  AttackBookkeeping bookkeeping;
  std::vector<double> extra_delay_s(scenario.stations.size(), 0.0);
  std::vector<std::optional<geom::Vec>> relay_node(scenario.stations.size());
  std::vector<double> relay_hold_s(scenario.stations.size(), 0.0);

  for (const auto& attack : scenario.attacks) {
    if (const auto* delay = std::get_if<DelayAttack>(&attack)) {
      std::map<std::size_t, double> profile = delay->delays_s;
      if (delay->target) {
        profile = delays_targeting(scenario, *delay->target);
        bookkeeping.target = delay->target;
      }
      for (const auto& [idx, value] : profile) {
        extra_delay_s[idx] += value;
        if (value > 0) ++bookkeeping.delayed;
      }
    } else if (const auto* collude = std::get_if<ColludeRelayAttack>(&attack)) {
      for (const auto& [st, node] : collude->routes) {
        relay_node[st] = collude->nodes[node];
        ++bookkeeping.relayed;
        double hold = 0.0;
        if (const auto it = collude->hold_s.find(st); it != collude->hold_s.end()) {
          hold = it->second;
        }
        if (collude->target) {
          // hold the beacon just long enough to imitate the range from the
          // target point, when the relay path does not already exceed it
          const double via_relay = (scenario.stations[st].pos - *relay_node[st]).norm() +
                                   (*relay_node[st] - terminal.true_pos).norm();
          const double fake_range = (*collude->target - scenario.stations[st].pos).norm();
          hold = std::max(0.0, (fake_range - via_relay) / c);
          bookkeeping.target = collude->target;
        }
        relay_hold_s[st] = hold;
      }
    }
  }

  // Deliveries. Sequence numbers are assigned at scheduling time and break
  // arrival-time ties deterministically.
  std::vector<PendingDelivery> pending;
  std::uint64_t seq = 0;

  for (std::size_t i = 0; i < scenario.stations.size(); ++i) {
    const auto& station = scenario.stations[i];
    const double direct_m = (station.pos - terminal.true_pos).norm();
    for (std::size_t slot = 0; slot < station.schedule.size(); ++slot) {
      PendingDelivery d;
      d.broadcast = beacons[i][slot];
      d.event.station_index = static_cast<int>(i);
      d.event.slot = static_cast<int>(slot);
      d.event.emit = station.schedule[slot];
      d.event.emit_pos = station.pos;
      d.event.path_length_m = direct_m;
      d.event.seq = seq++;
      double travel_m = direct_m;
      double hold_s = extra_delay_s[i];
      if (relay_node[i]) {
        d.event.kind = DeliveryKind::Relayed;
        travel_m = (station.pos - *relay_node[i]).norm() +
                   (*relay_node[i] - terminal.true_pos).norm();
        hold_s += relay_hold_s[i];
      } else {
        d.event.kind = DeliveryKind::Honest;
      }
      d.event.arrival = timebase::advanced(
          d.event.emit, propagation_ticks(travel_m, c) + seconds_to_ticks(hold_s));
      pending.push_back(std::move(d));
    }
  }

  SplitMix64 forgery_rng(derive_seed(scenario.seed, 0xF0));
  for (const auto& attack : scenario.attacks) {
    if (const auto* replay = std::get_if<ReplayAttack>(&attack)) {
      PendingDelivery d;
      d.broadcast = beacons[replay->station_index][replay->slot];
      d.event.kind = DeliveryKind::Replayed;
      d.event.station_index = static_cast<int>(replay->station_index);
      d.event.slot = static_cast<int>(replay->slot);
      d.event.emit = d.broadcast.body.t_s;
      d.event.emit_pos = scenario.stations[replay->station_index].pos;
      d.event.path_length_m = (d.event.emit_pos - terminal.true_pos).norm();
      d.event.arrival = replay->deliver_at;
      d.event.seq = seq++;
      pending.push_back(std::move(d));
      ++bookkeeping.replayed;
    } else if (const auto* forge = std::get_if<ForgeAttack>(&attack)) {
      authsig::BeaconBody body;
      body.station_id = authsig::station_id_from_label(forge->claimed_label);
      body.t_s = forge->t_s;
      body.x_s = forge->x_s;
      PendingDelivery d;
      d.broadcast.body = body;
      if (forge->source == ForgeAttack::SigSource::RandomBytes) {
        d.broadcast.signature = forgery_rng.next_bytes(scheme.signature_size());
      } else {
        const auto own = scheme.keypair_from_seed(forgery_rng.next());
        d.broadcast = authsig::sign_beacon(scheme, own.secret_key, body);
      }
      d.event.kind = DeliveryKind::Forged;
      d.event.emit = forge->emit_at;
      d.event.emit_pos = forge->from_pos;
      d.event.path_length_m = (forge->from_pos - terminal.true_pos).norm();
      d.event.arrival = timebase::advanced(
          forge->emit_at, propagation_ticks(d.event.path_length_m, c));
      d.event.seq = seq++;
      pending.push_back(std::move(d));
      ++bookkeeping.forged;
    }
  }

  std::sort(pending.begin(), pending.end(), [](const PendingDelivery& a, const PendingDelivery& b) {
    if (a.event.arrival != b.event.arrival) return a.event.arrival < b.event.arrival;
    return a.event.seq < b.event.seq;
  });

  // The light-speed postulate, enforced on every delivery: nothing arrives
  // earlier than the straight-line flight allows (one tick of quantization
  // slack).
  for (const auto& d : pending) {
    const double min_ticks = d.event.path_length_m / c * static_cast<double>(kTicksPerSecond);
    if (static_cast<double>(d.event.arrival.ticks - d.event.emit.ticks) < min_ticks - 1.0) {
      throw Error("internal: delivery violates the light-speed postulate");
    }
  }

  // Receipt assembly: one listen window starting at the first arrival at or
  // after session start.
  TraceReport trace;
  trace.attacks = bookkeeping;
  std::optional<Instant> window_open;
  for (auto& d : pending) {
    if (!window_open && d.event.arrival >= terminal.session_start) {
      window_open = d.event.arrival;
    }
    if (window_open && d.event.arrival >= *window_open &&
        d.event.arrival <= timebase::advanced(*window_open, terminal.listen_window_ticks)) {
      d.event.in_receipt = true;
      verifier::ReceiptEntry entry;
      entry.broadcast = d.broadcast;
      entry.t_m = timebase::read(terminal.clock, d.event.arrival, terminal.drift_sign);
      trace.receipt.entries.push_back(std::move(entry));
    }
  }
  for (const auto& d : pending) trace.deliveries.push_back(d.event);

  verifier::VerifierConfig config;
  config.dims = scenario.dims;
  config.error_limit_m = terminal.error_limit_m;
  config.c_m_per_s = c;
  config.scheme = &scheme;
  config.registry = &registry;
  config.clock = terminal.clock;
  trace.result = verifier::verify_position(trace.receipt, config, &trace.steps);

  trace.outcome_code = trace.result.accepted()
                           ? "accepted"
                           : verifier::to_string(*trace.result.reason);
  if (trace.result.accepted() && bookkeeping.target) {
    trace.attack_success_near_target =
        (trace.result.fix->position - *bookkeeping.target).norm() <= terminal.error_limit_m;
  }
  return trace;
}

AttackSpec record_and_replay(const Scenario& scenario, const TraceReport& trace,
                             std::size_t delivery_index, timebase::Instant new_delivery) {
  if (delivery_index >= trace.deliveries.size()) {
    throw Error("record_and_replay: no such delivery");
  }
  const auto& delivery = trace.deliveries[delivery_index];
  if (delivery.station_index < 0) {
    throw Error("record_and_replay: only station-origin broadcasts can be replayed");
  }
  if (new_delivery < delivery.arrival) {
    throw CausalityViolationError(
        "replay cannot be delivered before the recorded original arrived");
  }
  ReplayAttack replay;
  replay.station_index = static_cast<std::size_t>(delivery.station_index);
  replay.slot = static_cast<std::size_t>(delivery.slot);
  replay.deliver_at = new_delivery;
  replay.relay_pos = scenario.terminal.true_pos;
  return replay;
}

int physics_violations(const TraceReport& trace, double c_m_per_s) {
  int violations = 0;
  for (const auto& d : trace.deliveries) {
    const double min_ticks =
        d.path_length_m / c_m_per_s * static_cast<double>(kTicksPerSecond);
    if (static_cast<double>(d.arrival.ticks - d.emit.ticks) < min_ticks - 1.0) {
      ++violations;
    }
  }
  return violations;
}

}  // namespace upsim::airsim
