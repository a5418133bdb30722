// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "upsim/authsig.hpp"
#include "upsim/geom.hpp"
#include "upsim/timebase.hpp"
#include "upsim/verifier.hpp"

namespace upsim::airsim {

enum class SchemeKind { Ed25519, Hmac };

const authsig::SignatureScheme& scheme_of(SchemeKind kind);

struct StationSpec {
  std::string label;           ///< 1..16 bytes, unique per scenario
  geom::Vec pos;
  std::vector<timebase::Instant> schedule;  ///< emission times
};

struct TerminalSpec {
  geom::Vec true_pos;
  timebase::ClockModel clock;
  int drift_sign = +1;
  double error_limit_m = 1.0;
  std::int64_t listen_window_ticks = 10'000'000'000;  ///< 10 ms
  timebase::Instant session_start;  ///< receipt opens at first arrival >= this
};

/// Injects a made-up beacon. The adversary has no station private keys, so
/// the signature is either random bytes or a self-made key pair that no
/// registry knows.
struct ForgeAttack {
  std::string claimed_label;
  timebase::Instant t_s;
  geom::Vec x_s;
  enum class SigSource { RandomBytes, SelfSigned } source = SigSource::RandomBytes;
  timebase::Instant emit_at;
  geom::Vec from_pos;
};

/// Re-delivers a recorded broadcast, byte for byte, at a later time. The
/// recording is picked up at relay_pos (terminal position when unset), so
/// the re-delivery cannot predate the signal physically reaching that
/// point and then the terminal.
struct ReplayAttack {
  std::size_t station_index = 0;
  std::size_t slot = 0;
  timebase::Instant deliver_at;
  std::optional<geom::Vec> relay_pos;
};

/// Holds selected stations' signals back. Negative delays are
/// unrepresentable by validation: signals never travel faster than light.
/// When `target` is set, per-station delays are derived at run time as the
/// profile that best imitates ranges from the target point.
struct DelayAttack {
  std::map<std::size_t, double> delays_s;  ///< station index -> seconds
  std::optional<geom::Vec> target;
};

/// Adversary nodes placed near stations intercept beacons and re-forward
/// them, adding relay path plus an optional hold. With `target` set, holds
/// are derived to imitate ranges from the target point where the relay
/// path allows.
struct ColludeRelayAttack {
  std::vector<geom::Vec> nodes;
  std::map<std::size_t, std::size_t> routes;  ///< station index -> node index
  std::map<std::size_t, double> hold_s;
  std::optional<geom::Vec> target;
};

using AttackSpec = std::variant<ForgeAttack, ReplayAttack, DelayAttack, ColludeRelayAttack>;

/// Declarative world description. The seed fully determines every random
/// draw: station keys, forged signatures, everything.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  int dims = 2;
  double c_m_per_s = 3e8;
  SchemeKind scheme = SchemeKind::Ed25519;
  std::vector<StationSpec> stations;
  TerminalSpec terminal;
  std::vector<AttackSpec> attacks;
};

enum class DeliveryKind { Honest, Relayed, Replayed, Forged };

const char* to_string(DeliveryKind kind);

/// One signal delivered to the terminal. `emit`/`emit_pos` are the original
/// emission; `path_length_m` is the straight-line distance from there to
/// the terminal, the fastest physically possible path.
struct DeliveryEvent {
  DeliveryKind kind = DeliveryKind::Honest;
  int station_index = -1;  ///< -1 for forged beacons
  int slot = -1;
  timebase::Instant emit;
  geom::Vec emit_pos;
  timebase::Instant arrival;
  double path_length_m = 0.0;
  bool in_receipt = false;
  std::uint64_t seq = 0;
};

struct AttackBookkeeping {
  int forged = 0;
  int replayed = 0;
  int delayed = 0;
  int relayed = 0;
  std::optional<geom::Vec> target;
};

struct TraceReport {
  std::vector<DeliveryEvent> deliveries;
  verifier::Receipt receipt;
  verifier::PositionResult result;
  verifier::StepLog steps;
  AttackBookkeeping attacks;
  std::string outcome_code;               ///< "accepted" or the failure reason
  bool attack_success_near_target = false;  ///< accepted within error limit of target
};

/// Checks scenario invariants; throws ValidationError naming the offending
/// field, e.g. "attacks[0].delays_s.S2".
void validate(const Scenario& scenario);

/// Key-derivation seed for a station: scenario seed and station index fully
/// determine the station's key pair.
std::uint64_t station_key_seed(std::uint64_t scenario_seed, std::size_t station_index);

/// Runs the event queue: honest beacons travel at exactly distance/c,
/// adversary hooks may hold signals back, re-inject recordings or inject
/// forgeries, never accelerate anything. The terminal assembles one receipt
/// from all arrivals inside its listen window and verifies once. Output is
/// bit-identical for identical (scenario, seed).
TraceReport run_scenario(const Scenario& scenario);

/// Builds a replay attack from a recorded delivery of `trace`. The copy is
/// re-delivered at `new_delivery`, which cannot predate the original
/// arrival; otherwise CausalityViolationError.
AttackSpec record_and_replay(const Scenario& scenario, const TraceReport& trace,
                             std::size_t delivery_index, timebase::Instant new_delivery);

/// The minimum extra delay a relay at node_pos imposes on the
/// station-to-terminal signal: (|s-n| + |n-t| - |s-t|) / c. Nonnegative by
/// the triangle inequality.
double collude_relay_delay(const geom::Vec& station_pos, const geom::Vec& node_pos,
                           const geom::Vec& terminal_pos, double c_m_per_s);

/// Per-station delay profile that makes each bound match the range from
/// `fake` where that range exceeds the true one (it can never be shrunk).
std::map<std::size_t, double> delays_targeting(const Scenario& scenario,
                                               const geom::Vec& fake);

/// Number of deliveries violating arrival >= emit + distance/c - 1 tick.
/// Always zero; the simulator enforces the postulate by construction, and
/// the acceptance audit re-checks it from the outside.
int physics_violations(const TraceReport& trace, double c_m_per_s);

}  // namespace upsim::airsim
