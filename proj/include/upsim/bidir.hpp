// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "upsim/airsim.hpp"
#include "upsim/geom.hpp"
#include "upsim/timebase.hpp"

namespace upsim::bidir {

/// Challenge-response distance bounding, abstracted to message-level
/// rounds: per round the verifier emits a k-bit challenge and times the
/// k-bit response. Per-bit radio timing is deliberately not modeled; the
/// comparison is about information flow and causality.
struct ExchangeConfig {
  int rounds = 32;
  int bits_per_round = 1;
  /// Real per-round processing time of whoever answers. Must be at least
  /// declared_processing_s: the declared value is the protocol's assumed
  /// floor, and nobody computes faster than the hardware floor.
  double processing_s = 0.0;
  /// Processing time the verifier subtracts from each round trip. Leaving
  /// it below the real one inflates the bound -- the accuracy cost of
  /// processing-time uncertainty is an explicit knob here.
  double declared_processing_s = 0.0;
  /// Adversarial channel delay added to each round trip (>= 0).
  double forced_delay_s = 0.0;
  double c_m_per_s = 3e8;
  std::uint64_t seed = 0;
};

struct ExchangeRound {
  std::uint64_t challenge = 0;  ///< verifier nonce, k bits
  std::uint64_t response = 0;   ///< claimant nonce XOR challenge, k bits
  timebase::Instant challenge_emit;
  timebase::Instant response_arrival;
};

/// A full protocol run as the verifier sees it: the timed rounds, the
/// claimant's nonce commitment, the nonces opened afterwards, and the final
/// signature over the challenge/response transcript.
struct Session {
  std::vector<ExchangeRound> rounds;
  std::array<std::uint8_t, 32> commitment{};
  std::vector<std::uint64_t> opened_nonces;
  std::vector<std::uint8_t> transcript_signature;
};

struct SessionVerdict {
  bool commitment_valid = false;
  bool responses_valid = false;
  bool signature_valid = false;
  double rtt_bound_m = 0.0;  ///< tightest per-round distance bound

  bool accepted() const { return commitment_valid && responses_valid && signature_valid; }
};

struct ExchangeResult {
  Session session;
  SessionVerdict verdict;
  double true_distance_m = 0.0;
};

/// Honest run between a verifier and a claimant. With a truthfully declared
/// processing time the bound equals the true distance (up to one tick of
/// quantization); understating processing or forcing channel delay only
/// ever inflates it.
ExchangeResult run_exchange(const geom::Vec& verifier_pos, const geom::Vec& claimant_pos,
                            const ExchangeConfig& config);

struct StolenNonceSetup {
  geom::Vec verifier_pos;
  geom::Vec claimant_pos;
  ExchangeConfig config;
  /// The leak precondition: the adversary obtained the claimant's nonces
  /// before the timed phase. Without it the adversary can only guess.
  bool nonce_leak = false;
};

struct AttackResult {
  Session session;
  SessionVerdict verdict;
  double verifier_adversary_distance_m = 0.0;
  double verifier_claimant_distance_m = 0.0;
};

/// Man-in-the-middle replay against the bidirectional protocol: the
/// adversary near the verifier answers the timed challenges itself, replays
/// the challenges to the distant claimant afterwards, and relays the
/// claimant's valid transcript signature. With leaked nonces the session
/// verifies while the measured bound collapses to the verifier-adversary
/// distance; without them each guessed round survives with probability
/// 2^-k.
///
/// The known countermeasure on the bidirectional side is strict session
/// rebinding: the verifier must refuse any session whose opening material
/// (nonces, randomized identifiers) repeats an earlier exchange. That
/// bookkeeping is out of scope here; this model exists to show the contrast
/// with one-way bounding, where nothing a relay learns can shorten a bound.
AttackResult stolen_nonce_attack(const StolenNonceSetup& setup,
                                 const geom::Vec& adversary_pos);

/// How a unidirectional scenario maps onto one bidirectional exchange.
struct BidirSpec {
  std::string verifier_station_label;
  ExchangeConfig config;
  std::optional<geom::Vec> adversary_pos;
  bool nonce_leak = false;
};

struct ComparisonReport {
  airsim::TraceReport unidirectional;
  bool unidir_accepted = false;
  /// An accepted fix strictly closer to the verifier station than the
  /// terminal truly is -- the thing delay-only adversaries can never get.
  bool unidir_accepted_shortened = false;

  SessionVerdict bidir;
  double bidir_bound_m = 0.0;
  double true_distance_m = 0.0;
  bool bidir_shortened = false;
};

/// Runs the verification module's protocol and the bidirectional exchange
/// under equivalent adversary specs and reports the paired outcomes.
/// Delay and collusion attacks map to forced channel delay; the stolen
/// nonce attack is native to the bidirectional side. Forge and replay
/// attacks have no bidirectional equivalent at this abstraction level:
/// ComparisonUnsupportedError.
ComparisonReport compare_protocols(const airsim::Scenario& scenario, const BidirSpec& spec);

/// The bidirectional half of compare_protocols, also used to run
/// "bidirectional"-protocol scenarios on their own.
struct BidirOutcome {
  SessionVerdict verdict;
  double bound_m = 0.0;
  double true_distance_m = 0.0;
  bool shortened = false;
};

BidirOutcome run_bidir_side(const airsim::Scenario& scenario, const BidirSpec& spec);

}  // namespace upsim::bidir
