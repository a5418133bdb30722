// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/bidir.hpp"

#include <sodium.h>

#include <cmath>
#include <variant>

#include "upsim/errors.hpp"
#include "upsim/rng.hpp"

namespace upsim::bidir {

namespace {

using timebase::Instant;
using timebase::kTicksPerSecond;

std::int64_t seconds_to_ticks(double seconds) {
  return std::llround(seconds * static_cast<double>(kTicksPerSecond));
}

std::uint64_t mask_bits(std::uint64_t value, int bits) {
  return bits >= 64 ? value : (value & ((1ull << bits) - 1));
}

std::array<std::uint8_t, 32> commit_to_nonces(const std::vector<std::uint64_t>& nonces) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(nonces.size() * 8);
  for (const std::uint64_t n : nonces) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  }
  std::array<std::uint8_t, 32> digest{};
  crypto_generichash(digest.data(), digest.size(), bytes.data(), bytes.size(), nullptr, 0);
  return digest;
}

std::vector<std::uint8_t> transcript_bytes(const std::vector<ExchangeRound>& rounds) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(rounds.size() * 16);
  for (const auto& r : rounds) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(r.challenge >> (8 * i)));
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(r.response >> (8 * i)));
  }
  return bytes;
}

struct Nonces {
  std::vector<std::uint64_t> claimant;  // m_i
  std::vector<std::uint64_t> verifier;  // alpha_i
};

Nonces draw_nonces(const ExchangeConfig& cfg) {
  Nonces n;
  SplitMix64 claimant_rng(derive_seed(cfg.seed, 0xB1D1));
  SplitMix64 verifier_rng(derive_seed(cfg.seed, 0xB1D2));
  for (int i = 0; i < cfg.rounds; ++i) {
    n.claimant.push_back(mask_bits(claimant_rng.next(), cfg.bits_per_round));
    n.verifier.push_back(mask_bits(verifier_rng.next(), cfg.bits_per_round));
  }
  return n;
}

void check_config(const ExchangeConfig& cfg) {
  if (cfg.rounds <= 0) throw Error("bidir: rounds must be positive");
  if (cfg.bits_per_round <= 0 || cfg.bits_per_round > 64) {
    throw Error("bidir: bits_per_round must be in 1..64");
  }
  if (cfg.processing_s < 0 || cfg.declared_processing_s < 0 || cfg.forced_delay_s < 0) {
    throw Error("bidir: times cannot be negative");
  }
  if (cfg.declared_processing_s > cfg.processing_s) {
    throw Error("bidir: declared processing time cannot exceed the real one");
  }
}

/// Times the rounds against a responder at `responder_pos` that takes
/// `responder_processing_s` per round and answers with `responses`.
std::vector<ExchangeRound> timed_rounds(const geom::Vec& verifier_pos,
                                        const geom::Vec& responder_pos,
                                        double responder_processing_s,
                                        const ExchangeConfig& cfg,
                                        const std::vector<std::uint64_t>& challenges,
                                        const std::vector<std::uint64_t>& responses) {
  const std::int64_t flight =
      seconds_to_ticks((verifier_pos - responder_pos).norm() / cfg.c_m_per_s);
  const std::int64_t processing = seconds_to_ticks(responder_processing_s);
  const std::int64_t forced = seconds_to_ticks(cfg.forced_delay_s);

  std::vector<ExchangeRound> rounds;
  Instant now{0};
  for (int i = 0; i < cfg.rounds; ++i) {
    ExchangeRound r;
    r.challenge = challenges[static_cast<std::size_t>(i)];
    r.response = responses[static_cast<std::size_t>(i)];
    r.challenge_emit = now;
    r.response_arrival = timebase::advanced(now, 2 * flight + processing + forced);
    rounds.push_back(r);
    now = timebase::advanced(r.response_arrival, seconds_to_ticks(1e-6));  // inter-round gap
  }
  return rounds;
}

/// The verifier's view: commitment check, response consistency against the
/// opened nonces, signature over its own transcript, and the tightest
/// per-round distance bound c * (rtt - declared processing) / 2.
SessionVerdict judge(const Session& session, const ExchangeConfig& cfg,
                     std::span<const std::uint8_t> claimant_public_key) {
  SessionVerdict v;
  v.commitment_valid = commit_to_nonces(session.opened_nonces) == session.commitment;
  v.responses_valid = session.opened_nonces.size() == session.rounds.size();
  for (std::size_t i = 0; v.responses_valid && i < session.rounds.size(); ++i) {
    if (session.rounds[i].response !=
        mask_bits(session.opened_nonces[i] ^ session.rounds[i].challenge,
                  cfg.bits_per_round)) {
      v.responses_valid = false;
    }
  }
  v.signature_valid = authsig::ed25519_scheme().verify(
      claimant_public_key, transcript_bytes(session.rounds), session.transcript_signature);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : session.rounds) {
    const double rtt_s = timebase::delta_seconds(r.challenge_emit, r.response_arrival);
    best = std::min(best, cfg.c_m_per_s * (rtt_s - cfg.declared_processing_s) / 2.0);
  }
  v.rtt_bound_m = best;
  return v;
}

authsig::KeyPair claimant_keys(const ExchangeConfig& cfg) {
  return authsig::ed25519_scheme().keypair_from_seed(derive_seed(cfg.seed, 0xB1D3));
}

}  // namespace

ExchangeResult run_exchange(const geom::Vec& verifier_pos, const geom::Vec& claimant_pos,
                            const ExchangeConfig& cfg) {
  check_config(cfg);
  const Nonces nonces = draw_nonces(cfg);
  const auto keys = claimant_keys(cfg);

  std::vector<std::uint64_t> responses;
  for (int i = 0; i < cfg.rounds; ++i) {
    responses.push_back(mask_bits(nonces.claimant[static_cast<std::size_t>(i)] ^
                                      nonces.verifier[static_cast<std::size_t>(i)],
                                  cfg.bits_per_round));
  }

  ExchangeResult result;
  result.session.rounds = timed_rounds(verifier_pos, claimant_pos, cfg.processing_s, cfg,
                                       nonces.verifier, responses);
  result.session.commitment = commit_to_nonces(nonces.claimant);
  result.session.opened_nonces = nonces.claimant;
  result.session.transcript_signature = authsig::ed25519_scheme().sign(
      keys.secret_key, transcript_bytes(result.session.rounds));
  result.verdict = judge(result.session, cfg, keys.public_key);
  result.true_distance_m = (verifier_pos - claimant_pos).norm();
  return result;
}

AttackResult stolen_nonce_attack(const StolenNonceSetup& setup,
                                 const geom::Vec& adversary_pos) {
  const ExchangeConfig& cfg = setup.config;
  check_config(cfg);
  const Nonces nonces = draw_nonces(cfg);
  const auto keys = claimant_keys(cfg);

  // The adversary answers the timed phase from its own position. It cannot
  // beat the declared processing floor, but it need not add a microsecond
  // more either.
  std::vector<std::uint64_t> responses;
  SplitMix64 guess_rng(derive_seed(cfg.seed, 0xB1D4));
  for (int i = 0; i < cfg.rounds; ++i) {
    if (setup.nonce_leak) {
      responses.push_back(mask_bits(nonces.claimant[static_cast<std::size_t>(i)] ^
                                        nonces.verifier[static_cast<std::size_t>(i)],
                                    cfg.bits_per_round));
    } else {
      responses.push_back(mask_bits(guess_rng.next(), cfg.bits_per_round));
    }
  }

  AttackResult result;
  result.session.rounds = timed_rounds(setup.verifier_pos, adversary_pos,
                                       cfg.declared_processing_s, cfg, nonces.verifier,
                                       responses);
  result.session.commitment = commit_to_nonces(nonces.claimant);
  result.session.opened_nonces = nonces.claimant;

  // Off the timed phase, the adversary replays the challenges to the real
  // claimant and relays back its valid signature. The claimant signs the
  // transcript *it* saw: with leaked nonces that matches the verifier's
  // transcript exactly; with guesses it does not.
  std::vector<ExchangeRound> claimant_view = result.session.rounds;
  for (std::size_t i = 0; i < claimant_view.size(); ++i) {
    claimant_view[i].response = mask_bits(
        nonces.claimant[i] ^ claimant_view[i].challenge, cfg.bits_per_round);
  }
  result.session.transcript_signature =
      authsig::ed25519_scheme().sign(keys.secret_key, transcript_bytes(claimant_view));

  result.verdict = judge(result.session, cfg, keys.public_key);
  result.verifier_adversary_distance_m = (setup.verifier_pos - adversary_pos).norm();
  result.verifier_claimant_distance_m = (setup.verifier_pos - setup.claimant_pos).norm();
  return result;
}

BidirOutcome run_bidir_side(const airsim::Scenario& scenario, const BidirSpec& spec) {
  std::size_t verifier_station = scenario.stations.size();
  for (std::size_t i = 0; i < scenario.stations.size(); ++i) {
    if (scenario.stations[i].label == spec.verifier_station_label) {
      verifier_station = i;
      break;
    }
  }
  if (verifier_station == scenario.stations.size()) {
    throw ValidationError("bidir.verifier_station", "unknown station");
  }
  const geom::Vec& station_pos = scenario.stations[verifier_station].pos;
  const geom::Vec& terminal_pos = scenario.terminal.true_pos;

  // Map the unidirectional adversary spec onto the exchange channel.
  ExchangeConfig cfg = spec.config;
  cfg.c_m_per_s = scenario.c_m_per_s;
  if (cfg.seed == 0) cfg.seed = scenario.seed;
  for (const auto& attack : scenario.attacks) {
    if (const auto* delay = std::get_if<airsim::DelayAttack>(&attack)) {
      std::map<std::size_t, double> profile = delay->delays_s;
      if (delay->target) profile = airsim::delays_targeting(scenario, *delay->target);
      if (const auto it = profile.find(verifier_station); it != profile.end()) {
        cfg.forced_delay_s += it->second;
      }
    } else if (const auto* collude = std::get_if<airsim::ColludeRelayAttack>(&attack)) {
      if (const auto it = collude->routes.find(verifier_station); it != collude->routes.end()) {
        cfg.forced_delay_s += airsim::collude_relay_delay(
            station_pos, collude->nodes[it->second], terminal_pos, scenario.c_m_per_s);
        if (const auto hold = collude->hold_s.find(verifier_station);
            hold != collude->hold_s.end()) {
          cfg.forced_delay_s += hold->second;
        }
      }
    } else {
      throw ComparisonUnsupportedError(
          "forge/replay attacks have no bidirectional equivalent at this abstraction");
    }
  }

  BidirOutcome outcome;
  outcome.true_distance_m = (station_pos - terminal_pos).norm();
  if (spec.adversary_pos) {
    StolenNonceSetup setup;
    setup.verifier_pos = station_pos;
    setup.claimant_pos = terminal_pos;
    setup.config = cfg;
    setup.nonce_leak = spec.nonce_leak;
    const AttackResult attack = stolen_nonce_attack(setup, *spec.adversary_pos);
    outcome.verdict = attack.verdict;
    outcome.bound_m = attack.verdict.rtt_bound_m;
  } else {
    const ExchangeResult honest = run_exchange(station_pos, terminal_pos, cfg);
    outcome.verdict = honest.verdict;
    outcome.bound_m = honest.verdict.rtt_bound_m;
  }
  const double tick_m = scenario.c_m_per_s / static_cast<double>(timebase::kTicksPerSecond);
  outcome.shortened = outcome.verdict.accepted() &&
                      outcome.bound_m < outcome.true_distance_m - tick_m;
  return outcome;
}

ComparisonReport compare_protocols(const airsim::Scenario& scenario, const BidirSpec& spec) {
  ComparisonReport report;

  const BidirOutcome side = run_bidir_side(scenario, spec);
  report.bidir = side.verdict;
  report.bidir_bound_m = side.bound_m;
  report.true_distance_m = side.true_distance_m;
  report.bidir_shortened = side.shortened;

  report.unidirectional = airsim::run_scenario(scenario);
  report.unidir_accepted = report.unidirectional.result.accepted();
  if (report.unidir_accepted) {
    std::size_t verifier_station = 0;
    for (std::size_t i = 0; i < scenario.stations.size(); ++i) {
      if (scenario.stations[i].label == spec.verifier_station_label) verifier_station = i;
    }
    const double fix_range = (report.unidirectional.result.fix->position -
                              scenario.stations[verifier_station].pos)
                                 .norm();
    const double true_range =
        (scenario.terminal.true_pos - scenario.stations[verifier_station].pos).norm();
    const double tick_m = scenario.c_m_per_s / static_cast<double>(timebase::kTicksPerSecond);
    report.unidir_accepted_shortened = fix_range < true_range - tick_m;
  }
  return report;
}

}  // namespace upsim::bidir
