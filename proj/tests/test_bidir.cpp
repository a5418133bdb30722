// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/bidir.hpp"

#include <doctest.h>

#include <cmath>

#include "upsim/errors.hpp"
#include "upsim/rng.hpp"

using namespace upsim;
using namespace upsim::bidir;
using geom::vec2;
using timebase::kTicksPerSecond;

namespace {

constexpr double kC = 3e8;
constexpr double kTickM = kC / 1e12;  // distance light covers in one tick

ExchangeConfig config_with(double processing = 0.0, double declared = -1.0) {
  ExchangeConfig cfg;
  cfg.rounds = 32;
  cfg.bits_per_round = 1;
  cfg.processing_s = processing;
  cfg.declared_processing_s = declared < 0 ? processing : declared;
  cfg.c_m_per_s = kC;
  cfg.seed = 4242;
  return cfg;
}

airsim::Scenario comparison_world() {
  airsim::Scenario s;
  s.name = "compare-unit";
  s.seed = 11;
  s.dims = 2;
  s.c_m_per_s = kC;
  s.stations = {
      {"S1", vec2(0, 0), {timebase::Instant{0}}},
      {"S2", vec2(10000, 0), {timebase::Instant{0}}},
      {"S3", vec2(5000, 9000), {timebase::Instant{0}}},
  };
  s.terminal.true_pos = vec2(5000, 3000);
  s.terminal.error_limit_m = 5.0;
  return s;
}

}  // namespace

TEST_SUITE("bidir") {

TEST_CASE("honest exchange bounds the true distance exactly") {
  // 300 m, zero processing: RTT is 2 us and the bound is 300 m
  const auto result = run_exchange(vec2(0, 0), vec2(300, 0), config_with());
  CHECK(result.verdict.accepted());
  const auto& first = result.session.rounds.front();
  CHECK(timebase::delta_seconds(first.challenge_emit, first.response_arrival) ==
        doctest::Approx(2e-6).epsilon(1e-9));
  CHECK(result.verdict.rtt_bound_m == doctest::Approx(300.0).epsilon(1e-9));
  CHECK(result.true_distance_m == doctest::Approx(300.0));
}

TEST_CASE("understated processing inflates the bound by c*tau/2") {
  const double actual = 2e-6;
  const double declared = 0.5e-6;
  const auto result = run_exchange(vec2(0, 0), vec2(300, 0), config_with(actual, declared));
  CHECK(result.verdict.accepted());
  const double inflation = kC * (actual - declared) / 2.0;
  CHECK(result.verdict.rtt_bound_m ==
        doctest::Approx(300.0 + inflation).epsilon(1e-9));
}

TEST_CASE("declared processing above the real one is rejected as a config error") {
  CHECK_THROWS_AS(run_exchange(vec2(0, 0), vec2(300, 0), config_with(1e-6, 2e-6)), Error);
}

TEST_CASE("forced channel delay only ever lengthens the bound") {
  SplitMix64 rng(601);
  for (int i = 0; i < 300; ++i) {
    auto cfg = config_with(rng.uniform(0.0, 1e-6));
    cfg.forced_delay_s = rng.uniform(0.0, 1e-5);
    cfg.seed = rng.next();
    const auto claimant = vec2(rng.uniform(10, 5000), rng.uniform(-3000, 3000));
    const auto result = run_exchange(vec2(0, 0), claimant, cfg);
    CHECK(result.verdict.accepted());
    CHECK(result.verdict.rtt_bound_m >= result.true_distance_m - kTickM);
    // with truthful declared processing the inflation is exactly c*tau/2
    const double expected = result.true_distance_m + kC * cfg.forced_delay_s / 2.0;
    CHECK(std::abs(result.verdict.rtt_bound_m - expected) <= kTickM);
  }
}

TEST_CASE("stolen nonces collapse the bound to the adversary distance") {
  StolenNonceSetup setup;
  setup.verifier_pos = vec2(0, 0);
  setup.claimant_pos = vec2(10000, 0);  // 10 km away
  setup.config = config_with();
  setup.nonce_leak = true;

  const auto result = stolen_nonce_attack(setup, vec2(10, 0));
  CHECK(result.verdict.accepted());  // the verifier is fully satisfied
  CHECK(result.verifier_adversary_distance_m == doctest::Approx(10.0));
  CHECK(result.verifier_claimant_distance_m == doctest::Approx(10000.0));
  // measured bound is the adversary's distance, not the claimant's
  CHECK(std::abs(result.verdict.rtt_bound_m - 10.0) <= kTickM);
  CHECK(result.verdict.rtt_bound_m < result.verifier_claimant_distance_m);
}

TEST_CASE("without the leak, guessing fails across 1000 sessions") {
  StolenNonceSetup setup;
  setup.verifier_pos = vec2(0, 0);
  setup.claimant_pos = vec2(10000, 0);
  setup.nonce_leak = false;

  SplitMix64 rng(602);
  int accepted = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    setup.config = config_with();
    setup.config.rounds = 32;
    setup.config.bits_per_round = 1;  // 32 security bits total
    setup.config.seed = rng.next();
    const auto result = stolen_nonce_attack(setup, vec2(10, 0));
    if (result.verdict.accepted()) ++accepted;
    // guessed responses must fail both the response check and the
    // signature relayed from the honest claimant
    CHECK_FALSE(result.verdict.responses_valid);
    CHECK_FALSE(result.verdict.signature_valid);
  }
  CHECK(accepted == 0);
}

TEST_CASE("single-round guesses succeed at the 2^-k rate") {
  // k = 1 bit per round: a guessed response matches about half the time,
  // which is why whole-session acceptance needs all 32 rounds at once
  SplitMix64 rng(604);
  int matched = 0;
  int total = 0;
  for (int trial = 0; trial < 500; ++trial) {
    StolenNonceSetup setup;
    setup.verifier_pos = vec2(0, 0);
    setup.claimant_pos = vec2(5000, 0);
    setup.config = config_with();
    setup.config.seed = rng.next();
    setup.nonce_leak = false;
    const auto result = stolen_nonce_attack(setup, vec2(10, 0));
    for (std::size_t i = 0; i < result.session.rounds.size(); ++i) {
      const auto expected =
          (result.session.opened_nonces[i] ^ result.session.rounds[i].challenge) & 1ull;
      if (result.session.rounds[i].response == expected) ++matched;
      ++total;
    }
  }
  const double rate = static_cast<double>(matched) / total;
  CHECK(total == 500 * 32);
  CHECK(rate > 0.45);
  CHECK(rate < 0.55);
}

TEST_CASE("an adversary colocated with the claimant gains nothing") {
  StolenNonceSetup setup;
  setup.verifier_pos = vec2(0, 0);
  setup.claimant_pos = vec2(700, 0);
  setup.config = config_with();
  setup.nonce_leak = true;
  const auto result = stolen_nonce_attack(setup, setup.claimant_pos);
  CHECK(result.verdict.accepted());
  CHECK(std::abs(result.verdict.rtt_bound_m - 700.0) <= kTickM);
}

TEST_CASE("the bound always covers whoever physically answered") {
  SplitMix64 rng(603);
  for (int i = 0; i < 300; ++i) {
    StolenNonceSetup setup;
    setup.verifier_pos = vec2(0, 0);
    setup.claimant_pos = vec2(rng.uniform(1000, 20000), rng.uniform(-5000, 5000));
    setup.config = config_with(rng.uniform(0.0, 2e-6));
    setup.config.seed = rng.next();
    setup.nonce_leak = rng.next() % 2 == 0;
    const geom::Vec adversary = vec2(rng.uniform(1, 500), rng.uniform(-200, 200));
    const auto result = stolen_nonce_attack(setup, adversary);
    // responder is the adversary: the rtt bound can never undercut it
    CHECK(result.verdict.rtt_bound_m >=
          result.verifier_adversary_distance_m - kTickM);
  }
}

TEST_CASE("acceptance of the attack requires the leak precondition") {
  StolenNonceSetup setup;
  setup.verifier_pos = vec2(0, 0);
  setup.claimant_pos = vec2(10000, 0);
  setup.config = config_with();

  setup.nonce_leak = true;
  CHECK(stolen_nonce_attack(setup, vec2(10, 0)).verdict.accepted());
  setup.nonce_leak = false;
  CHECK_FALSE(stolen_nonce_attack(setup, vec2(10, 0)).verdict.accepted());
}

TEST_CASE("comparison: nonce leak shortens bidirectional, never unidirectional") {
  airsim::Scenario scenario = comparison_world();
  // the unidirectional adversary tries the strongest delay profile aimed
  // right next to the verifier station
  airsim::DelayAttack delay;
  delay.target = vec2(10, 0);
  scenario.attacks.push_back(delay);

  BidirSpec spec;
  spec.verifier_station_label = "S1";
  spec.config = config_with();
  spec.adversary_pos = vec2(10, 0);
  spec.nonce_leak = true;

  const ComparisonReport report = compare_protocols(scenario, spec);
  CHECK(report.bidir.accepted());
  CHECK(report.bidir_shortened);
  CHECK(report.bidir_bound_m < report.true_distance_m / 100.0);
  CHECK_FALSE(report.unidir_accepted_shortened);
}

TEST_CASE("comparison: honest scenario passes both protocols") {
  const airsim::Scenario scenario = comparison_world();
  BidirSpec spec;
  spec.verifier_station_label = "S1";
  spec.config = config_with();

  const ComparisonReport report = compare_protocols(scenario, spec);
  CHECK(report.unidir_accepted);
  CHECK_FALSE(report.unidir_accepted_shortened);
  CHECK(report.bidir.accepted());
  CHECK_FALSE(report.bidir_shortened);
  CHECK(report.bidir_bound_m == doctest::Approx(report.true_distance_m).epsilon(1e-6));
}

TEST_CASE("comparison: forced delay only lengthens bounds on both sides") {
  airsim::Scenario scenario = comparison_world();
  airsim::DelayAttack delay;
  delay.delays_s[0] = 5e-6;  // +1500 m on S1's bound
  scenario.attacks.push_back(delay);

  BidirSpec spec;
  spec.verifier_station_label = "S1";
  spec.config = config_with();

  const ComparisonReport report = compare_protocols(scenario, spec);
  CHECK(report.bidir.accepted());
  CHECK(report.bidir_bound_m >=
        report.true_distance_m + kC * 5e-6 / 2.0 - kTickM);
  CHECK_FALSE(report.bidir_shortened);
  CHECK_FALSE(report.unidir_accepted_shortened);
}

TEST_CASE("forge and replay attacks cannot be compared") {
  airsim::Scenario scenario = comparison_world();
  airsim::ForgeAttack forge;
  forge.claimed_label = "S1";
  forge.t_s = timebase::Instant{0};
  forge.x_s = vec2(0, 0);
  forge.emit_at = timebase::Instant{0};
  forge.from_pos = vec2(1, 1);
  scenario.attacks.push_back(forge);

  BidirSpec spec;
  spec.verifier_station_label = "S1";
  spec.config = config_with();
  CHECK_THROWS_AS(compare_protocols(scenario, spec), ComparisonUnsupportedError);
}

}  // TEST_SUITE
